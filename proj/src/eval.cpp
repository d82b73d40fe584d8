#include "irpf/eval.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include "json.hpp"

namespace irpf {

ConfusionCounts confusion(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "confusion: " + std::to_string(predicted.size()) + " predictions vs " +
                                               std::to_string(truth.size()) + " labels");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == Label::Artifact;
    const bool t = truth[i] == Label::Artifact;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json metrics_json(const MetricSet& m) {
  return {{"recall", optional_json(m.recall)},
          {"specificity", optional_json(m.specificity)},
          {"precision", optional_json(m.precision)},
          {"f1", optional_json(m.f1)}};
}

}  // namespace

MetricSet metrics(const ConfusionCounts& c) {
  MetricSet m;
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.precision = ratio(c.tp, c.tp + c.fp);
  if (m.recall && m.precision && *m.recall + *m.precision > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error(ErrorCode::EmptyInput, "cohens_d: each sample needs 2 values");
  const auto moments = [](std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, ss};
  };
  const auto [ma, ssa] = moments(a);
  const auto [mb, ssb] = moments(b);
  const double pooled = std::sqrt((ssa + ssb) / static_cast<double>(a.size() + b.size() - 2));
  if (ma == mb) return 0.0;
  if (!(pooled > 0.0)) throw Error(ErrorCode::ZeroVariance, "cohens_d: pooled standard deviation is zero");
  return (ma - mb) / pooled;
}

std::string_view effect_size_label(double d) {
  const double m = std::abs(d);
  if (m < 0.2) return "very small";
  if (m < 0.5) return "small";
  if (m < 0.8) return "medium";
  return "large";
}

std::string to_json(const MetricSet& m) { return metrics_json(m).dump(); }

std::string to_json(const MetricRecord& r) {
  nlohmann::json j = {{"method", r.method}, {"seed", r.seed},       {"tp", r.counts.tp},
                      {"fp", r.counts.fp},  {"tn", r.counts.tn},    {"fn", r.counts.fn}};
  j.update(metrics_json(r.metrics));
  return j.dump();
}

std::optional<double> defined_mean(std::span<const std::optional<double>> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

void write_aggregate_csv(std::ostream& out, std::span<const MetricRecord> records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const MetricRecord*>> groups;
  for (const auto& r : records) {
    if (!groups.contains(r.method)) order.push_back(r.method);
    groups[r.method].push_back(&r);
  }
  out << "method,n,recall,specificity,precision,f1\n";
  for (const auto& method : order) {
    const auto& g = groups[method];
    out << method << ',' << g.size();
    for (auto field : {&MetricSet::recall, &MetricSet::specificity, &MetricSet::precision, &MetricSet::f1}) {
      std::vector<std::optional<double>> vals;
      for (const auto* r : g) vals.push_back(r->metrics.*field);
      out << ',';
      if (const auto m = defined_mean(vals)) out << *m;
    }
    out << '\n';
  }
}

}  // namespace irpf
