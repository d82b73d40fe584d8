#include "irpf/review.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace irpf {

using nlohmann::json;

Eigen::MatrixXd decimate_minmax(const Eigen::MatrixXd& epoch, Eigen::Index max_samples) {
  if (max_samples < 2) throw Error(ErrorCode::InvalidConfig, "decimation needs at least 2 output samples");
  const Eigen::Index t = epoch.cols();
  if (t <= max_samples) return epoch;

  const Eigen::Index bins = max_samples / 2;
  Eigen::MatrixXd out(epoch.rows(), 2 * bins);
  for (Eigen::Index r = 0; r < epoch.rows(); ++r) {
    for (Eigen::Index b = 0; b < bins; ++b) {
      const Eigen::Index lo = b * t / bins;
      const Eigen::Index hi = (b + 1) * t / bins;
      const auto seg = epoch.row(r).segment(lo, hi - lo);
      Eigen::Index imin = 0, imax = 0;
      const double vmin = seg.minCoeff(&imin);
      const double vmax = seg.maxCoeff(&imax);
      out(r, 2 * b) = imin <= imax ? vmin : vmax;
      out(r, 2 * b + 1) = imin <= imax ? vmax : vmin;
    }
  }
  return out;
}

std::vector<std::size_t> sqi_order(const SqiReport& report) {
  std::vector<std::size_t> order(report.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto gated = [&](std::size_t i) { return i < report.gate_rejected.size() && report.gate_rejected[i]; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (report.sqi[a] != report.sqi[b]) return report.sqi[a] < report.sqi[b];
    return gated(a) && !gated(b);
  });
  return order;
}

namespace {

// Threshold under which "sqi < t" reproduces report.rejected. Gated epochs
// carry SQI 0, so a zero threshold is nudged to the smallest positive value.
double review_threshold(const SqiReport& report) {
  auto matches = [&](double t) {
    for (std::size_t i = 0; i < report.size(); ++i) {
      if ((report.sqi[i] < t) != static_cast<bool>(report.rejected[i])) return false;
    }
    return true;
  };
  if (report.rejected.size() != report.size() || matches(report.threshold)) return report.threshold;
  double top = -1.0;
  for (std::size_t i = 0; i < report.size(); ++i) {
    if (report.rejected[i]) top = std::max(top, report.sqi[i]);
  }
  const double t = std::nextafter(top, 2.0);
  return matches(t) ? t : report.threshold;
}

}  // namespace

ReviewBundle make_review_bundle(const SqiReport& report, const EpochSet& epochs, const FieldConfig* config) {
  if (report.size() != epochs.size()) {
    throw Error(ErrorCode::LengthMismatch, "report has " + std::to_string(report.size()) + " epochs, epoch set " +
                                               std::to_string(epochs.size()));
  }
  ReviewBundle b;
  b.method = std::string(to_string(report.method));
  b.epoch_duration = epochs.epoch_duration;
  b.channel_names = epochs.channel_names;
  b.sqi = report.sqi;
  b.sorted_order = sqi_order(report);
  b.knee_index = report.knee_index;
  b.suggested_threshold = review_threshold(report);
  b.labels = epochs.labels;
  b.waveforms.reserve(epochs.size());
  for (const auto& e : epochs.epochs) b.waveforms.push_back(decimate_minmax(e));
  if (config) b.config_json = serialize_field_config(*config);
  return b;
}

namespace {

json labels_json(const std::optional<std::vector<Label>>& labels) {
  if (!labels) return nullptr;
  json a = json::array();
  for (Label l : *labels) a.push_back(l == Label::Artifact ? 1 : 0);
  return a;
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json optional_index(const std::optional<std::size_t>& i) { return i ? json(*i) : json(nullptr); }

}  // namespace

std::string to_json(const ReviewBundle& b) {
  json waveforms = json::array();
  for (const auto& w : b.waveforms) waveforms.push_back(matrix_rows(w));
  json j = {{"version", ReviewBundle::kVersion},
            {"method", b.method},
            {"epoch_duration", b.epoch_duration},
            {"channel_names", b.channel_names},
            {"sqi", b.sqi},
            {"sorted_order", b.sorted_order},
            {"knee_index", optional_index(b.knee_index)},
            {"suggested_threshold", b.suggested_threshold},
            {"labels", labels_json(b.labels)},
            {"waveforms", std::move(waveforms)}};
  j["config"] = b.config_json.empty() ? json(nullptr) : json::parse(b.config_json);
  return j.dump();
}

ReviewBundle parse_review_bundle(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    if (j.at("version").get<int>() != ReviewBundle::kVersion) {
      throw Error(ErrorCode::MalformedFile, "unsupported review bundle version");
    }
    ReviewBundle b;
    b.method = j.at("method").get<std::string>();
    b.epoch_duration = j.at("epoch_duration").get<double>();
    b.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    b.sqi = j.at("sqi").get<std::vector<double>>();
    b.sorted_order = j.at("sorted_order").get<std::vector<std::size_t>>();
    if (!j.at("knee_index").is_null()) b.knee_index = j.at("knee_index").get<std::size_t>();
    b.suggested_threshold = j.at("suggested_threshold").get<double>();
    if (!j.at("labels").is_null()) {
      std::vector<Label> labels;
      for (int v : j.at("labels").get<std::vector<int>>()) labels.push_back(v ? Label::Artifact : Label::Clean);
      b.labels = std::move(labels);
    }
    for (const auto& epoch : j.at("waveforms")) {
      const auto rows = static_cast<Eigen::Index>(epoch.size());
      const auto cols = rows ? static_cast<Eigen::Index>(epoch.front().size()) : 0;
      Eigen::MatrixXd w(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = epoch[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorCode::MalformedFile, "ragged waveform");
        for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
      b.waveforms.push_back(std::move(w));
    }
    if (j.contains("config") && !j.at("config").is_null()) b.config_json = j.at("config").dump();
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("review bundle: ") + e.what());
  }
}

std::string to_json(const SqiReport& r) {
  auto bools = [](const std::vector<bool>& v) {
    json a = json::array();
    for (bool x : v) a.push_back(x ? 1 : 0);
    return a;
  };
  const json j = {{"method", std::string(to_string(r.method))},
                  {"threshold", r.threshold},
                  {"knee_index", optional_index(r.knee_index)},
                  {"sqi", r.sqi},
                  {"gate_rejected", bools(r.gate_rejected)},
                  {"rejected", bools(r.rejected)},
                  {"per_potato_p", matrix_rows(r.per_potato_p)},
                  {"per_potato_z", matrix_rows(r.per_potato_z)}};
  return j.dump();
}

}  // namespace irpf
