#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irpf/signal_io.hpp"

namespace irpf {

/// Positive class is Artifact.
struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// nullopt marks an undefined metric (zero denominator).
struct MetricSet {
  std::optional<double> recall;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> f1;
};

ConfusionCounts confusion(std::span<const Label> predicted, std::span<const Label> truth);
MetricSet metrics(const ConfusionCounts& c);

double cohens_d(std::span<const double> a, std::span<const double> b);
/// "very small", "small", "medium" or "large" for |d|.
std::string_view effect_size_label(double d);

struct MetricRecord {
  std::string method;
  std::uint64_t seed = 0;
  ConfusionCounts counts;
  MetricSet metrics;
};

std::string to_json(const MetricRecord& record);
std::string to_json(const MetricSet& m);

/// Mean of defined values; nullopt when none is defined.
std::optional<double> defined_mean(std::span<const std::optional<double>> values);

/// One row per method: method,n,recall,specificity,precision,f1 (means over
/// defined values; empty cell when undefined everywhere).
void write_aggregate_csv(std::ostream& out, std::span<const MetricRecord> records);

}  // namespace irpf
