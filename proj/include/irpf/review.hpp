#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "irpf/field.hpp"
#include "irpf/signal_io.hpp"

namespace irpf {

/// Everything the review UI needs, self-contained.
struct ReviewBundle {
  static constexpr int kVersion = 1;
  static constexpr Eigen::Index kMaxSamples = 256;

  std::string method;
  double epoch_duration = 0.0;
  std::vector<std::string> channel_names;
  std::vector<double> sqi;
  /// Ascending SQI; gated epochs first among ties.
  std::vector<std::size_t> sorted_order;
  std::optional<std::size_t> knee_index;
  /// "sqi < suggested_threshold" reproduces the pipeline mask.
  double suggested_threshold = 0.0;
  std::optional<std::vector<Label>> labels;
  /// [epoch] -> N x T' with T' <= kMaxSamples.
  std::vector<Eigen::MatrixXd> waveforms;
  /// Serialized FieldConfig, or empty.
  std::string config_json;
};

/// Min/max-pair decimation: the row is cut into max_samples/2 bins and each
/// bin contributes its min and max in time order. Rows no longer than
/// max_samples are copied.
Eigen::MatrixXd decimate_minmax(const Eigen::MatrixXd& epoch, Eigen::Index max_samples = ReviewBundle::kMaxSamples);

/// Stable ascending order of report.sqi, gated epochs first on ties.
std::vector<std::size_t> sqi_order(const SqiReport& report);

ReviewBundle make_review_bundle(const SqiReport& report, const EpochSet& epochs, const FieldConfig* config = nullptr);

std::string to_json(const ReviewBundle& bundle);
ReviewBundle parse_review_bundle(const std::string& json_text);

/// Per-epoch masks, SQI, threshold and the J x I p/z matrices.
std::string to_json(const SqiReport& report);

}  // namespace irpf
