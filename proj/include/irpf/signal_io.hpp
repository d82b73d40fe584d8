#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "irpf/spd.hpp"
#include "irpf/stats.hpp"

namespace irpf {

enum class Label { Clean, Artifact };

/// Multichannel recording: N channels x T samples (microvolts).
class Recording {
 public:
  Recording(std::vector<std::string> channel_names, double sampling_rate, Eigen::MatrixXd samples);

  const std::vector<std::string>& channel_names() const noexcept { return channel_names_; }
  double sampling_rate() const noexcept { return sampling_rate_; }
  const Eigen::MatrixXd& samples() const noexcept { return samples_; }

  Eigen::Index n_channels() const noexcept { return samples_.rows(); }
  Eigen::Index n_samples() const noexcept { return samples_.cols(); }
  double duration() const noexcept { return static_cast<double>(n_samples()) / sampling_rate_; }

  /// Row index of each named channel; throws UnknownChannel.
  std::vector<Eigen::Index> channel_rows(const std::vector<std::string>& names) const;

 private:
  std::vector<std::string> channel_names_;
  double sampling_rate_;
  Eigen::MatrixXd samples_;
};

/// Fixed-length, non-overlapping segmentation of a recording.
struct EpochSet {
  std::vector<Eigen::MatrixXd> epochs;
  double epoch_duration = 0.0;
  std::optional<std::vector<Label>> labels;
  std::vector<Eigen::Index> source_indices;
  std::vector<std::string> channel_names;
  double sampling_rate = 0.0;

  std::size_t size() const noexcept { return epochs.size(); }
  Eigen::Index epoch_length() const noexcept { return epochs.empty() ? 0 : epochs.front().cols(); }
};

struct PotatoSpec {
  std::vector<std::string> channels;
  double band_low = 0.0;
  /// Absent means high-pass.
  std::optional<double> band_high;
  DistanceKind distance = DistanceKind::Riemannian;

  bool operator==(const PotatoSpec&) const = default;
};

struct FieldConfig {
  std::vector<PotatoSpec> potatoes;
  CombinerKind combiner = CombinerKind::MetaTippettOverLiptakFisher;
  double u_lim = 1.0;
  double rp_z_threshold = 2.0;
  double rpf_p_threshold = 0.01;

  bool operator==(const FieldConfig&) const = default;
};

Recording load_recording(const std::filesystem::path& path, double sampling_rate);
Recording parse_recording(std::istream& in, double sampling_rate);
void write_recording(std::ostream& out, const Recording& recording);

/// Splits into floor(T / (duration * rate)) epochs; trailing samples dropped.
EpochSet epoch(const Recording& recording, double duration);

/// Reads one 0/1 per line. When n_epochs is given the count must match.
std::vector<Label> load_labels(const std::filesystem::path& path, std::optional<std::size_t> n_epochs = {});
std::vector<Label> parse_labels(std::istream& in, std::optional<std::size_t> n_epochs = {});
void write_labels(std::ostream& out, const std::vector<Label>& labels);

FieldConfig load_field_config(const std::filesystem::path& path, const Recording& recording);
FieldConfig parse_field_config(const std::string& json_text, const std::vector<std::string>& channel_names,
                               double sampling_rate);
std::string serialize_field_config(const FieldConfig& config);

/// Checks channel membership, band ranges and field-level invariants.
void validate_field_config(const FieldConfig& config, const std::vector<std::string>& channel_names,
                           double sampling_rate);

}  // namespace irpf
