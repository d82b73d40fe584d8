#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "irpf/dsp.hpp"
#include "irpf/potato.hpp"
#include "irpf/signal_io.hpp"
#include "irpf/stats.hpp"

namespace irpf {

enum class Method { IRPF, RPF, RP };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

/// Component switches and tuning knobs for the iRPF pipeline. Turning a
/// switch off gives the corresponding ablation.
struct FieldOptions {
  bool outlier_gate = true;
  /// Off: every potato uses the Riemannian distance (duplicates merged).
  bool extra_distances = true;
  /// Off: Fisher combination regardless of the configured combiner.
  bool meta_combination = true;
  /// Off: fixed SQI threshold `fixed_p_threshold`.
  bool adaptive_threshold = true;
  double fixed_p_threshold = 0.01;
  double sensitivity = 1.0;
  /// Knee levels for the sorted SQI curve (sqi_knee_options) and for
  /// barycenter trimming (trimming_knee_options).
  double knee_noise_level = 1.1;
  double trim_noise_level = 2.4;
  LiptakForm liptak = LiptakForm::Stouffer;
};

struct FieldModel {
  std::vector<PotatoSpec> specs;
  std::vector<PotatoModel> models;
  /// Absent when the gate is disabled.
  std::optional<OutlierGate> gate;
  CombinerKind combiner = CombinerKind::MetaTippettOverLiptakFisher;
  FieldOptions options;
  std::vector<std::string> channel_names;
  double sampling_rate = 0.0;
};

struct SqiReport {
  Method method = Method::IRPF;
  /// J x I.
  Eigen::MatrixXd per_potato_p;
  Eigen::MatrixXd per_potato_z;
  std::vector<double> sqi;
  double threshold = 0.0;
  /// Position of the knee in the ascending order of all SQI values (gated
  /// epochs first), when one was found.
  std::optional<std::size_t> knee_index;
  std::vector<bool> gate_rejected;
  std::vector<bool> rejected;

  std::size_t size() const noexcept { return sqi.size(); }
  std::vector<Label> verdict() const;
};

/// Pass band actually used for a potato: an open high edge becomes
/// 0.9 * Nyquist and a zero low edge means no high-pass.
std::pair<std::optional<double>, std::optional<double>> effective_band(const PotatoSpec& spec, double sampling_rate);

/// Per-epoch covariances of the spec's channels in its band.
std::vector<SpdMatrix> potato_covariances(const EpochSet& epochs, const PotatoSpec& spec);

/// Specs with every distance set to Riemannian, first occurrence kept.
std::vector<PotatoSpec> riemannian_only(const std::vector<PotatoSpec>& specs);

struct PreparedRecording {
  Recording recording;
  EpochSet epochs;
};

/// Broad-band filtering of the raw recording followed by epoching. The high
/// edge is clipped to 0.9 * Nyquist.
PreparedRecording prepare_recording(const Recording& raw, double epoch_duration, std::optional<double> low_cut = 0.1,
                                    std::optional<double> high_cut = 44.0);

/// `recording` is the preprocessed recording `epochs` was cut from.
FieldModel fit_irpf(const Recording& recording, const EpochSet& epochs, const FieldConfig& config,
                    const FieldOptions& options = {});
SqiReport score_irpf(const FieldModel& model, const EpochSet& epochs);
SqiReport run_irpf(const Recording& recording, const EpochSet& epochs, const FieldConfig& config,
                   const FieldOptions& options = {});

/// Baseline field: gate, Riemannian potatoes trimmed at z > 2 for three
/// rounds, Fisher combination, fixed threshold config.rpf_p_threshold.
SqiReport run_rpf(const Recording& recording, const EpochSet& epochs, const FieldConfig& config);

/// Baseline single potato on all channels with arithmetic z-scores; the
/// SQI column carries z_to_p(z) and the threshold z_to_p(z_th).
SqiReport run_rp(const Recording& recording, const EpochSet& epochs, double z_th = 2.0, double u_lim = 1.0);

}  // namespace irpf
