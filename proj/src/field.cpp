#include "irpf/field.hpp"

#include <algorithm>
#include <numeric>

#include "irpf/kneedle.hpp"

namespace irpf {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::IRPF: return "irpf";
    case Method::RPF: return "rpf";
    case Method::RP: return "rp";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "irpf") return Method::IRPF;
  if (name == "rpf") return Method::RPF;
  if (name == "rp") return Method::RP;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(name) + "'");
}

std::vector<Label> SqiReport::verdict() const {
  std::vector<Label> out;
  out.reserve(rejected.size());
  for (bool r : rejected) out.push_back(r ? Label::Artifact : Label::Clean);
  return out;
}

std::pair<std::optional<double>, std::optional<double>> effective_band(const PotatoSpec& spec, double sampling_rate) {
  std::optional<double> low;
  if (spec.band_low > 0.0) low = spec.band_low;
  const double high = spec.band_high.value_or(0.9 * sampling_rate / 2.0);
  return {low, high};
}

std::vector<SpdMatrix> potato_covariances(const EpochSet& epochs, const PotatoSpec& spec) {
  std::vector<Eigen::Index> rows;
  rows.reserve(spec.channels.size());
  for (const auto& name : spec.channels) {
    const auto it = std::find(epochs.channel_names.begin(), epochs.channel_names.end(), name);
    if (it == epochs.channel_names.end()) throw Error(ErrorCode::UnknownChannel, "unknown channel '" + name + "'");
    rows.push_back(it - epochs.channel_names.begin());
  }
  const auto [low, high] = effective_band(spec, epochs.sampling_rate);
  const BandPassFilter filter(low, high, epochs.sampling_rate);

  std::vector<SpdMatrix> covs;
  covs.reserve(epochs.size());
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), epochs.epoch_length());
  for (const auto& e : epochs.epochs) {
    for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = e.row(rows[r]);
    covs.push_back(covariance(filter.apply(sub)));
  }
  return covs;
}

std::vector<PotatoSpec> riemannian_only(const std::vector<PotatoSpec>& specs) {
  std::vector<PotatoSpec> out;
  for (PotatoSpec s : specs) {
    s.distance = DistanceKind::Riemannian;
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  }
  return out;
}

PreparedRecording prepare_recording(const Recording& raw, double epoch_duration, std::optional<double> low_cut,
                                    std::optional<double> high_cut) {
  if (high_cut) high_cut = std::min(*high_cut, 0.9 * raw.sampling_rate() / 2.0);
  Recording filtered = (low_cut || high_cut) ? preprocess(raw, low_cut, high_cut) : raw;
  EpochSet epochs = epoch(filtered, epoch_duration);
  return {std::move(filtered), std::move(epochs)};
}

namespace {

constexpr std::size_t kMinEpochs = 10;
constexpr std::size_t kMinCleanEpochs = 5;

std::vector<std::size_t> gate_survivors(const std::vector<bool>& gated) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < gated.size(); ++i) {
    if (!gated[i]) idx.push_back(i);
  }
  return idx;
}

// Gate (optional), epoch-count checks and the survivor subset.
struct GateStage {
  std::optional<OutlierGate> gate;
  std::vector<bool> gated;
  EpochSet clean;
};

GateStage run_gate(const Recording& recording, const EpochSet& epochs, double u_lim, bool enabled) {
  if (epochs.size() < kMinEpochs) {
    throw Error(ErrorCode::TooFewEpochs, "need at least " + std::to_string(kMinEpochs) + " epochs, got " +
                                             std::to_string(epochs.size()));
  }
  GateStage g;
  if (enabled) {
    g.gate = fit_outlier_gate(recording, epochs, u_lim);
    g.gated = g.gate->rejected;
  } else {
    g.gated.assign(epochs.size(), false);
  }
  const auto keep = gate_survivors(g.gated);
  if (keep.size() < kMinCleanEpochs) {
    throw Error(ErrorCode::TooFewCleanEpochs, std::to_string(keep.size()) + " epochs survive the outlier gate, need " +
                                                  std::to_string(kMinCleanEpochs));
  }
  g.clean.epoch_duration = epochs.epoch_duration;
  g.clean.channel_names = epochs.channel_names;
  g.clean.sampling_rate = epochs.sampling_rate;
  for (std::size_t i : keep) {
    g.clean.epochs.push_back(epochs.epochs[i]);
    g.clean.source_indices.push_back(epochs.source_indices.at(i));
  }
  return g;
}

PotatoModel with_spec(PotatoModel model, const PotatoSpec& spec) {
  model.channels = spec.channels;
  model.band_low = spec.band_low;
  model.band_high = spec.band_high;
  return model;
}

// Scores every epoch on every potato; gated epochs get SQI 0.
SqiReport score_field(const std::vector<PotatoSpec>& specs, const std::vector<PotatoModel>& models,
                      const EpochSet& epochs, std::vector<bool> gated, CombinerKind combiner, LiptakForm liptak) {
  const auto n = static_cast<Eigen::Index>(epochs.size());
  const auto j_count = static_cast<Eigen::Index>(specs.size());
  SqiReport report;
  report.per_potato_p.resize(j_count, n);
  report.per_potato_z.resize(j_count, n);
  for (Eigen::Index j = 0; j < j_count; ++j) {
    const auto covs = potato_covariances(epochs, specs[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto s = score(models[static_cast<std::size_t>(j)], covs[static_cast<std::size_t>(i)]);
      report.per_potato_p(j, i) = s.p;
      report.per_potato_z(j, i) = s.z;
    }
  }
  report.sqi.assign(epochs.size(), 0.0);
  std::vector<double> column(static_cast<std::size_t>(j_count));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (gated[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = 0; j < j_count; ++j) column[static_cast<std::size_t>(j)] = report.per_potato_p(j, i);
    report.sqi[static_cast<std::size_t>(i)] = combine(column, combiner, liptak);
  }
  report.gate_rejected = std::move(gated);
  return report;
}

void apply_threshold(SqiReport& report) {
  report.rejected.resize(report.sqi.size());
  for (std::size_t i = 0; i < report.sqi.size(); ++i) {
    report.rejected[i] = report.gate_rejected[i] || report.sqi[i] < report.threshold;
  }
}

}  // namespace

FieldModel fit_irpf(const Recording& recording, const EpochSet& epochs, const FieldConfig& config,
                    const FieldOptions& options) {
  validate_field_config(config, recording.channel_names(), recording.sampling_rate());
  const GateStage g = run_gate(recording, epochs, config.u_lim, options.outlier_gate);

  FieldModel model;
  model.specs = options.extra_distances ? config.potatoes : riemannian_only(config.potatoes);
  model.gate = g.gate;
  model.combiner = options.meta_combination ? config.combiner : CombinerKind::Fisher;
  model.options = options;
  model.channel_names = recording.channel_names();
  model.sampling_rate = recording.sampling_rate();

  AdaptiveOptions adaptive;
  adaptive.sensitivity = options.sensitivity;
  adaptive.knee_noise_level = options.trim_noise_level;
  for (const auto& spec : model.specs) {
    const auto covs = potato_covariances(g.clean, spec);
    model.models.push_back(with_spec(fit_adaptive(covs, spec.distance, adaptive), spec));
  }
  return model;
}

SqiReport score_irpf(const FieldModel& model, const EpochSet& epochs) {
  std::vector<bool> gated(epochs.size(), false);
  if (model.gate) {
    for (std::size_t i = 0; i < epochs.size(); ++i) gated[i] = model.gate->exceeds(epochs.epochs[i]);
  }
  SqiReport report = score_field(model.specs, model.models, epochs, std::move(gated), model.combiner,
                                 model.options.liptak);
  report.method = Method::IRPF;

  if (!model.options.adaptive_threshold) {
    report.threshold = model.options.fixed_p_threshold;
  } else {
    std::vector<double> sorted;
    std::size_t n_gated = 0;
    for (std::size_t i = 0; i < report.size(); ++i) {
      if (report.gate_rejected[i]) {
        ++n_gated;
      } else {
        sorted.push_back(report.sqi[i]);
      }
    }
    std::sort(sorted.begin(), sorted.end());
    report.threshold = 0.0;
    if (sorted.size() >= 5) {
      const auto knee = find_knee(sorted, sqi_knee_options(sorted.size(), model.options.sensitivity,
                                                                     model.options.knee_noise_level));
      if (knee.found() && 2 * (*knee.index + 1) <= sorted.size()) {
        report.threshold = *knee.value;
        report.knee_index = n_gated + *knee.index;
      }
    }
  }
  apply_threshold(report);
  return report;
}

SqiReport run_irpf(const Recording& recording, const EpochSet& epochs, const FieldConfig& config,
                   const FieldOptions& options) {
  return score_irpf(fit_irpf(recording, epochs, config, options), epochs);
}

SqiReport run_rpf(const Recording& recording, const EpochSet& epochs, const FieldConfig& config) {
  validate_field_config(config, recording.channel_names(), recording.sampling_rate());
  const GateStage g = run_gate(recording, epochs, config.u_lim, true);
  const auto specs = riemannian_only(config.potatoes);
  std::vector<PotatoModel> models;
  for (const auto& spec : specs) {
    const auto covs = potato_covariances(g.clean, spec);
    models.push_back(with_spec(fit_fixed_threshold(covs, DistanceKind::Riemannian, 2.0, 3), spec));
  }
  SqiReport report = score_field(specs, models, epochs, g.gated, CombinerKind::Fisher, LiptakForm::Stouffer);
  report.method = Method::RPF;
  report.threshold = config.rpf_p_threshold;
  apply_threshold(report);
  return report;
}

SqiReport run_rp(const Recording& recording, const EpochSet& epochs, double z_th, double u_lim) {
  const GateStage g = run_gate(recording, epochs, u_lim, true);
  std::vector<SpdMatrix> train;
  train.reserve(g.clean.size());
  for (const auto& e : g.clean.epochs) train.push_back(covariance(e));
  PotatoModel model = fit_simple(train, DistanceKind::Riemannian, DispersionMode::Arithmetic);
  model.channels = recording.channel_names();

  SqiReport report;
  report.method = Method::RP;
  const auto n = static_cast<Eigen::Index>(epochs.size());
  report.per_potato_p.resize(1, n);
  report.per_potato_z.resize(1, n);
  report.sqi.assign(epochs.size(), 0.0);
  report.rejected.assign(epochs.size(), false);
  report.gate_rejected = g.gated;
  report.threshold = z_to_p(z_th);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = score(model, covariance(epochs.epochs[static_cast<std::size_t>(i)]));
    report.per_potato_p(0, i) = s.p;
    report.per_potato_z(0, i) = s.z;
    const auto k = static_cast<std::size_t>(i);
    if (!g.gated[k]) report.sqi[k] = s.p;
    report.rejected[k] = g.gated[k] || s.z > z_th;
  }
  return report;
}

}  // namespace irpf
