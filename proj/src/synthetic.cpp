#include "irpf/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>

#include <unsupported/Eigen/FFT>


namespace irpf {

std::string_view to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::Blink: return "blink";
    case ArtifactKind::VEM: return "vem";
    case ArtifactKind::HEM: return "hem";
    case ArtifactKind::EMG: return "emg";
    case ArtifactKind::Pop: return "pop";
  }
  return "unknown";
}

const std::vector<std::string>& standard_montage() {
  static const std::vector<std::string> names = {"Fp1", "Fpz", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T7", "T8", "C3",
                                                 "Cz",  "C4",  "P7",  "P3", "Pz", "P4", "P8", "O1", "Oz", "O2"};
  return names;
}

namespace {

constexpr double kPi = std::numbers::pi;

// Rough scalp positions (nose up), used for spatial correlation.
const std::map<std::string, std::array<double, 2>>& positions() {
  static const std::map<std::string, std::array<double, 2>> pos = {
      {"Fp1", {-0.3, 0.95}}, {"Fpz", {0.0, 1.0}},  {"Fp2", {0.3, 0.95}},  {"F7", {-0.8, 0.6}}, {"F3", {-0.4, 0.5}},
      {"Fz", {0.0, 0.5}},    {"F4", {0.4, 0.5}},   {"F8", {0.8, 0.6}},    {"T7", {-1.0, 0.0}}, {"T8", {1.0, 0.0}},
      {"C3", {-0.5, 0.0}},   {"Cz", {0.0, 0.0}},   {"C4", {0.5, 0.0}},    {"P7", {-0.8, -0.6}}, {"P3", {-0.4, -0.5}},
      {"Pz", {0.0, -0.5}},   {"P4", {0.4, -0.5}},  {"P8", {0.8, -0.6}},   {"O1", {-0.3, -0.95}}, {"Oz", {0.0, -1.0}},
      {"O2", {0.3, -0.95}}};
  return pos;
}

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
double log_uniform(Rng& rng, double lo, double hi) { return std::exp(uniform(rng, std::log(lo), std::log(hi))); }

Eigen::VectorXd white(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// White noise shaped to |H(f)|^2 = shape(f) by FFT filtering, unit RMS.
template <typename Shape>
Eigen::VectorXd shaped_noise(Rng& rng, Eigen::Index n, double rate, Shape&& shape) {
  Eigen::FFT<double> fft;
  const Eigen::VectorXd w = white(rng, n);
  std::vector<double> x(w.data(), w.data() + n);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, x);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double f = static_cast<double>(std::min(k, n - k)) * rate / static_cast<double>(n);
    spec[static_cast<std::size_t>(k)] *= std::sqrt(shape(f));
  }
  std::vector<std::complex<double>> back;
  fft.inv(back, spec);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = back[static_cast<std::size_t>(i)].real();
  const double rms = std::sqrt(out.squaredNorm() / static_cast<double>(n));
  return rms > 0.0 ? Eigen::VectorXd(out / rms) : out;
}

// Aperiodic 1/(f + f_knee) spectrum with a 2 Hz knee.
double pink(double f) { return f < 0.3 ? 0.0 : 1.0 / (f + 2.0); }

// Hann-tapered window of given length.
double hann(double t, double len) { return 0.5 - 0.5 * std::cos(2.0 * kPi * std::clamp(t / len, 0.0, 1.0)); }

// 0 -> 1 smooth transition over `rise` seconds.
double smooth_step(double t, double rise) {
  if (t <= 0.0) return 0.0;
  if (t >= rise) return 1.0;
  return 0.5 - 0.5 * std::cos(kPi * t / rise);
}

struct Injector {
  Rng& rng;
  const std::vector<std::string>& names;
  Eigen::MatrixXd& x;
  double rate;

  Eigen::Index row(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : it - names.begin();
  }

  std::vector<std::pair<Eigen::Index, double>> present(const std::vector<std::pair<std::string, double>>& weights,
                                                       std::vector<std::string>& used) const {
    std::vector<std::pair<Eigen::Index, double>> out;
    for (const auto& [name, w] : weights) {
      const auto r = row(name);
      if (r < 0) continue;
      out.emplace_back(r, w);
      used.push_back(name);
    }
    return out;
  }

  // Adds amplitude * weight * wave(t) over [start, start+len).
  template <typename Wave>
  void add(const std::vector<std::pair<Eigen::Index, double>>& rows, Eigen::Index start, Eigen::Index len,
           double amplitude, Wave&& wave) {
    for (Eigen::Index k = 0; k < len; ++k) {
      const double v = amplitude * wave(static_cast<double>(k) / rate);
      for (const auto& [r, w] : rows) x(r, start + k) += w * v;
    }
  }
};

Eigen::Index duration_samples(double seconds, double rate) { return static_cast<Eigen::Index>(std::llround(seconds * rate)); }

const std::vector<std::pair<std::string, double>> kFrontalBlink = {
    {"Fp1", 1.0}, {"Fpz", 1.0}, {"Fp2", 1.0}, {"F7", 0.35}, {"F3", 0.45}, {"Fz", 0.5},
    {"F4", 0.45}, {"F8", 0.35}, {"C3", 0.12}, {"Cz", 0.15}, {"C4", 0.12}};

const std::vector<std::pair<std::string, double>> kFrontalVertical = {
    {"Fp1", 1.0}, {"Fpz", 1.0}, {"Fp2", 1.0}, {"F7", 0.55}, {"F3", 0.65}, {"Fz", 0.7},  {"F4", 0.65},
    {"F8", 0.55}, {"C3", 0.3},  {"Cz", 0.3},  {"C4", 0.3},  {"O1", -0.15}, {"Oz", -0.15}, {"O2", -0.15}};

const std::vector<std::pair<std::string, double>> kHorizontal = {
    {"F7", 1.0}, {"F8", -1.0}, {"Fp1", 0.5}, {"Fp2", -0.5}, {"F3", 0.3}, {"F4", -0.3}, {"T7", 0.35}, {"T8", -0.35}};

const std::vector<std::vector<std::string>> kEmgRegions = {
    {"F7", "T7"}, {"F8", "T8"}, {"F7", "T7", "F8", "T8"}, {"T7", "P7"}, {"T8", "P8"}, {"O1", "Oz", "O2"}, {"P7", "O1"},
    {"P8", "O2"}};

InjectedEvent inject(ArtifactKind kind, Injector& inj, Eigen::Index epoch_start, Eigen::Index epoch_len) {
  const double rate = inj.rate;
  const Eigen::Index margin = duration_samples(0.15, rate);
  InjectedEvent ev;
  ev.kind = kind;

  double seconds = 0.0;
  switch (kind) {
    case ArtifactKind::Blink: seconds = uniform(inj.rng, 0.4, 0.6); break;
    case ArtifactKind::VEM: seconds = uniform(inj.rng, 0.8, 1.6); break;
    case ArtifactKind::HEM: seconds = uniform(inj.rng, 0.8, 1.8); break;
    case ArtifactKind::EMG: seconds = uniform(inj.rng, 2.0, 3.2); break;
    case ArtifactKind::Pop: seconds = uniform(inj.rng, 0.6, 1.2); break;
  }
  ev.length = std::min(duration_samples(seconds, rate), epoch_len - 2 * margin);
  const Eigen::Index slack = epoch_len - 2 * margin - ev.length;
  ev.start = epoch_start + margin +
             (slack > 0 ? std::uniform_int_distribution<Eigen::Index>(0, slack)(inj.rng) : Eigen::Index{0});
  const double len_s = static_cast<double>(ev.length) / rate;

  switch (kind) {
    case ArtifactKind::Blink: {
      ev.amplitude = log_uniform(inj.rng, 90.0, 300.0);
      const auto rows = inj.present(kFrontalBlink, ev.channels);
      // Main positive lobe followed by a shallow negative rebound.
      const double c = 0.4 * len_s, s = 0.2 * len_s;
      inj.add(rows, ev.start, ev.length, ev.amplitude, [&](double t) {
        const double a = (t - c) / s, b = (t - c - 2.2 * s) / (1.6 * s);
        return (std::exp(-0.5 * a * a) - 0.25 * std::exp(-0.5 * b * b)) * hann(t, len_s);
      });
      break;
    }
    case ArtifactKind::VEM: {
      ev.amplitude = log_uniform(inj.rng, 50.0, 150.0) * (uniform(inj.rng, 0.0, 1.0) < 0.5 ? 1.0 : -1.0);
      const auto rows = inj.present(kFrontalVertical, ev.channels);
      const double rise = 0.3 * len_s;
      inj.add(rows, ev.start, ev.length, ev.amplitude,
              [&](double t) { return smooth_step(t, rise) * (1.0 - smooth_step(t - (len_s - rise), rise)); });
      break;
    }
    case ArtifactKind::HEM: {
      ev.amplitude = log_uniform(inj.rng, 50.0, 150.0) * (uniform(inj.rng, 0.0, 1.0) < 0.5 ? 1.0 : -1.0);
      const auto rows = inj.present(kHorizontal, ev.channels);
      const double rise = 0.06;
      inj.add(rows, ev.start, ev.length, ev.amplitude,
              [&](double t) { return smooth_step(t, rise) * (1.0 - smooth_step(t - (len_s - rise), rise)); });
      break;
    }
    case ArtifactKind::EMG: {
      ev.amplitude = log_uniform(inj.rng, 45.0, 110.0);
      const auto& region = kEmgRegions[std::uniform_int_distribution<std::size_t>(0, kEmgRegions.size() - 1)(inj.rng)];
      std::vector<std::pair<std::string, double>> weights;
      for (const auto& name : region) weights.emplace_back(name, uniform(inj.rng, 0.85, 1.0));
      std::vector<std::string> used;
      const auto rows = inj.present(weights, used);
      ev.channels = used;
      for (const auto& [r, w] : rows) {
        const Eigen::VectorXd burst =
            shaped_noise(inj.rng, ev.length, rate, [](double f) { return f >= 20.0 && f <= 70.0 ? 1.0 : 0.0; });
        const double taper = std::min(0.15, 0.25 * len_s);
        for (Eigen::Index k = 0; k < ev.length; ++k) {
          const double t = static_cast<double>(k) / rate;
          const double env = smooth_step(t, taper) * (1.0 - smooth_step(t - (len_s - taper), taper));
          inj.x(r, ev.start + k) += w * ev.amplitude * env * burst[k];
        }
      }
      break;
    }
    case ArtifactKind::Pop: {
      ev.amplitude = log_uniform(inj.rng, 150.0, 600.0) * (uniform(inj.rng, 0.0, 1.0) < 0.5 ? 1.0 : -1.0);
      const auto r = static_cast<Eigen::Index>(std::uniform_int_distribution<std::size_t>(0, inj.names.size() - 1)(inj.rng));
      ev.channels = {inj.names[static_cast<std::size_t>(r)]};
      const double tau = uniform(inj.rng, 0.1, 0.3);
      const double ring = uniform(inj.rng, 4.0, 12.0);
      // Contact loss: the channel's own signal fades out and back while a
      // step with exponential recovery and damped ringing takes over.
      for (Eigen::Index k = 0; k < ev.length; ++k) {
        const double t = static_cast<double>(k) / rate;
        const double decay = std::exp(-t / tau);
        const double tail = 1.0 - smooth_step(t - 0.8 * len_s, 0.2 * len_s);
        const double loss = smooth_step(t, 0.02) * tail;
        inj.x(r, ev.start + k) = (1.0 - loss) * inj.x(r, ev.start + k) +
                                 ev.amplitude * (decay + 0.4 * decay * std::sin(2.0 * kPi * ring * t)) * tail;
      }
      break;
    }
  }
  return ev;
}

}  // namespace

std::vector<Label> labels_from_events(const std::vector<InjectedEvent>& events, std::size_t n_epochs,
                                      Eigen::Index epoch_length) {
  std::vector<Label> labels(n_epochs, Label::Clean);
  for (const auto& ev : events) {
    if (ev.length <= 0) continue;
    const Eigen::Index first = ev.start / epoch_length;
    const Eigen::Index last = (ev.start + ev.length - 1) / epoch_length;
    for (Eigen::Index e = first; e <= last && e < static_cast<Eigen::Index>(n_epochs); ++e) {
      labels[static_cast<std::size_t>(e)] = Label::Artifact;
    }
  }
  return labels;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  const auto& montage = standard_montage();
  const ArtifactMix& mix = spec.artifact_mix;
  if (spec.n_channels < 1 || spec.n_channels > montage.size()) {
    throw Error(ErrorCode::InvalidSpec, "n_channels must be in [1, " + std::to_string(montage.size()) + "]");
  }
  if (!(spec.rate_hz > 0.0) || !(spec.duration_s > 0.0) || !(spec.epoch_duration > 0.0) ||
      !(spec.background_rms > 0.0)) {
    throw Error(ErrorCode::InvalidSpec, "rate, durations and background_rms must be positive");
  }
  for (double p : {mix.blink, mix.vem, mix.hem, mix.emg, mix.pop}) {
    if (!(p >= 0.0)) throw Error(ErrorCode::InvalidSpec, "artifact proportions must be non-negative");
  }
  if (!(mix.total() < 1.0)) throw Error(ErrorCode::InvalidSpec, "artifact proportions must sum to less than 1");

  const Eigen::Index total = duration_samples(spec.duration_s, spec.rate_hz);
  const Eigen::Index epoch_len = duration_samples(spec.epoch_duration, spec.rate_hz);
  if (epoch_len < duration_samples(1.0, spec.rate_hz) || epoch_len > total) {
    throw Error(ErrorCode::InvalidSpec, "epoch_duration must be at least 1 s and fit in the recording");
  }
  const auto n = static_cast<Eigen::Index>(spec.n_channels);
  std::vector<std::string> names(montage.begin(), montage.begin() + n);
  Rng rng(spec.seed);

  // Spatially correlated pink background.
  Eigen::MatrixXd corr(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& a = positions().at(names[static_cast<std::size_t>(i)]);
      const auto& b = positions().at(names[static_cast<std::size_t>(j)]);
      const double d = std::hypot(a[0] - b[0], a[1] - b[1]);
      corr(i, j) = 0.9 * std::exp(-d / 0.7) + (i == j ? 0.1 : 0.0);
    }
  }
  const Eigen::MatrixXd mixing = corr.llt().matrixL();
  Eigen::MatrixXd sources(n, total);
  for (Eigen::Index i = 0; i < n; ++i) sources.row(i) = shaped_noise(rng, total, spec.rate_hz, pink).transpose();
  Eigen::MatrixXd x = mixing * sources;

  // Alpha rhythm with slow amplitude modulation, strongest posteriorly.
  const Eigen::VectorXd alpha_env =
      shaped_noise(rng, total, spec.rate_hz, [](double f) { return f > 0.0 && f < 0.2 ? 1.0 : 0.0; });
  const double alpha_freq = uniform(rng, 9.0, 11.0);
  const double alpha_phase = uniform(rng, 0.0, 2.0 * kPi);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = positions().at(names[static_cast<std::size_t>(i)])[1];
    const double weight = 0.15 + 0.85 * std::clamp((0.2 - y) / 1.2, 0.0, 1.0);
    for (Eigen::Index t = 0; t < total; ++t) {
      const double amp = std::exp(0.2 * alpha_env[t]);
      x(i, t) += 0.6 * weight * amp * std::sin(2.0 * kPi * alpha_freq * static_cast<double>(t) / spec.rate_hz + alpha_phase);
    }
  }

  // Slow global power fluctuation and per-channel gains.
  const Eigen::VectorXd drift =
      shaped_noise(rng, total, spec.rate_hz, [](double f) { return f > 0.0 && f < 0.05 ? 1.0 : 0.0; });
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rms = std::sqrt(x.row(i).squaredNorm() / static_cast<double>(total));
    x.row(i) *= spec.background_rms * uniform(rng, 0.8, 1.2) / rms;
  }
  for (Eigen::Index t = 0; t < total; ++t) x.col(t) *= std::exp(0.05 * drift[t]);

  // Artifact epochs: disjoint random subsets, one event each.
  const auto n_epochs = static_cast<std::size_t>(total / epoch_len);
  std::vector<std::size_t> order(n_epochs);
  for (std::size_t i = 0; i < n_epochs; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  Injector inj{rng, names, x, spec.rate_hz};
  std::vector<InjectedEvent> events;
  std::size_t next = 0;
  const std::array<std::pair<ArtifactKind, double>, 5> kinds = {{{ArtifactKind::Blink, mix.blink},
                                                                  {ArtifactKind::VEM, mix.vem},
                                                                  {ArtifactKind::HEM, mix.hem},
                                                                  {ArtifactKind::EMG, mix.emg},
                                                                  {ArtifactKind::Pop, mix.pop}}};
  for (const auto& [kind, share] : kinds) {
    const auto count = static_cast<std::size_t>(std::llround(share * static_cast<double>(n_epochs)));
    for (std::size_t c = 0; c < count && next < n_epochs; ++c, ++next) {
      events.push_back(inject(kind, inj, static_cast<Eigen::Index>(order[next]) * epoch_len, epoch_len));
    }
  }
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.start < b.start; });

  Recording recording(names, spec.rate_hz, std::move(x));
  EpochSet epochs = epoch(recording, spec.epoch_duration);
  epochs.labels = labels_from_events(events, epochs.size(), epochs.epoch_length());
  return {std::move(recording), std::move(epochs), std::move(events)};
}

SyntheticSpec corpus_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.artifact_mix = {0.06, 0.03, 0.03, 0.05, 0.03};
  return spec;
}

FieldConfig default_field_config() {
  const auto riem = DistanceKind::Riemannian;
  const auto diag = DistanceKind::DiagEuclidean;
  FieldConfig config;
  // Eye potatoes take no per-epoch high-pass: the 0.1 Hz edge comes from
  // preprocessing, and a sub-Hz high-pass on a 4 s epoch is mostly edge.
  config.potatoes = {
      {{"Fp1", "Fp2"}, 0.0, 7.0, riem},
      {{"Fp1", "Fp2"}, 0.0, 7.0, DistanceKind::Euclidean},
      {{"Fp1", "Fpz", "Fp2"}, 0.0, 7.0, riem},
      {{"F7", "F8"}, 0.0, 7.0, riem},
      {{"F7", "F8"}, 20.0, std::nullopt, diag},
      {{"T7", "T8"}, 20.0, std::nullopt, diag},
      {{"P7", "P8"}, 20.0, std::nullopt, diag},
      {{"O1", "Oz", "O2"}, 20.0, std::nullopt, diag},
      {standard_montage(), 1.0, 20.0, riem},
  };
  config.combiner = CombinerKind::MetaTippettOverLiptakFisher;
  config.u_lim = 7.0;
  return config;
}

}  // namespace irpf
