#include "irpf/dsp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace irpf {

std::complex<double> Biquad::response(std::complex<double> z_inv) const {
  const std::complex<double> num = b0 + z_inv * (b1 + z_inv * b2);
  const std::complex<double> den = 1.0 + z_inv * (a1 + z_inv * a2);
  return num / den;
}

std::array<double, 2> Biquad::pole_radii() const {
  // Roots of z^2 + a1 z + a2.
  const std::complex<double> disc = std::sqrt(std::complex<double>(a1 * a1 - 4.0 * a2));
  return {std::abs((-a1 + disc) / 2.0), std::abs((-a1 - disc) / 2.0)};
}

namespace {

enum class SectionKind { LowPass, HighPass };

// Butterworth prototype of order kOrder as kOrder/2 biquads, cutoff pre-warped
// through K = tan(pi fc / fs).
void append_butterworth(std::vector<Biquad>& out, SectionKind kind, double cutoff, double rate) {
  constexpr int order = BandPassFilter::kOrder;
  const double k = std::tan(std::numbers::pi * cutoff / rate);
  const double k2 = k * k;
  for (int i = 0; i < order / 2; ++i) {
    const double zeta = std::sin(std::numbers::pi * (2.0 * i + 1.0) / (2.0 * order));
    const double norm = 1.0 / (1.0 + 2.0 * zeta * k + k2);
    Biquad s;
    if (kind == SectionKind::LowPass) {
      s.b0 = k2 * norm;
      s.b1 = 2.0 * s.b0;
      s.b2 = s.b0;
    } else {
      s.b0 = norm;
      s.b1 = -2.0 * norm;
      s.b2 = norm;
    }
    s.a1 = 2.0 * (k2 - 1.0) * norm;
    s.a2 = (1.0 - 2.0 * zeta * k + k2) * norm;
    out.push_back(s);
  }
}

constexpr Eigen::Index kPad = 3 * BandPassFilter::kOrder;

}  // namespace

BandPassFilter::BandPassFilter(std::optional<double> low_cut, std::optional<double> high_cut, double sampling_rate)
    : low_cut_(low_cut), high_cut_(high_cut), rate_(sampling_rate) {
  const double nyquist = rate_ / 2.0;
  if (!(rate_ > 0.0)) throw Error(ErrorCode::CutoffOutOfRange, "sampling rate must be positive");
  if (!low_cut_ && !high_cut_) throw Error(ErrorCode::CutoffOutOfRange, "filter needs at least one cutoff");
  for (auto c : {low_cut_, high_cut_}) {
    if (c && !(*c > 0.0 && *c < nyquist)) {
      throw Error(ErrorCode::CutoffOutOfRange,
                  "cutoff " + std::to_string(*c) + " Hz outside (0, " + std::to_string(nyquist) + ")");
    }
  }
  if (low_cut_ && high_cut_ && !(*low_cut_ < *high_cut_)) {
    throw Error(ErrorCode::CutoffOutOfRange, "low cutoff must be below high cutoff");
  }
  if (low_cut_) append_butterworth(sections_, SectionKind::HighPass, *low_cut_, rate_);
  if (high_cut_) append_butterworth(sections_, SectionKind::LowPass, *high_cut_, rate_);

  for (const auto& s : sections_) {
    const auto radii = s.pole_radii();
    if (!(radii[0] < 1.0 && radii[1] < 1.0)) throw Error(ErrorCode::CutoffOutOfRange, "unstable filter design");
  }

  // Steady state of each section for a unit step entering the cascade.
  double level = 1.0;
  steady_state_.reserve(2 * sections_.size());
  for (const auto& s : sections_) {
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = (s.b2 - s.a2 * gain) * level;
    const double z1 = (s.b1 - s.a1 * gain) * level + z2;
    steady_state_.push_back(z1);
    steady_state_.push_back(z2);
    level *= gain;
  }
}

std::complex<double> BandPassFilter::response(double freq_hz) const {
  const std::complex<double> z_inv = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / rate_);
  std::complex<double> h = 1.0;
  for (const auto& s : sections_) h *= s.response(z_inv);
  return h;
}

void BandPassFilter::apply_row(std::span<double> row) const {
  const auto n = static_cast<Eigen::Index>(row.size());
  if (n <= 2 * kPad) {
    throw Error(ErrorCode::TooShort, "signal of " + std::to_string(n) + " samples is too short to filter");
  }
  std::vector<double> ext(static_cast<std::size_t>(n + 2 * kPad));
  const double first = row.front();
  const double last = row.back();
  for (Eigen::Index i = 0; i < kPad; ++i) {
    ext[i] = 2.0 * first - row[kPad - i];
    ext[n + kPad + i] = 2.0 * last - row[n - 2 - i];
  }
  std::copy(row.begin(), row.end(), ext.begin() + kPad);

  const auto run = [&](auto begin, auto end) {
    const double x0 = *begin;
    std::vector<double> state(steady_state_.size());
    for (std::size_t i = 0; i < state.size(); ++i) state[i] = steady_state_[i] * x0;
    for (auto it = begin; it != end; ++it) {
      double v = *it;
      for (std::size_t k = 0; k < sections_.size(); ++k) {
        const Biquad& s = sections_[k];
        double& z1 = state[2 * k];
        double& z2 = state[2 * k + 1];
        const double y = s.b0 * v + z1;
        z1 = s.b1 * v - s.a1 * y + z2;
        z2 = s.b2 * v - s.a2 * y;
        v = y;
      }
      *it = v;
    }
  };
  run(ext.begin(), ext.end());
  run(ext.rbegin(), ext.rend());
  std::copy(ext.begin() + kPad, ext.begin() + kPad + n, row.begin());
}

Eigen::MatrixXd BandPassFilter::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), x.cols());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::Map<Eigen::RowVectorXd>(row.data(), x.cols()) = x.row(r);
    apply_row(row);
    out.row(r) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), x.cols());
  }
  return out;
}

Eigen::MatrixXd bandpass(const Eigen::MatrixXd& x, std::optional<double> low_cut, std::optional<double> high_cut,
                         double sampling_rate) {
  if (x.cols() <= 6 * BandPassFilter::kOrder) {
    throw Error(ErrorCode::TooShort, "bandpass: need more than " + std::to_string(6 * BandPassFilter::kOrder) +
                                         " samples");
  }
  return BandPassFilter(low_cut, high_cut, sampling_rate).apply(x);
}

Recording preprocess(const Recording& recording, std::optional<double> low_cut, std::optional<double> high_cut) {
  return Recording(recording.channel_names(), recording.sampling_rate(),
                   bandpass(recording.samples(), low_cut, high_cut, recording.sampling_rate()));
}

Eigen::VectorXd frms(const Eigen::MatrixXd& samples) {
  if (samples.rows() == 0 || samples.cols() == 0) throw Error(ErrorCode::EmptyInput, "frms: empty input");
  return (samples.colwise().squaredNorm().transpose() / static_cast<double>(samples.rows())).cwiseSqrt();
}

bool OutlierGate::exceeds(const Eigen::MatrixXd& epoch) const { return frms(epoch).maxCoeff() > th_rej; }

OutlierGate fit_outlier_gate(const Recording& recording, const EpochSet& epochs, double u_lim) {
  if (!(u_lim > 0.0)) throw Error(ErrorCode::InvalidConfig, "u_lim must be positive");
  const Eigen::VectorXd values = frms(recording.samples());
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());

  const auto first_positive = std::upper_bound(sorted.begin(), sorted.end(), 0.0);
  if (first_positive == sorted.end()) throw Error(ErrorCode::AllZeroSignal, "recording is zero everywhere");

  // Window of 2 * epoch length around the median position, clipped to bounds.
  const auto total = static_cast<std::ptrdiff_t>(sorted.size());
  const auto half = static_cast<std::ptrdiff_t>(std::max<Eigen::Index>(epochs.epoch_length(), 1));
  const std::ptrdiff_t center = total / 2;
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, center - half);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(total, center + half);
  const double ref = sorted[static_cast<std::size_t>(lo)];
  double acc = 0.0;
  for (std::ptrdiff_t i = lo; i < hi; ++i) acc += sorted[static_cast<std::size_t>(i)] - ref;

  OutlierGate gate;
  gate.mu_frms = ref + acc / static_cast<double>(hi - lo);
  gate.l_lim = *first_positive;
  gate.u_lim = u_lim;
  gate.th_rej = gate.mu_frms + u_lim * (gate.mu_frms - gate.l_lim);

  gate.rejected.reserve(epochs.size());
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const Eigen::Index start = epochs.source_indices.at(i);
    const Eigen::Index len = epochs.epochs[i].cols();
    gate.rejected.push_back((values.segment(start, len).array() > gate.th_rej).any());
  }
  return gate;
}

}  // namespace irpf
