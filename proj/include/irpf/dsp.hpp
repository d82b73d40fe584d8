#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "irpf/signal_io.hpp"

namespace irpf {

/// One second-order section, transposed direct form II, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(std::complex<double> z_inv) const;
  /// Pole magnitudes of 1 + a1 z^-1 + a2 z^-2.
  std::array<double, 2> pole_radii() const;
};

/// 4th-order Butterworth band-pass (or one-sided high/low-pass when a cutoff
/// is absent) designed by bilinear transform with pre-warping, applied with
/// zero phase. A band-pass is the cascade of a 4th-order high-pass at
/// low_cut and a 4th-order low-pass at high_cut.
class BandPassFilter {
 public:
  static constexpr int kOrder = 4;

  BandPassFilter(std::optional<double> low_cut, std::optional<double> high_cut, double sampling_rate);

  std::optional<double> low_cut() const noexcept { return low_cut_; }
  std::optional<double> high_cut() const noexcept { return high_cut_; }
  double sampling_rate() const noexcept { return rate_; }
  std::span<const Biquad> sections() const noexcept { return sections_; }

  /// Single-pass complex frequency response at `freq_hz`.
  std::complex<double> response(double freq_hz) const;

  /// Forward-backward filtering of each row with odd reflection padding of
  /// 3 * kOrder samples and steady-state initial conditions.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  void apply_row(std::span<double> row) const;

 private:
  std::optional<double> low_cut_;
  std::optional<double> high_cut_;
  double rate_;
  std::vector<Biquad> sections_;
  std::vector<double> steady_state_;  // per-section [z1, z2] for a unit step
};

Eigen::MatrixXd bandpass(const Eigen::MatrixXd& x, std::optional<double> low_cut, std::optional<double> high_cut,
                         double sampling_rate);

/// Filters the whole recording with the given band.
Recording preprocess(const Recording& recording, std::optional<double> low_cut, std::optional<double> high_cut);

/// Field root mean square per time sample: sqrt(mean_n x(n,t)^2).
Eigen::VectorXd frms(const Eigen::MatrixXd& samples);

/// Amplitude gate fitted on the sorted FRMS of a recording.
struct OutlierGate {
  double mu_frms = 0.0;
  double l_lim = 0.0;
  double u_lim = 1.0;
  double th_rej = 0.0;
  std::vector<bool> rejected;

  /// True when any sample of the N x T epoch has FRMS strictly above th_rej.
  bool exceeds(const Eigen::MatrixXd& epoch) const;
};

OutlierGate fit_outlier_gate(const Recording& recording, const EpochSet& epochs, double u_lim);

}  // namespace irpf
