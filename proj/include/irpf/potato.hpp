#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irpf/signal_io.hpp"
#include "irpf/spd.hpp"
#include "irpf/stats.hpp"

namespace irpf {

/// A fitted potato: barycenter, dispersion of training distances, metric.
struct PotatoModel {
  SpdMatrix barycenter;
  DispersionStats stats;
  DistanceKind distance_kind = DistanceKind::Riemannian;
  std::vector<std::string> channels;
  double band_low = 0.0;
  std::optional<double> band_high;
  /// One entry per training cov; true when used in the final fit.
  std::vector<bool> kept_mask;
  /// Trimming rounds that removed covs; each is followed by one refit.
  int trim_rounds = 0;
  int refits = 0;
  /// False when a Karcher mean hit its iteration cap.
  bool converged = true;

  std::size_t kept_count() const;
};

struct PotatoScore {
  double distance = 0.0;
  double z = 0.0;
  double p = 0.5;
};

/// Barycenter and statistics over all covs. The barycenter is the Karcher
/// mean for Riemannian potatoes and the arithmetic mean otherwise.
PotatoModel fit_simple(std::span<const SpdMatrix> covs, DistanceKind kind,
                       DispersionMode mode = DispersionMode::Geometric);

struct AdaptiveOptions {
  int max_rounds = 4;
  std::size_t min_survivors = 5;
  double sensitivity = 1.0;
  /// Drop level for the knee on sorted p-values, see
  /// trimming_knee_options.
  double knee_noise_level = 2.4;
};

/// Robust fit: repeatedly drops the covs below the knee of the sorted
/// p-value curve.
PotatoModel fit_adaptive(std::span<const SpdMatrix> covs, DistanceKind kind, const AdaptiveOptions& options = {});

/// Classic trimming: `iterations` rounds dropping covs with z > z_th.
PotatoModel fit_fixed_threshold(std::span<const SpdMatrix> covs, DistanceKind kind, double z_th = 2.0,
                                int iterations = 3, std::size_t min_survivors = 5);

PotatoScore score(const PotatoModel& model, const SpdMatrix& cov);

/// Artifact iff z > z_th.
Label rp_classify(const PotatoModel& model, const SpdMatrix& cov, double z_th = 2.0);

}  // namespace irpf
