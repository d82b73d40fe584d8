#include "irpf/potato.hpp"

#include <algorithm>
#include <numeric>

#include "irpf/kneedle.hpp"

namespace irpf {

std::size_t PotatoModel::kept_count() const {
  return static_cast<std::size_t>(std::count(kept_mask.begin(), kept_mask.end(), true));
}

namespace {

constexpr double kAbsoluteDistanceFloor = 1e-300;
constexpr double kRelativeDistanceFloor = 1e-12;

void check_dims(std::span<const SpdMatrix> covs, std::size_t min_count, ErrorCode too_few) {
  if (covs.size() < min_count) {
    throw Error(too_few, "potato fit needs at least " + std::to_string(min_count) + " covariance matrices, got " +
                             std::to_string(covs.size()));
  }
  for (const auto& c : covs) {
    if (c.dim() != covs.front().dim()) throw Error(ErrorCode::DimensionMismatch, "potato fit: dimensions differ");
  }
}

// Barycenter and statistics on the covs selected by `mask`.
void fit_on(std::span<const SpdMatrix> covs, const std::vector<bool>& mask, DispersionMode mode, PotatoModel& model) {
  std::vector<SpdMatrix> kept;
  kept.reserve(covs.size());
  for (std::size_t i = 0; i < covs.size(); ++i) {
    if (mask[i]) kept.push_back(covs[i]);
  }
  if (model.distance_kind == DistanceKind::Riemannian) {
    auto km = geometric_mean<double>(kept);
    model.barycenter = std::move(km.mean);
    model.converged = model.converged && km.converged;
  } else {
    model.barycenter = arithmetic_mean<double>(kept);
  }
  std::vector<double> d;
  d.reserve(kept.size());
  for (const auto& c : kept) d.push_back(std::max(distance(c, model.barycenter, model.distance_kind), kAbsoluteDistanceFloor));
  model.stats = fit_dispersion(d, mode);
}

// Indices of kept covs ordered by ascending p (stable).
std::vector<std::size_t> kept_by_p(std::span<const SpdMatrix> covs, const PotatoModel& model,
                                   std::vector<double>& sorted_p) {
  std::vector<std::size_t> idx;
  std::vector<double> p(covs.size(), 1.0);
  for (std::size_t i = 0; i < covs.size(); ++i) {
    if (!model.kept_mask[i]) continue;
    idx.push_back(i);
    p[i] = score(model, covs[i]).p;
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  sorted_p.clear();
  for (std::size_t i : idx) sorted_p.push_back(p[i]);
  return idx;
}

}  // namespace

PotatoModel fit_simple(std::span<const SpdMatrix> covs, DistanceKind kind, DispersionMode mode) {
  check_dims(covs, 2, ErrorCode::TooFewEpochs);
  PotatoModel model;
  model.distance_kind = kind;
  model.kept_mask.assign(covs.size(), true);
  fit_on(covs, model.kept_mask, mode, model);
  return model;
}

PotatoModel fit_adaptive(std::span<const SpdMatrix> covs, DistanceKind kind, const AdaptiveOptions& options) {
  const std::size_t floor = std::max<std::size_t>(options.min_survivors, 5);
  check_dims(covs, floor, ErrorCode::TooFewEpochs);
  PotatoModel model = fit_simple(covs, kind);

  std::vector<double> sorted_p;
  std::size_t kept = covs.size();
  for (int round = 0; round < options.max_rounds; ++round) {
    const auto order = kept_by_p(covs, model, sorted_p);
    const auto knee = find_knee(sorted_p, trimming_knee_options(sorted_p.size(), options.sensitivity,
                                                                     options.knee_noise_level));
    if (!knee.found()) break;
    const std::size_t drop = *knee.index + 1;
    // Outliers are a minority; a knee past the middle is not an outlier edge.
    if (kept - drop < floor || 2 * drop > kept) break;
    for (std::size_t j = 0; j < drop; ++j) model.kept_mask[order[j]] = false;
    kept -= drop;
    ++model.trim_rounds;
    ++model.refits;
    fit_on(covs, model.kept_mask, DispersionMode::Geometric, model);
  }
  return model;
}

PotatoModel fit_fixed_threshold(std::span<const SpdMatrix> covs, DistanceKind kind, double z_th, int iterations,
                                std::size_t min_survivors) {
  check_dims(covs, std::max<std::size_t>(min_survivors, 2), ErrorCode::TooFewEpochs);
  PotatoModel model = fit_simple(covs, kind);
  std::size_t kept = covs.size();
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < covs.size(); ++i) {
      if (model.kept_mask[i] && score(model, covs[i]).z > z_th) out.push_back(i);
    }
    if (out.empty() || kept - out.size() < min_survivors) break;
    for (std::size_t i : out) model.kept_mask[i] = false;
    kept -= out.size();
    ++model.trim_rounds;
    ++model.refits;
    fit_on(covs, model.kept_mask, DispersionMode::Geometric, model);
  }
  return model;
}

PotatoScore score(const PotatoModel& model, const SpdMatrix& cov) {
  if (cov.dim() != model.barycenter.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "score: covariance is " + std::to_string(cov.dim()) +
                                                  "x" + std::to_string(cov.dim()) + ", potato expects " +
                                                  std::to_string(model.barycenter.dim()));
  }
  PotatoScore s;
  s.distance = distance(cov, model.barycenter, model.distance_kind);
  const double d = model.stats.mode == DispersionMode::Geometric
                       ? std::max(s.distance, std::max(kRelativeDistanceFloor * model.stats.mu, kAbsoluteDistanceFloor))
                       : s.distance;
  s.z = z_score(d, model.stats);
  s.p = z_to_p(s.z);
  return s;
}

Label rp_classify(const PotatoModel& model, const SpdMatrix& cov, double z_th) {
  return score(model, cov).z > z_th ? Label::Artifact : Label::Clean;
}

}  // namespace irpf
