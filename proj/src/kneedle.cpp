#include "irpf/kneedle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "irpf/error.hpp"

namespace irpf {

KneeResult find_knee(std::span<const double> values, const KneeOptions& options) {
  const std::size_t n = values.size();
  if (n < 5) throw Error(ErrorCode::TooFewPoints, "find_knee: need at least 5 points");
  if (!(options.sensitivity > 0.0)) throw Error(ErrorCode::InvalidConfig, "find_knee: sensitivity must be positive");

  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *min_it;
  const double range = *max_it - lo;
  if (!(range > 0.0)) return {};

  const double step = 1.0 / static_cast<double>(n - 1);
  std::vector<double> diff(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = (values[i] - lo) / range - static_cast<double>(i) * step;
    mean += diff[i];
  }
  mean /= static_cast<double>(n);

  // Convex curves are rotated by 180 degrees onto the concave form, which
  // negates the difference curve without moving indices.
  const bool convex = options.shape == CurveShape::Convex || (options.shape == CurveShape::Auto && mean < 0.0);
  if (convex) {
    for (double& d : diff) d = -d;
  }

  // A candidate is confirmed once the curve falls below its threshold; a
  // later local maximum replaces it before that happens.
  const double drop = options.sensitivity * step;
  std::vector<double> later_min(n);
  later_min[n - 1] = diff[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) later_min[i] = std::min(diff[i], later_min[i + 1]);
  auto significant = [&](std::size_t i) {
    if (diff[i] < options.min_prominence) return false;
    return !(options.min_drop > 0.0) || (diff[i] > 0.0 && diff[i] - later_min[i] >= options.min_drop);
  };
  std::optional<std::size_t> candidate;
  double threshold = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const bool local_max = i + 1 < n && diff[i] > diff[i - 1] && diff[i] >= diff[i + 1];
    if (local_max && significant(i)) {
      candidate = i;
      threshold = diff[i] - drop;
    } else if (candidate && diff[i] < threshold) {
      return {*candidate, values[*candidate]};
    }
  }
  return {};
}

KneeOptions sqi_knee_options(std::size_t n, double sensitivity, double noise_level) {
  KneeOptions opt;
  opt.sensitivity = sensitivity;
  opt.shape = CurveShape::Convex;
  opt.min_prominence = n > 0 ? noise_level / std::sqrt(static_cast<double>(n)) : 0.0;
  return opt;
}

KneeOptions trimming_knee_options(std::size_t n, double sensitivity, double noise_level) {
  KneeOptions opt;
  opt.sensitivity = sensitivity;
  opt.shape = CurveShape::Convex;
  opt.min_drop = n > 0 ? noise_level / std::sqrt(static_cast<double>(n)) : 0.0;
  return opt;
}

}  // namespace irpf
