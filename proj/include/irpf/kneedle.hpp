#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>

namespace irpf {

/// How the ascending curve is mapped onto the canonical concave form.
/// Auto decides from the sign of mean(y_n - x_n).
enum class CurveShape { Auto, Concave, Convex };

struct KneeOptions {
  double sensitivity = 1.0;
  CurveShape shape = CurveShape::Auto;
  /// Local maxima of the difference curve below this level are not knee
  /// candidates. The default admits every local maximum.
  double min_prominence = -std::numeric_limits<double>::infinity();
  /// When positive, a candidate must also lie above zero and stand this far
  /// above the lowest later point of the difference curve.
  double min_drop = 0.0;
};

struct KneeResult {
  std::optional<std::size_t> index;
  std::optional<double> value;

  bool found() const noexcept { return index.has_value(); }
};

/// Kneedle on a non-decreasing sequence (at least 5 values).
KneeResult find_knee(std::span<const double> values, const KneeOptions& options = {});

/// Options for the sorted SQI curve: a knee is sought where a cluster of
/// near-zero values ends (convex shape), and only when the difference curve
/// rises above `noise_level / sqrt(n)`, the scale of sampling noise for n
/// uniform order statistics.
KneeOptions sqi_knee_options(std::size_t n, double sensitivity = 1.0, double noise_level = 1.1);

/// Options for barycenter trimming on sorted p-values: convex shape, and the
/// candidate must be followed by a fall of at least `noise_level / sqrt(n)`
/// in the difference curve. Unlike a height floor this admits a few extreme
/// outliers followed by a jump.
KneeOptions trimming_knee_options(std::size_t n, double sensitivity = 1.0, double noise_level = 2.4);

}  // namespace irpf
