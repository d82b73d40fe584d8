#pragma once

#include <span>
#include <string_view>

namespace irpf {

enum class DispersionMode { Arithmetic, Geometric };

/// Location/scale of a distance sample. In geometric mode mu is the
/// geometric mean and sigma the geometric standard deviation (>= 1).
struct DispersionStats {
  double mu = 0.0;
  double sigma = 0.0;
  DispersionMode mode = DispersionMode::Geometric;
};

enum class CombinerKind { Fisher, Liptak, Pearson, Tippett, MetaTippettOverLiptakFisher };

std::string_view to_string(CombinerKind kind);
CombinerKind parse_combiner(std::string_view name);

/// Liptak variant. Stouffer is the standard (1/sqrt J, p = Phi(q)) form;
/// AsPrinted keeps the 1/J scaling with p = 1 - Phi(q).
enum class LiptakForm { Stouffer, AsPrinted };

inline constexpr double kMinP = 1e-300;
inline constexpr double kMaxP = 1.0 - 1e-16;

DispersionStats fit_dispersion(std::span<const double> distances, DispersionMode mode);
double z_score(double d, const DispersionStats& stats);

/// One-sided upper-tail normal p-value, clamped to [kMinP, kMaxP].
double z_to_p(double z);

double normal_cdf(double z);
double normal_upper_tail(double z);
/// Inverse of the standard normal CDF.
double normal_quantile(double p);

/// P(X > q) and P(X <= q) for X ~ chi-square with 2k degrees of freedom.
double chi_square_even_upper(double q, int k);
double chi_square_even_lower(double q, int k);

double combine(std::span<const double> p_values, CombinerKind kind, LiptakForm liptak = LiptakForm::Stouffer);

}  // namespace irpf
