#include "irpf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "irpf/error.hpp"

namespace irpf {

std::string_view to_string(CombinerKind kind) {
  switch (kind) {
    case CombinerKind::Fisher: return "fisher";
    case CombinerKind::Liptak: return "liptak";
    case CombinerKind::Pearson: return "pearson";
    case CombinerKind::Tippett: return "tippett";
    case CombinerKind::MetaTippettOverLiptakFisher: return "meta_tippett_liptak_fisher";
  }
  return "unknown";
}

CombinerKind parse_combiner(std::string_view name) {
  if (name == "fisher") return CombinerKind::Fisher;
  if (name == "liptak" || name == "stouffer") return CombinerKind::Liptak;
  if (name == "pearson") return CombinerKind::Pearson;
  if (name == "tippett") return CombinerKind::Tippett;
  if (name == "meta_tippett_liptak_fisher" || name == "meta") return CombinerKind::MetaTippettOverLiptakFisher;
  throw Error(ErrorCode::InvalidConfig, "unknown combiner '" + std::string(name) + "'");
}

namespace {

double clamp_p(double p) { return std::clamp(p, kMinP, kMaxP); }

// Mean of the values relative to the first one, so a constant input yields
// exactly that constant.
double shifted_mean(std::span<const double> v) {
  const double ref = v.front();
  double acc = 0.0;
  for (double x : v) acc += x - ref;
  return ref + acc / static_cast<double>(v.size());
}

}  // namespace

DispersionStats fit_dispersion(std::span<const double> distances, DispersionMode mode) {
  if (distances.empty()) throw Error(ErrorCode::EmptyInput, "fit_dispersion: empty input");
  const double count = static_cast<double>(distances.size());

  if (mode == DispersionMode::Arithmetic) {
    const double mean = shifted_mean(distances);
    double ss = 0.0;
    for (double d : distances) ss += (d - mean) * (d - mean);
    const double sd = distances.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
    return {mean, sd, mode};
  }

  std::vector<double> logs;
  logs.reserve(distances.size());
  for (double d : distances) {
    if (!(d > 0.0)) throw Error(ErrorCode::NonPositiveDistance, "fit_dispersion: non-positive distance");
    logs.push_back(std::log(d));
  }
  const double log_mu = shifted_mean(logs);
  double ss = 0.0;
  for (double l : logs) ss += (l - log_mu) * (l - log_mu);
  return {std::exp(log_mu), std::exp(std::sqrt(ss / count)), mode};
}

double z_score(double d, const DispersionStats& stats) {
  if (stats.mode == DispersionMode::Arithmetic) {
    if (!(stats.sigma > 1e-12 * std::max(1.0, std::abs(stats.mu)))) return 0.0;
    return (d - stats.mu) / stats.sigma;
  }
  if (!(d > 0.0)) throw Error(ErrorCode::NonPositiveDistance, "z_score: non-positive distance");
  const double log_sigma = std::log(stats.sigma);
  if (!(log_sigma >= 1e-12)) return 0.0;
  return std::log(d / stats.mu) / log_sigma;
}

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double z_to_p(double z) { return clamp_p(normal_upper_tail(z)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::OutOfRangeP, "normal_quantile: p outside [0,1]");
  }
  // Acklam's rational approximation followed by one Halley refinement step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Refine against whichever tail is represented more accurately.
  const double e = x < 0.0 ? normal_cdf(x) - p : (1.0 - p) - normal_upper_tail(x);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double chi_square_even_upper(double q, int k) {
  if (k < 1) throw Error(ErrorCode::EmptyInput, "chi_square_even_upper: k < 1");
  if (q <= 0.0) return 1.0;
  const double x = q / 2.0;
  // Q(k, x) = e^{-x} sum_{j<k} x^j / j!
  double term = 1.0;
  double sum = 1.0;
  for (int j = 1; j < k; ++j) {
    term *= x / j;
    sum += term;
  }
  return std::exp(-x + std::log(sum));
}

double chi_square_even_lower(double q, int k) {
  if (k < 1) throw Error(ErrorCode::EmptyInput, "chi_square_even_lower: k < 1");
  if (q <= 0.0) return 0.0;
  const double x = q / 2.0;
  if (x > k + 1.0) return 1.0 - chi_square_even_upper(q, k);
  // P(k, x) = e^{-x} sum_{j>=k} x^j / j!
  double log_term = -x + k * std::log(x) - std::lgamma(k + 1.0);
  double term = std::exp(log_term);
  double sum = term;
  for (int j = k + 1; j < k + 1000; ++j) {
    term *= x / j;
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

double combine(std::span<const double> p_values, CombinerKind kind, LiptakForm liptak) {
  if (p_values.empty()) throw Error(ErrorCode::EmptyInput, "combine: empty p-value list");
  for (double p : p_values) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::OutOfRangeP, "combine: p-value outside (0,1)");
  }
  const int j = static_cast<int>(p_values.size());

  switch (kind) {
    case CombinerKind::Fisher: {
      double q = 0.0;
      for (double p : p_values) q -= 2.0 * std::log(p);
      return clamp_p(chi_square_even_upper(q, j));
    }
    case CombinerKind::Pearson: {
      double q = 0.0;
      for (double p : p_values) q -= 2.0 * std::log1p(-p);
      return clamp_p(chi_square_even_lower(q, j));
    }
    case CombinerKind::Tippett: {
      const double q = *std::min_element(p_values.begin(), p_values.end());
      return clamp_p(-std::expm1(j * std::log1p(-q)));
    }
    case CombinerKind::Liptak: {
      double q = 0.0;
      for (double p : p_values) q += normal_quantile(p);
      if (liptak == LiptakForm::Stouffer) return clamp_p(normal_cdf(q / std::sqrt(static_cast<double>(j))));
      return clamp_p(normal_upper_tail(q / j));
    }
    case CombinerKind::MetaTippettOverLiptakFisher: {
      const double pair[] = {combine(p_values, CombinerKind::Liptak, liptak),
                             combine(p_values, CombinerKind::Fisher)};
      return combine(pair, CombinerKind::Tippett);
    }
  }
  return 1.0;
}

}  // namespace irpf
