#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "irpf/potato.hpp"
#include "test_support.hpp"

using namespace irpf;
using doctest::Approx;
using Eigen::MatrixXd;

namespace {

std::vector<SpdMatrix> cluster(std::mt19937_64& rng, std::size_t n, Eigen::Index dim, double scale = 0.1) {
  const SpdMatrix id = SpdMatrix::identity(dim);
  std::vector<SpdMatrix> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(testing::perturbed(rng, id, scale));
  return out;
}

// Indices of the k largest distances to the plain barycenter.
std::vector<std::size_t> top_by_distance(const std::vector<SpdMatrix>& covs, std::size_t k) {
  const PotatoModel m = fit_simple(covs, DistanceKind::Riemannian);
  std::vector<double> d;
  for (const auto& c : covs) d.push_back(distance(c, m.barycenter, DistanceKind::Riemannian));
  std::vector<std::size_t> idx(covs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TEST_CASE("fit_simple: closed forms") {
  std::mt19937_64 rng(51);
  const SpdMatrix s = testing::random_spd(rng, 3);
  const std::vector<SpdMatrix> twice{s, s};
  const PotatoModel same = fit_simple(twice, DistanceKind::Riemannian);
  CHECK((same.barycenter.values() - s.values()).norm() < 1e-10);
  CHECK(same.kept_count() == 2);
  CHECK(score(same, s).z == 0.0);

  const std::vector<SpdMatrix> ab{SpdMatrix(2.0 * MatrixXd::Identity(3, 3)), SpdMatrix(18.0 * MatrixXd::Identity(3, 3))};
  const PotatoModel m = fit_simple(ab, DistanceKind::Riemannian);
  CHECK((m.barycenter.values() - 6.0 * MatrixXd::Identity(3, 3)).norm() < 1e-10);
  const PotatoScore sa = score(m, ab[0]);
  CHECK(sa.distance == Approx(std::sqrt(3.0) * std::abs(std::log(std::sqrt(2.0 / 18.0)))));
  // Both distances are equal, so the dispersion is degenerate.
  CHECK(sa.z == 0.0);
  CHECK(sa.p == Approx(0.5));

  const PotatoModel e = fit_simple(ab, DistanceKind::Euclidean);
  CHECK((e.barycenter.values() - 10.0 * MatrixXd::Identity(3, 3)).norm() < 1e-12);

  CHECK_THROWS_AS(fit_simple(std::vector<SpdMatrix>{s}, DistanceKind::Riemannian), Error);
  const std::vector<SpdMatrix> mixed{s, SpdMatrix::identity(2)};
  CHECK_THROWS_AS(fit_simple(mixed, DistanceKind::Riemannian), Error);
}

TEST_CASE("score: center and z = 0") {
  std::mt19937_64 rng(52);
  const auto covs = cluster(rng, 30, 3);
  const PotatoModel m = fit_simple(covs, DistanceKind::Riemannian);
  const PotatoScore center = score(m, m.barycenter);
  CHECK(std::isfinite(center.z));
  CHECK(center.z < -5.0);
  CHECK(center.p > 0.999);

  // Walk from the barycenter along a geodesic until d = mu.
  const MatrixXd dir = logm(testing::perturbed(rng, SpdMatrix::identity(3), 0.3));
  const SpdMatrix h = sqrtm(m.barycenter);
  auto at = [&](double t) { return SpdMatrix(h.values() * expm_sym(MatrixXd(t * dir)).values() * h.values()); };
  const double unit = distance(at(1.0), m.barycenter, DistanceKind::Riemannian);
  const PotatoScore mid = score(m, at(m.stats.mu / unit));
  CHECK(mid.z == Approx(0.0).scale(1.0).epsilon(1e-8));
  CHECK(mid.p == Approx(0.5).epsilon(1e-8));

  CHECK_THROWS_AS(score(m, SpdMatrix::identity(4)), Error);
}

TEST_CASE("rp_classify uses a strict inequality") {
  PotatoModel m;
  m.barycenter = SpdMatrix::identity(1);
  m.distance_kind = DistanceKind::Euclidean;
  m.stats = DispersionStats{1.0, 1.0, DispersionMode::Arithmetic};
  auto cov = [](double v) { return SpdMatrix((MatrixXd(1, 1) << v).finished()); };
  CHECK(score(m, cov(4.0)).z == 2.0);
  CHECK(rp_classify(m, cov(4.0)) == Label::Clean);
  CHECK(score(m, cov(4.5)).z == Approx(2.5));
  CHECK(rp_classify(m, cov(4.5)) == Label::Artifact);
  CHECK(score(m, cov(1.0)).z == -1.0);
  CHECK(rp_classify(m, cov(1.0)) == Label::Clean);
  CHECK(rp_classify(m, cov(1.0), -1.0) == Label::Clean);
  CHECK(rp_classify(m, cov(1.0), -1.5) == Label::Artifact);
}

TEST_CASE("fit_adaptive: homogeneous clusters are left untouched") {
  int untouched = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const auto covs = cluster(rng, 50, 4);
    const PotatoModel a = fit_adaptive(covs, DistanceKind::Riemannian);
    if (a.trim_rounds == 0) {
      ++untouched;
      CHECK(a.kept_count() == covs.size());
      const PotatoModel s = fit_simple(covs, DistanceKind::Riemannian);
      CHECK(a.barycenter.values() == s.barycenter.values());
      CHECK(a.stats.mu == s.stats.mu);
      CHECK(a.stats.sigma == s.stats.sigma);
    }
  }
  CHECK(untouched >= 95);
}

TEST_CASE("fit_adaptive: five covs scaled x100 are trimmed") {
  int trimmed = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    auto covs = cluster(rng, 50, 4);
    std::vector<std::size_t> scaled;
    for (std::size_t i = 0; i < 5; ++i) {
      const std::size_t at = 7 * i + seed % 7;
      covs[at] = SpdMatrix(100.0 * covs[at].values());
      scaled.push_back(at);
    }
    std::sort(scaled.begin(), scaled.end());
    CHECK(top_by_distance(covs, 5) == scaled);

    const PotatoModel m = fit_adaptive(covs, DistanceKind::Riemannian);
    CHECK(m.trim_rounds <= 4);
    bool all = true;
    for (std::size_t i : scaled) all = all && !m.kept_mask[i];
    trimmed += all;
  }
  CHECK(trimmed == 50);
}

TEST_CASE("fit_adaptive: round cap and survivor floor") {
  // Nested shells at growing scale invite a knee on every pass.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(200 + seed);
    auto covs = cluster(rng, 60, 3);
    for (std::size_t i = 0; i < 24; ++i) {
      const double level = std::pow(10.0, 1.0 + static_cast<double>(i / 3));
      covs[i] = SpdMatrix(level * covs[i].values());
    }
    AdaptiveOptions opt;
    const PotatoModel m = fit_adaptive(covs, DistanceKind::Riemannian, opt);
    CHECK(m.trim_rounds <= 4);
    CHECK(m.refits <= 4);
    CHECK(m.kept_count() >= opt.min_survivors);
    opt.max_rounds = 1;
    CHECK(fit_adaptive(covs, DistanceKind::Riemannian, opt).trim_rounds <= 1);
  }
  std::mt19937_64 rng(53);
  CHECK_THROWS_AS(fit_adaptive(cluster(rng, 4, 3), DistanceKind::Riemannian), Error);
}

TEST_CASE("fit_fixed_threshold trims z > 2 for a fixed number of rounds") {
  std::mt19937_64 rng(54);
  auto covs = cluster(rng, 40, 3);
  covs[3] = SpdMatrix(50.0 * covs[3].values());
  const PotatoModel m = fit_fixed_threshold(covs, DistanceKind::Riemannian, 2.0, 3);
  CHECK_FALSE(m.kept_mask[3]);
  CHECK(m.trim_rounds <= 3);
  CHECK(m.trim_rounds >= 1);
  const PotatoModel none = fit_fixed_threshold(covs, DistanceKind::Riemannian, 2.0, 0);
  CHECK(none.kept_count() == covs.size());
}

TEST_CASE("Riemannian scores: congruence and scale invariance") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const auto covs = cluster(rng, 25, 4, 0.3);
    const auto probe = testing::perturbed(rng, SpdMatrix::identity(4), 0.6);
    const MatrixXd w = testing::random_matrix(rng, 4, 4) + 2.0 * MatrixXd::Identity(4, 4);
    auto congruent = [&](const SpdMatrix& s) { return SpdMatrix(w.transpose() * s.values() * w); };
    std::vector<SpdMatrix> moved;
    for (const auto& c : covs) moved.push_back(congruent(c));

    const PotatoModel a = fit_adaptive(covs, DistanceKind::Riemannian);
    const PotatoModel b = fit_adaptive(moved, DistanceKind::Riemannian);
    CHECK(a.kept_mask == b.kept_mask);
    CHECK(score(b, congruent(probe)).z == Approx(score(a, probe).z).epsilon(1e-6));

    std::vector<SpdMatrix> scaled;
    for (const auto& c : covs) scaled.push_back(SpdMatrix(7.5 * c.values()));
    const PotatoModel s = fit_simple(scaled, DistanceKind::Riemannian);
    const PotatoModel plain = fit_simple(covs, DistanceKind::Riemannian);
    for (const auto& c : covs) {
      CHECK(rp_classify(s, SpdMatrix(7.5 * c.values())) == rp_classify(plain, c));
    }
  }
}

TEST_CASE("fit_adaptive: kept set shrinks monotonically with rounds") {
  std::mt19937_64 rng(56);
  auto covs = cluster(rng, 60, 3);
  for (std::size_t i = 0; i < 12; ++i) covs[i] = SpdMatrix(std::pow(10.0, 1.0 + static_cast<double>(i / 4)) * covs[i].values());
  std::vector<bool> prev(covs.size(), true);
  for (int rounds = 0; rounds <= 4; ++rounds) {
    AdaptiveOptions opt;
    opt.max_rounds = rounds;
    const PotatoModel m = fit_adaptive(covs, DistanceKind::Riemannian, opt);
    for (std::size_t i = 0; i < covs.size(); ++i) CHECK((!prev[i] ? !m.kept_mask[i] : true));
    prev = m.kept_mask;
  }
}
