#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "irpf/field.hpp"
#include "irpf/synthetic.hpp"
#include "test_support.hpp"

using namespace irpf;
using doctest::Approx;
using Eigen::MatrixXd;

namespace {

PreparedRecording prepared(std::uint64_t seed, double duration_s = 400.0, bool clean = false) {
  SyntheticSpec spec = corpus_spec(seed);
  spec.duration_s = duration_s;
  if (clean) spec.artifact_mix = {};
  return prepare_recording(generate_synthetic(spec).recording, spec.epoch_duration);
}

FieldConfig single(CombinerKind combiner) {
  FieldConfig c;
  c.potatoes = {PotatoSpec{{"Fp1", "Fp2", "F7", "F8"}, 0.0, 7.0, DistanceKind::Riemannian}};
  c.combiner = combiner;
  c.u_lim = 7.0;
  return c;
}

Recording from_epochs(const Recording& like, const std::vector<MatrixXd>& epochs) {
  const Eigen::Index len = epochs.front().cols();
  MatrixXd x(epochs.front().rows(), len * static_cast<Eigen::Index>(epochs.size()));
  for (std::size_t i = 0; i < epochs.size(); ++i) x.middleCols(static_cast<Eigen::Index>(i) * len, len) = epochs[i];
  return Recording(like.channel_names(), like.sampling_rate(), x);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an irpf::Error");
  return ErrorCode::InvalidConfig;
}

}  // namespace

TEST_CASE("effective_band and riemannian_only") {
  auto band = effective_band(PotatoSpec{{"Cz"}, 20.0, std::nullopt, DistanceKind::DiagEuclidean}, 200.0);
  CHECK(*band.first == 20.0);
  CHECK(*band.second == Approx(90.0));
  band = effective_band(PotatoSpec{{"Cz"}, 0.0, 7.0, DistanceKind::Riemannian}, 200.0);
  CHECK_FALSE(band.first.has_value());
  CHECK(*band.second == 7.0);

  const std::vector<PotatoSpec> specs{{{"Fp1", "Fp2"}, 0.0, 7.0, DistanceKind::Riemannian},
                                      {{"Fp1", "Fp2"}, 0.0, 7.0, DistanceKind::Euclidean},
                                      {{"T7"}, 20.0, std::nullopt, DistanceKind::DiagEuclidean}};
  const auto r = riemannian_only(specs);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == specs[0]);
  CHECK(r[1].channels == specs[2].channels);
  CHECK(r[1].distance == DistanceKind::Riemannian);
}

TEST_CASE("fit_irpf: one model per potato and ablation switches") {
  const auto p = prepared(61, 200.0);
  FieldConfig eye;
  eye.u_lim = 7.0;
  eye.potatoes = {{{"Fp1", "Fp2"}, 0.0, 7.0, DistanceKind::Riemannian},
                  {{"Fp1", "Fpz", "Fp2"}, 0.0, 7.0, DistanceKind::Riemannian},
                  {{"F7", "F8"}, 0.0, 7.0, DistanceKind::Riemannian},
                  {{"Fp1", "Fp2"}, 0.0, 7.0, DistanceKind::Euclidean},
                  {{"F7", "F8"}, 0.0, 7.0, DistanceKind::DiagEuclidean}};
  const FieldModel m = fit_irpf(p.recording, p.epochs, eye);
  REQUIRE(m.models.size() == 5);
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(m.models[j].channels == eye.potatoes[j].channels);
    CHECK(m.models[j].distance_kind == eye.potatoes[j].distance);
    CHECK(m.models[j].barycenter.dim() == static_cast<Eigen::Index>(eye.potatoes[j].channels.size()));
  }
  CHECK(m.gate.has_value());
  CHECK(m.combiner == CombinerKind::MetaTippettOverLiptakFisher);

  FieldOptions ablate;
  ablate.outlier_gate = false;
  ablate.extra_distances = false;
  ablate.meta_combination = false;
  const FieldModel a = fit_irpf(p.recording, p.epochs, eye, ablate);
  CHECK_FALSE(a.gate.has_value());
  CHECK(a.models.size() == 3);
  CHECK(a.combiner == CombinerKind::Fisher);
  for (const auto& pm : a.models) CHECK(pm.distance_kind == DistanceKind::Riemannian);
}

TEST_CASE("J = 1 with Fisher: SQI is the potato p-value") {
  const auto p = prepared(62, 200.0);
  const SqiReport r = run_irpf(p.recording, p.epochs, single(CombinerKind::Fisher));
  REQUIRE(r.per_potato_p.rows() == 1);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r.gate_rejected[i]) continue;
    CHECK(std::abs(r.sqi[i] - r.per_potato_p(0, static_cast<Eigen::Index>(i))) < 1e-10);
  }
}

TEST_CASE("clean recordings: no SQI knee, models keep their epochs") {
  int knees = 0;
  const int runs = 20;
  for (int s = 0; s < runs; ++s) {
    const auto p = prepared(2000 + static_cast<std::uint64_t>(s), 400.0, true);
    const FieldModel m = fit_irpf(p.recording, p.epochs, default_field_config());
    for (const auto& pm : m.models) {
      CHECK(static_cast<double>(pm.kept_count()) >= 0.95 * static_cast<double>(pm.kept_mask.size()));
    }
    const SqiReport r = score_irpf(m, p.epochs);
    knees += r.knee_index.has_value();
    if (!r.knee_index) CHECK(r.rejected == r.gate_rejected);
  }
  CHECK(knees <= runs / 10);
}

TEST_CASE("report invariants and determinism") {
  const auto p = prepared(63);
  const SqiReport r = run_irpf(p.recording, p.epochs, default_field_config());
  REQUIRE(r.size() == p.epochs.size());
  CHECK(r.per_potato_p.cols() == static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r.sqi[i] >= 0.0);
    CHECK(r.sqi[i] <= 1.0);
    CHECK(r.rejected[i] == (r.gate_rejected[i] || r.sqi[i] < r.threshold));
    if (r.gate_rejected[i]) CHECK(r.sqi[i] == 0.0);
  }
  if (r.knee_index) {
    std::vector<double> sorted = r.sqi;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted[*r.knee_index] == r.threshold);
  }

  const SqiReport again = run_irpf(p.recording, p.epochs, default_field_config());
  CHECK(again.sqi == r.sqi);
  CHECK(again.rejected == r.rejected);
  CHECK(again.threshold == r.threshold);
  CHECK(again.per_potato_p == r.per_potato_p);
}

TEST_CASE("fixed thresholds: lower threshold never rejects more") {
  const auto p = prepared(64, 200.0);
  std::vector<bool> prev;
  for (double th : {0.5, 0.1, 0.01, 1e-4, 0.0}) {
    FieldOptions o;
    o.adaptive_threshold = false;
    o.fixed_p_threshold = th;
    const SqiReport r = run_irpf(p.recording, p.epochs, default_field_config(), o);
    CHECK(r.threshold == th);
    if (!prev.empty()) {
      for (std::size_t i = 0; i < r.size(); ++i) CHECK((!r.rejected[i] || prev[i]));
    }
    prev = r.rejected;
  }
}

TEST_CASE("permuting epochs permutes the outputs") {
  const auto p = prepared(65, 200.0);
  std::vector<std::size_t> perm(p.epochs.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(65);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<MatrixXd> shuffled;
  for (std::size_t i : perm) shuffled.push_back(p.epochs.epochs[i]);
  const Recording rec = from_epochs(p.recording, shuffled);
  const EpochSet e = epoch(rec, p.epochs.epoch_duration);

  const SqiReport a = run_irpf(p.recording, p.epochs, default_field_config());
  const SqiReport b = run_irpf(rec, e, default_field_config());
  CHECK(a.threshold == Approx(b.threshold).epsilon(1e-9));
  for (std::size_t k = 0; k < perm.size(); ++k) {
    CHECK(b.sqi[k] == Approx(a.sqi[perm[k]]).epsilon(1e-8).scale(1e-300));
    CHECK(b.rejected[k] == a.rejected[perm[k]]);
    CHECK(b.gate_rejected[k] == a.gate_rejected[perm[k]]);
  }
}

TEST_CASE("too few epochs survive the gate") {
  SyntheticSpec spec = corpus_spec(66);
  spec.artifact_mix = {};
  spec.duration_s = 40.0;
  auto data = generate_synthetic(spec);
  MatrixXd x = data.recording.samples();
  const Eigen::Index len = data.epochs.epoch_length();
  auto spiked = [&](int n) {
    MatrixXd y = x;
    for (int i = 0; i < n; ++i) y(3, i * len + 50) = 1e4;
    const Recording r(data.recording.channel_names(), data.recording.sampling_rate(), y);
    return prepare_recording(r, spec.epoch_duration);
  };
  const FieldConfig cfg = single(CombinerKind::Fisher);
  const auto six = spiked(6);
  CHECK(code_of([&] { fit_irpf(six.recording, six.epochs, cfg); }) == ErrorCode::TooFewCleanEpochs);
  CHECK(code_of([&] { run_rpf(six.recording, six.epochs, cfg); }) == ErrorCode::TooFewCleanEpochs);
  const auto five = spiked(5);
  const SqiReport r = run_irpf(five.recording, five.epochs, cfg);
  CHECK(std::count(r.gate_rejected.begin(), r.gate_rejected.end(), true) == 5);

  spec.duration_s = 36.0;
  const auto nine = prepare_recording(generate_synthetic(spec).recording, spec.epoch_duration);
  CHECK(code_of([&] { fit_irpf(nine.recording, nine.epochs, cfg); }) == ErrorCode::TooFewEpochs);
}

TEST_CASE("RPF: rejection means strictly below p_th") {
  const auto p = prepared(67, 200.0);
  FieldConfig cfg = default_field_config();
  const SqiReport base = run_rpf(p.recording, p.epochs, cfg);
  CHECK(base.method == Method::RPF);
  CHECK(base.threshold == 0.01);
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(base.rejected[i] == (base.gate_rejected[i] || base.sqi[i] < 0.01));

  std::size_t probe = 0;
  while (base.gate_rejected[probe]) ++probe;
  cfg.rpf_p_threshold = base.sqi[probe];
  CHECK_FALSE(run_rpf(p.recording, p.epochs, cfg).rejected[probe]);
  cfg.rpf_p_threshold = std::nextafter(base.sqi[probe], 1.0);
  CHECK(run_rpf(p.recording, p.epochs, cfg).rejected[probe]);

  cfg.rpf_p_threshold = 0.5;
  const SqiReport half = run_rpf(p.recording, p.epochs, cfg);
  for (std::size_t i = 0; i < half.size(); ++i) CHECK((!base.rejected[i] || half.rejected[i]));
}

TEST_CASE("RP baseline") {
  SyntheticSpec spec = corpus_spec(68);
  spec.artifact_mix = {};
  spec.duration_s = 200.0;
  const auto data = generate_synthetic(spec);
  MatrixXd x = data.recording.samples();
  const Eigen::Index len = data.epochs.epoch_length();
  x.middleCols(13 * len, len) *= 100.0;
  const Recording rec(data.recording.channel_names(), data.recording.sampling_rate(), x);
  const auto p = prepare_recording(rec, spec.epoch_duration);
  REQUIRE(p.epochs.size() == 50);
  const SqiReport r = run_rp(p.recording, p.epochs, 2.0, 7.0);
  CHECK(r.method == Method::RP);
  Eigen::Index top = 0;
  r.per_potato_z.row(0).maxCoeff(&top);
  CHECK(top == 13);
  CHECK(r.rejected[13]);
  CHECK(r.threshold == Approx(z_to_p(2.0)));
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r.rejected[i] == (r.gate_rejected[i] || r.per_potato_z(0, static_cast<Eigen::Index>(i)) > 2.0));
  }

  const std::vector<MatrixXd> same(12, p.epochs.epochs[0]);
  const Recording flat = from_epochs(p.recording, same);
  const SqiReport s = run_rp(flat, epoch(flat, spec.epoch_duration), 2.0, 1e6);
  CHECK(std::none_of(s.rejected.begin(), s.rejected.end(), [](bool b) { return b; }));
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.per_potato_z(0, static_cast<Eigen::Index>(i)) == 0.0);
}

TEST_CASE("method names") {
  for (auto m : {Method::IRPF, Method::RPF, Method::RP}) CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("ica"), Error);
}
