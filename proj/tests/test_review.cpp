#include <algorithm>
#include <random>

#include "doctest.h"
#include "irpf/review.hpp"
#include "irpf/synthetic.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace irpf;
using Eigen::MatrixXd;

namespace {

std::vector<bool> ui_mask(const ReviewBundle& b, double threshold) {
  std::vector<bool> out;
  for (double s : b.sqi) out.push_back(s < threshold);
  return out;
}

SqiReport toy_report(std::vector<double> sqi, std::vector<bool> gated, double threshold) {
  SqiReport r;
  r.sqi = std::move(sqi);
  r.gate_rejected = std::move(gated);
  r.threshold = threshold;
  for (std::size_t i = 0; i < r.sqi.size(); ++i) r.rejected.push_back(r.gate_rejected[i] || r.sqi[i] < threshold);
  r.per_potato_p = MatrixXd::Constant(1, static_cast<Eigen::Index>(r.sqi.size()), 0.5);
  r.per_potato_z = MatrixXd::Zero(1, static_cast<Eigen::Index>(r.sqi.size()));
  return r;
}

EpochSet toy_epochs(std::size_t n, Eigen::Index len = 40) {
  std::mt19937_64 rng(81);
  EpochSet e;
  e.channel_names = {"a", "b"};
  e.sampling_rate = 10.0;
  e.epoch_duration = static_cast<double>(len) / 10.0;
  for (std::size_t i = 0; i < n; ++i) {
    e.epochs.push_back(testing::random_matrix(rng, 2, len));
    e.source_indices.push_back(static_cast<Eigen::Index>(i) * len);
  }
  return e;
}

}  // namespace

TEST_CASE("decimate_minmax keeps per-channel extremes") {
  std::mt19937_64 rng(82);
  for (Eigen::Index t : {10, 256, 257, 800, 1000, 4321}) {
    const MatrixXd x = testing::random_matrix(rng, 3, t);
    const MatrixXd d = decimate_minmax(x);
    CHECK(d.cols() <= ReviewBundle::kMaxSamples);
    CHECK(d.rows() == 3);
    CHECK(d.rowwise().minCoeff() == x.rowwise().minCoeff());
    CHECK(d.rowwise().maxCoeff() == x.rowwise().maxCoeff());
    if (t <= ReviewBundle::kMaxSamples) CHECK(d == x);
  }
  // Pairs come out in time order.
  MatrixXd ramp(1, 8);
  ramp << 5, 4, 3, 2, 0, 1, 2, 3;
  const MatrixXd d = decimate_minmax(ramp, 4);
  CHECK(d == (MatrixXd(1, 4) << 5, 2, 0, 3).finished());
  CHECK_THROWS_AS(decimate_minmax(ramp, 1), Error);
}

TEST_CASE("sqi_order: ascending, gated first among ties") {
  const SqiReport r = toy_report({0.3, 0.0, 0.1, 0.0, 0.3}, {false, false, false, true, false}, 0.0);
  CHECK(sqi_order(r) == std::vector<std::size_t>{3, 1, 2, 0, 4});
}

TEST_CASE("bundle threshold reproduces the report mask") {
  const EpochSet e = toy_epochs(6);
  SUBCASE("knee") {
    SqiReport r = toy_report({0.5, 0.0, 0.01, 0.02, 0.9, 0.6}, {false, true, false, false, false, false}, 0.02);
    r.knee_index = 2;
    const ReviewBundle b = make_review_bundle(r, e);
    CHECK(b.suggested_threshold == 0.02);
    CHECK(b.sqi[b.sorted_order[*b.knee_index]] == b.suggested_threshold);
    CHECK(ui_mask(b, b.suggested_threshold) == r.rejected);
  }
  SUBCASE("no knee, gated epochs") {
    const SqiReport r = toy_report({0.5, 0.0, 0.01, 0.0, 0.9, 0.6}, {false, true, false, true, false, false}, 0.0);
    const ReviewBundle b = make_review_bundle(r, e);
    CHECK(b.suggested_threshold > 0.0);
    CHECK(b.suggested_threshold < 1e-300);
    CHECK(ui_mask(b, b.suggested_threshold) == r.rejected);
    const ReviewBundle back = parse_review_bundle(to_json(b));
    CHECK(back.suggested_threshold == b.suggested_threshold);
  }
  SUBCASE("dragging the threshold") {
    const SqiReport r = toy_report({0.5, 0.0, 0.01, 0.0, 0.9, 0.6}, {false, true, false, true, false, false}, 0.0);
    const ReviewBundle b = make_review_bundle(r, e);
    const auto none = ui_mask(b, 0.0);
    CHECK(std::none_of(none.begin(), none.end(), [](bool x) { return x; }));
    const auto all = ui_mask(b, 1.0 + *std::max_element(b.sqi.begin(), b.sqi.end()));
    CHECK(std::all_of(all.begin(), all.end(), [](bool x) { return x; }));
  }
  CHECK_THROWS_AS(make_review_bundle(toy_report({0.1}, {false}, 0.0), e), Error);
}

TEST_CASE("review bundle from a pipeline run") {
  SyntheticSpec spec = corpus_spec(83);
  spec.duration_s = 200.0;
  const auto data = generate_synthetic(spec);
  const auto prep = prepare_recording(data.recording, spec.epoch_duration);
  EpochSet epochs = prep.epochs;
  epochs.labels = data.epochs.labels;
  const FieldConfig cfg = default_field_config();
  const SqiReport r = run_irpf(prep.recording, epochs, cfg);
  const ReviewBundle b = make_review_bundle(r, epochs, &cfg);

  std::vector<std::size_t> sorted = b.sorted_order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  for (std::size_t k = 1; k < b.sorted_order.size(); ++k) CHECK(b.sqi[b.sorted_order[k - 1]] <= b.sqi[b.sorted_order[k]]);
  if (b.knee_index) CHECK(b.sqi[b.sorted_order[*b.knee_index]] == b.suggested_threshold);
  CHECK(ui_mask(b, b.suggested_threshold) == r.rejected);
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    CHECK(b.waveforms[i].cols() == ReviewBundle::kMaxSamples);
    CHECK(b.waveforms[i].rowwise().maxCoeff() == epochs.epochs[i].rowwise().maxCoeff());
    CHECK(b.waveforms[i].rowwise().minCoeff() == epochs.epochs[i].rowwise().minCoeff());
  }

  const std::string text = to_json(b);
  const auto j = nlohmann::json::parse(text);
  for (const char* key : {"version", "method", "epoch_duration", "channel_names", "sqi", "sorted_order", "knee_index",
                          "suggested_threshold", "labels", "waveforms"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["version"] == 1);
  CHECK(j["method"] == "irpf");
  CHECK(j["waveforms"].size() == epochs.size());
  CHECK(j["waveforms"][0].size() == 21);

  const ReviewBundle back = parse_review_bundle(text);
  CHECK(back.sqi == b.sqi);
  CHECK(back.sorted_order == b.sorted_order);
  CHECK(back.knee_index == b.knee_index);
  CHECK(back.labels == b.labels);
  CHECK(back.channel_names == b.channel_names);
  CHECK(back.waveforms.size() == b.waveforms.size());
  CHECK(back.waveforms[5] == b.waveforms[5]);
  CHECK(parse_field_config(back.config_json, back.channel_names, spec.rate_hz) == cfg);

  CHECK_THROWS_AS(parse_review_bundle("{}"), Error);
  CHECK_THROWS_AS(parse_review_bundle(R"({"version":2})"), Error);
}

TEST_CASE("report JSON") {
  SqiReport r = toy_report({0.5, 0.0, 0.01}, {false, true, false}, 0.02);
  r.knee_index = 1;
  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j["method"] == "irpf");
  CHECK(j["threshold"] == 0.02);
  CHECK(j["knee_index"] == 1);
  CHECK(j["rejected"] == nlohmann::json::array({0, 1, 1}));
  CHECK(j["gate_rejected"] == nlohmann::json::array({0, 1, 0}));
  CHECK(j["per_potato_p"].size() == 1);
  CHECK(j["per_potato_p"][0].size() == 3);
}
