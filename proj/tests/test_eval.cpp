#include <doctest.h>

#include <algorithm>
#include <random>

#include "eva/errors.hpp"
#include "eva/eval.hpp"
#include "oracles.hpp"

using namespace eva;

namespace {

data::Sample random_sample(std::mt19937_64& rng, std::uint32_t id, std::size_t clip_dim, std::size_t word_dim) {
  std::uniform_int_distribution<std::size_t> clips(1, 40), words(1, 8);
  const auto n = clips(rng), w = words(rng);
  std::normal_distribution<float> g;
  std::vector<float> c(n * clip_dim), q(w * word_dim);
  for (auto& v : c) v = g(rng);
  for (auto& v : q) v = g(rng);
  const double duration = std::uniform_real_distribution<double>(5, 120)(rng);
  return data::Sample(id, data::Domain::target, 0, std::uint32_t(n), std::uint32_t(clip_dim), std::move(c),
                      std::uint32_t(w), std::uint32_t(word_dim), std::move(q), duration, {0, 1});
}

}  // namespace

TEST_CASE("temporal IoU") {
  CHECK(eval::temporal_iou({0, 10}, {5, 15}) == doctest::Approx(5.0 / 15.0));
  CHECK(eval::temporal_iou({2, 4}, {2, 4}) == 1.0);
  CHECK(eval::temporal_iou({0, 1}, {1, 2}) == 0.0);
  CHECK(eval::temporal_iou({0, 1}, {3, 4}) == 0.0);
  CHECK(eval::temporal_iou({0, 10}, {2, 4}) == doctest::Approx(0.2));
  CHECK(eval::temporal_iou({1.5, 3.0}, {0.0, 2.0}) == doctest::Approx(oracle::iou(1.5, 3.0, 0.0, 2.0)));
  CHECK_THROWS_AS(eval::temporal_iou({3, 3}, {0, 1}), InputError);
  CHECK_THROWS_AS(eval::temporal_iou({0, 1}, {2, 1}), InputError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 100);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    if (a == b || c == d) continue;
    if (a > b) std::swap(a, b);
    if (c > d) std::swap(c, d);
    const double v = eval::temporal_iou({a, b}, {c, d});
    CHECK(v == doctest::Approx(oracle::iou(a, b, c, d)).epsilon(1e-12));
    CHECK(v == eval::temporal_iou({c, d}, {a, b}));
    CHECK(v >= 0);
    CHECK(v <= 1);
  }
}

TEST_CASE("recall thresholds are strict") {
  // IoU exactly 0.5 does not count at m = 0.5.
  const std::vector<eval::Prediction> p{{1, 0, 10, 0.9}};
  const std::vector<eval::GroundTruth> g{{1, 0, 5}};
  const auto r = eval::evaluate(p, g);
  CHECK(r.recall_at(0.3) == 1.0);
  CHECK(r.recall_at(0.5) == 0.0);
  CHECK(r.miou == doctest::Approx(0.5));
  CHECK_THROWS_AS(r.recall_at(0.9), InputError);
}

TEST_CASE("toy evaluation set") {
  const std::vector<eval::Prediction> p{{7, 0, 10, 0.9}, {3, 0, 4, 0.2}, {5, 20, 30, 0.1}};
  const std::vector<eval::GroundTruth> g{{3, 0, 4}, {5, 0, 10}, {7, 2, 10}};
  const auto r = eval::evaluate(p, g, {0.3, 0.5, 0.7});
  CHECK(r.count == 3);
  // IoUs: id3 = 1, id5 = 0, id7 = 0.8.
  CHECK(r.recall_at(0.3) == doctest::Approx(2.0 / 3.0));
  CHECK(r.recall_at(0.5) == doctest::Approx(2.0 / 3.0));
  CHECK(r.recall_at(0.7) == doctest::Approx(2.0 / 3.0));
  CHECK(r.miou == doctest::Approx(1.8 / 3.0));
}

TEST_CASE("orphans and duplicates are reported") {
  const std::vector<eval::GroundTruth> g{{1, 0, 1}, {2, 0, 1}};
  try {
    eval::evaluate({{1, 0, 1, 0}, {9, 0, 1, 0}}, g);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("gt:2") != std::string::npos);
    CHECK(msg.find("pred:9") != std::string::npos);
  }
  CHECK_THROWS_AS(eval::evaluate({{1, 0, 1, 0}, {1, 0, 1, 0}, {2, 0, 1, 0}}, g), DataError);
  CHECK_THROWS_AS(eval::evaluate({}, {}), DataError);
}

TEST_CASE("proposal selection tie rule") {
  const std::vector<double> scores{0.1, 0.9, 0.9};
  const std::vector<model::Interval> iv{{0, 8}, {4, 12}, {4, 8}};
  // Equal top scores at the same start: the shorter one wins.
  CHECK(eval::select_proposal(scores, iv) == 2);
  const std::vector<model::Interval> iv2{{0, 8}, {8, 12}, {4, 12}};
  CHECK(eval::select_proposal(scores, iv2) == 2);  // earlier start wins
  CHECK(eval::select_proposal(std::vector<double>{0.3}, {{0, 1}}) == 0);
  CHECK_THROWS_AS(eval::select_proposal(std::vector<double>{}, {}), InputError);
  CHECK_THROWS_AS(eval::select_proposal(scores, {{0, 1}}), InputError);
}

TEST_CASE("property: infer_weak matches exhaustive scoring on random configurations") {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<std::size_t> n_windows(1, 3), window(1, 16), stride(1, 6);
  for (int trial = 0; trial < 100; ++trial) {
    model::ModelConfig mc;
    mc.clip_dim = 5;
    mc.word_dim = 3;
    mc.dim = 4;
    mc.window_sizes.clear();
    for (std::size_t k = n_windows(rng); k > 0; --k) mc.window_sizes.push_back(window(rng));
    mc.stride = stride(rng);
    model::EvaModel m(mc, rng());
    // Every fourth model scores all proposals 0.5, so the tie rule decides.
    if (trial % 4 == 0) {
      for (auto& v : m.fusion().fc_score.weight->tensor().mutable_data()) v = 0.0;
      for (auto& v : m.fusion().fc_score.bias->tensor().mutable_data()) v = 0.0;
    }
    const auto s = random_sample(rng, std::uint32_t(trial), mc.clip_dim, mc.word_dim);
    const auto pred = eval::infer_weak(m, s);

    const auto out = model::forward_weak(m, s.clip_tensor(), s.word_tensor());
    const auto expected = oracle::proposal_set(s.n_clips(), mc.window_sizes, mc.stride);
    REQUIRE(out.proposals.size() == expected.size());
    std::vector<std::pair<std::size_t, std::size_t>> iv;
    for (const auto& p : out.proposals) {
      CHECK(expected.count({p.start, p.end}) == 1);
      iv.emplace_back(p.start, p.end);
    }
    const auto best = oracle::best_proposal(oracle::to_vec(out.proposal_scores), iv);
    const double per_clip = s.duration_seconds() / s.n_clips();
    CHECK(pred.id == s.id());
    CHECK(pred.start_time == doctest::Approx(iv[best].first * per_clip).epsilon(1e-12));
    CHECK(pred.end_time == doctest::Approx(iv[best].second * per_clip).epsilon(1e-12));
    CHECK(pred.score == out.proposal_scores[best]);
    if (trial % 4 == 0) {
      CHECK(pred.score == 0.5);
      CHECK(pred.start_time == 0.0);
    }
  }
}

TEST_CASE("inference does not read labels") {
  model::ModelConfig mc;
  mc.clip_dim = 32;
  mc.word_dim = 16;
  mc.dim = 8;
  mc.window_sizes = {8, 12};
  mc.stride = 4;
  data::SynthConfig sc;
  sc.train_samples = 4;
  sc.val_samples = 6;
  const auto d = data::generate(sc, 2);
  model::EvaModel m(mc, 1);
  const auto preds = eval::predict_split(m, d.target_val);
  CHECK(preds.size() == 6);
  CHECK(d.target_val.label_reads() == 0);
  const auto report = eval::evaluate(preds, eval::ground_truth(d.target_val));
  CHECK(d.target_val.label_reads() == 6);
  CHECK(report.count == 6);
}
