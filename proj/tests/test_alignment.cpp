#include <doctest.h>

#include <cmath>
#include <random>

#include "eva/alignment.hpp"
#include "eva/errors.hpp"
#include "eva/gradcheck.hpp"
#include "oracles.hpp"

using namespace eva;
using ad::Tensor;

namespace {

align::MmdConfig fixed(std::vector<double> h) {
  align::MmdConfig c;
  c.bandwidths = std::move(h);
  return c;
}

oracle::Mat pooled(const std::vector<align::Taps>& taps, ad::Tensor align::Taps::*field) {
  oracle::Mat out;
  for (const auto& t : taps) {
    const auto m = oracle::to_mat(t.*field);
    oracle::Vec mean(m[0].size(), 0.0);
    for (const auto& row : m)
      for (std::size_t c = 0; c < row.size(); ++c) mean[c] += row[c] / static_cast<double>(m.size());
    out.push_back(mean);
  }
  return out;
}

align::Taps random_taps(std::mt19937_64& rng, std::size_t d) {
  std::uniform_int_distribution<std::size_t> len(1, 6);
  return {oracle::to_tensor(oracle::random_mat(rng, len(rng), d)), oracle::to_tensor(oracle::random_mat(rng, len(rng), d)),
          oracle::to_tensor(oracle::random_mat(rng, len(rng), d)), oracle::to_tensor(oracle::random_mat(rng, len(rng), d))};
}

}  // namespace

TEST_CASE("mmd matches the double-loop oracle on random set pairs") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(2, 16), dim(2, 32);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = dim(rng);
    const auto x = oracle::random_mat(rng, size(rng), d), y = oracle::random_mat(rng, size(rng), d, -0.5, 1.5);
    const auto cfg = fixed({0.5 * std::sqrt(double(d)), std::sqrt(double(d))});
    const double got = align::mmd_squared(oracle::to_tensor(x), oracle::to_tensor(y), cfg).item();
    CHECK(std::abs(got - oracle::mmd_squared(x, y, cfg.bandwidths)) < 1e-10);
    CHECK(got >= -1e-10);
    // Median-heuristic bandwidths are reproducible by the oracle too.
    const auto h = align::resolve_bandwidths(oracle::to_tensor(x), oracle::to_tensor(y), {});
    const double med = align::mmd_squared(oracle::to_tensor(x), oracle::to_tensor(y), {}).item();
    CHECK(std::abs(med - oracle::mmd_squared(x, y, h)) < 1e-10);
    // Symmetry.
    const double swapped = align::mmd_squared(oracle::to_tensor(y), oracle::to_tensor(x), cfg).item();
    CHECK(std::abs(got - swapped) < 1e-12);
    // M²(D, D) = 0.
    CHECK(std::abs(align::mmd_squared(oracle::to_tensor(x), oracle::to_tensor(x), cfg).item()) <= 1e-10);
  }
}

TEST_CASE("mmd edge cases") {
  const auto zero = Tensor::zeros({1, 3});
  CHECK(align::mmd_squared(zero, zero, {}).item() == doctest::Approx(0.0).epsilon(1e-15));
  // All points coincide: the median distance is 0 and the bandwidth falls back to 1.
  CHECK(align::resolve_bandwidths(zero, zero, {}) == std::vector<double>{0.5, 1.0, 2.0});
  CHECK_THROWS_AS(align::mmd_squared(Tensor::zeros({3}), zero, {}), InputError);
  CHECK_THROWS_AS(align::mmd_squared(zero, Tensor::zeros({2, 4}), {}), DimensionError);
  CHECK_THROWS_AS(align::resolve_bandwidths(zero, zero, fixed({-1.0})), ConfigError);
}

TEST_CASE("median heuristic scales with the data") {
  std::mt19937_64 rng(1);
  const auto x = oracle::random_mat(rng, 6, 4), y = oracle::random_mat(rng, 5, 4);
  auto scaled = [](oracle::Mat m, double k) {
    for (auto& r : m)
      for (auto& v : r) v *= k;
    return m;
  };
  const auto h1 = align::resolve_bandwidths(oracle::to_tensor(x), oracle::to_tensor(y), {});
  const auto h3 = align::resolve_bandwidths(oracle::to_tensor(scaled(x, 3)), oracle::to_tensor(scaled(y, 3)), {});
  for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h3[i] == doctest::Approx(3 * h1[i]));
  // MMD with median bandwidths is scale invariant.
  const double a = align::mmd_squared(oracle::to_tensor(x), oracle::to_tensor(y), {}).item();
  const double b = align::mmd_squared(oracle::to_tensor(scaled(x, 3)), oracle::to_tensor(scaled(y, 3)), {}).item();
  CHECK(a == doctest::Approx(b).epsilon(1e-10));
}

TEST_CASE("alignment loss is the weighted sum of four pooled MMD terms") {
  std::mt19937_64 rng(77);
  std::vector<align::Taps> full, weak;
  for (int i = 0; i < 4; ++i) {
    full.push_back(random_taps(rng, 5));
    weak.push_back(random_taps(rng, 5));
  }
  auto cfg = fixed({1.0, 2.0});
  cfg.lambda_vid = 0.8;
  double want = 0;
  for (auto field : {&align::Taps::video_before, &align::Taps::video_after})
    want += 0.8 * oracle::mmd_squared(pooled(full, field), pooled(weak, field), cfg.bandwidths);
  for (auto field : {&align::Taps::query_before, &align::Taps::query_after})
    want += oracle::mmd_squared(pooled(full, field), pooled(weak, field), cfg.bandwidths);
  CHECK(std::abs(align::alignment_loss(full, weak, cfg).item() - want) < 1e-10);

  CHECK(std::abs(align::alignment_loss(full, full, cfg).item()) < 1e-10);

  // λ_vid = 0 leaves only the query terms.
  cfg.lambda_vid = 0.0;
  double query_only = 0;
  for (auto field : {&align::Taps::query_before, &align::Taps::query_after})
    query_only += oracle::mmd_squared(pooled(full, field), pooled(weak, field), cfg.bandwidths);
  CHECK(std::abs(align::alignment_loss(full, weak, cfg).item() - query_only) < 1e-10);

  // Unequal batch sizes are legal.
  weak.pop_back();
  CHECK(std::isfinite(align::alignment_loss(full, weak, cfg).item()));
  CHECK_THROWS_AS(align::alignment_loss(full, {}, cfg), InputError);
}

TEST_CASE("alignment loss passes a finite-difference check on a two-sample batch") {
  std::mt19937_64 rng(8);
  std::vector<ad::Tensor> leaves;
  for (int i = 0; i < 16; ++i) {
    std::uniform_int_distribution<std::size_t> len(1, 4);
    leaves.push_back(oracle::to_tensor(oracle::random_mat(rng, len(rng), 8), true));
  }
  const auto cfg = fixed({1.0, 2.0});
  const auto result = gradcheck::check(
      "alignment",
      [&](const std::vector<Tensor>& in) {
        std::vector<align::Taps> f{{in[0], in[1], in[2], in[3]}, {in[4], in[5], in[6], in[7]}};
        std::vector<align::Taps> w{{in[8], in[9], in[10], in[11]}, {in[12], in[13], in[14], in[15]}};
        return align::alignment_loss(f, w, cfg);
      },
      leaves, {});
  CHECK_MESSAGE(result.passed, result.max_rel_error);
}

TEST_CASE("joint mmd adds the video and query terms") {
  std::mt19937_64 rng(3);
  const auto vf = oracle::random_mat(rng, 4, 3), vw = oracle::random_mat(rng, 4, 3);
  const auto qf = oracle::random_mat(rng, 4, 3), qw = oracle::random_mat(rng, 4, 3);
  const auto cfg = fixed({1.0});
  const double got = align::joint_mmd(oracle::to_tensor(vf), oracle::to_tensor(vw), oracle::to_tensor(qf),
                                      oracle::to_tensor(qw), cfg)
                         .item();
  CHECK(std::abs(got - oracle::mmd_squared(vf, vw, {1.0}) - oracle::mmd_squared(qf, qw, {1.0})) < 1e-10);
  CHECK(std::abs(align::joint_mmd(oracle::to_tensor(vf), oracle::to_tensor(vf), oracle::to_tensor(qf),
                                  oracle::to_tensor(qf), cfg)
                     .item()) < 1e-12);
}

TEST_CASE("domain classifier forward") {
  ad::ParamStore store(4);
  const auto clf = align::make_domain_classifier(store, "domain", 3, 0.01);
  std::mt19937_64 rng(6);
  const auto v = Tensor::vector(oracle::random_mat(rng, 1, 3)[0]);
  const auto q = Tensor::vector(oracle::random_mat(rng, 1, 3)[0]);
  const auto p = align::domain_forward(clf, v, q);
  REQUIRE(p.shape() == ad::Shape{2});
  CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-15));

  // FC1(FC2(v ∥ q)) with no nonlinearity in between, then softmax.
  oracle::Mat j{{v[0], v[1], v[2], q[0], q[1], q[2]}};
  const auto h = oracle::affine(j, oracle::to_mat(clf.fc2.weight->tensor()), oracle::to_vec(clf.fc2.bias->tensor()));
  const auto z = oracle::affine(h, oracle::to_mat(clf.fc1.weight->tensor()), oracle::to_vec(clf.fc1.bias->tensor()));
  const auto want = oracle::softmax_rows(z)[0];
  CHECK(p[1] == doctest::Approx(want[1]).epsilon(1e-12));

  for (const auto& prm : store.all())
    for (auto& x : prm->tensor().mutable_data()) x = 0.0;
  const auto half = align::domain_forward(clf, v, q);
  CHECK(half[0] == 0.5);
  CHECK(half[1] == 0.5);
  CHECK_THROWS_AS(align::domain_forward(clf, Tensor::zeros({4}), q), DimensionError);
}

TEST_CASE("GRL contract: paired backward passes") {
  // Features upstream of the reversal get exactly −λ times the gradient of
  // the same classifier without the reversal; classifier weights get the
  // ordinary gradient.
  std::mt19937_64 rng(31);
  for (double lambda : {0.01, 0.3, 1.0}) {
    ad::ParamStore store(rng());
    const auto clf = align::make_domain_classifier(store, "domain", 4, lambda);
    auto v = Tensor::vector(oracle::random_mat(rng, 1, 4)[0], true);
    auto q = Tensor::vector(oracle::random_mat(rng, 1, 4)[0], true);
    auto vw = Tensor::vector(oracle::random_mat(rng, 1, 4)[0], true);
    auto qw = Tensor::vector(oracle::random_mat(rng, 1, 4)[0], true);

    const auto with_grl = align::domain_loss({align::domain_forward(clf, v, q)}, {align::domain_forward(clf, vw, qw)});
    with_grl.backward();
    const std::vector<double> g_rev(v.grad().begin(), v.grad().end());
    std::vector<std::vector<double>> w_rev;
    for (const auto& p : store.all()) w_rev.emplace_back(p->tensor().grad().begin(), p->tensor().grad().end());
    store.zero_grad();
    v.zero_grad();

    // Same classifier evaluated without the reversal layer.
    auto no_grl = [&](const Tensor& a, const Tensor& b) {
      const auto j = ad::concat({ad::reshape(a, {1, 4}), ad::reshape(b, {1, 4})}, 1);
      return ad::reshape(ad::softmax_rows(clf.fc1(clf.fc2(j))), {2});
    };
    const auto without = align::domain_loss({no_grl(v, q)}, {no_grl(vw, qw)});
    CHECK(without.item() == with_grl.item());  // forward is bit-identical
    without.backward();
    for (std::size_t i = 0; i < 4; ++i) CHECK(g_rev[i] == -lambda * v.grad()[i]);
    std::size_t k = 0;
    for (const auto& p : store.all()) {
      for (std::size_t i = 0; i < p->tensor().size(); ++i) CHECK(w_rev[k][i] == p->tensor().grad()[i]);
      ++k;
    }
  }
}

TEST_CASE("domain loss values") {
  const auto half = Tensor::vector({0.5, 0.5});
  CHECK(std::abs(align::domain_loss({half}, {half}).item() - 2 * std::log(2.0)) < 1e-9);
  const auto src = Tensor::vector({1.0, 0.0}), tgt = Tensor::vector({0.0, 1.0});
  CHECK(align::domain_loss({src}, {tgt}).item() == doctest::Approx(0.0).epsilon(1e-12));
  // Fully wrong classifier: clamped, finite.
  CHECK(std::isfinite(align::domain_loss({tgt}, {src}).item()));

  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<Tensor> pf, pw;
  double want = 0;
  for (int i = 0; i < 4; ++i) {
    const double a = u(rng), b = u(rng);
    pf.push_back(Tensor::vector({1 - a, a}));
    pw.push_back(Tensor::vector({1 - b, b}));
    want += (-std::log(1 - a) - std::log(b)) / 4;
  }
  CHECK(std::abs(align::domain_loss(pf, pw).item() - want) < 1e-12);
  CHECK_THROWS_AS(align::domain_loss({}, pw), InputError);
}
