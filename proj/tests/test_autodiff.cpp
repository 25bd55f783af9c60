#include <doctest.h>

#include <cmath>
#include <random>

#include "eva/autodiff/ops.hpp"
#include "eva/autodiff/params.hpp"
#include "eva/errors.hpp"
#include "eva/gradcheck.hpp"
#include "oracles.hpp"

using namespace eva;
using ad::Tensor;

TEST_CASE("tensor construction validates shapes") {
  CHECK_THROWS_AS(Tensor::from({2, 0}, {}), DimensionError);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor::matrix({{1, 2}, {3}}), DimensionError);
  CHECK_THROWS_AS(Tensor::vector({1, 2}).item(), DimensionError);
  const auto m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == 6);
  CHECK_THROWS_AS(Tensor::vector({1}).rows(), DimensionError);
}

TEST_CASE("backward requires a single-element output") {
  auto x = Tensor::vector({1, 2}, true);
  CHECK_THROWS_AS(ad::scale(x, 2).backward(), DimensionError);
}

TEST_CASE("leaf gradients accumulate across backward calls, interior ones do not") {
  auto x = Tensor::vector({1.0, -2.0}, true);
  const auto y = ad::sum(ad::mul(x, x));  // dy/dx = 2x
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.accumulations() == 2);  // x feeds both operands of mul
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  CHECK(x.grad()[1] == doctest::Approx(-8.0));
  x.zero_grad();
  CHECK_FALSE(x.has_grad());
  CHECK(x.accumulations() == 0);
}

TEST_CASE("no-grad guard records no graph") {
  auto x = Tensor::vector({1.0}, true);
  {
    ad::NoGradGuard guard;
    CHECK_FALSE(ad::grad_enabled());
    CHECK_FALSE(ad::scale(x, 3).requires_grad());
  }
  CHECK(ad::grad_enabled());
  CHECK(ad::scale(x, 3).requires_grad());
}

TEST_CASE("detach cuts the graph") {
  auto x = Tensor::vector({3.0}, true);
  const auto d = ad::scale(x, 2).detach();
  CHECK_FALSE(d.requires_grad());
  CHECK(d.item() == 6.0);
}

TEST_CASE("matmul and linear match loop oracles") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = oracle::random_mat(rng, 3 + trial % 3, 4);
    const auto b = oracle::random_mat(rng, 4, 2 + trial % 4);
    const auto got = oracle::to_mat(ad::matmul(oracle::to_tensor(a), oracle::to_tensor(b)));
    const auto want = oracle::matmul(a, b);
    for (std::size_t i = 0; i < want.size(); ++i)
      for (std::size_t j = 0; j < want[0].size(); ++j) CHECK(got[i][j] == doctest::Approx(want[i][j]).epsilon(1e-12));

    const auto w = oracle::random_mat(rng, 3, 4);
    const oracle::Vec bias{0.1, -0.2, 0.3};
    const auto lin = oracle::to_mat(ad::linear(oracle::to_tensor(a), oracle::to_tensor(w), Tensor::vector(bias)));
    const auto lin_want = oracle::affine(a, w, bias);
    for (std::size_t i = 0; i < lin_want.size(); ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(lin[i][j] == doctest::Approx(lin_want[i][j]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ad::matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
  CHECK_THROWS_AS(ad::add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), DimensionError);
}

TEST_CASE("pointwise numeric guards") {
  CHECK_THROWS_AS(ad::log(Tensor::vector({1.0, 0.0})), NumericError);
  CHECK_THROWS_AS(ad::log(Tensor::vector({-1.0})), NumericError);
  CHECK_THROWS_AS(ad::softmax_rows(Tensor::matrix({{1.0, std::nan("")}})), NumericError);
  CHECK_THROWS_AS(ad::normalize_sum(Tensor::vector({0.0, 0.0})), NumericError);
  // Large logits stay finite thanks to max subtraction.
  const auto s = ad::softmax_rows(Tensor::matrix({{1000.0, 1000.0}}));
  CHECK(s[0] == doctest::Approx(0.5));
  // The stable sigmoid does not overflow.
  const auto g = ad::sigmoid(Tensor::vector({-800.0, 800.0}));
  CHECK(g[0] == doctest::Approx(0.0));
  CHECK(g[1] == doctest::Approx(1.0));
}

TEST_CASE("softmax rows sum to one") {
  std::mt19937_64 rng(3);
  const auto m = oracle::random_mat(rng, 5, 7, -5, 5);
  const auto s = oracle::to_mat(ad::softmax_rows(oracle::to_tensor(m)));
  for (const auto& row : s) {
    double total = 0;
    for (double v : row) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("clamp passes no gradient where active") {
  auto x = Tensor::vector({-2.0, 0.5, 3.0}, true);
  ad::sum(ad::clamp(x, -1.0, 1.0)).backward();
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 1.0);
  CHECK(x.grad()[2] == 0.0);
}

TEST_CASE("maxpool breaks ties toward the lowest index") {
  auto x = Tensor::matrix({{1.0, 5.0}, {3.0, 5.0}, {3.0, 2.0}}, true);
  const auto rows = ad::maxpool_axis(x, 0);
  CHECK(rows.values.shape() == ad::Shape{2});
  CHECK(rows.argmax == std::vector<std::size_t>{1, 0});
  ad::sum(rows.values).backward();
  CHECK(x.grad()[2] == 1.0);  // (1,0)
  CHECK(x.grad()[4] == 0.0);  // (2,0) ties, not chosen
  CHECK(x.grad()[1] == 1.0);  // (0,1)
  CHECK(x.grad()[3] == 0.0);

  const auto v = ad::maxpool_axis(Tensor::vector({2.0, 7.0, 7.0}), 0);
  CHECK(v.values.shape() == ad::Shape{1});
  CHECK(v.argmax.front() == 1);
  CHECK_THROWS_AS(ad::maxpool_axis(Tensor::vector({1.0}), 1), DimensionError);
}

TEST_CASE("shape operations") {
  const auto a = Tensor::matrix({{1, 2}, {3, 4}});
  const auto b = Tensor::matrix({{5, 6}});
  const auto rows = ad::concat({a, b}, 0);
  CHECK(rows.shape() == ad::Shape{3, 2});
  CHECK(rows.at(2, 1) == 6);
  const auto cols = ad::concat({a, a}, 1);
  CHECK(cols.shape() == ad::Shape{2, 4});
  CHECK(cols.at(1, 2) == 3);
  CHECK_THROWS_AS(ad::concat({a, Tensor::zeros({2, 3})}, 0), DimensionError);
  CHECK_THROWS_AS(ad::concat({}, 0), DimensionError);

  const auto s = ad::slice_rows(rows, 1, 3);
  CHECK(s.shape() == ad::Shape{2, 2});
  CHECK(s.at(0, 0) == 3);
  CHECK(ad::pick(a, 3).item() == 4);
  CHECK_THROWS_AS(ad::pick(a, 4), DimensionError);
  const auto t = ad::tile_rows(Tensor::vector({1, 2, 3}), 2);
  CHECK(t.shape() == ad::Shape{2, 3});
  CHECK(t.at(1, 2) == 3);
  CHECK(ad::transpose(a).at(0, 1) == 3);
  CHECK_THROWS_AS(ad::reshape(a, {3}), DimensionError);
}

TEST_CASE("reductions match hand values") {
  const auto a = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(ad::sum(a).item() == 21);
  CHECK(ad::mean(a).item() == 3.5);
  CHECK(oracle::to_vec(ad::mean_axis(a, 0)) == oracle::Vec{2.5, 3.5, 4.5});
  CHECK(oracle::to_vec(ad::mean_axis(a, 1)) == oracle::Vec{2, 5});
}

TEST_CASE("segment means match direct averaging") {
  std::mt19937_64 rng(5);
  const auto x = oracle::random_mat(rng, 9, 3);
  const std::vector<std::pair<std::size_t, std::size_t>> iv{{0, 9}, {2, 5}, {8, 9}, {3, 7}};
  const auto got = oracle::to_mat(ad::segment_means(oracle::to_tensor(x), iv));
  for (std::size_t k = 0; k < iv.size(); ++k)
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0;
      for (auto r = iv[k].first; r < iv[k].second; ++r) s += x[r][c];
      CHECK(got[k][c] == doctest::Approx(s / static_cast<double>(iv[k].second - iv[k].first)).epsilon(1e-12));
    }
  CHECK_THROWS_AS(ad::segment_means(oracle::to_tensor(x), {{3, 3}}), DimensionError);
  CHECK_THROWS_AS(ad::segment_means(oracle::to_tensor(x), {{0, 10}}), DimensionError);
}

TEST_CASE("conv1d is a zero-padded cross-correlation") {
  const auto sig = Tensor::vector({1, 2, 3, 4});
  const auto out = ad::conv1d(sig, Tensor::vector({1, 0, -1}), Tensor::scalar(0.5));
  // y_i = x_{i-1} - x_{i+1} + 0.5 with zeros outside.
  CHECK(oracle::to_vec(out) == oracle::Vec{-2 + 0.5, 1 - 3 + 0.5, 2 - 4 + 0.5, 3 + 0.5});
  CHECK_THROWS_AS(ad::conv1d(sig, Tensor::vector({1, 1}), Tensor::scalar(0)), ConfigError);
}

TEST_CASE("pairwise squared distances match the loop oracle") {
  std::mt19937_64 rng(9);
  const auto x = oracle::random_mat(rng, 4, 3), y = oracle::random_mat(rng, 5, 3);
  const auto d = oracle::to_mat(ad::pairwise_sqdist(oracle::to_tensor(x), oracle::to_tensor(y)));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK(d[i][j] == doctest::Approx(oracle::sqdist(x[i], y[j])).epsilon(1e-12));
}

TEST_CASE("gradient reversal: identity forward, scaled negated backward") {
  auto x = Tensor::vector({0.3, -1.2, 2.0}, true);
  const auto r = ad::grad_reverse(x, 0.25);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r[i] == x[i]);
  ad::sum(ad::mul(r, Tensor::vector({1.0, 2.0, 3.0}))).backward();
  CHECK(x.grad()[0] == -0.25);
  CHECK(x.grad()[1] == -0.5);
  CHECK(x.grad()[2] == -0.75);
  CHECK_THROWS_AS(ad::grad_reverse(x, -1.0), ConfigError);
}

TEST_CASE("parameter store") {
  ad::ParamStore store(42);
  const auto p = store.create("layer.w", {3, 4}, 4);
  for (double v : p->tensor().data()) CHECK(std::abs(v) <= 0.5);
  CHECK(p->tensor().requires_grad());
  CHECK_THROWS_AS(store.create("layer.w", {1}, 1), StateError);
  CHECK_THROWS_AS(store.get("missing"), StateError);
  store.create_zeros("a.b", {2});
  CHECK(store.names() == std::vector<std::string>{"a.b", "layer.w"});

  ad::ParamStore again(42);
  const auto q = again.create("layer.w", {3, 4}, 4);
  CHECK(oracle::to_vec(q->tensor()) == oracle::to_vec(p->tensor()));
}

TEST_CASE("adam matches the bias-corrected update by hand") {
  auto p = std::make_shared<ad::Parameter>("w", Tensor::vector({1.0, -1.0}, true));
  const ad::AdamOptions opt{0.1, 0.9, 0.999, 1e-8};
  std::vector<ad::ParamPtr> params{p};

  double m0 = 0, v0 = 0, w0 = 1.0;
  for (int step = 1; step <= 3; ++step) {
    ad::sum(ad::mul(p->tensor(), p->tensor())).backward();  // g = 2w
    const double g = 2 * w0;
    m0 = 0.9 * m0 + 0.1 * g;
    v0 = 0.999 * v0 + 0.001 * g * g;
    const double mh = m0 / (1 - std::pow(0.9, step));
    const double vh = v0 / (1 - std::pow(0.999, step));
    w0 -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    ad::adam_step(params, opt);
    CHECK(p->tensor()[0] == doctest::Approx(w0).epsilon(1e-14));
    CHECK(p->tensor()[1] == doctest::Approx(-w0).epsilon(1e-14));
    CHECK_FALSE(p->tensor().has_grad());
  }
  CHECK(p->adam().step == 3);
  CHECK_THROWS_AS(ad::adam_step(params, opt), StateError);
}

TEST_CASE("finite-difference suite passes and covers every operation") {
  const auto names = gradcheck::case_names();
  for (const char* op : {"matmul", "transpose", "linear", "add", "sub", "mul", "scale", "add_scalar", "neg", "sigmoid",
                         "tanh", "relu", "exp", "log", "clamp", "softmax_rows", "normalize_sum", "reshape",
                         "concat_rows", "concat_cols", "slice_rows", "pick", "tile_rows", "maxpool_rows",
                         "maxpool_cols", "mean_axis", "sum", "mean", "segment_means", "conv1d", "pairwise_sqdist",
                         "grad_reverse", "weak_branch_loss", "full_branch_loss"})
    CHECK_MESSAGE(std::find(names.begin(), names.end(), op) != names.end(), op);

  const auto results = gradcheck::run_suite({});
  std::set<std::uint64_t> seeds;
  for (const auto& r : results) {
    seeds.insert(r.seed);
    CHECK_MESSAGE(r.passed, r.name << " seed " << r.seed << " rel " << r.max_rel_error);
    CHECK(r.entries > 0);
  }
  CHECK(seeds.size() >= 5);
}

TEST_CASE("the checker flags a wrong gradient") {
  // Gradient reversal checked as if it were the identity must fail.
  auto x = Tensor::vector({0.2, -0.4}, true);
  const auto bad = gradcheck::check("reversed", [](const auto& in) { return ad::sum(ad::grad_reverse(in[0], 0.5)); },
                                    {x}, {}, 1.0);
  CHECK_FALSE(bad.passed);
  const auto good = gradcheck::check("reversed", [](const auto& in) { return ad::sum(ad::grad_reverse(in[0], 0.5)); },
                                     {x}, {}, -0.5);
  CHECK(good.passed);
}

TEST_CASE("worked examples") {
  const auto m = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(oracle::to_vec(ad::matmul(Tensor::matrix({{1, 0}, {0, 1}}), m)) == oracle::Vec{1, 2, 3, 4});
  CHECK(ad::matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}})).item() == 11);

  CHECK(oracle::to_vec(ad::softmax_rows(Tensor::matrix({{0, 0}}))) == oracle::Vec{0.5, 0.5});
  // Scalar exp/sum oracle for [[1,2,3]].
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const auto s = ad::softmax_rows(Tensor::matrix({{1, 2, 3}}));
  for (int i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(std::exp(i + 1.0) / z).epsilon(1e-14));
  CHECK(s[0] == doctest::Approx(0.09003).epsilon(1e-4));
  CHECK(s[2] == doctest::Approx(0.66524).epsilon(1e-4));

  CHECK(ad::sigmoid(Tensor::scalar(0)).item() == 0.5);
  CHECK(oracle::to_vec(ad::add(Tensor::vector({1, 2}), Tensor::vector({3, 4}))) == oracle::Vec{4, 6});

  CHECK(oracle::to_vec(ad::concat({Tensor::vector({1, 2}), Tensor::vector({3})}, 0)) == oracle::Vec{1, 2, 3});
  CHECK(ad::concat({Tensor::zeros({2, 3}), Tensor::zeros({2, 5})}, 1).shape() == ad::Shape{2, 8});

  CHECK(oracle::to_vec(ad::maxpool_axis(Tensor::matrix({{1, 5}, {3, 2}}), 0).values) == oracle::Vec{3, 5});
  CHECK(oracle::to_vec(ad::maxpool_axis(Tensor::matrix({{1, 5}}), 0).values) == oracle::Vec{1, 5});

  const auto sig = Tensor::vector({4, -1, 2.5, 7});
  CHECK(oracle::to_vec(ad::conv1d(sig, Tensor::vector({0, 1, 0}), Tensor::scalar(0))) == oracle::to_vec(sig));
  CHECK(oracle::to_vec(ad::conv1d(Tensor::vector({1, 2, 3}), Tensor::vector({1, 1, 1}), Tensor::scalar(0))) ==
        oracle::Vec{3, 6, 5});

  auto x = Tensor::vector({1, 2, 3}, true);
  CHECK(oracle::to_vec(ad::grad_reverse(x, 0.01)) == oracle::Vec{1, 2, 3});
  ad::sum(ad::grad_reverse(x, 0.0)).backward();
  for (double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("adam descends and leaves zero-gradient parameters alone") {
  auto w = std::make_shared<ad::Parameter>("w", Tensor::scalar(1.0, true));
  std::vector<ad::ParamPtr> ps{w};
  w->tensor().mutable_grad()[0] = 1.0;
  ad::adam_step(ps, {});
  CHECK(w->tensor().item() < 1.0);

  auto still = std::make_shared<ad::Parameter>("still", Tensor::scalar(2.0, true));
  std::vector<ad::ParamPtr> qs{still};
  still->tensor().mutable_grad()[0] = 0.0;
  ad::adam_step(qs, {});
  CHECK(still->tensor().item() == 2.0);

  // f(w) = w² decreases over two steps.
  auto q = std::make_shared<ad::Parameter>("q", Tensor::scalar(0.8, true));
  std::vector<ad::ParamPtr> rs{q};
  double prev = 0.64;
  for (int i = 0; i < 2; ++i) {
    ad::mul(q->tensor(), q->tensor()).backward();
    ad::adam_step(rs, {0.1});
    const double f = q->tensor().item() * q->tensor().item();
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("property: one tensor feeding two consumers sums both contributions") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::random_mat(rng, 3, 3);
    auto x = oracle::to_tensor(a, true);
    // f = sum(x·x) + sum(tanh(x)): gradient = column sums of x (as left and right factor) + sech².
    ad::add(ad::sum(ad::matmul(x, x)), ad::sum(ad::tanh(x))).backward();
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        double g = 0;
        for (std::size_t k = 0; k < 3; ++k) g += a[j][k] + a[k][i];
        g += 1.0 - std::tanh(a[i][j]) * std::tanh(a[i][j]);
        CHECK(x.grad()[i * 3 + j] == doctest::Approx(g).epsilon(1e-12));
      }
  }
}
