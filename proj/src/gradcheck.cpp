#include "eva/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "eva/alignment.hpp"
#include "eva/autodiff/ops.hpp"
#include "eva/model/pipeline.hpp"
#include "eva/objectives.hpp"
#include "eva/seeds.hpp"

namespace eva::gradcheck {

CaseResult check(const std::string& name, const ScalarFn& f, std::vector<ad::Tensor> inputs, const Options& options,
                 double analytic_scale) {
  CaseResult result;
  result.name = name;

  for (auto& t : inputs) t.zero_grad();
  const auto out = f(inputs);
  out.backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) {
    if (t.has_grad())
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    else
      analytic.emplace_back(t.size(), 0.0);
  }

  ad::NoGradGuard no_grad;
  const double h = options.step;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + h;
      const double up = f(inputs).item();
      values[j] = saved - h;
      const double down = f(inputs).item();
      values[j] = saved;
      const double numeric = analytic_scale * (up - down) / (2 * h);
      const double a = analytic[k][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.magnitude_floor});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / denom);
      ++result.entries;
    }
  }
  for (auto& t : inputs) t.zero_grad();
  result.passed = result.max_rel_error < options.tolerance;
  return result;
}

namespace {

using Rng = std::mt19937_64;

ad::Tensor random_tensor(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(ad::shape_size(shape));
  for (auto& x : v) x = u(rng);
  return ad::Tensor::from(std::move(shape), std::move(v), true);
}

/// Values with |x| in [0.1, 1] and random sign: away from the kinks of relu.
ad::Tensor away_from_zero(Rng& rng, ad::Shape shape) {
  std::uniform_real_distribution<double> mag(0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(ad::shape_size(shape));
  for (auto& x : v) x = sign(rng) ? mag(rng) : -mag(rng);
  return ad::Tensor::from(std::move(shape), std::move(v), true);
}

/// Reduces any tensor to a scalar through a fixed random projection, so
/// every output entry contributes with a distinct weight.
ad::Tensor project(const ad::Tensor& out, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> w(out.size());
  for (auto& x : w) x = u(rng);
  return ad::sum(ad::mul(out, ad::Tensor::from(out.shape(), std::move(w))));
}

struct Setup {
  ScalarFn fn;
  std::vector<ad::Tensor> inputs;
  double scale = 1.0;
};

using Builder = std::function<Setup(Rng&, std::uint64_t)>;

struct Case {
  std::string name;
  Builder build;
};

Setup unary(Rng& rng, std::uint64_t seed, ad::Tensor x, ad::Tensor (*op)(const ad::Tensor&)) {
  (void)rng;
  return {[op, seed](const auto& in) { return project(op(in[0]), seed); }, {std::move(x)}};
}

model::ModelConfig tiny_model_config() {
  model::ModelConfig c;
  c.clip_dim = 3;
  c.word_dim = 2;
  c.dim = 4;
  c.conv_width = 3;
  c.window_sizes = {2, 3};
  c.stride = 1;
  return c;
}

std::vector<Case> all_cases() {
  std::vector<Case> cases;
  auto add = [&](std::string name, Builder b) { cases.push_back({std::move(name), std::move(b)}); };

  add("matmul", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::matmul(in[0], in[1]), s); },
                 {random_tensor(r, {3, 4}), random_tensor(r, {4, 2})}};
  });
  add("transpose", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::transpose(in[0]), s); }, {random_tensor(r, {3, 5})}};
  });
  add("linear", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::linear(in[0], in[1], in[2]), s); },
                 {random_tensor(r, {4, 3}), random_tensor(r, {2, 3}), random_tensor(r, {2})}};
  });
  add("add", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::add(in[0], in[1]), s); },
                 {random_tensor(r, {2, 3}), random_tensor(r, {2, 3})}};
  });
  add("sub", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::sub(in[0], in[1]), s); },
                 {random_tensor(r, {2, 3}), random_tensor(r, {2, 3})}};
  });
  add("mul", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::mul(in[0], in[1]), s); },
                 {random_tensor(r, {3, 2}), random_tensor(r, {3, 2})}};
  });
  add("scale", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::scale(in[0], -1.7), s); }, {random_tensor(r, {5})}};
  });
  add("add_scalar", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::add_scalar(in[0], 0.3), s); }, {random_tensor(r, {5})}};
  });
  add("neg", [](Rng& r, std::uint64_t s) { return unary(r, s, random_tensor(r, {2, 2}), ad::neg); });
  add("sigmoid", [](Rng& r, std::uint64_t s) { return unary(r, s, random_tensor(r, {3, 3}, -4, 4), ad::sigmoid); });
  add("tanh", [](Rng& r, std::uint64_t s) { return unary(r, s, random_tensor(r, {3, 3}, -2, 2), ad::tanh); });
  add("relu", [](Rng& r, std::uint64_t s) { return unary(r, s, away_from_zero(r, {3, 3}), ad::relu); });
  add("exp", [](Rng& r, std::uint64_t s) { return unary(r, s, random_tensor(r, {6}, -2, 2), ad::exp); });
  add("log", [](Rng& r, std::uint64_t s) { return unary(r, s, random_tensor(r, {6}, 0.2, 3), ad::log); });
  add("clamp", [](Rng& r, std::uint64_t s) {
    // Entries sit either well inside or well outside [-0.5, 0.5].
    auto x = away_from_zero(r, {8});
    for (auto& v : x.mutable_data()) v = v > 0 ? v * 0.4 : (v - 0.6);
    return Setup{[s](const auto& in) { return project(ad::clamp(in[0], -0.5, 0.5), s); }, {x}};
  });
  add("softmax_rows", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::softmax_rows(in[0]), s); }, {random_tensor(r, {3, 4}, -2, 2)}};
  });
  add("normalize_sum", [](Rng& r, std::uint64_t s) {
    return unary(r, s, random_tensor(r, {5}, 0.1, 1.0), ad::normalize_sum);
  });
  add("reshape", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::reshape(in[0], {3, 2}), s); }, {random_tensor(r, {2, 3})}};
  });
  add("concat_rows", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::concat({in[0], in[1]}, 0), s); },
                 {random_tensor(r, {2, 3}), random_tensor(r, {1, 3})}};
  });
  add("concat_cols", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::concat({in[0], in[1], in[0]}, 1), s); },
                 {random_tensor(r, {2, 3}), random_tensor(r, {2, 1})}};
  });
  add("slice_rows", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::slice_rows(in[0], 1, 3), s); }, {random_tensor(r, {4, 2})}};
  });
  add("pick", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::pick(in[0], 2), s); }, {random_tensor(r, {4})}};
  });
  add("tile_rows", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::tile_rows(in[0], 3), s); }, {random_tensor(r, {4})}};
  });
  add("maxpool_rows", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::maxpool_axis(in[0], 0).values, s); },
                 {random_tensor(r, {5, 3})}};
  });
  add("maxpool_cols", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::maxpool_axis(in[0], 1).values, s); },
                 {random_tensor(r, {3, 5})}};
  });
  add("maxpool_vector", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::maxpool_axis(in[0], 0).values, s); }, {random_tensor(r, {6})}};
  });
  add("mean_axis", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::concat({ad::mean_axis(in[0], 0), ad::mean_axis(in[0], 1)}, 0), s); },
                 {random_tensor(r, {3, 3})}};
  });
  add("sum", [](Rng& r, std::uint64_t) {
    return Setup{[](const auto& in) { return ad::sum(ad::mul(in[0], in[0])); }, {random_tensor(r, {2, 3})}};
  });
  add("mean", [](Rng& r, std::uint64_t) {
    return Setup{[](const auto& in) { return ad::mean(ad::mul(in[0], in[0])); }, {random_tensor(r, {2, 3})}};
  });
  add("segment_means", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::segment_means(in[0], {{0, 2}, {1, 4}, {3, 5}, {0, 5}}), s); },
                 {random_tensor(r, {5, 2})}};
  });
  add("conv1d", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::conv1d(in[0], in[1], in[2]), s); },
                 {random_tensor(r, {7}), random_tensor(r, {3}), random_tensor(r, {1})}};
  });
  add("pairwise_sqdist", [](Rng& r, std::uint64_t s) {
    return Setup{[s](const auto& in) { return project(ad::pairwise_sqdist(in[0], in[1]), s); },
                 {random_tensor(r, {3, 4}), random_tensor(r, {2, 4})}};
  });
  add("grad_reverse", [](Rng& r, std::uint64_t s) {
    constexpr double lambda = 0.01;
    return Setup{[s](const auto& in) { return project(ad::tanh(ad::grad_reverse(in[0], lambda)), s); },
                 {random_tensor(r, {2, 3})}, -lambda};
  });

  // Model building blocks. Parameters are leaves of their store, so passing
  // them as inputs lets the check perturb them in place.
  add("attention", [](Rng& r, std::uint64_t s) {
    auto store = std::make_shared<ad::ParamStore>(r());
    auto unit = model::make_attention_unit(*store, "att", 4);
    std::vector<ad::Tensor> in{random_tensor(r, {3, 4}), random_tensor(r, {5, 4})};
    for (const auto& p : store->all()) in.push_back(p->tensor());
    return Setup{[s, store, unit](const auto& x) { return project(model::attend(unit, x[0], x[1]), s); }, in};
  });
  add("fusion_head", [](Rng& r, std::uint64_t s) {
    auto store = std::make_shared<ad::ParamStore>(r());
    auto head = model::make_fusion_head(*store, "fusion", 4);
    std::vector<ad::Tensor> in{random_tensor(r, {3, 4}), random_tensor(r, {2, 4})};
    for (const auto& p : store->all()) in.push_back(p->tensor());
    return Setup{[s, store, head](const auto& x) { return project(model::score_proposals(head, x[0], x[1]), s); }, in};
  });
  add("boundary_head", [](Rng& r, std::uint64_t s) {
    auto store = std::make_shared<ad::ParamStore>(r());
    auto head = model::make_boundary_head(*store, "boundary", 4, 3);
    std::vector<ad::Tensor> in{random_tensor(r, {6, 4}), random_tensor(r, {3, 4})};
    for (const auto& p : store->all()) in.push_back(p->tensor());
    return Setup{[s, store, head](const auto& x) {
                   const auto b = model::boundary_probs(head, x[0], x[1]);
                   return ad::add(project(b.start, s), project(b.end, s + 1));
                 },
                 in};
  });
  add("mmd_squared", [](Rng& r, std::uint64_t) {
    align::MmdConfig cfg;
    cfg.bandwidths = {0.5, 1.0, 2.0};
    return Setup{[cfg](const auto& in) { return align::mmd_squared(in[0], in[1], cfg); },
                 {random_tensor(r, {4, 3}), random_tensor(r, {3, 3}, -0.5, 1.5)}};
  });
  add("domain_classifier", [](Rng& r, std::uint64_t) {
    auto store = std::make_shared<ad::ParamStore>(r());
    auto clf = align::make_domain_classifier(*store, "domain", 3, 0.01);
    auto vf = random_tensor(r, {3}), qf = random_tensor(r, {3}), vw = random_tensor(r, {3}), qw = random_tensor(r, {3});
    std::vector<ad::Tensor> in;
    for (const auto& p : store->all()) in.push_back(p->tensor());
    return Setup{[store, clf, vf, qf, vw, qw](const auto&) {
                   return align::domain_loss({align::domain_forward(clf, vf, qf)}, {align::domain_forward(clf, vw, qw)});
                 },
                 in};
  });
  add("weak_loss", [](Rng& r, std::uint64_t) {
    return Setup{[](const auto& in) { return obj::weak_loss(in[0], in[1], in[2]); },
                 {random_tensor(r, {1}, 0.1, 0.9), random_tensor(r, {1}, 0.1, 0.9), random_tensor(r, {1}, 0.1, 0.9)}};
  });
  add("full_loss", [](Rng& r, std::uint64_t) {
    obj::LossWeights w;
    return Setup{[w](const auto& in) {
                   return obj::full_loss(ad::normalize_sum(in[0]), ad::normalize_sum(in[1]), 1, 4,
                                         {in[2], in[3], in[4]}, w);
                 },
                 {random_tensor(r, {6}, 0.1, 1), random_tensor(r, {6}, 0.1, 1), random_tensor(r, {1}, 0.1, 0.9),
                  random_tensor(r, {1}, 0.1, 0.9), random_tensor(r, {1}, 0.1, 0.9)}};
  });

  // End-to-end branch losses through a tiny model: every branch parameter
  // and the raw inputs of the positive pair.
  add("weak_branch_loss", [](Rng& r, std::uint64_t) {
    auto m = std::make_shared<model::EvaModel>(tiny_model_config(), r());
    std::vector<ad::Tensor> clips, words;
    for (int i = 0; i < 3; ++i) {
      clips.push_back(random_tensor(r, {6, 3}));
      words.push_back(random_tensor(r, {3, 2}));
    }
    std::vector<ad::Tensor> in{clips[0], words[0]};
    for (const auto& p : m->weak_parameters()) in.push_back(p->tensor());
    return Setup{[m, clips, words](const auto&) {
                   const auto& br = m->weak();
                   auto v0 = model::encode_video(br, clips[0]), q0 = model::encode_query(br, words[0]);
                   auto v1 = model::encode_video(br, clips[1]), q2 = model::encode_query(br, words[2]);
                   return obj::weak_loss(model::weak_pair(*m, v0, q0).video_score,
                                         model::weak_pair(*m, v1, q0).video_score,
                                         model::weak_pair(*m, v0, q2).video_score);
                 },
                 in};
  });
  add("full_branch_loss", [](Rng& r, std::uint64_t) {
    auto m = std::make_shared<model::EvaModel>(tiny_model_config(), r());
    std::vector<ad::Tensor> clips, words;
    for (int i = 0; i < 3; ++i) {
      clips.push_back(random_tensor(r, {6, 3}));
      words.push_back(random_tensor(r, {3, 2}));
    }
    std::vector<ad::Tensor> in{clips[0], words[0]};
    for (const auto& p : m->full_parameters()) in.push_back(p->tensor());
    return Setup{[m, clips, words](const auto&) {
                   const auto& br = m->full();
                   auto v0 = model::encode_video(br, clips[0]), q0 = model::encode_query(br, words[0]);
                   auto v1 = model::encode_video(br, clips[1]), q2 = model::encode_query(br, words[2]);
                   const auto pos = model::full_pair(*m, v0, q0, true);
                   return obj::full_loss(pos.boundary.start, pos.boundary.end, 1, 3,
                                         {pos.video_score, model::full_pair(*m, v1, q0, false).video_score,
                                          model::full_pair(*m, v0, q2, false).video_score},
                                         obj::LossWeights{});
                 },
                 in};
  });
  return cases;
}

}  // namespace

std::vector<std::string> case_names() {
  std::vector<std::string> out;
  for (const auto& c : all_cases()) out.push_back(c.name);
  return out;
}

std::vector<CaseResult> run_suite(const Options& options) {
  std::vector<CaseResult> results;
  const auto cases = all_cases();
  for (auto seed : options.seeds) {
    for (std::size_t k = 0; k < cases.size(); ++k) {
      Rng rng(derive_seed(seed, k));
      auto setup = cases[k].build(rng, seed);
      auto res = check(cases[k].name, setup.fn, setup.inputs, options, setup.scale);
      res.seed = seed;
      results.push_back(std::move(res));
    }
  }
  return results;
}

}  // namespace eva::gradcheck
