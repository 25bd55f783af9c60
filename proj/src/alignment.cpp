#include "eva/alignment.hpp"

#include <algorithm>
#include <cmath>

#include "eva/errors.hpp"

namespace eva::align {

namespace {

void require_sample_set(const ad::Tensor& t, const char* what) {
  if (!t.defined() || t.rank() != 2) throw InputError(std::string(what) + " must be an n×d sample matrix");
}

ad::Tensor kernel_mean(const ad::Tensor& a, const ad::Tensor& b, const std::vector<double>& bandwidths) {
  const auto sq = ad::pairwise_sqdist(a, b);
  ad::Tensor total;
  for (double h : bandwidths) {
    auto term = ad::mean(ad::exp(ad::scale(sq, -1.0 / (2.0 * h * h))));
    total = total.defined() ? ad::add(total, term) : term;
  }
  return ad::scale(total, 1.0 / static_cast<double>(bandwidths.size()));
}

ad::Tensor stack_pooled(const std::vector<Taps>& taps, ad::Tensor Taps::*field) {
  std::vector<ad::Tensor> rows;
  rows.reserve(taps.size());
  for (const auto& t : taps) {
    const auto& seq = t.*field;
    rows.push_back(ad::reshape(ad::mean_axis(seq, 0), {1, seq.cols()}));
  }
  return ad::concat(rows, 0);
}

}  // namespace

std::vector<double> resolve_bandwidths(const ad::Tensor& src, const ad::Tensor& tgt, const MmdConfig& cfg) {
  if (!cfg.bandwidths.empty()) {
    for (double h : cfg.bandwidths)
      if (!(h > 0)) throw ConfigError("MMD bandwidths must be positive");
    return cfg.bandwidths;
  }
  if (cfg.median_multipliers.empty()) throw ConfigError("MMD needs bandwidths or median multipliers");
  const std::size_t d = src.cols();
  std::vector<const double*> points;
  for (std::size_t i = 0; i < src.rows(); ++i) points.push_back(src.data().data() + i * d);
  for (std::size_t i = 0; i < tgt.rows(); ++i) points.push_back(tgt.data().data() + i * d);
  std::vector<double> dists;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += (points[i][c] - points[j][c]) * (points[i][c] - points[j][c]);
      dists.push_back(std::sqrt(acc));
    }
  double median = 0.0;
  if (!dists.empty()) {
    std::sort(dists.begin(), dists.end());
    const auto mid = dists.size() / 2;
    median = dists.size() % 2 ? dists[mid] : 0.5 * (dists[mid - 1] + dists[mid]);
  }
  if (!(median > 1e-12)) median = 1.0;  // degenerate set: every point coincides
  std::vector<double> out;
  for (double m : cfg.median_multipliers) {
    if (!(m > 0)) throw ConfigError("MMD median multipliers must be positive");
    out.push_back(m * median);
  }
  return out;
}

ad::Tensor mmd_squared(const ad::Tensor& src, const ad::Tensor& tgt, const MmdConfig& cfg) {
  require_sample_set(src, "MMD source set");
  require_sample_set(tgt, "MMD target set");
  if (src.cols() != tgt.cols())
    throw DimensionError("MMD sets " + shape_to_string(src.shape()) + " and " + shape_to_string(tgt.shape()) +
                         " have different widths");
  const auto h = resolve_bandwidths(src, tgt, cfg);
  return ad::sub(ad::add(kernel_mean(src, src, h), kernel_mean(tgt, tgt, h)), ad::scale(kernel_mean(src, tgt, h), 2.0));
}

ad::Tensor alignment_loss(const std::vector<Taps>& full, const std::vector<Taps>& weak, const MmdConfig& cfg) {
  if (full.empty() || weak.empty()) throw InputError("alignment loss needs samples from both branches");
  auto term = [&](ad::Tensor Taps::*field) {
    return mmd_squared(stack_pooled(full, field), stack_pooled(weak, field), cfg);
  };
  const auto before = ad::add(ad::scale(term(&Taps::video_before), cfg.lambda_vid), term(&Taps::query_before));
  const auto after = ad::add(ad::scale(term(&Taps::video_after), cfg.lambda_vid), term(&Taps::query_after));
  return ad::add(before, after);
}

ad::Tensor joint_mmd(const ad::Tensor& video_full, const ad::Tensor& video_weak, const ad::Tensor& query_full,
                     const ad::Tensor& query_weak, const MmdConfig& cfg) {
  return ad::add(mmd_squared(video_full, video_weak, cfg), mmd_squared(query_full, query_weak, cfg));
}

DomainClassifier make_domain_classifier(ad::ParamStore& store, const std::string& prefix, std::size_t dim,
                                        double grl_lambda) {
  return DomainClassifier{model::make_affine(store, prefix + ".fc2", 2 * dim, dim),
                          model::make_affine(store, prefix + ".fc1", dim, 2), grl_lambda};
}

ad::Tensor domain_forward(const DomainClassifier& clf, const ad::Tensor& video_pooled, const ad::Tensor& query_pooled) {
  const auto dim = clf.fc1.in_dim();
  if (video_pooled.size() != dim || query_pooled.size() != dim)
    throw DimensionError("domain classifier expects two length-" + std::to_string(dim) + " vectors, got " +
                         shape_to_string(video_pooled.shape()) + " and " + shape_to_string(query_pooled.shape()));
  const auto joint = ad::concat({ad::reshape(video_pooled, {1, dim}), ad::reshape(query_pooled, {1, dim})}, 1);
  const auto reversed = ad::grad_reverse(joint, clf.grl_lambda);
  return ad::reshape(ad::softmax_rows(clf.fc1(clf.fc2(reversed))), {2});
}

ad::Tensor domain_loss(const std::vector<ad::Tensor>& probs_full, const std::vector<ad::Tensor>& probs_weak) {
  if (probs_full.empty() || probs_weak.empty()) throw InputError("domain loss needs samples from both branches");
  auto side = [](const std::vector<ad::Tensor>& probs, bool source) {
    ad::Tensor total;
    for (const auto& p : probs) {
      auto target_prob = ad::pick(p, 1);
      auto arg = source ? ad::add_scalar(ad::neg(target_prob), 1.0) : target_prob;
      auto term = ad::neg(ad::log(ad::clamp(arg, kProbabilityFloor, 1.0)));
      total = total.defined() ? ad::add(total, term) : term;
    }
    return ad::scale(total, 1.0 / static_cast<double>(probs.size()));
  };
  return ad::add(side(probs_full, true), side(probs_weak, false));
}

}  // namespace eva::align
