#include "eva/objectives.hpp"

#include <cmath>
#include <random>

#include "eva/errors.hpp"

namespace eva::obj {

namespace {

constexpr double kFloor = 1e-12;

ad::Tensor neg_log(const ad::Tensor& p) { return ad::neg(ad::log(ad::clamp(p, kFloor, 1.0))); }

ad::Tensor neg_log_complement(const ad::Tensor& p) {
  return neg_log(ad::add_scalar(ad::neg(ad::clamp(p, kFloor, 1.0 - kFloor)), 1.0));
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {lambda_r, lambda_f, lambda_align, lambda_domain, lambda_vid})
    if (!(w >= 0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and non-negative");
}

ad::Tensor weak_loss(const ad::Tensor& score_pos, const ad::Tensor& score_vneg, const ad::Tensor& score_qneg) {
  const auto pos = ad::clamp(score_pos, kFloor, 1.0 - kFloor);
  return ad::add(ad::add(ad::scale(neg_log(pos), 2.0), neg_log_complement(score_qneg)), neg_log_complement(score_vneg));
}

ad::Tensor weak_loss_batch(const std::vector<ScoreTriplet>& triplets) {
  if (triplets.empty()) throw InputError("weak loss over an empty batch");
  ad::Tensor total;
  for (const auto& t : triplets) {
    auto l = weak_loss(t.positive, t.video_negative, t.query_negative);
    total = total.defined() ? ad::add(total, l) : l;
  }
  return ad::scale(total, 1.0 / static_cast<double>(triplets.size()));
}

ad::Tensor retrieval_loss(const ad::Tensor& p_start, const ad::Tensor& p_end, std::size_t gt_start, std::size_t gt_end) {
  if (p_start.size() != p_end.size()) throw DimensionError("start/end distributions differ in length");
  const auto n = p_start.size();
  if (gt_start > gt_end || gt_end >= n)
    throw LabelError("ground-truth indices (" + std::to_string(gt_start) + ", " + std::to_string(gt_end) +
                     ") invalid for " + std::to_string(n) + " clips");
  return ad::add(neg_log(ad::pick(p_start, gt_start)), neg_log(ad::pick(p_end, gt_end)));
}

ad::Tensor full_loss(const ad::Tensor& p_start, const ad::Tensor& p_end, std::size_t gt_start, std::size_t gt_end,
                     const ScoreTriplet& video_scores, const LossWeights& weights) {
  const auto lr = retrieval_loss(p_start, p_end, gt_start, gt_end);
  const auto bce = weak_loss(video_scores.positive, video_scores.video_negative, video_scores.query_negative);
  return ad::add(ad::scale(lr, weights.lambda_r), bce);
}

TotalLoss total_loss(const LossParts& parts, const LossWeights& weights) {
  TotalLoss out;
  auto value_of = [](const ad::Tensor& t, const char* name) {
    if (!t.defined()) return 0.0;
    const double v = t.item();
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite loss component ") + name);
    return v;
  };
  if (!parts.weak.defined()) throw StateError("total loss requires the weak-branch loss");
  out.weak = value_of(parts.weak, "L_w");
  out.full = value_of(parts.full, "L_f");
  out.alignment = value_of(parts.alignment, "L_align");
  out.domain = value_of(parts.domain, "L_domain");

  out.value = parts.weak;
  out.total = out.weak;
  if (parts.full.defined()) {
    out.value = ad::add(out.value, ad::scale(parts.full, weights.lambda_f));
    out.total += weights.lambda_f * out.full;
  }
  if (parts.alignment.defined()) {
    out.value = ad::add(out.value, ad::scale(parts.alignment, weights.lambda_align));
    out.total += weights.lambda_align * out.alignment;
  }
  if (parts.domain.defined()) {
    out.value = ad::add(out.value, parts.domain);
    out.total += out.domain;
  }
  return out;
}

NegativePairing sample_negatives(std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 2) throw SamplingError("negative sampling needs a batch of at least two samples");
  std::mt19937_64 rng(seed);
  // Draw among the batch_size − 1 other indices and skip over i.
  std::uniform_int_distribution<std::size_t> dist(0, batch_size - 2);
  NegativePairing out;
  out.video_negative.resize(batch_size);
  out.query_negative.resize(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    auto draw = [&] {
      auto j = dist(rng);
      return j >= i ? j + 1 : j;
    };
    out.video_negative[i] = draw();
    out.query_negative[i] = draw();
  }
  return out;
}

}  // namespace eva::obj
