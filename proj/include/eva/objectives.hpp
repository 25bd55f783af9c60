#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eva/autodiff/ops.hpp"

namespace eva::obj {

struct LossWeights {
  double lambda_r = 0.1;
  double lambda_f = 1.0;
  double lambda_align = 1.0;
  double lambda_domain = 0.01;
  double lambda_vid = 0.8;

  void validate() const;
};

/// 2·(−log s⁺) − log(1 − s_q⁻) − log(1 − s_v⁻) for one sample; scores are
/// clamped into [1e-12, 1 − 1e-12].
ad::Tensor weak_loss(const ad::Tensor& score_pos, const ad::Tensor& score_vneg, const ad::Tensor& score_qneg);

struct ScoreTriplet {
  ad::Tensor positive;
  ad::Tensor video_negative;  // (V⁻, Q)
  ad::Tensor query_negative;  // (V, Q⁻)
};

/// Mean of weak_loss over the batch.
ad::Tensor weak_loss_batch(const std::vector<ScoreTriplet>& triplets);

/// −log P_s[start] − log P_e[end]. Throws LabelError on bad indices.
ad::Tensor retrieval_loss(const ad::Tensor& p_start, const ad::Tensor& p_end, std::size_t gt_start, std::size_t gt_end);

/// λ_r·L_r + L_bce for one source sample.
ad::Tensor full_loss(const ad::Tensor& p_start, const ad::Tensor& p_end, std::size_t gt_start, std::size_t gt_end,
                     const ScoreTriplet& video_scores, const LossWeights& weights);

/// Loss components of one step. `domain` is the classifier's own loss; the
/// adversarial sign lives inside the graph (gradient reversal), so it enters
/// the backpropagated scalar with weight 1.
struct LossParts {
  ad::Tensor weak;
  ad::Tensor full;       // undefined when the auxiliary branch is off
  ad::Tensor alignment;  // undefined when alignment is off
  ad::Tensor domain;     // undefined when the domain classifier is off
};

struct TotalLoss {
  ad::Tensor value;  // what backward() is called on
  double weak = 0, full = 0, alignment = 0, domain = 0, total = 0;
};

/// L = L_w + λ_f·L_f + λ_align·L_align + L_domain. Throws NumericError naming
/// the first non-finite component.
TotalLoss total_loss(const LossParts& parts, const LossWeights& weights);

struct NegativePairing {
  std::vector<std::size_t> video_negative;  // index of V⁻ for each sample
  std::vector<std::size_t> query_negative;  // index of Q⁻ for each sample
};

/// Uniform draws among the other batch indices, deterministic in the seed.
/// Throws SamplingError for batches smaller than two.
NegativePairing sample_negatives(std::size_t batch_size, std::uint64_t seed);

}  // namespace eva::obj
