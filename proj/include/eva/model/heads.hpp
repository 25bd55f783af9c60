#pragma once

#include "eva/model/attention.hpp"
#include "eva/model/proposals.hpp"

namespace eva::model {

/// Proposal/query matching head:
///   q̄ = max-pool(Q) over words
///   j = (p + q̄) ∥ (p ⊗ q̄) ∥ fc_pair(p ∥ q̄)      (length 3d)
///   score = σ(fc_score(j))
struct FusionHead {
  Affine fc_pair;   // 2d→d
  Affine fc_score;  // 3d→1
};

FusionHead make_fusion_head(ad::ParamStore& store, const std::string& prefix, std::size_t dim);

/// Scores every row of `proposals` (n_p×d) against `query` (n_w×d); shape {n_p}.
ad::Tensor score_proposals(const FusionHead& head, const ad::Tensor& proposals, const ad::Tensor& query);

/// Single-proposal form of score_proposals; shape {1}.
ad::Tensor fuse_and_score(const FusionHead& head, const Proposal& proposal, const ad::Tensor& query);

/// Max over proposal scores (shape {n}); gradient reaches only the argmax.
ad::Tensor video_level_score(const ad::Tensor& proposal_scores);

/// Start/end boundary predictor over clip-level features.
struct BoundaryHead {
  Affine query_pool;       // d→1, word attention logits
  ad::ParamPtr conv_start;  // {k}
  ad::ParamPtr conv_start_bias;
  ad::ParamPtr conv_end;
  ad::ParamPtr conv_end_bias;
};

BoundaryHead make_boundary_head(ad::ParamStore& store, const std::string& prefix, std::size_t dim,
                                std::size_t conv_width);

struct BoundaryProbs {
  ad::Tensor start;  // {n_c}, sums to 1
  ad::Tensor end;    // {n_c}, sums to 1
  ad::Tensor similarity;    // S = V·Q_m, {n_c}
  ad::Tensor query_vector;  // Q_m, {1, d}
};

/// a = softmax(query_pool(Q)) over words, Q_m = Σ aᵢ·Qᵢ, S = V·Q_m,
/// P = normalize(σ(conv(S))). Needs at least two clips.
BoundaryProbs boundary_probs(const BoundaryHead& head, const ad::Tensor& video, const ad::Tensor& query);

}  // namespace eva::model
