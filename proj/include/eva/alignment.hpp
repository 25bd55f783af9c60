#pragma once

// Cross-domain coupling: RBF-kernel MMD, the before/after-cross-attention
// alignment loss and the adversarial joint-modal domain classifier.

#include <vector>

#include "eva/autodiff/ops.hpp"
#include "eva/model/attention.hpp"

namespace eva::align {

struct MmdConfig {
  /// Fixed RBF bandwidths. When empty, bandwidths are median_multipliers × the
  /// median pairwise distance of the merged sample set, recomputed per call
  /// and treated as constants for differentiation.
  std::vector<double> bandwidths;
  std::vector<double> median_multipliers{0.5, 1.0, 2.0};
  double lambda_vid = 0.8;
};

/// Bandwidths actually used for the sets (rows are samples).
std::vector<double> resolve_bandwidths(const ad::Tensor& src, const ad::Tensor& tgt, const MmdConfig& cfg);

/// Biased squared MMD between the row sets of src (n_s×d) and tgt (n_t×d)
/// with K(a,b) = mean over bandwidths h of exp(−‖a−b‖² / (2h²)).
ad::Tensor mmd_squared(const ad::Tensor& src, const ad::Tensor& tgt, const MmdConfig& cfg);

/// Sequence features recorded before and after the shared cross-modal
/// attention for one sample.
struct Taps {
  ad::Tensor video_before;  // n×d (proposals in the weak branch, clips in the full branch)
  ad::Tensor query_before;  // n_w×d
  ad::Tensor video_after;
  ad::Tensor query_after;
};

/// λ_vid·M²(V_b) + M²(Q_b) + λ_vid·M²(V_a) + M²(Q_a) between the two branches'
/// batches, each sample mean-pooled over its sequence axis first.
ad::Tensor alignment_loss(const std::vector<Taps>& full, const std::vector<Taps>& weak, const MmdConfig& cfg);

/// M²(V^f, V^w) + M²(Q^f, Q^w) over pooled per-sample vectors (rows).
ad::Tensor joint_mmd(const ad::Tensor& video_full, const ad::Tensor& video_weak, const ad::Tensor& query_full,
                     const ad::Tensor& query_weak, const MmdConfig& cfg);

/// G_d(J) = softmax(FC1(FC2(J))) behind a gradient reversal layer.
struct DomainClassifier {
  model::Affine fc2;  // 2d→d
  model::Affine fc1;  // d→2
  double grl_lambda = 0.01;
};

DomainClassifier make_domain_classifier(ad::ParamStore& store, const std::string& prefix, std::size_t dim,
                                        double grl_lambda);

/// Returns a {2} probability vector (p_source, p_target).
ad::Tensor domain_forward(const DomainClassifier& clf, const ad::Tensor& video_pooled, const ad::Tensor& query_pooled);

/// Mean over the batch of −log(1 − p_target(J^f)) plus the mean of
/// −log p_target(J^w); probabilities clamped at 1e-12.
ad::Tensor domain_loss(const std::vector<ad::Tensor>& probs_full, const std::vector<ad::Tensor>& probs_weak);

inline constexpr double kProbabilityFloor = 1e-12;

}  // namespace eva::align
