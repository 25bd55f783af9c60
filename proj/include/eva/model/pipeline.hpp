#pragma once

// Two-branch model: a weakly-supervised retrieval branch and a
// fully-supervised auxiliary branch. Each branch runs
//   project → self-attention (stage 1) → [proposal pooling, weak only]
//   → cross-modal attention → self-attention (stage 2) → head
// Modules listed in Sharing are built once and referenced by both branches.

#include <cstdint>
#include <string>
#include <vector>

#include "eva/alignment.hpp"
#include "eva/model/attention.hpp"
#include "eva/model/heads.hpp"
#include "eva/model/proposals.hpp"

namespace eva::model {

struct Sharing {
  bool self1 = false;
  bool self2 = false;
  bool cross = true;

  /// Comma-separated subset of {self1, self2, cross}; "none" or "" is empty.
  static Sharing parse(const std::string& text);
  std::string to_string() const;
  bool operator==(const Sharing&) const = default;
};

struct ModelConfig {
  std::size_t clip_dim = 500;
  std::size_t word_dim = 300;
  std::size_t dim = 256;
  std::size_t conv_width = 3;
  std::vector<std::size_t> window_sizes{8, 16, 32, 64, 128};
  std::size_t stride = 8;
  Sharing sharing;
  double grl_lambda = 0.01;
};

struct Branch {
  Affine proj_video;  // clip_dim→d
  Affine proj_query;  // word_dim→d
  AttentionUnit self1_video, self1_query;
  AttentionUnit cross_video;  // Att^{Q→V}: video attends over the query
  AttentionUnit cross_query;  // Att^{V→Q}: query attends over the video
  AttentionUnit self2_video, self2_query;
};

class EvaModel {
 public:
  EvaModel(const ModelConfig& config, std::uint64_t init_seed);
  EvaModel(EvaModel&&) = default;
  EvaModel& operator=(EvaModel&&) = default;
  EvaModel(const EvaModel&) = delete;
  EvaModel& operator=(const EvaModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ad::ParamStore& params() { return store_; }
  const ad::ParamStore& params() const { return store_; }

  const Branch& weak() const { return weak_; }
  const Branch& full() const { return full_; }
  const FusionHead& fusion() const { return fusion_; }
  const BoundaryHead& boundary() const { return boundary_; }
  const align::DomainClassifier& domain() const { return domain_; }

  /// Parameters the deployed weak branch reads (includes shared modules and
  /// the fusion head).
  std::vector<ad::ParamPtr> weak_parameters() const;
  /// Parameters of the auxiliary branch, its boundary head and the fusion
  /// head it reuses for the video-level term.
  std::vector<ad::ParamPtr> full_parameters() const;
  std::vector<ad::ParamPtr> domain_parameters() const;

 private:
  ModelConfig config_;
  ad::ParamStore store_;
  Branch weak_;
  Branch full_;
  FusionHead fusion_;
  BoundaryHead boundary_;
  align::DomainClassifier domain_;
};

/// Raw n×d_c clip features → projected, stage-1 self-attended n×d.
ad::Tensor encode_video(const Branch& branch, const ad::Tensor& raw_clips);
ad::Tensor encode_query(const Branch& branch, const ad::Tensor& raw_words);

/// Applies one stage (1 or 2) of within-modal self-attention to both modalities.
std::pair<ad::Tensor, ad::Tensor> self_attend_stage(const Branch& branch, const ad::Tensor& video,
                                                    const ad::Tensor& query, int stage);

struct WeakOutput {
  std::vector<Interval> proposals;
  ad::Tensor proposal_scores;  // {n_p}
  ad::Tensor video_score;      // {1}
  align::Taps taps;
};

struct FullOutput {
  BoundaryProbs boundary;
  ad::Tensor video_score;  // {1}
  align::Taps taps;
};

/// Weak branch on already encoded inputs (see encode_video/encode_query).
WeakOutput weak_pair(const EvaModel& model, const ad::Tensor& video, const ad::Tensor& query);
/// Full branch on already encoded inputs. Without boundary, only the
/// video-level score and taps are produced.
FullOutput full_pair(const EvaModel& model, const ad::Tensor& video, const ad::Tensor& query, bool with_boundary = true);

WeakOutput forward_weak(const EvaModel& model, const ad::Tensor& raw_clips, const ad::Tensor& raw_words);
FullOutput forward_full(const EvaModel& model, const ad::Tensor& raw_clips, const ad::Tensor& raw_words);

/// Max-pooled (video, query) vectors that form the joint feature J, taken
/// after the cross-modal attention.
std::pair<ad::Tensor, ad::Tensor> joint_features(const align::Taps& taps);

}  // namespace eva::model
