#include "eva/model/heads.hpp"

#include "eva/errors.hpp"

namespace eva::model {

FusionHead make_fusion_head(ad::ParamStore& store, const std::string& prefix, std::size_t dim) {
  return FusionHead{make_affine(store, prefix + ".fc_pair", 2 * dim, dim),
                    make_affine(store, prefix + ".fc_score", 3 * dim, 1)};
}

ad::Tensor score_proposals(const FusionHead& head, const ad::Tensor& proposals, const ad::Tensor& query) {
  const std::size_t d = head.fc_pair.out_dim();
  if (proposals.rank() != 2 || query.rank() != 2 || proposals.cols() != d || query.cols() != d)
    throw DimensionError("fusion head: proposals " + shape_to_string(proposals.shape()) + " and query " +
                         shape_to_string(query.shape()) + " must have width " + std::to_string(d));
  const std::size_t n = proposals.rows();
  const auto pooled = ad::tile_rows(ad::maxpool_axis(query, 0).values, n);
  const auto joint = ad::concat({ad::add(proposals, pooled), ad::mul(proposals, pooled),
                                 head.fc_pair(ad::concat({proposals, pooled}, 1))},
                                1);
  return ad::reshape(ad::sigmoid(head.fc_score(joint)), {n});
}

ad::Tensor fuse_and_score(const FusionHead& head, const Proposal& proposal, const ad::Tensor& query) {
  return score_proposals(head, ad::reshape(proposal.feature, {1, proposal.feature.size()}), query);
}

ad::Tensor video_level_score(const ad::Tensor& proposal_scores) {
  if (proposal_scores.size() == 0) throw DimensionError("video_level_score over no proposals");
  return ad::maxpool_axis(ad::reshape(proposal_scores, {proposal_scores.size()}), 0).values;
}

BoundaryHead make_boundary_head(ad::ParamStore& store, const std::string& prefix, std::size_t dim,
                                std::size_t conv_width) {
  if (conv_width % 2 == 0) throw ConfigError("conv1d kernel width must be odd, got " + std::to_string(conv_width));
  BoundaryHead h;
  h.query_pool = make_affine(store, prefix + ".query_pool", dim, 1);
  h.conv_start = store.create(prefix + ".conv_start.w", {conv_width}, conv_width);
  h.conv_start_bias = store.create(prefix + ".conv_start.b", {1}, conv_width);
  h.conv_end = store.create(prefix + ".conv_end.w", {conv_width}, conv_width);
  h.conv_end_bias = store.create(prefix + ".conv_end.b", {1}, conv_width);
  return h;
}

BoundaryProbs boundary_probs(const BoundaryHead& head, const ad::Tensor& video, const ad::Tensor& query) {
  if (video.rank() != 2 || video.rows() < 2)
    throw InputError("boundary prediction needs at least two clips, got " + shape_to_string(video.shape()));
  if (query.rank() != 2 || query.cols() != video.cols())
    throw DimensionError("boundary head: video " + shape_to_string(video.shape()) + " vs query " +
                         shape_to_string(query.shape()));
  const auto n_words = query.rows();
  const auto word_weights = ad::softmax_rows(ad::reshape(head.query_pool(query), {1, n_words}));
  const auto query_vector = ad::matmul(word_weights, query);  // 1×d
  const auto similarity = ad::reshape(ad::matmul(video, ad::transpose(query_vector)), {video.rows()});
  auto start = ad::normalize_sum(
      ad::sigmoid(ad::conv1d(similarity, head.conv_start->tensor(), head.conv_start_bias->tensor())));
  auto end = ad::normalize_sum(
      ad::sigmoid(ad::conv1d(similarity, head.conv_end->tensor(), head.conv_end_bias->tensor())));
  return {std::move(start), std::move(end), similarity, query_vector};
}

}  // namespace eva::model
