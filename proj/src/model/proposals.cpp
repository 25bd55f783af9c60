#include "eva/model/proposals.hpp"

#include <algorithm>
#include <set>

#include "eva/autodiff/ops.hpp"
#include "eva/errors.hpp"

namespace eva::model {

std::vector<Interval> proposal_intervals(std::size_t n_clips, const std::vector<std::size_t>& window_sizes,
                                         std::size_t stride) {
  if (n_clips == 0) throw InputError("proposal generation on a video with no clips");
  if (stride == 0) throw ConfigError("proposal stride must be at least 1");
  if (window_sizes.empty()) throw ConfigError("no proposal window sizes");
  std::vector<Interval> out;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto w : window_sizes) {
    if (w == 0) throw ConfigError("proposal window sizes must be positive");
    for (std::size_t start = 0; start < n_clips; start += stride) {
      const std::size_t end = std::min(start + w, n_clips);
      if (seen.emplace(start, end).second) out.push_back({start, end});
    }
  }
  return out;
}

ad::Tensor pool_proposals(const ad::Tensor& clips, const std::vector<Interval>& intervals) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  spans.reserve(intervals.size());
  for (const auto& iv : intervals) spans.emplace_back(iv.start, iv.end);
  return ad::segment_means(clips, spans);
}

std::vector<Proposal> generate_proposals(const ad::Tensor& clips, const std::vector<std::size_t>& window_sizes,
                                         std::size_t stride) {
  if (clips.rank() != 2) throw DimensionError("generate_proposals expects n_c×d clips");
  const auto intervals = proposal_intervals(clips.rows(), window_sizes, stride);
  const auto pooled = pool_proposals(clips, intervals);
  std::vector<Proposal> out;
  out.reserve(intervals.size());
  for (std::size_t k = 0; k < intervals.size(); ++k)
    out.push_back({intervals[k], ad::reshape(ad::slice_rows(pooled, k, k + 1), {clips.cols()})});
  return out;
}

}  // namespace eva::model
