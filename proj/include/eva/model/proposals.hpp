#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "eva/autodiff/tensor.hpp"

namespace eva::model {

/// Half-open clip-index interval [start, end).
struct Interval {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

struct Proposal {
  Interval span;
  ad::Tensor feature;  // shape {d}: mean of the covered clip features
};

/// Sliding windows over n_clips clips. For each window size (in the given
/// order) windows start at 0, stride, 2·stride, ... while start < n_clips and
/// are clamped to n_clips; an interval already emitted is skipped.
std::vector<Interval> proposal_intervals(std::size_t n_clips, const std::vector<std::size_t>& window_sizes,
                                         std::size_t stride);

/// Mean-pooled proposal features, one row per interval.
ad::Tensor pool_proposals(const ad::Tensor& clips, const std::vector<Interval>& intervals);

std::vector<Proposal> generate_proposals(const ad::Tensor& clips, const std::vector<std::size_t>& window_sizes,
                                         std::size_t stride);

}  // namespace eva::model
