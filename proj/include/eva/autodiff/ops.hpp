#pragma once

// Differentiable primitives. No implicit broadcasting: binary pointwise ops
// need equal shapes, and the only mixed-shape forms are tensor-scalar
// (scale, add_scalar) and the explicit tile_rows / linear helpers.

#include <cstddef>
#include <utility>
#include <vector>

#include "eva/autodiff/tensor.hpp"

namespace eva::ad {

// Linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// x[m×in] · W[out×in]ᵀ + b[out], bias applied to every row.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Pointwise
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor neg(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
/// Natural log. Throws NumericError on any non-positive entry.
Tensor log(const Tensor& a);
/// Clamps into [lo, hi]; gradient is zero where the clamp is active.
Tensor clamp(const Tensor& a, double lo, double hi);

// Normalisation
/// Row-wise softmax with max subtraction. Throws NumericError on NaN input.
Tensor softmax_rows(const Tensor& x);
/// x / sum(x). The sum must be positive.
Tensor normalize_sum(const Tensor& x);

// Shape manipulation
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
/// Element `index` of a flattened tensor, as a shape-{1} tensor.
Tensor pick(const Tensor& x, std::size_t index);
/// Repeats a length-d vector (shape {d} or {1,d}) into n×d.
Tensor tile_rows(const Tensor& v, std::size_t n);

// Reductions
struct MaxPool {
  Tensor values;
  std::vector<std::size_t> argmax;  // position along the pooled axis, per output element
};
/// Maximum along `axis` (0 or 1 for matrices, 0 for vectors). The axis is
/// removed from the result shape; a vector reduces to shape {1}. Ties go to
/// the lowest index, which alone receives the gradient.
MaxPool maxpool_axis(const Tensor& x, std::size_t axis);
Tensor mean_axis(const Tensor& x, std::size_t axis);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Row means of x over each half-open row interval, stacked to n_intervals×d.
Tensor segment_means(const Tensor& x, const std::vector<std::pair<std::size_t, std::size_t>>& intervals);

// Sequence ops
/// Zero-padded cross-correlation with an odd-width kernel plus a scalar bias;
/// output length equals input length.
Tensor conv1d(const Tensor& signal, const Tensor& kernel, const Tensor& bias);

/// ‖x_i − y_j‖² for every row pair, shape n×m.
Tensor pairwise_sqdist(const Tensor& x, const Tensor& y);

/// Identity forward; backward multiplies the incoming gradient by −lambda.
Tensor grad_reverse(const Tensor& x, double lambda);

}  // namespace eva::ad
