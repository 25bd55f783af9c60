#pragma once

#include <cstddef>
#include <string>

#include "eva/autodiff/ops.hpp"
#include "eva/autodiff/params.hpp"

namespace eva::model {

/// Fully-connected map x·Wᵀ + b.
struct Affine {
  ad::ParamPtr weight;  // out×in
  ad::ParamPtr bias;    // out

  ad::Tensor operator()(const ad::Tensor& x) const {
    return ad::linear(x, weight->tensor(), bias->tensor());
  }
  std::size_t in_dim() const { return weight->tensor().cols(); }
  std::size_t out_dim() const { return weight->tensor().rows(); }
};

Affine make_affine(ad::ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out);

/// Att(Y, X): Y attends over X.
///   R   = softmax_rows(Y·W_qᵀ·W_k·Xᵀ / √d)
///   out = FC(Y + R·X·W_vᵀ)
struct AttentionUnit {
  ad::ParamPtr w_q, w_k, w_v;  // d×d each
  Affine fc;                   // d→d
  std::size_t dim = 0;
};

AttentionUnit make_attention_unit(ad::ParamStore& store, const std::string& prefix, std::size_t dim);

/// Output has the shape of `y`. Throws DimensionError when either input's
/// feature width differs from the unit's dimension.
ad::Tensor attend(const AttentionUnit& unit, const ad::Tensor& y, const ad::Tensor& x);

}  // namespace eva::model
