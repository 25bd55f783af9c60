#include "eva/model/attention.hpp"

#include <cmath>

#include "eva/errors.hpp"

namespace eva::model {

Affine make_affine(ad::ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out) {
  return Affine{store.create(prefix + ".w", {out, in}, in), store.create(prefix + ".b", {out}, in)};
}

AttentionUnit make_attention_unit(ad::ParamStore& store, const std::string& prefix, std::size_t dim) {
  AttentionUnit u;
  u.w_q = store.create(prefix + ".wq", {dim, dim}, dim);
  u.w_k = store.create(prefix + ".wk", {dim, dim}, dim);
  u.w_v = store.create(prefix + ".wv", {dim, dim}, dim);
  u.fc = make_affine(store, prefix + ".fc", dim, dim);
  u.dim = dim;
  return u;
}

ad::Tensor attend(const AttentionUnit& unit, const ad::Tensor& y, const ad::Tensor& x) {
  if (y.rank() != 2 || x.rank() != 2 || y.cols() != unit.dim || x.cols() != unit.dim)
    throw DimensionError("attend: inputs " + shape_to_string(y.shape()) + " and " + shape_to_string(x.shape()) +
                         " must have feature width " + std::to_string(unit.dim));
  // Y·W_qᵀ·W_k·Xᵀ == (Y·W_qᵀ)·(X·W_kᵀ)ᵀ
  const auto queries = ad::matmul(y, ad::transpose(unit.w_q->tensor()));
  const auto keys = ad::matmul(x, ad::transpose(unit.w_k->tensor()));
  const auto logits = ad::scale(ad::matmul(queries, ad::transpose(keys)), 1.0 / std::sqrt(static_cast<double>(unit.dim)));
  const auto weights = ad::softmax_rows(logits);
  const auto values = ad::matmul(x, ad::transpose(unit.w_v->tensor()));
  return unit.fc(ad::add(y, ad::matmul(weights, values)));
}

}  // namespace eva::model
