#include "eva/autodiff/params.hpp"

#include <cmath>

#include "eva/errors.hpp"

namespace eva::ad {

Parameter::Parameter(std::string name, Tensor tensor) : name_(std::move(name)), tensor_(std::move(tensor)) {
  if (!tensor_.requires_grad()) throw StateError("parameter '" + name_ + "' must require gradients");
  adam_.m.assign(tensor_.size(), 0.0);
  adam_.v.assign(tensor_.size(), 0.0);
}

ParamPtr ParamStore::create(const std::string& name, Shape shape, std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(shape_size(shape));
  for (auto& v : data) v = dist(rng_);
  return insert(name, Tensor::from(std::move(shape), std::move(data), true));
}

ParamPtr ParamStore::create_zeros(const std::string& name, Shape shape) {
  return insert(name, Tensor::zeros(std::move(shape), true));
}

ParamPtr ParamStore::insert(const std::string& name, Tensor tensor) {
  if (params_.count(name)) throw StateError("duplicate parameter name '" + name + "'");
  auto p = std::make_shared<Parameter>(name, std::move(tensor));
  params_.emplace(name, p);
  return p;
}

ParamPtr ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw StateError("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<ParamPtr> ParamStore::all() const {
  std::vector<ParamPtr> out;
  out.reserve(params_.size());
  for (const auto& [_, p] : params_) out.push_back(p);
  return out;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : params_) out.push_back(n);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_) p->tensor().zero_grad();
}

void adam_step(std::span<const ParamPtr> params, const AdamOptions& o) {
  for (const auto& p : params)
    if (!p->tensor().has_grad()) throw StateError("parameter '" + p->name() + "' has no gradient");
  for (const auto& p : params) {
    auto& st = p->adam();
    auto w = p->tensor().mutable_data();
    auto g = p->tensor().grad();
    ++st.step;
    const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < w.size(); ++i) {
      st.m[i] = o.beta1 * st.m[i] + (1.0 - o.beta1) * g[i];
      st.v[i] = o.beta2 * st.v[i] + (1.0 - o.beta2) * g[i] * g[i];
      w[i] -= o.lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + o.eps);
    }
    p->tensor().zero_grad();
  }
}

}  // namespace eva::ad
