#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "eva/autodiff/tensor.hpp"

namespace eva::ad {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// A named trainable tensor plus its optimizer state.
class Parameter {
 public:
  Parameter(std::string name, Tensor tensor);

  const std::string& name() const { return name_; }
  const Tensor& tensor() const { return tensor_; }
  Tensor& tensor() { return tensor_; }
  AdamState& adam() { return adam_; }
  const AdamState& adam() const { return adam_; }

 private:
  std::string name_;
  Tensor tensor_;
  AdamState adam_;
};

using ParamPtr = std::shared_ptr<Parameter>;

/// Owns every trainable parameter of a model. Names are unique; modules that
/// share weights hold the same ParamPtr.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t init_seed = 0) : rng_(init_seed) {}

  /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  ParamPtr create(const std::string& name, Shape shape, std::size_t fan_in);
  ParamPtr create_zeros(const std::string& name, Shape shape);
  /// Inserts an externally built tensor (checkpoint loading).
  ParamPtr insert(const std::string& name, Tensor tensor);

  ParamPtr get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::vector<ParamPtr> all() const;
  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }
  void zero_grad();

 private:
  std::map<std::string, ParamPtr> params_;
  std::mt19937_64 rng_;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Every parameter passed to step() must carry a
/// gradient; gradients are cleared afterwards.
void adam_step(std::span<const ParamPtr> params, const AdamOptions& options);

}  // namespace eva::ad
