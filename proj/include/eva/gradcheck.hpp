#pragma once

// Central finite-difference verification of the autodiff engine, the model
// building blocks and both end-to-end branch losses.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eva/autodiff/tensor.hpp"

namespace eva::gradcheck {

struct Options {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor of the relative error |a − n| / max(|a|, |n|, floor),
  /// so entries whose true gradient is ~0 are judged on absolute error.
  double magnitude_floor = 1e-6;
};

struct CaseResult {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t entries = 0;  // gradient entries compared
  double max_rel_error = 0;
  bool passed = false;
};

using ScalarFn = std::function<ad::Tensor(const std::vector<ad::Tensor>&)>;

/// Compares the reverse-mode gradient of f (single-element output) with
/// central differences for every entry of every input. `analytic_scale`
/// multiplies the numeric gradient before comparison (−λ for a gradient
/// reversal layer, 1 otherwise).
CaseResult check(const std::string& name, const ScalarFn& f, std::vector<ad::Tensor> inputs, const Options& options,
                 double analytic_scale = 1.0);

/// Names of every case in the suite.
std::vector<std::string> case_names();

/// Runs every case for every seed.
std::vector<CaseResult> run_suite(const Options& options);

}  // namespace eva::gradcheck
