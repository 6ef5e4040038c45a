#pragma once

// Central finite-difference verification of analytic gradients.
//
// Step h = 1e-5 * max(1, |theta|); error = |a - n| / max(|a|, |n|, 1e-8).
// Finite differences are only meaningful inside one smooth piece of a ReLU
// network. When a perturbation flips any ReLU, the step is shrunk by 10x (up to
// four times) until the active set stays fixed; the flip count is reported.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sscvox/net/tensor.hpp"

namespace sscvox::net {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t kink_retries = 0;
  std::string worst;  // "<param>[<index>]"
};

struct GradCheckTarget {
  Param* param;         // grad holds the analytic gradient
  std::size_t stride = 1;  // check every stride-th element
};

// objective(): evaluates the scalar at the current parameter values.
// relu_masks(): activation pattern after the last objective() call; may be empty.
GradCheckResult check_gradients(const std::function<double()>& objective,
                                const std::vector<GradCheckTarget>& targets,
                                const std::function<std::vector<std::uint8_t>()>& relu_masks);

enum class GradCheckModule { kLinear, kConv3d, kBatchNorm, kBnDdr, kMiniSpawn };

GradCheckModule parse_grad_check_module(const std::string& name);
std::string to_string(GradCheckModule m);

// Builds the module with random parameters and input from `seed` and checks
// every parameter and the input. Linear, conv3d, batchnorm and bn_ddr use the
// objective sum(r * output) with fixed random r; mini_spawn uses the weighted
// cross-entropy on random labels.
GradCheckResult grad_check(GradCheckModule module, std::uint64_t seed);

}  // namespace sscvox::net
