#include "sscvox/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace sscvox {

std::size_t SelectionMask::count() const {
  return static_cast<std::size_t>(
      std::count_if(bits.data().begin(), bits.data().end(), [](std::uint8_t b) { return b; }));
}

SelectionMask balance_sample(const LabelGrid& labels, const VisibilityGrid& vis,
                             std::mt19937_64& rng, BalanceStats* stats) {
  if (labels.channels() != 1 || vis.channels() != 1 ||
      labels.spec().dims != vis.spec().dims) {
    throw ValidationError("labels and visibility must share one spec");
  }
  SelectionMask mask{LabelGrid(labels.spec(), 1, 0)};
  std::vector<std::size_t> candidates;
  std::size_t occupied = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Visibility s = vis.data()[i];
    if (s == Visibility::kOutsideView || s == Visibility::kVisibleEmpty) continue;
    const std::uint8_t label = labels.data()[i];
    if (is_occupied_label(label)) {
      mask.bits.data()[i] = 1;
      ++occupied;
    } else if (label == 0 && s == Visibility::kOccluded) {
      candidates.push_back(i);
    }
  }
  const std::size_t take = std::min(occupied, candidates.size());
  // Partial Fisher-Yates: the first `take` entries become a uniform sample.
  for (std::size_t k = 0; k < take; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, candidates.size() - 1);
    std::swap(candidates[k], candidates[pick(rng)]);
    mask.bits.data()[candidates[k]] = 1;
  }
  if (stats) *stats = {occupied, candidates.size(), take};
  return mask;
}

double weighted_ce_loss(const FloatGrid& probs, const LabelGrid& labels,
                        const SelectionMask& mask, const ClassTable& table) {
  if (probs.channels() != table.size()) {
    throw ValidationError("probability channels do not match the class table");
  }
  if (labels.spec().dims != probs.spec().dims || mask.bits.spec().dims != probs.spec().dims) {
    throw ValidationError("loss inputs must share one grid");
  }
  const double weight_sum = table.weight_sum();
  const std::size_t voxels = probs.voxels();
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t v = 0; v < voxels; ++v) {
    if (!mask.selected(v)) continue;
    const std::uint8_t label = labels.data()[v];
    if (label >= table.size()) throw ValidationError("selected voxel has no valid label");
    double psum = 0.0;
    for (int c = 0; c < table.size(); ++c) psum += probs.data()[c * voxels + v];
    if (std::abs(psum - 1.0) > 1e-4) {
      throw ValidationError("predicted probabilities do not sum to 1");
    }
    const double p = std::max<double>(probs.data()[label * voxels + v], kMinLogProbability);
    total += -table.weights[label] * std::log(p) / weight_sum;
    ++n;
  }
  if (n == 0) throw ValidationError("empty selection mask");
  return total / static_cast<double>(n);
}

long one_cycle_peak_step(long total_steps, const OneCycleOptions& opts) {
  if (total_steps < 1) throw UsageError("total_steps must be positive");
  const double frac = std::clamp(opts.warmup_frac, 0.0, 1.0);
  return static_cast<long>(std::floor(frac * static_cast<double>(total_steps - 1)));
}

double one_cycle_lr(long step, long total_steps, double base_lr, const OneCycleOptions& opts) {
  if (step < 0 || step >= total_steps) throw UsageError("step outside the schedule");
  const double peak = base_lr * opts.max_mult;
  const double floor = peak * opts.min_mult;
  const long peak_step = one_cycle_peak_step(total_steps, opts);
  constexpr double pi = std::numbers::pi;
  if (step <= peak_step) {
    if (peak_step == 0) return peak;
    const double t = static_cast<double>(step) / static_cast<double>(peak_step);
    return base_lr + (peak - base_lr) * 0.5 * (1.0 - std::cos(pi * t));
  }
  const long anneal = total_steps - 1 - peak_step;
  const double t = static_cast<double>(step - peak_step) / static_cast<double>(anneal);
  return floor + (peak - floor) * 0.5 * (1.0 + std::cos(pi * t));
}

}  // namespace sscvox
