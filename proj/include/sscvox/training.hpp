#pragma once

// Voxel selection for class balancing, the class-weighted cross-entropy and the
// one-cycle learning-rate schedule.

#include <cstdint>
#include <random>

#include "sscvox/core.hpp"

namespace sscvox {

// Voxels participating in the loss. Never contains outside-view or
// visible-empty voxels.
struct SelectionMask {
  LabelGrid bits;  // 1 = selected

  std::size_t count() const;
  bool selected(std::size_t voxel) const { return bits.data()[voxel] != 0; }
};

struct BalanceStats {
  std::size_t occupied = 0;
  std::size_t occluded_empty_candidates = 0;
  std::size_t sampled_empty = 0;
};

// All occupied voxels (label not in {0, 255}, seen or occluded) plus a uniform
// draw without replacement of min(#occupied, #candidates) occluded empty voxels.
SelectionMask balance_sample(const LabelGrid& labels, const VisibilityGrid& vis,
                             std::mt19937_64& rng, BalanceStats* stats = nullptr);

inline constexpr double kMinLogProbability = 1e-12;

// L = (1/|V|) * sum_v [ -sum_c w_c y_vc log P_vc / sum_c w_c ].
// probs has one channel per class of the table.
double weighted_ce_loss(const FloatGrid& probs, const LabelGrid& labels,
                        const SelectionMask& mask, const ClassTable& table);

struct OneCycleOptions {
  double max_mult = 25.0;   // peak = base * max_mult
  double min_mult = 1e-4;   // floor = peak * min_mult
  double warmup_frac = 0.3;
};

// Cosine warmup from base_lr to the peak over the first warmup_frac of steps,
// then cosine annealing to the floor at the last step.
double one_cycle_lr(long step, long total_steps, double base_lr,
                    const OneCycleOptions& opts = {});

// Index of the step at which the schedule peaks.
long one_cycle_peak_step(long total_steps, const OneCycleOptions& opts = {});

}  // namespace sscvox
