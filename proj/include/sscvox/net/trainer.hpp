#pragma once

// Training loop for the miniature network: balanced voxel selection, the
// class-weighted loss with its fused softmax gradient, plain SGD with weight
// decay under the one-cycle schedule, and optional per-batch augmentation.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "sscvox/augment.hpp"
#include "sscvox/net/mini_spawn.hpp"
#include "sscvox/training.hpp"

namespace sscvox::net {

// One training/evaluation example. tsdf is high resolution; priors, labels and
// vis share the low-resolution grid.
struct TrainingScene {
  FloatGrid tsdf;
  FloatGrid priors;
  LabelGrid labels;
  VisibilityGrid vis;
};

TrainingScene augment_scene(const AugCode& g, const TrainingScene& s);

// The weighted cross-entropy averaged over every selected voxel of the batch.
// When grad_logits is non-null it receives dL/dlogits (softmax and loss fused).
double batch_loss(const Tensor5& probs, const std::vector<const LabelGrid*>& labels,
                  const std::vector<const SelectionMask*>& masks, const ClassTable& table,
                  Tensor5* grad_logits);

// p -= lr * (grad + weight_decay * p)
void sgd_step(const std::vector<Param*>& params, double lr, double weight_decay);

struct TrainOptions {
  long steps = 200;
  int batch_size = 4;
  double base_lr = 4e-4;
  OneCycleOptions schedule;
  double weight_decay = 1e-5;
  bool augment = false;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> step_loss;  // loss of each step's batch before its update
  std::vector<double> step_lr;
};

using StepCallback = std::function<void(long step, double loss, double lr)>;

// Mini-batches cycle through a per-epoch shuffle of the scenes. One code per
// mini-batch when augmenting.
TrainReport train(MiniSpawn& net, const std::vector<TrainingScene>& scenes,
                  const TrainOptions& opts, const ClassTable& table,
                  const StepCallback& on_step = {});

// Loss over the given scenes with fixed selection masks; running statistics
// are left untouched.
double evaluate_loss(MiniSpawn& net, const std::vector<TrainingScene>& scenes,
                     const std::vector<SelectionMask>& masks, const ClassTable& table,
                     Mode mode);

// Eval-mode probabilities for one scene on the prior grid.
FloatGrid predict(MiniSpawn& net, const FloatGrid& tsdf, const FloatGrid& priors);

// Predictor adaptor for tta_ensemble.
Predictor make_predictor(MiniSpawn& net);

// Per-voxel argmax of a probability grid.
LabelGrid argmax_labels(const FloatGrid& probs);

}  // namespace sscvox::net
