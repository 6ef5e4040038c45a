#include "sscvox/net/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sscvox::net {
namespace {

std::vector<std::vector<double>> snapshot(const std::vector<Param*>& buffers) {
  std::vector<std::vector<double>> out;
  for (const Param* b : buffers) out.emplace_back(b->value.data().begin(), b->value.data().end());
  return out;
}

void restore(const std::vector<Param*>& buffers, const std::vector<std::vector<double>>& saved) {
  for (std::size_t i = 0; i < buffers.size(); ++i) {
    std::copy(saved[i].begin(), saved[i].end(), buffers[i]->value.data().begin());
  }
}

}  // namespace

TrainingScene augment_scene(const AugCode& g, const TrainingScene& s) {
  return {apply(g, s.tsdf), apply(g, s.priors), apply(g, s.labels), apply(g, s.vis)};
}

double batch_loss(const Tensor5& probs, const std::vector<const LabelGrid*>& labels,
                  const std::vector<const SelectionMask*>& masks, const ClassTable& table,
                  Tensor5* grad_logits) {
  const Shape5& s = probs.shape();
  if (s.c != table.size()) throw ValidationError("loss: class count mismatch");
  if (labels.size() != static_cast<std::size_t>(s.n) || masks.size() != labels.size()) {
    throw ValidationError("loss: batch size mismatch");
  }
  const std::size_t sp = s.spatial();
  const double weight_sum = table.weight_sum();
  std::size_t selected = 0;
  for (int n = 0; n < s.n; ++n) {
    if (labels[n]->voxels() != sp || masks[n]->bits.voxels() != sp) {
      throw ValidationError("loss: grid size mismatch");
    }
    selected += masks[n]->count();
  }
  if (selected == 0) throw ValidationError("empty selection mask");
  if (grad_logits) *grad_logits = Tensor5(s);

  double total = 0.0;
  const double inv_count = 1.0 / static_cast<double>(selected);
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t v = 0; v < sp; ++v) {
      if (!masks[n]->selected(v)) continue;
      const std::uint8_t t = labels[n]->data()[v];
      if (t >= s.c) throw ValidationError("loss: selected voxel has no valid label");
      const double w = table.weights[t] / weight_sum;
      const double p = std::max(probs.plane(n, t)[v], kMinLogProbability);
      total += -w * std::log(p);
      if (grad_logits) {
        for (int c = 0; c < s.c; ++c) {
          grad_logits->plane(n, c)[v] = w * inv_count * (probs.plane(n, c)[v] - (c == t ? 1.0 : 0.0));
        }
      }
    }
  }
  return total * inv_count;
}

void sgd_step(const std::vector<Param*>& params, double lr, double weight_decay) {
  for (Param* p : params) {
    auto value = p->value.data();
    auto grad = p->grad.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      value[i] -= lr * (grad[i] + weight_decay * value[i]);
    }
  }
}

TrainReport train(MiniSpawn& net, const std::vector<TrainingScene>& scenes,
                  const TrainOptions& opts, const ClassTable& table, const StepCallback& on_step) {
  if (scenes.empty()) throw UsageError("no training scenes");
  if (opts.steps < 1 || opts.batch_size < 1) throw UsageError("steps and batch size must be >= 1");
  std::mt19937_64 rng(opts.seed);
  const auto params = net.params();
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  TrainReport report;
  for (long step = 0; step < opts.steps; ++step) {
    std::vector<TrainingScene> batch;
    for (int b = 0; b < opts.batch_size && b < static_cast<int>(scenes.size()); ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(scenes[order[cursor++]]);
    }
    if (opts.augment) {
      const AugCode g = sample(rng);
      for (auto& s : batch) s = augment_scene(g, s);
    }
    std::vector<SelectionMask> masks;
    std::vector<const FloatGrid*> tsdf, priors;
    std::vector<const LabelGrid*> labels;
    for (const auto& s : batch) {
      masks.push_back(balance_sample(s.labels, s.vis, rng));
      tsdf.push_back(&s.tsdf);
      priors.push_back(&s.priors);
      labels.push_back(&s.labels);
    }
    std::vector<const SelectionMask*> mask_ptrs;
    for (const auto& m : masks) mask_ptrs.push_back(&m);
    std::size_t selected = 0;
    for (const auto& m : masks) selected += m.count();
    const double lr = one_cycle_lr(step, opts.steps, opts.base_lr, opts.schedule);
    if (selected == 0) {
      report.step_loss.push_back(0.0);
      report.step_lr.push_back(lr);
      continue;
    }

    const MiniSpawnOutput out = net.forward(stack_grids(tsdf), stack_grids(priors), Mode::kTrain);
    Tensor5 grad;
    const double loss = batch_loss(out.probs, labels, mask_ptrs, table, &grad);
    net.zero_grad();
    net.backward(grad);
    sgd_step(params, lr, opts.weight_decay);

    report.step_loss.push_back(loss);
    report.step_lr.push_back(lr);
    if (on_step) on_step(step, loss, lr);
  }
  return report;
}

double evaluate_loss(MiniSpawn& net, const std::vector<TrainingScene>& scenes,
                     const std::vector<SelectionMask>& masks, const ClassTable& table, Mode mode) {
  if (scenes.size() != masks.size() || scenes.empty()) {
    throw UsageError("evaluate_loss needs one mask per scene");
  }
  const auto buffers = net.buffers();
  const auto saved = snapshot(buffers);
  std::vector<const FloatGrid*> tsdf, priors;
  std::vector<const LabelGrid*> labels;
  std::vector<const SelectionMask*> mask_ptrs;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    tsdf.push_back(&scenes[i].tsdf);
    priors.push_back(&scenes[i].priors);
    labels.push_back(&scenes[i].labels);
    mask_ptrs.push_back(&masks[i]);
  }
  const MiniSpawnOutput out = net.forward(stack_grids(tsdf), stack_grids(priors), mode);
  restore(buffers, saved);
  return batch_loss(out.probs, labels, mask_ptrs, table, nullptr);
}

FloatGrid predict(MiniSpawn& net, const FloatGrid& tsdf, const FloatGrid& priors) {
  const MiniSpawnOutput out = net.forward(stack_grids({&tsdf}), stack_grids({&priors}), Mode::kEval);
  return tensor_to_grid(out.probs, 0, priors.spec());
}

Predictor make_predictor(MiniSpawn& net) {
  return [&net](const SceneInputs& in) { return predict(net, in.tsdf, in.priors); };
}

LabelGrid argmax_labels(const FloatGrid& probs) {
  LabelGrid out(probs.spec(), 1, 0);
  const std::size_t voxels = probs.voxels();
  for (std::size_t v = 0; v < voxels; ++v) {
    int best = 0;
    float best_p = probs.data()[v];
    for (int c = 1; c < probs.channels(); ++c) {
      const float p = probs.data()[c * voxels + v];
      if (p > best_p) {
        best_p = p;
        best = c;
      }
    }
    out.data()[v] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace sscvox::net
