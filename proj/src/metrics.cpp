#include "sscvox/metrics.hpp"

#include <numeric>

namespace sscvox {
namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_shapes(const LabelGrid& pred, const LabelGrid& gt, const VisibilityGrid& vis) {
  if (pred.channels() != 1 || gt.channels() != 1 || vis.channels() != 1 ||
      pred.spec().dims != gt.spec().dims || gt.spec().dims != vis.spec().dims) {
    throw ValidationError("prediction, ground truth and visibility must share one grid");
  }
}

}  // namespace

CompletionCounts& CompletionCounts::operator+=(const CompletionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  evaluated += o.evaluated;
  return *this;
}

ClassCounts& ClassCounts::operator+=(const ClassCounts& o) {
  for (int c = 0; c < kNumClasses; ++c) {
    tp[c] += o.tp[c];
    fp[c] += o.fp[c];
    fn[c] += o.fn[c];
  }
  evaluated += o.evaluated;
  return *this;
}

CompletionMetrics completion_from_counts(const CompletionCounts& k) {
  CompletionMetrics m;
  m.counts = k;
  m.precision = ratio(k.tp, k.tp + k.fp);
  m.recall = ratio(k.tp, k.tp + k.fn);
  m.iou = ratio(k.tp, k.tp + k.fp + k.fn);
  return m;
}

CompletionMetrics completion_metrics(const LabelGrid& pred, const LabelGrid& gt,
                                     const VisibilityGrid& vis) {
  check_shapes(pred, gt, vis);
  CompletionCounts k;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (vis.data()[i] != Visibility::kOccluded || gt.data()[i] == kUnknownLabel) continue;
    ++k.evaluated;
    const bool p = is_occupied_label(pred.data()[i]);
    const bool g = is_occupied_label(gt.data()[i]);
    if (p && g) ++k.tp;
    else if (p) ++k.fp;
    else if (g) ++k.fn;
  }
  if (k.evaluated == 0) throw ValidationError("no occluded voxels to evaluate");
  return completion_from_counts(k);
}

SscMetrics ssc_from_counts(const ClassCounts& k) {
  SscMetrics m;
  m.counts = k;
  double sum = 0.0;
  for (int c = 1; c < kNumClasses; ++c) {
    const std::uint64_t uni = k.tp[c] + k.fp[c] + k.fn[c];
    if (uni == 0) continue;
    m.iou[c] = ratio(k.tp[c], uni);
    sum += *m.iou[c];
    ++m.classes_in_mean;
  }
  m.miou = m.classes_in_mean ? sum / m.classes_in_mean : 0.0;
  return m;
}

SscMetrics ssc_metrics(const LabelGrid& pred, const LabelGrid& gt, const VisibilityGrid& vis,
                       const ClassTable& table) {
  check_shapes(pred, gt, vis);
  if (table.size() != kNumClasses) throw ValidationError("class table must have 12 classes");
  ClassCounts k;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const Visibility s = vis.data()[i];
    if (s != Visibility::kSurface && s != Visibility::kOccluded) continue;
    const std::uint8_t g = gt.data()[i];
    if (g == kUnknownLabel) continue;
    if (g >= kNumClasses) throw ValidationError("ground-truth label out of range");
    const std::uint8_t p = pred.data()[i];
    ++k.evaluated;
    if (p == g) {
      ++k.tp[g];
      continue;
    }
    ++k.fn[g];
    if (p < kNumClasses) ++k.fp[p];
  }
  if (k.evaluated == 0) throw ValidationError("empty evaluation set");
  return ssc_from_counts(k);
}

void MetricsAccumulator::add(const SscMetrics& ssc, const CompletionMetrics& completion) {
  class_counts_ += ssc.counts;
  completion_counts_ += completion.counts;
  scene_miou_.push_back(ssc.miou);
  scene_completion_iou_.push_back(completion.iou);
}

double MetricsAccumulator::scene_mean_miou() const {
  if (scene_miou_.empty()) return 0.0;
  return std::accumulate(scene_miou_.begin(), scene_miou_.end(), 0.0) / scene_miou_.size();
}

double MetricsAccumulator::scene_mean_completion_iou() const {
  if (scene_completion_iou_.empty()) return 0.0;
  return std::accumulate(scene_completion_iou_.begin(), scene_completion_iou_.end(), 0.0) /
         scene_completion_iou_.size();
}

}  // namespace sscvox
