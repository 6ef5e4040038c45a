#pragma once

// Scene-completion (occupancy on occluded voxels) and semantic-scene-completion
// (per-class IoU on surface and occluded voxels) scores.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sscvox/core.hpp"

namespace sscvox {

struct CompletionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t evaluated = 0;

  CompletionCounts& operator+=(const CompletionCounts& o);
};

struct CompletionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double iou = 0.0;
  CompletionCounts counts;
};

// Ratios with a zero denominator are reported as 0.
CompletionMetrics completion_from_counts(const CompletionCounts& counts);

// Scored on occluded voxels with known ground truth; positive = occupied.
// A prediction voxel is occupied when its value is neither 0 nor 255.
CompletionMetrics completion_metrics(const LabelGrid& pred_occupancy, const LabelGrid& gt_labels,
                                     const VisibilityGrid& vis);

struct ClassCounts {
  std::array<std::uint64_t, kNumClasses> tp{};
  std::array<std::uint64_t, kNumClasses> fp{};
  std::array<std::uint64_t, kNumClasses> fn{};
  std::uint64_t evaluated = 0;

  ClassCounts& operator+=(const ClassCounts& o);
};

struct SscMetrics {
  // Index 0 (empty) is never scored; classes with an empty union are nullopt.
  std::array<std::optional<double>, kNumClasses> iou{};
  double miou = 0.0;
  int classes_in_mean = 0;
  ClassCounts counts;
};

SscMetrics ssc_from_counts(const ClassCounts& counts);

// Evaluation set: surface or occluded voxels whose ground truth is not 255.
SscMetrics ssc_metrics(const LabelGrid& pred_labels, const LabelGrid& gt_labels,
                       const VisibilityGrid& vis, const ClassTable& table);

// Accumulates per-scene results into dataset-level (global counts) and
// scene-averaged figures.
class MetricsAccumulator {
 public:
  void add(const SscMetrics& ssc, const CompletionMetrics& completion);

  SscMetrics dataset_ssc() const { return ssc_from_counts(class_counts_); }
  CompletionMetrics dataset_completion() const { return completion_from_counts(completion_counts_); }
  double scene_mean_miou() const;
  double scene_mean_completion_iou() const;
  std::size_t scenes() const { return scene_miou_.size(); }

 private:
  ClassCounts class_counts_;
  CompletionCounts completion_counts_;
  std::vector<double> scene_miou_;
  std::vector<double> scene_completion_iou_;
};

}  // namespace sscvox
