#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sscvox/metrics.hpp"

namespace sscvox {
namespace {

TEST(Completion, Example) {
  // TP 2, FP 1, FN 1, TN 1 on occluded voxels.
  const GridSpec s{{1, 1, 6}, 0.1, Vec3::Zero()};
  LabelGrid gt(s, 1, 0), pred(s, 1, 0);
  VisibilityGrid vis(s, 1, Visibility::kOccluded);
  const int g[6] = {3, 5, 0, 7, 0, 0};
  const int p[6] = {3, 9, 2, 0, 0, 4};
  for (int z = 0; z < 6; ++z) gt.at(0, 0, z) = g[z], pred.at(0, 0, z) = p[z];
  vis.at(0, 0, 5) = Visibility::kSurface;  // not part of the completion set
  const CompletionMetrics m = completion_metrics(pred, gt, vis);
  EXPECT_EQ(m.counts.tp, 2u);
  EXPECT_EQ(m.counts.fp, 1u);
  EXPECT_EQ(m.counts.fn, 1u);
  EXPECT_EQ(m.counts.evaluated, 5u);
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.iou, 0.5);
}

TEST(Completion, ZeroDenominatorsReportZero) {
  const CompletionMetrics m = completion_from_counts({});
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.iou, 0.0);
  const GridSpec s{{2, 1, 1}, 0.1, Vec3::Zero()};
  EXPECT_THROW(completion_metrics(LabelGrid(s, 1, 0), LabelGrid(s, 1, 0),
                                  VisibilityGrid(s, 1, Visibility::kSurface)),
               ValidationError);
}

TEST(Ssc, HalfMislabeledClassHasIouHalf) {
  const GridSpec s{{1, 1, 4}, 0.1, Vec3::Zero()};
  const VisibilityGrid vis(s, 1, Visibility::kSurface);
  const ClassTable t = default_class_table();

  // Four chair voxels, two predicted empty.
  const LabelGrid gt(s, 1, 5);
  LabelGrid pred = gt;
  pred.at(0, 0, 0) = 0;
  pred.at(0, 0, 1) = 0;
  const SscMetrics m = ssc_metrics(pred, gt, vis, t);
  ASSERT_TRUE(m.iou[5]);
  EXPECT_DOUBLE_EQ(*m.iou[5], 0.5);
  EXPECT_EQ(m.classes_in_mean, 1);
  EXPECT_DOUBLE_EQ(m.miou, 0.5);

  // Two chair and two table voxels, all predicted table.
  LabelGrid gt2(s, 1, 5);
  gt2.at(0, 0, 2) = 8;
  gt2.at(0, 0, 3) = 8;
  const LabelGrid pred2(s, 1, 8);
  const SscMetrics m2 = ssc_metrics(pred2, gt2, vis, t);
  EXPECT_DOUBLE_EQ(*m2.iou[5], 0.0);
  EXPECT_DOUBLE_EQ(*m2.iou[8], 0.5);
  EXPECT_DOUBLE_EQ(m2.miou, 0.25);
  EXPECT_FALSE(m2.iou[1]);
}

TEST(Ssc, VisibleEmptyOutsideAndUnknownAreIgnored) {
  const GridSpec s{{1, 1, 5}, 0.1, Vec3::Zero()};
  LabelGrid gt(s, 1, 3), pred(s, 1, 3);
  VisibilityGrid vis(s, 1, Visibility::kSurface);
  vis.at(0, 0, 1) = Visibility::kVisibleEmpty;
  vis.at(0, 0, 2) = Visibility::kOutsideView;
  gt.at(0, 0, 3) = 255;
  for (int z = 1; z < 4; ++z) pred.at(0, 0, z) = 7;
  const SscMetrics m = ssc_metrics(pred, gt, vis, default_class_table());
  EXPECT_EQ(m.counts.evaluated, 2u);
  EXPECT_DOUBLE_EQ(*m.iou[3], 1.0);
  EXPECT_FALSE(m.iou[7]);
}

TEST(Metrics, MatchBruteForceCounts) {
  const GridSpec s{{16, 16, 16}, 0.1, Vec3::Zero()};
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    std::mt19937_64 rng(seed);
    const LabelGrid gt = oracle::random_labels(s, rng, 11, 0.05);
    const LabelGrid pred = oracle::random_labels(s, rng, 11, 0.02);
    const VisibilityGrid vis = oracle::random_visibility(s, rng);
    const oracle::Confusion c = oracle::count_confusion(pred, gt, vis);
    const SscMetrics m = ssc_metrics(pred, gt, vis, default_class_table());
    for (int k = 1; k < kNumClasses; ++k) {
      EXPECT_EQ(m.counts.tp[k], c.tp[k]) << k;
      EXPECT_EQ(m.counts.fp[k], c.fp[k]) << k;
      EXPECT_EQ(m.counts.fn[k], c.fn[k]) << k;
      const double expect = double(c.tp[k]) / double(c.tp[k] + c.fp[k] + c.fn[k]);
      EXPECT_NEAR(*m.iou[k], expect, 1e-15);
    }
    const CompletionMetrics cm = completion_metrics(pred, gt, vis);
    EXPECT_EQ(cm.counts.tp, c.occ_tp);
    EXPECT_EQ(cm.counts.fp, c.occ_fp);
    EXPECT_EQ(cm.counts.fn, c.occ_fn);
    EXPECT_LE(cm.iou, std::min(cm.precision, cm.recall) + 1e-15);
  }
}

TEST(Metrics, InvariantUnderAugmentation) {
  const GridSpec s{{8, 4, 8}, 0.1, Vec3::Zero()};
  std::mt19937_64 rng(21);
  const LabelGrid gt = oracle::random_labels(s, rng, 11, 0.05);
  const LabelGrid pred = oracle::random_labels(s, rng, 11);
  const VisibilityGrid vis = oracle::random_visibility(s, rng);
  const ClassTable t = default_class_table();
  const SscMetrics base = ssc_metrics(pred, gt, vis, t);
  const CompletionMetrics cbase = completion_metrics(pred, gt, vis);
  for (const AugCode& g : all_codes()) {
    const SscMetrics m = ssc_metrics(apply(g, pred), apply(g, gt), apply(g, vis), t);
    EXPECT_EQ(m.counts.tp, base.counts.tp);
    EXPECT_EQ(m.counts.fp, base.counts.fp);
    EXPECT_DOUBLE_EQ(m.miou, base.miou);
    EXPECT_DOUBLE_EQ(completion_metrics(apply(g, pred), apply(g, gt), apply(g, vis)).iou, cbase.iou);
  }
}

TEST(Metrics, AccumulatorDatasetAndSceneMeans) {
  const GridSpec s{{1, 1, 2}, 0.1, Vec3::Zero()};
  const ClassTable t = default_class_table();
  const VisibilityGrid vis(s, 1, Visibility::kOccluded);
  MetricsAccumulator acc;
  // Scene A: class 3 perfect on both voxels. Scene B: one of two wrong.
  LabelGrid a(s, 1, 3);
  acc.add(ssc_metrics(a, a, vis, t), completion_metrics(a, a, vis));
  LabelGrid bgt(s, 1, 3), bpred(s, 1, 3);
  bpred.at(0, 0, 1) = 0;
  acc.add(ssc_metrics(bpred, bgt, vis, t), completion_metrics(bpred, bgt, vis));
  EXPECT_EQ(acc.scenes(), 2u);
  EXPECT_DOUBLE_EQ(acc.scene_mean_miou(), 0.75);
  EXPECT_DOUBLE_EQ(*acc.dataset_ssc().iou[3], 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(acc.dataset_completion().iou, 0.75);
  EXPECT_DOUBLE_EQ(acc.scene_mean_completion_iou(), 0.75);
}

}  // namespace
}  // namespace sscvox
