#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sscvox/training.hpp"

namespace sscvox {
namespace {

// A 1x1xN strip: `occupied` labelled voxels, then occluded empties, then
// visible empties, then outside-view voxels.
struct Strip {
  LabelGrid labels;
  VisibilityGrid vis;
};

Strip strip(int occupied, int occluded_empty, int visible_empty, int outside = 0) {
  const int n = occupied + occluded_empty + visible_empty + outside;
  const GridSpec s{{1, 1, n}, 0.1, Vec3::Zero()};
  Strip r{LabelGrid(s, 1, 0), VisibilityGrid(s, 1, Visibility::kOccluded)};
  int z = 0;
  for (int i = 0; i < occupied; ++i, ++z) {
    r.labels.at(0, 0, z) = static_cast<std::uint8_t>(1 + i % 11);
    r.vis.at(0, 0, z) = i % 2 ? Visibility::kSurface : Visibility::kOccluded;
  }
  z += occluded_empty;
  for (int i = 0; i < visible_empty; ++i, ++z) r.vis.at(0, 0, z) = Visibility::kVisibleEmpty;
  for (int i = 0; i < outside; ++i, ++z) {
    r.vis.at(0, 0, z) = Visibility::kOutsideView;
    r.labels.at(0, 0, z) = 3;
  }
  return r;
}

TEST(Balance, Examples) {
  std::mt19937_64 rng(1);
  Strip a = strip(10, 50, 30);
  BalanceStats st;
  SelectionMask m = balance_sample(a.labels, a.vis, rng, &st);
  EXPECT_EQ(m.count(), 20u);
  EXPECT_EQ(st.occupied, 10u);
  EXPECT_EQ(st.occluded_empty_candidates, 50u);
  EXPECT_EQ(st.sampled_empty, 10u);
  for (int z = 0; z < 10; ++z) EXPECT_TRUE(m.bits.at(0, 0, z));
  for (int z = 60; z < 90; ++z) EXPECT_FALSE(m.bits.at(0, 0, z));

  Strip b = strip(0, 20, 5);
  EXPECT_EQ(balance_sample(b.labels, b.vis, rng).count(), 0u);

  Strip c = strip(10, 4, 3);
  EXPECT_EQ(balance_sample(c.labels, c.vis, rng).count(), 14u);
}

TEST(Balance, OutsideViewAndUnknownAreNeverSelected) {
  std::mt19937_64 rng(2);
  Strip s = strip(5, 10, 2, 6);
  s.labels.at(0, 0, 6) = 255;  // an occluded voxel of unknown label
  const SelectionMask m = balance_sample(s.labels, s.vis, rng);
  EXPECT_FALSE(m.bits.at(0, 0, 6));
  for (int z = 17; z < 23; ++z) EXPECT_FALSE(m.bits.at(0, 0, z));
  EXPECT_EQ(m.count(), 10u);
}

TEST(Balance, InvariantsOverRandomScenes) {
  const GridSpec s{{12, 8, 12}, 0.1, Vec3::Zero()};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 gen(seed);
    const LabelGrid labels = oracle::random_labels(s, gen, seed % 3 ? 3 : 11, 0.05);
    LabelGrid sparse = labels;
    // Mostly-empty scenes exercise the other branch of the minimum.
    std::bernoulli_distribution keep(seed % 2 ? 1.0 : 0.1);
    for (auto& v : sparse.data())
      if (v != 0 && v != 255 && !keep(gen)) v = 0;
    const VisibilityGrid vis = oracle::random_visibility(s, gen);
    std::mt19937_64 rng(seed);
    BalanceStats st;
    const SelectionMask m = balance_sample(sparse, vis, rng, &st);
    std::size_t occupied = 0, candidates = 0, empties = 0;
    for (std::size_t i = 0; i < sparse.size(); ++i) {
      const Visibility v = vis.data()[i];
      const std::uint8_t l = sparse.data()[i];
      const bool counted = v == Visibility::kSurface || v == Visibility::kOccluded;
      if (counted && l != 0 && l != 255) {
        ++occupied;
        ASSERT_TRUE(m.selected(i));
      }
      if (v == Visibility::kOccluded && l == 0) ++candidates;
      if (m.selected(i)) {
        ASSERT_TRUE(counted);
        ASSERT_NE(l, 255);
        if (l == 0) {
          ASSERT_EQ(v, Visibility::kOccluded);
          ++empties;
        }
      }
    }
    EXPECT_EQ(st.occupied, occupied);
    EXPECT_EQ(st.occluded_empty_candidates, candidates);
    EXPECT_EQ(empties, std::min(occupied, candidates));
    EXPECT_EQ(m.count(), occupied + empties);
  }
}

TEST(Balance, SamplesEmptiesUniformly) {
  Strip s = strip(5, 20, 0);
  std::vector<int> hits(25, 0);
  std::mt19937_64 rng(9);
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    const SelectionMask m = balance_sample(s.labels, s.vis, rng);
    for (int z = 5; z < 25; ++z) hits[z] += m.bits.at(0, 0, z);
  }
  // Each candidate is drawn with probability 5/20.
  for (int z = 5; z < 25; ++z) EXPECT_NEAR(hits[z] / double(trials), 0.25, 0.04) << z;
}

TEST(Balance, ReproducibleForSeed) {
  Strip s = strip(7, 40, 3);
  std::mt19937_64 a(17), b(17);
  EXPECT_EQ(balance_sample(s.labels, s.vis, a).bits, balance_sample(s.labels, s.vis, b).bits);
}

FloatGrid one_voxel_probs(int label, float p) {
  FloatGrid g(GridSpec{{1, 1, 1}, 0.1, Vec3::Zero()}, kNumClasses, (1.0f - p) / 11.0f);
  g.at(label, 0, 0, 0) = p;
  return g;
}

SelectionMask all_selected(const GridSpec& s) { return SelectionMask{LabelGrid(s, 1, 1)}; }

TEST(Loss, Examples) {
  const ClassTable t = default_class_table();
  const GridSpec s{{1, 1, 1}, 0.1, Vec3::Zero()};
  LabelGrid wall(s, 1, 3), chair(s, 1, 5);
  EXPECT_NEAR(weighted_ce_loss(one_voxel_probs(3, 0.5f), wall, all_selected(s), t), 0.04332, 1e-5);
  EXPECT_NEAR(weighted_ce_loss(one_voxel_probs(5, 0.5f), chair, all_selected(s), t), 0.08664, 1e-5);
  EXPECT_NEAR(weighted_ce_loss(one_voxel_probs(5, 1.0f), chair, all_selected(s), t), 0.0, 1e-12);
}

TEST(Loss, UniformPredictionHasClosedForm) {
  const ClassTable t = default_class_table();
  const GridSpec s{{3, 2, 3}, 0.1, Vec3::Zero()};
  const FloatGrid uniform(s, kNumClasses, 1.0f / 12.0f);
  std::mt19937_64 rng(4);
  const LabelGrid labels = oracle::random_labels(s, rng, 11);
  double w = 0.0;
  for (std::uint8_t l : labels.data()) w += t.weights[l];
  const double expected = std::log(12.0) * (w / labels.size()) / 16.0;
  EXPECT_NEAR(weighted_ce_loss(uniform, labels, all_selected(s), t), expected, 1e-6);
}

TEST(Loss, MatchesPerVoxelOracle) {
  const ClassTable t = default_class_table();
  const GridSpec s{{6, 4, 6}, 0.1, Vec3::Zero()};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    const FloatGrid probs = oracle::random_probs(s, kNumClasses, rng);
    const LabelGrid labels = oracle::random_labels(s, rng, 11);
    const VisibilityGrid vis = oracle::random_visibility(s, rng);
    const SelectionMask mask = balance_sample(labels, vis, rng);
    EXPECT_NEAR(weighted_ce_loss(probs, labels, mask, t),
                oracle::loss_per_voxel(probs, labels, mask, t), 1e-9);
  }
}

TEST(Loss, InvariantUnderVoxelPermutation) {
  const ClassTable t = default_class_table();
  const GridSpec s{{5, 3, 5}, 0.1, Vec3::Zero()};
  std::mt19937_64 rng(12);
  const FloatGrid probs = oracle::random_probs(s, kNumClasses, rng);
  const LabelGrid labels = oracle::random_labels(s, rng, 11);
  const SelectionMask mask = balance_sample(labels, oracle::random_visibility(s, rng), rng);
  const double base = weighted_ce_loss(probs, labels, mask, t);
  for (const AugCode& g : all_codes()) {
    const SelectionMask moved{apply(g, mask.bits)};
    EXPECT_NEAR(weighted_ce_loss(apply(g, probs), apply(g, labels), moved, t), base, 1e-12);
  }
}

TEST(Loss, Errors) {
  const ClassTable t = default_class_table();
  const GridSpec s{{2, 2, 2}, 0.1, Vec3::Zero()};
  const FloatGrid uniform(s, kNumClasses, 1.0f / 12.0f);
  const LabelGrid labels(s, 1, 1);
  EXPECT_THROW(weighted_ce_loss(uniform, labels, SelectionMask{LabelGrid(s, 1, 0)}, t),
               ValidationError);
  EXPECT_THROW(weighted_ce_loss(FloatGrid(s, 3, 1.0f / 3), labels, all_selected(s), t),
               ValidationError);
  EXPECT_THROW(weighted_ce_loss(FloatGrid(s, kNumClasses, 0.5f), labels, all_selected(s), t),
               ValidationError);
}

TEST(OneCycle, Landmarks) {
  const double base = 4e-4;
  const long total = 1000;
  const long peak = one_cycle_peak_step(total);
  EXPECT_EQ(peak, 299);
  EXPECT_DOUBLE_EQ(one_cycle_lr(0, total, base), base);
  EXPECT_NEAR(one_cycle_lr(peak, total, base), 25 * base, 1e-15);
  EXPECT_NEAR(one_cycle_lr(total - 1, total, base), base * 25 * 1e-4, 1e-15);
}

TEST(OneCycle, ContinuousWithUniqueMaximum) {
  for (long total : {10L, 200L, 1001L}) {
    const double base = 1e-2;
    const long peak = one_cycle_peak_step(total);
    double prev = one_cycle_lr(0, total, base);
    for (long s = 1; s < total; ++s) {
      const double lr = one_cycle_lr(s, total, base);
      if (s <= peak) EXPECT_GT(lr, prev) << total << " " << s;
      else EXPECT_LT(lr, prev) << total << " " << s;
      // Cosine segments: one step never moves more than pi/2 of a segment's range per step.
      const long seg = s <= peak ? peak : total - 1 - peak;
      EXPECT_LE(std::abs(lr - prev), 25 * base * 1.5708 / seg + 1e-15);
      prev = lr;
    }
  }
}

TEST(OneCycle, RangeErrors) {
  EXPECT_THROW(one_cycle_lr(-1, 10, 1e-3), UsageError);
  EXPECT_THROW(one_cycle_lr(10, 10, 1e-3), UsageError);
  EXPECT_THROW(one_cycle_peak_step(0), UsageError);
  EXPECT_DOUBLE_EQ(one_cycle_lr(0, 1, 1e-3), 25e-3);
}

}  // namespace
}  // namespace sscvox
