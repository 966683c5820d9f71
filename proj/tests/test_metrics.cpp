#include "segc/metrics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <numeric>

namespace segc {
namespace {

using testing::random_mask;

BinaryMask mask2(std::initializer_list<int> v) {
  BinaryMask::Storage s(2, 2);
  auto it = v.begin();
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) s(y, x) = static_cast<std::uint8_t>(*it++);
  return BinaryMask(s);
}

// Same spatial permutation applied to a mask: pixel i moves to perm[i].
BinaryMask permute(const BinaryMask& m, const std::vector<Eigen::Index>& perm) {
  BinaryMask out(m.height(), m.width());
  const Eigen::Index w = m.width();
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(perm.size()); ++i)
    out.set(perm[i] / w, perm[i] % w, m(i / w, i % w) != 0);
  return out;
}

TEST(Threshold, Examples) {
  EXPECT_EQ(threshold(Tensor::from({1, 2}, {0.4, 0.6})), BinaryMask(BinaryMask::Storage{{0, 1}}));
  const BinaryMask half = threshold(Tensor::full({2, 2}, 0.5), 0.5);
  EXPECT_EQ(half.count(), 0);
  EXPECT_EQ(threshold(Tensor::zeros({1, 3, 3})).count(), 0);
}

TEST(Threshold, RangeChecks) {
  EXPECT_THROW(threshold(Tensor::full({2, 2}, 0.5), 0.0), std::invalid_argument);
  EXPECT_THROW(threshold(Tensor::full({2, 2}, 0.5), 1.0), std::invalid_argument);
  EXPECT_THROW(threshold(Tensor::full({2, 2}, 1.5)), std::domain_error);
  EXPECT_THROW(threshold(Tensor::full({4}, 0.5)), std::invalid_argument);
}

TEST(BinaryMaskType, RejectsNonBinary) {
  EXPECT_THROW(BinaryMask::from_tensor(Tensor::from({1, 2}, {0.0, 0.5})), std::invalid_argument);
  EXPECT_THROW(BinaryMask(BinaryMask::Storage{{0, 2}}), std::invalid_argument);
  const BinaryMask m = BinaryMask::from_tensor(Tensor::from({1, 1, 2}, {1.0, 0.0}));
  EXPECT_EQ(m.count(), 1);
  EXPECT_EQ(BinaryMask::from_tensor(m.to_tensor()), m);
}

TEST(Iou, Examples) {
  const BinaryMask a = mask2({1, 1, 0, 0});
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, mask2({0, 0, 1, 1})), 0.0);

  BinaryMask y(4, 4), p(4, 4);
  for (int x = 0; x < 4; ++x) y.set(0, x, true);
  for (int x = 2; x < 4; ++x) p.set(0, x, true);
  for (int x = 0; x < 2; ++x) p.set(1, x, true);
  EXPECT_DOUBLE_EQ(iou(y, p), 1.0 / 3.0);
}

TEST(Iou, EmptyPairIsOne) { EXPECT_EQ(iou(BinaryMask(3, 3), BinaryMask(3, 3)), 1.0); }

TEST(Iou, ShapeMismatchThrows) { EXPECT_THROW(iou(BinaryMask(2, 2), BinaryMask(2, 3)), std::invalid_argument); }

TEST(Inconsistency, Examples) {
  const BinaryMask y = mask2({1, 0, 0, 0});
  const BinaryMask ahat = mask2({1, 1, 0, 0});
  EXPECT_EQ(binary_inconsistency(y, y, y, y), 0.0);
  EXPECT_EQ(binary_inconsistency(y, y, y, ahat), 0.5);
  EXPECT_EQ(binary_consistency(y, y, y, ahat), 0.5);
  const BinaryMask z(2, 2);
  EXPECT_EQ(binary_inconsistency(z, z, z, z), 0.0);
  EXPECT_EQ(binary_consistency(z, z, z, z), 1.0);
  EXPECT_EQ(binary_consistency(y, ahat, y, ahat), 1.0);
}

TEST(Inconsistency, ShapeMismatchThrows) {
  const BinaryMask a(2, 2), b(3, 2);
  EXPECT_THROW(binary_inconsistency(a, a, a, b), std::invalid_argument);
  EXPECT_THROW(binary_consistency(b, a, a, a), std::invalid_argument);
}

TEST(BorderArtifact, Examples) {
  EXPECT_EQ(border_artifact_rate(BinaryMask(4, 4), 1), 0.0);
  BinaryMask full(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) full.set(y, x, true);
  EXPECT_EQ(border_artifact_rate(full, 1), 1.0);
  BinaryMask center(4, 4);
  for (int y = 1; y < 3; ++y)
    for (int x = 1; x < 3; ++x) center.set(y, x, true);
  EXPECT_EQ(border_artifact_rate(center, 1), 0.0);
  // One corner pixel out of the 12 border pixels.
  BinaryMask corner(4, 4);
  corner.set(0, 0, true);
  EXPECT_DOUBLE_EQ(border_artifact_rate(corner, 1), 1.0 / 12.0);
}

TEST(BorderArtifact, MarginRange) {
  EXPECT_THROW(border_artifact_rate(BinaryMask(4, 4), 0), std::invalid_argument);
  EXPECT_THROW(border_artifact_rate(BinaryMask(4, 4), 2), std::invalid_argument);
  EXPECT_NO_THROW(border_artifact_rate(BinaryMask(6, 6), 2));
}

TEST(MetricsProperty, ComplementIsExact) {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index h = 1 + trial % 6, w = 1 + (trial / 6) % 6;
    const double p = uniform(rng, 0.0, 1.0);
    const BinaryMask y = random_mask(rng, h, w, p), a = random_mask(rng, h, w, p);
    const BinaryMask yh = random_mask(rng, h, w, p), ah = random_mask(rng, h, w, p);
    ASSERT_EQ(binary_consistency(y, a, yh, ah) + binary_inconsistency(y, a, yh, ah), 1.0);
  }
}

TEST(MetricsProperty, IouSymmetricAndReflexive) {
  Rng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const double p = uniform(rng, 0.0, 0.6);
    const BinaryMask a = random_mask(rng, 5, 7, p), b = random_mask(rng, 5, 7, p);
    ASSERT_EQ(iou(a, b), iou(b, a));
    ASSERT_EQ(iou(a, a), 1.0);
    ASSERT_GE(iou(a, b), 0.0);
    ASSERT_LE(iou(a, b), 1.0);
  }
}

TEST(MetricsProperty, InvariantUnderSharedPermutation) {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const BinaryMask y = random_mask(rng, 4, 5), a = random_mask(rng, 4, 5);
    const BinaryMask yh = random_mask(rng, 4, 5), ah = random_mask(rng, 4, 5);
    std::vector<Eigen::Index> perm(20);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    for (std::size_t i = perm.size() - 1; i > 0; --i)
      std::swap(perm[i], perm[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(i)))]);
    ASSERT_EQ(iou(y, yh), iou(permute(y, perm), permute(yh, perm)));
    ASSERT_EQ(binary_inconsistency(y, a, yh, ah),
              binary_inconsistency(permute(y, perm), permute(a, perm), permute(yh, perm), permute(ah, perm)));
  }
}

}  // namespace
}  // namespace segc
