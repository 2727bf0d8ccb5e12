#include <gtest/gtest.h>

#include <random>

#include "segstab/error.hpp"
#include "segstab/types.hpp"
#include "testing.hpp"

namespace segstab {
namespace {

using testing::mask_from;
using testing::random_mask;

TEST(OneHotTest, AllBackgroundMask) {
  const LabelMask mask(2, 2, 2);
  const SoftMaskVolume v = one_hot(mask);
  ASSERT_EQ(v.frames(), 1);
  ASSERT_EQ(v.classes(), 2);
  for (float x : v.plane(0, 0)) EXPECT_EQ(x, 1.0f);
  for (float x : v.plane(0, 1)) EXPECT_EQ(x, 0.0f);
}

TEST(OneHotTest, CheckerMaskClassPlane) {
  const LabelMask mask(2, 2, 2, {0, 1, 1, 0});
  const SoftMaskVolume v = one_hot(mask);
  const std::vector<float> expected{0, 1, 1, 0};
  EXPECT_EQ(std::vector<float>(v.plane(0, 1).begin(), v.plane(0, 1).end()), expected);
  EXPECT_TRUE(v.is_normalized());
}

TEST(OneHotTest, ArgmaxRoundTripOnRandomMasks) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int classes = 2 + static_cast<int>(rng() % 5);
    const LabelMask m = random_mask(rng, 16, 16, classes);
    EXPECT_EQ(argmax_merge(one_hot(m), 0), m);
  }
}

TEST(ArgmaxMergeTest, TieResolvesToSmallestClass) {
  const SoftMaskVolume v(1, 2, 1, 1, {0.5f, 0.5f});
  EXPECT_EQ(argmax_merge(v, 0).at(0, 0), 0);
}

TEST(ArgmaxMergeTest, PicksLargestConfidence) {
  const SoftMaskVolume v(1, 3, 1, 1, {0.2f, 0.3f, 0.5f});
  EXPECT_EQ(argmax_merge(v, 0).at(0, 0), 2);
}

TEST(ArgmaxMergeTest, FrameOutOfRangeThrows) {
  const SoftMaskVolume v(2, 2, 1, 1, {1, 0, 0, 1});
  EXPECT_THROW(argmax_merge(v, 2), DataError);
  EXPECT_THROW(argmax_merge(v, -1), DataError);
}

TEST(ArgmaxMergeTest, InvariantToPerPixelPositiveScaling) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 7, h = 5, c = 4;
    std::vector<float> values(static_cast<std::size_t>(w) * h * c);
    for (auto& v : values) v = u(rng);
    // scale every class of a pixel by the same factor in (0, 1]
    std::vector<float> scaled = values;
    for (int i = 0; i < w * h; ++i) {
      const float s = 0.05f + 0.95f * u(rng);
      for (int k = 0; k < c; ++k) scaled[k * w * h + i] *= s;
    }
    const SoftMaskVolume a(1, c, w, h, values);
    const SoftMaskVolume b(1, c, w, h, scaled);
    const LabelMask la = argmax_merge(a, 0);
    const LabelMask lb = argmax_merge(b, 0);
    // scaling can only break exact float ties, which random data does not produce
    EXPECT_EQ(la, lb);
  }
}

TEST(TypesTest, RejectsInvalidConstruction) {
  EXPECT_THROW(LabelMask(2, 2, 2, {0, 1, 2, 0}), DataError);
  EXPECT_THROW(LabelMask(2, 2, 2, {0, 1, 0}), DimensionError);
  EXPECT_THROW(Image(1, 1, 1, {1.5f}), DataError);
  EXPECT_THROW(Image(1, 1, 2, {0.f, 0.f}), DataError);
  EXPECT_THROW(FlowField(1, 1, {std::nanf(""), 0.f}), DataError);
  EXPECT_THROW(OcclusionMask(1, 1, std::vector<std::uint8_t>{2}), DataError);
  EXPECT_THROW(SoftMaskVolume(1, 1, 1, 1, {-0.1f}), DataError);
}

TEST(VideoSequenceTest, RequiresReversePairs) {
  std::vector<LabelMask> masks(2, LabelMask(4, 4, 2));
  FlowMap flows;
  flows.emplace(FramePair{0, 1}, FlowField(4, 4));
  EXPECT_THROW(VideoSequence({}, masks, flows, 30.0, 2), DataError);
  flows.emplace(FramePair{1, 0}, FlowField(4, 4));
  const VideoSequence seq({}, masks, flows, 30.0, 2);
  EXPECT_EQ(seq.num_frames(), 2);
  EXPECT_THROW(seq.flow(0, 0), DataError);
}

TEST(VideoSequenceTest, RejectsMismatchedSizes) {
  std::vector<LabelMask> masks{LabelMask(4, 4, 2), LabelMask(5, 4, 2)};
  EXPECT_THROW(VideoSequence({}, masks, {}, 30.0, 2), DimensionError);
  EXPECT_THROW(VideoSequence({}, {}, {}, 30.0, 2), DataError);
}

}  // namespace
}  // namespace segstab
