#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vision/tensor.hpp"

using namespace vision;
namespace vt = vision::testing;

TEST(VideoTensor, ShapeAndIndexing) {
  VideoTensor v(Shape{2, 3, 4, 5}, RangeTag::kUnit, 0.25f);
  EXPECT_EQ(v.size(), 120u);
  EXPECT_EQ(v.shape().frame_size(), 60u);
  v.at(1, 2, 3, 4) = 7.0f;
  EXPECT_EQ(v.data().back(), 7.0f);
  EXPECT_EQ(v.frame(1).data.back(), 7.0f);
  EXPECT_EQ(v.frame(0).data.front(), 0.25f);
}

TEST(VideoTensor, RejectsZeroDimensionsAndBadPayload) {
  EXPECT_THROW(VideoTensor(Shape{0, 1, 1, 1}, RangeTag::kUnit), ShapeError);
  EXPECT_THROW(VideoTensor(Shape{1, 1, 2, 2}, RangeTag::kUnit, std::vector<float>(3)), ShapeError);
}

TEST(VideoTensor, FramesRoundTrip) {
  const auto v = vt::random_video(Shape{3, 2, 4, 4}, 1);
  std::vector<Frame> frames;
  for (std::uint32_t n = 0; n < 3; ++n) frames.push_back(v.frame(n));
  EXPECT_EQ(VideoTensor::from_frames(frames, v.range()), v);

  VideoTensor w(v.shape(), v.range());
  for (std::uint32_t n = 0; n < 3; ++n) w.set_frame(n, frames[n]);
  EXPECT_EQ(w, v);
  EXPECT_THROW(w.set_frame(0, Frame(1, 4, 4)), ShapeError);
}

TEST(VideoTensor, FromFramesRejectsMixedShapes) {
  std::vector<Frame> frames{Frame(1, 2, 2), Frame(1, 2, 3)};
  EXPECT_THROW(VideoTensor::from_frames(frames, RangeTag::kUnit), ShapeError);
}

TEST(RangeConversion, MapsEndpoints) {
  VideoTensor v(Shape{1, 1, 1, 3}, RangeTag::kUnit, std::vector<float>{0.0f, 0.5f, 1.0f});
  const auto s = convert_range(v, RangeTag::kSymmetric);
  EXPECT_EQ(s.range(), RangeTag::kSymmetric);
  EXPECT_EQ(s.data()[0], -1.0f);
  EXPECT_EQ(s.data()[1], 0.0f);
  EXPECT_EQ(s.data()[2], 1.0f);
  EXPECT_EQ(convert_range(s, RangeTag::kUnit), v);
  EXPECT_EQ(convert_range(v, RangeTag::kUnit), v);
}

TEST(Reductions, AccumulateInDouble) {
  std::vector<float> a(1 << 20, 1e-4f);
  EXPECT_NEAR(dot(std::span<const float>(a), std::span<const float>(a)), (1 << 20) * 1e-8, 1e-9);
  std::vector<double> b{3.0, 4.0};
  EXPECT_DOUBLE_EQ(norm(std::span<const double>(b)), 5.0);
}
