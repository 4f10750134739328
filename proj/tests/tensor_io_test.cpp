#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "vision/tensor_io.hpp"

using namespace vision;
namespace vt = vision::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vision_io_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Vtf, HeaderLayoutIsLittleEndian) {
  VideoTensor v(Shape{1, 1, 1, 2}, RangeTag::kSymmetric, std::vector<float>{1.0f, -2.0f});
  std::stringstream ss;
  EXPECT_EQ(vtf_write(v, ss), kVtfHeaderBytes + 8);
  const std::string bytes = ss.str();
  const unsigned char expected[] = {'V', 'X', 'T', '1', 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0,
                                    2, 0, 0, 0, 1, 1, 0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
  ASSERT_EQ(bytes.size(), sizeof(expected));
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    EXPECT_EQ(static_cast<unsigned char>(bytes[i]), expected[i]) << "byte " << i;
  }
}

TEST(Vtf, RoundTripIsBitExact) {
  const auto v = vt::random_video(Shape{2, 3, 5, 7}, 4);
  std::stringstream ss;
  vtf_write(v, ss);
  const auto back = vtf_read(ss);
  EXPECT_EQ(back, v);
  std::stringstream again;
  vtf_write(back, again);
  EXPECT_EQ(again.str(), [&] {
    std::stringstream s;
    vtf_write(v, s);
    return s.str();
  }());
}

TEST(Vtf, RejectsBadMagicDtypeAndTruncation) {
  const auto v = vt::random_video(Shape{1, 1, 2, 2}, 5);
  std::stringstream ss;
  vtf_write(v, ss);
  const std::string good = ss.str();

  std::string bad = good;
  bad[0] = 'Z';
  std::stringstream s1(bad);
  EXPECT_THROW(vtf_read(s1), FormatError);

  bad = good;
  bad[20] = 2;
  std::stringstream s2(bad);
  EXPECT_THROW(vtf_read(s2), FormatError);

  bad = good;
  bad[21] = 9;
  std::stringstream s3(bad);
  EXPECT_THROW(vtf_read(s3), FormatError);

  std::stringstream s4(good.substr(0, good.size() - 1));
  EXPECT_THROW(vtf_read(s4), LengthError);
  std::stringstream s5(good.substr(0, 10));
  EXPECT_THROW(vtf_read(s5), LengthError);
}

TEST(Vtf, MissingFileIsIoError) {
  EXPECT_THROW(vtf_load("/nonexistent/none.vtf"), IoError);
}

TEST(FrameDir, ReadsGrayRampInNameOrder) {
  const auto v = read_frame_dir(vt::data_path("ramp_gray"));
  ASSERT_EQ(v.shape(), (Shape{3, 1, 6, 8}));
  EXPECT_EQ(v.range(), RangeTag::kUnit);
  for (std::uint32_t n = 0; n < 3; ++n) {
    for (std::uint32_t y = 0; y < 6; ++y) {
      for (std::uint32_t x = 0; x < 8; ++x) {
        EXPECT_FLOAT_EQ(v.at(n, 0, y, x), static_cast<float>((x * 17 + y * 3 + n * 5) % 256) / 255.0f);
      }
    }
  }
}

TEST(FrameDir, ReadsRgbRamp) {
  const auto v = read_frame_dir(vt::data_path("ramp_rgb"));
  ASSERT_EQ(v.shape(), (Shape{2, 3, 6, 8}));
  EXPECT_FLOAT_EQ(v.at(1, 2, 5, 7), static_cast<float>((7 * 17 + 5 * 3 + 5 + 80) % 256) / 255.0f);
}

TEST(FrameDir, WriteThenReadRecoversQuantizedValues) {
  const fs::path dir = scratch("roundtrip");
  const auto src = read_frame_dir(vt::data_path("ramp_rgb"));
  write_frame_dir(src, dir);
  EXPECT_TRUE(fs::exists(dir / "00000.png"));
  EXPECT_TRUE(fs::exists(dir / "00001.png"));
  EXPECT_EQ(read_frame_dir(dir), src);
  fs::remove_all(dir);
}

TEST(FrameDir, SymmetricInputIsConvertedBeforeWriting) {
  const fs::path dir = scratch("sym");
  VideoTensor v(Shape{1, 1, 1, 3}, RangeTag::kSymmetric, std::vector<float>{-1.0f, 0.0f, 1.0f});
  write_frame_dir(v, dir);
  const auto back = read_frame_dir(dir);
  EXPECT_EQ(back.data()[0], 0.0f);
  EXPECT_FLOAT_EQ(back.data()[1], 128.0f / 255.0f);
  EXPECT_EQ(back.data()[2], 1.0f);
  fs::remove_all(dir);
}

TEST(FrameDir, MissingOrEmptyDirectoryIsNotFound) {
  EXPECT_THROW(read_frame_dir("/nonexistent/frames"), NotFoundError);
  const fs::path dir = scratch("empty");
  fs::create_directories(dir);
  EXPECT_THROW(read_frame_dir(dir), NotFoundError);
  fs::remove_all(dir);
}

TEST(FrameDir, MixedFrameSizesAreShapeError) {
  const fs::path dir = scratch("mixed");
  write_frame_dir(VideoTensor(Shape{1, 1, 4, 4}, RangeTag::kUnit, 0.5f), dir);
  const fs::path other = scratch("mixed_other");
  write_frame_dir(VideoTensor(Shape{1, 1, 4, 5}, RangeTag::kUnit, 0.5f), other);
  fs::copy_file(other / "00000.png", dir / "00001.png");
  EXPECT_THROW(read_frame_dir(dir), ShapeError);
  fs::remove_all(dir);
  fs::remove_all(other);
}

TEST(Quantize, RoundsHalfToEvenAndClamps) {
  EXPECT_EQ(quantize_u8(-0.5f), 0);
  EXPECT_EQ(quantize_u8(2.0f), 255);
  EXPECT_EQ(quantize_u8(0.5f), 128);  // 127.5 -> 128 (even)
}

TEST(LoadVideo, DispatchesOnPathKind) {
  const fs::path file = scratch("dispatch.vtf");
  const auto v = vt::random_video(Shape{1, 2, 3, 4}, 6);
  vtf_save(v, file);
  EXPECT_EQ(load_video(file), v);
  EXPECT_EQ(load_video(vt::data_path("ramp_gray")).shape().n, 3u);
  fs::remove(file);
}
