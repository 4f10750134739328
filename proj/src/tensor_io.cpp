#include "vision/tensor_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace vision {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic{'V', 'X', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::size_t vtf_write(const VideoTensor& v, std::ostream& sink) {
  const Shape& s = v.shape();
  sink.write(kMagic.data(), kMagic.size());
  put_u32(sink, s.n);
  put_u32(sink, s.c);
  put_u32(sink, s.h);
  put_u32(sink, s.w);
  sink.put(static_cast<char>(kVtfDtypeFloat32));
  sink.put(static_cast<char>(v.range()));

  std::vector<char> payload(v.size() * 4);
  auto d = v.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(d[i]);
    payload[4 * i + 0] = static_cast<char>(bits & 0xff);
    payload[4 * i + 1] = static_cast<char>((bits >> 8) & 0xff);
    payload[4 * i + 2] = static_cast<char>((bits >> 16) & 0xff);
    payload[4 * i + 3] = static_cast<char>((bits >> 24) & 0xff);
  }
  sink.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!sink) throw IoError("vtf: write failed");
  return kVtfHeaderBytes + payload.size();
}

VideoTensor vtf_read(std::istream& source) {
  std::array<unsigned char, kVtfHeaderBytes> header{};
  source.read(reinterpret_cast<char*>(header.data()), header.size());
  if (source.gcount() != static_cast<std::streamsize>(header.size())) {
    throw LengthError("vtf: truncated header");
  }
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError("vtf: bad magic");
  }
  Shape s{get_u32(&header[4]), get_u32(&header[8]), get_u32(&header[12]), get_u32(&header[16])};
  if (header[20] != kVtfDtypeFloat32) {
    throw FormatError("vtf: unsupported dtype " + std::to_string(header[20]));
  }
  if (header[21] > 1) throw FormatError("vtf: bad range tag " + std::to_string(header[21]));
  if (s.n == 0 || s.c == 0 || s.h == 0 || s.w == 0) {
    throw FormatError("vtf: zero dimension in header " + to_string(s));
  }

  std::vector<unsigned char> payload(s.size() * 4);
  source.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (source.gcount() != static_cast<std::streamsize>(payload.size())) {
    throw LengthError("vtf: payload truncated, expected " + std::to_string(payload.size()) +
                      " bytes, got " + std::to_string(source.gcount()));
  }
  std::vector<float> data(s.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(&payload[4 * i]));
  }
  return VideoTensor(s, static_cast<RangeTag>(header[21]), std::move(data));
}

void vtf_save(const VideoTensor& v, const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  vtf_write(v, os);
}

VideoTensor vtf_load(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return vtf_read(is);
}

std::uint8_t quantize_u8(float unit_value) {
  // nearbyint honours the default round-to-nearest-even mode.
  const double scaled = std::nearbyint(static_cast<double>(unit_value) * 255.0);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

namespace {

struct PngImage {
  png_image image{};
  PngImage() {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

Frame read_png(const fs::path& file) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, file.c_str())) {
    throw FormatError("cannot decode " + file.string() + ": " + png.image.message);
  }
  if (png.image.format & PNG_FORMAT_FLAG_LINEAR) {
    throw FormatError(file.string() + ": only 8-bit frames are supported");
  }
  if (png.image.format & PNG_FORMAT_FLAG_ALPHA) {
    throw FormatError(file.string() + ": alpha channels are not supported");
  }
  const bool color = png.image.format & PNG_FORMAT_FLAG_COLOR;
  png.image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::uint32_t c = color ? 3 : 1;
  const std::uint32_t h = png.image.height;
  const std::uint32_t w = png.image.width;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, buf.data(), 0, nullptr)) {
    throw FormatError("cannot decode " + file.string() + ": " + png.image.message);
  }

  // interleaved HWC -> planar CHW
  Frame f(c, h, w);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x)
      for (std::uint32_t ch = 0; ch < c; ++ch)
        f.data[(static_cast<std::size_t>(ch) * h + y) * w + x] =
            static_cast<float>(buf[(static_cast<std::size_t>(y) * w + x) * c + ch]) / 255.0f;
  return f;
}

void write_png(const fs::path& file, std::span<const float> chw, std::uint32_t c,
               std::uint32_t h, std::uint32_t w) {
  PngImage png;
  png.image.width = w;
  png.image.height = h;
  png.image.format = c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buf(static_cast<std::size_t>(h) * w * c);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x)
      for (std::uint32_t ch = 0; ch < c; ++ch)
        buf[(static_cast<std::size_t>(y) * w + x) * c + ch] =
            quantize_u8(chw[(static_cast<std::size_t>(ch) * h + y) * w + x]);
  if (!png_image_write_to_file(&png.image, file.c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write " + file.string() + ": " + png.image.message);
  }
}

}  // namespace

VideoTensor read_frame_dir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw NotFoundError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) throw NotFoundError("no frames found in " + dir.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& f : files) {
    frames.push_back(read_png(f));
    if (!frames.back().same_shape(frames.front())) {
      throw ShapeError("frame " + f.filename().string() + " has different dimensions from " +
                       files.front().filename().string());
    }
  }
  return VideoTensor::from_frames(frames, RangeTag::kUnit);
}

void write_frame_dir(const VideoTensor& v, const fs::path& dir) {
  if (v.shape().c != 1 && v.shape().c != 3) {
    throw ShapeError("frame directories hold 1- or 3-channel video, got C=" +
                     std::to_string(v.shape().c));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
  const VideoTensor unit = convert_range(v, RangeTag::kUnit);
  const Shape& s = unit.shape();
  for (std::uint32_t n = 0; n < s.n; ++n) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05u.png", n);
    write_png(dir / name, unit.frame_span(n), s.c, s.h, s.w);
  }
}

VideoTensor load_video(const fs::path& path) {
  if (fs::is_directory(path)) return read_frame_dir(path);
  return vtf_load(path);
}

}  // namespace vision
