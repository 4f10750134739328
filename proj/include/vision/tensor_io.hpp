#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>

#include "vision/tensor.hpp"

namespace vision {

class LengthError : public IoError {
 public:
  using IoError::IoError;
};

class NotFoundError : public IoError {
 public:
  using IoError::IoError;
};

// VXT1 binary tensor file: 4-byte magic, n/c/h/w as u32 LE, u8 dtype (1 = f32 LE),
// u8 range tag, then n·c·h·w little-endian float32 values.
inline constexpr std::size_t kVtfHeaderBytes = 22;
inline constexpr std::uint8_t kVtfDtypeFloat32 = 1;

std::size_t vtf_write(const VideoTensor& v, std::ostream& sink);
VideoTensor vtf_read(std::istream& source);

void vtf_save(const VideoTensor& v, const std::filesystem::path& path);
VideoTensor vtf_load(const std::filesystem::path& path);

// Reads every *.png in `dir` in lexicographic filename order. 8-bit gray frames
// give C=1, 8-bit RGB frames give C=3. Result is UNIT range, v/255.
VideoTensor read_frame_dir(const std::filesystem::path& dir);

// Writes frames as 00000.png, 00001.png, ... SYMMETRIC input is converted to
// UNIT first; samples are clamped to [0,1] and quantized round-half-to-even.
void write_frame_dir(const VideoTensor& v, const std::filesystem::path& dir);

std::uint8_t quantize_u8(float unit_value);

// Loads either a .vtf file or a frame directory.
VideoTensor load_video(const std::filesystem::path& path);

}  // namespace vision
