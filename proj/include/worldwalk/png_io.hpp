#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "worldwalk/image.hpp"

namespace worldwalk::png {

/// 16-bit single-channel image, row-major.
struct Gray16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;
};

std::vector<std::uint8_t> encode_rgb(const Frame& frame);
/// Decodes any PNG colour type into 8-bit RGB (alpha dropped). Throws IoError.
Frame decode_rgb(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_gray16(const Gray16& image);
/// Requires a 16-bit grayscale PNG. Throws IoError otherwise.
Gray16 decode_gray16(std::span<const std::uint8_t> bytes);

Frame read_rgb(const std::filesystem::path& path);
void write_rgb(const std::filesystem::path& path, const Frame& frame);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace worldwalk::png
