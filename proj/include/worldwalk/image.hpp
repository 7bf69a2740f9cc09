#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace worldwalk {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  constexpr bool operator==(const Rgb&) const = default;
};

/// Row-major 8-bit RGB image.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  Frame() = default;
  Frame(int w, int h, Rgb fill = {});

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  Rgb at(int u, int v) const {
    const std::size_t i = (static_cast<std::size_t>(v) * width + u) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(int u, int v, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(v) * width + u) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }
  /// Throws InvalidArgument if the buffer length disagrees with the dimensions.
  void validate() const;
  bool operator==(const Frame&) const = default;
};

/// Row-major depth in world units with a per-pixel validity flag. Valid
/// entries are finite and strictly positive.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  bool is_valid(int u, int v) const { return valid[static_cast<std::size_t>(v) * width + u] != 0; }
  /// Stores the value and marks it valid iff finite and > 0.
  void set(int u, int v, double depth);
  void invalidate(int u, int v);
  std::size_t valid_count() const;
  bool operator==(const DepthMap&) const = default;
};

}  // namespace worldwalk
