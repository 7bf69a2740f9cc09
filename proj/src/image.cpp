#include "worldwalk/image.hpp"

#include <algorithm>
#include <cmath>

#include "worldwalk/error.hpp"

namespace worldwalk {

Frame::Frame(int w, int h, Rgb fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw InvalidArgument("frame: negative dimensions");
  pixels.resize(pixel_count() * 3);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    pixels[i * 3] = fill.r;
    pixels[i * 3 + 1] = fill.g;
    pixels[i * 3 + 2] = fill.b;
  }
}

void Frame::validate() const {
  if (width < 0 || height < 0 || pixels.size() != pixel_count() * 3) {
    throw InvalidArgument("frame: pixel buffer does not match dimensions");
  }
}

DepthMap::DepthMap(int w, int h)
    : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0), valid(values.size(), 0) {
  if (w < 0 || h < 0) throw InvalidArgument("depth map: negative dimensions");
}

void DepthMap::set(int u, int v, double depth) {
  const std::size_t i = static_cast<std::size_t>(v) * width + u;
  values[i] = depth;
  valid[i] = (std::isfinite(depth) && depth > 0.0) ? 1 : 0;
}

void DepthMap::invalidate(int u, int v) { valid[static_cast<std::size_t>(v) * width + u] = 0; }

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

}  // namespace worldwalk
