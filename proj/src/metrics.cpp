#include "worldwalk/metrics.hpp"

#include <algorithm>
#include <cstdlib>

#include "worldwalk/error.hpp"

namespace worldwalk {

FrameError& FrameError::operator+=(const FrameError& o) {
  pixels += o.pixels;
  valid += o.valid;
  sum_abs_error += o.sum_abs_error;
  sum_abs_error_strict += o.sum_abs_error_strict;
  return *this;
}

FrameError compare_frames(const Frame& frame, std::span<const std::uint8_t> valid, const Frame& truth) {
  if (frame.width != truth.width || frame.height != truth.height || valid.size() != frame.pixel_count()) {
    throw InvalidArgument("compare_frames: size mismatch");
  }
  auto diff = [&](int u, int v, int tu, int tv) {
    const std::uint8_t* a = &frame.pixels[(static_cast<std::size_t>(v) * frame.width + u) * 3];
    const std::uint8_t* b = &truth.pixels[(static_cast<std::size_t>(tv) * truth.width + tu) * 3];
    return (std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2])) / (3.0 * 255.0);
  };
  FrameError e;
  e.pixels = frame.pixel_count();
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      if (!valid[static_cast<std::size_t>(v) * frame.width + u]) continue;
      ++e.valid;
      const double strict = diff(u, v, u, v);
      double best = strict;
      for (int dv = -1; dv <= 1 && best > 0.0; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const int tu = u + du, tv = v + dv;
          if (tu < 0 || tv < 0 || tu >= frame.width || tv >= frame.height) continue;
          best = std::min(best, diff(u, v, tu, tv));
        }
      }
      e.sum_abs_error += best;
      e.sum_abs_error_strict += strict;
    }
  }
  return e;
}

}  // namespace worldwalk
