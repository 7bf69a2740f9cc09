#pragma once

#include <cstddef>

#include "worldwalk/depth.hpp"
#include "worldwalk/pointcloud.hpp"

namespace worldwalk {

struct FrameError {
  std::size_t pixels = 0;
  std::size_t valid = 0;
  double sum_abs_error = 0.0;         // per-pixel channel-mean |diff| / 255, summed
  double sum_abs_error_strict = 0.0;  // same, without the neighborhood tolerance

  double valid_fraction() const { return pixels ? static_cast<double>(valid) / pixels : 0.0; }
  double mean_abs_error() const { return valid ? sum_abs_error / valid : 0.0; }
  double mean_abs_error_strict() const { return valid ? sum_abs_error_strict / valid : 0.0; }
  FrameError& operator+=(const FrameError& o);
};

/// Compares a frame against the ground truth on the pixels where `valid` is
/// set. The tolerant error takes, per pixel, the closest ground-truth color
/// within one pixel (nearest-texel tolerance).
FrameError compare_frames(const Frame& frame, std::span<const std::uint8_t> valid, const Frame& truth);

}  // namespace worldwalk
