#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference and, on x86-64,
// an AVX2 variant chosen at runtime. Both variants perform the same IEEE
// operations in the same order, so their outputs are bit-identical.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace worldwalk::kernels {

/// Row-major 3x3 rotation.
struct Rotation3 {
  double r[9];
};

struct PinholeParams {
  double fx, fy, cx, cy;
};

/// Inputs for projecting world points into one camera.
struct ProjectInputs {
  std::span<const double> x, y, z;  // world coordinates
  Rotation3 world_to_camera;        // R^T of the camera-to-world pose
  double camera_center[3];          // x_camera = R^T (x_world - center)
  PinholeParams pinhole;
  double near_clip;  // points need z_camera < -near_clip
  // Rounded pixels outside [lo, hi] are rejected before conversion to int.
  double u_lo, u_hi, v_lo, v_hi;
};

/// Per point: rounded pixel, depth (-z_camera) and an accept flag.
struct ProjectOutputs {
  std::span<std::int32_t> px, py;
  std::span<double> depth;
  std::span<std::uint8_t> accepted;
};

/// Inputs for lifting pixels with known depth into world space.
struct UnprojectInputs {
  std::span<const double> u, v, depth;
  PinholeParams pinhole;
  Rotation3 camera_to_world;  // x_world = R x_camera + translation
  double translation[3];
  bool ray_distance;  // depth measured along the unit ray instead of -z
};

struct UnprojectOutputs {
  std::span<double> x, y, z;
};

struct KernelTable {
  std::string_view name;
  void (*project_points)(const ProjectInputs&, const ProjectOutputs&);
  void (*unproject_points)(const UnprojectInputs&, const UnprojectOutputs&);
  /// Sum with four interleaved partial accumulators, combined as (0+1)+(2+3).
  double (*sum)(std::span<const double>);
  /// Dot product with the same accumulation order as `sum`.
  double (*dot)(std::span<const double>, std::span<const double>);
};

const KernelTable& scalar_table();
/// Null when the build or the CPU lacks AVX2.
const KernelTable* avx2_table();

/// Active table: AVX2 when available unless WORLDWALK_SIMD=scalar.
const KernelTable& active();

}  // namespace worldwalk::kernels
