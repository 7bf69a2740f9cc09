#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "worldwalk/geometry.hpp"
#include "worldwalk/image.hpp"

namespace worldwalk {

inline constexpr double kNearClip = 1e-6;

enum class DepthMode {
  kZDepth,       // distance along the optical axis
  kRayDistance,  // distance along the unit pixel ray
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

/// Colored world-space points stored as parallel coordinate arrays.
struct PointCloud {
  std::vector<double> x, y, z;
  std::vector<Rgb> colors;

  std::size_t size() const { return colors.size(); }
  bool empty() const { return colors.empty(); }
  Vec3 position(std::size_t i) const { return {x[i], y[i], z[i]}; }
  void push_back(const Vec3& p, Rgb c);
  void reserve(std::size_t n);
};

struct RenderOutput {
  Frame color;
  std::vector<double> depth;         // -z_camera of the winning point, +inf if none
  std::vector<std::uint8_t> valid;   // 1 iff depth finite

  std::size_t valid_count() const;
  bool operator==(const RenderOutput&) const = default;
};

using PointCloudVideo = std::vector<RenderOutput>;

struct RenderOptions {
  int splat_radius = 1;
  Rgb background{0, 0, 0};
};

/// Lifts pixel (u, v) with the given depth into camera coordinates. Throws
/// InvalidDepth for non-positive or non-finite depth.
Vec3 unproject(const CameraIntrinsics& intr, PixelCoord pixel, double depth, DepthMode mode);

/// Continuous pixel coordinates of a camera-space point; nullopt when the
/// point is at or behind the near plane.
std::optional<PixelCoord> project(const CameraIntrinsics& intr, const Vec3& point_camera);

/// One world point per valid depth pixel on the stride grid, colored from `frame`.
PointCloud build_point_cloud(const Frame& frame, const DepthMap& depth,
                             const CameraIntrinsics& intr, const CameraPose& pose, int stride = 1,
                             DepthMode mode = DepthMode::kRayDistance);

/// Square-splat z-buffer rasterization. Nearest depth wins; equal depths keep
/// the lower point index.
RenderOutput render_point_cloud(const PointCloud& cloud, const CameraIntrinsics& intr,
                                const CameraPose& pose, const RenderOptions& options = {});

/// Renders poses 1..f of the trajectory. Frames are rendered concurrently.
PointCloudVideo render_trajectory(const PointCloud& cloud, const CameraIntrinsics& intr,
                                  const Trajectory& traj, const RenderOptions& options = {});

}  // namespace worldwalk
