#include "worldwalk/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "worldwalk/error.hpp"
#include "worldwalk/kernels.hpp"
#include "worldwalk/parallel.hpp"

namespace worldwalk {

namespace {

kernels::PinholeParams pinhole(const CameraIntrinsics& k) { return {k.fx, k.fy, k.cx, k.cy}; }

kernels::Rotation3 to_kernel(const Mat3& m) {
  kernels::Rotation3 r;
  std::copy(m.m.begin(), m.m.end(), r.r);
  return r;
}

}  // namespace

void PointCloud::push_back(const Vec3& p, Rgb c) {
  x.push_back(p.x);
  y.push_back(p.y);
  z.push_back(p.z);
  colors.push_back(c);
}

void PointCloud::reserve(std::size_t n) {
  x.reserve(n);
  y.reserve(n);
  z.reserve(n);
  colors.reserve(n);
}

std::size_t RenderOutput::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

Vec3 unproject(const CameraIntrinsics& intr, PixelCoord pixel, double depth, DepthMode mode) {
  if (!std::isfinite(depth) || depth <= 0.0) throw InvalidDepth("unproject: depth must be > 0");
  if (!(pixel.u >= -0.5 && pixel.u <= intr.width - 0.5 && pixel.v >= -0.5 &&
        pixel.v <= intr.height - 0.5)) {
    throw InvalidArgument("unproject: pixel outside the image");
  }
  const double dx = (pixel.u - intr.cx) / intr.fx;
  const double dy = -((pixel.v - intr.cy) / intr.fy);
  double s = depth;
  if (mode == DepthMode::kRayDistance) s = s / std::sqrt(dx * dx + dy * dy + 1.0);
  return {dx * s, dy * s, -s};
}

std::optional<PixelCoord> project(const CameraIntrinsics& intr, const Vec3& point_camera) {
  if (!(point_camera.z < -kNearClip)) return std::nullopt;
  const double depth = -point_camera.z;
  return PixelCoord{intr.cx + intr.fx * (point_camera.x / depth),
                    intr.cy - intr.fy * (point_camera.y / depth)};
}

PointCloud build_point_cloud(const Frame& frame, const DepthMap& depth,
                             const CameraIntrinsics& intr, const CameraPose& pose, int stride,
                             DepthMode mode) {
  frame.validate();
  if (frame.width != depth.width || frame.height != depth.height) {
    throw InvalidArgument("build_point_cloud: frame and depth dimensions differ");
  }
  if (stride < 1) throw InvalidArgument("build_point_cloud: stride must be >= 1");

  std::vector<double> us, vs, ds;
  std::vector<Rgb> colors;
  const std::size_t expected = depth.valid_count() / (static_cast<std::size_t>(stride) * stride) + 1;
  us.reserve(expected);
  vs.reserve(expected);
  ds.reserve(expected);
  colors.reserve(expected);
  for (int v = 0; v < depth.height; v += stride) {
    for (int u = 0; u < depth.width; u += stride) {
      if (!depth.is_valid(u, v)) continue;
      us.push_back(u);
      vs.push_back(v);
      ds.push_back(depth.at(u, v));
      colors.push_back(frame.at(u, v));
    }
  }

  PointCloud cloud;
  cloud.x.resize(us.size());
  cloud.y.resize(us.size());
  cloud.z.resize(us.size());
  cloud.colors = std::move(colors);

  kernels::UnprojectInputs in{us, vs, ds, pinhole(intr), to_kernel(pose.rotation.matrix()),
                              {pose.translation.x, pose.translation.y, pose.translation.z},
                              mode == DepthMode::kRayDistance};
  kernels::active().unproject_points(in, {cloud.x, cloud.y, cloud.z});
  return cloud;
}

RenderOutput render_point_cloud(const PointCloud& cloud, const CameraIntrinsics& intr,
                                const CameraPose& pose, const RenderOptions& options) {
  intr.validate();
  if (options.splat_radius < 0) throw InvalidArgument("render: splat radius must be >= 0");
  const int w = intr.width;
  const int h = intr.height;
  const int r = options.splat_radius;
  const std::size_t n = cloud.size();

  std::vector<std::int32_t> px(n), py(n);
  std::vector<double> pdepth(n);
  std::vector<std::uint8_t> accepted(n);
  kernels::ProjectInputs in{cloud.x,
                            cloud.y,
                            cloud.z,
                            to_kernel(pose.rotation.matrix().transposed()),
                            {pose.translation.x, pose.translation.y, pose.translation.z},
                            pinhole(intr),
                            kNearClip,
                            static_cast<double>(-r),
                            static_cast<double>(w - 1 + r),
                            static_cast<double>(-r),
                            static_cast<double>(h - 1 + r)};
  kernels::active().project_points(in, {px, py, pdepth, accepted});

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<double> zbuf(static_cast<std::size_t>(w) * h, kInf);
  std::vector<std::uint32_t> owner(zbuf.size(), kNone);

  for (std::size_t i = 0; i < n; ++i) {
    if (!accepted[i]) continue;
    const double d = pdepth[i];
    const int u0 = std::max(px[i] - r, 0), u1 = std::min(px[i] + r, w - 1);
    const int v0 = std::max(py[i] - r, 0), v1 = std::min(py[i] + r, h - 1);
    for (int v = v0; v <= v1; ++v) {
      const std::size_t row = static_cast<std::size_t>(v) * w;
      for (int u = u0; u <= u1; ++u) {
        // Strict comparison: on equal depth the earlier point keeps the pixel.
        if (d < zbuf[row + u]) {
          zbuf[row + u] = d;
          owner[row + u] = static_cast<std::uint32_t>(i);
        }
      }
    }
  }

  RenderOutput out;
  out.color = Frame(w, h, options.background);
  out.valid.assign(zbuf.size(), 0);
  for (std::size_t p = 0; p < zbuf.size(); ++p) {
    if (owner[p] == kNone) continue;
    const Rgb c = cloud.colors[owner[p]];
    out.color.pixels[p * 3] = c.r;
    out.color.pixels[p * 3 + 1] = c.g;
    out.color.pixels[p * 3 + 2] = c.b;
    out.valid[p] = 1;
  }
  out.depth = std::move(zbuf);
  return out;
}

PointCloudVideo render_trajectory(const PointCloud& cloud, const CameraIntrinsics& intr,
                                  const Trajectory& traj, const RenderOptions& options) {
  if (traj.poses.size() < 2) throw InvalidArgument("render_trajectory: trajectory has no frames");
  PointCloudVideo video(traj.poses.size() - 1);
  parallel_for(video.size(), [&](std::size_t k) {
    video[k] = render_point_cloud(cloud, intr, traj.poses[k + 1], options);
  });
  return video;
}

}  // namespace worldwalk
