#include <cmath>

#include "worldwalk/kernels.hpp"

namespace worldwalk::kernels {

namespace {

void project_points(const ProjectInputs& in, const ProjectOutputs& out) {
  const double* r = in.world_to_camera.r;
  const double* c = in.camera_center;
  const PinholeParams& k = in.pinhole;
  const std::size_t n = in.x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = in.x[i] - c[0];
    const double dy = in.y[i] - c[1];
    const double dz = in.z[i] - c[2];
    const double xc = r[0] * dx + r[1] * dy + r[2] * dz;
    const double yc = r[3] * dx + r[4] * dy + r[5] * dz;
    const double zc = r[6] * dx + r[7] * dy + r[8] * dz;
    const double depth = -zc;
    const double u = k.cx + k.fx * (xc / depth);
    const double v = k.cy - k.fy * (yc / depth);
    const double ru = std::floor(u + 0.5);
    const double rv = std::floor(v + 0.5);
    const bool ok = zc < -in.near_clip && ru >= in.u_lo && ru <= in.u_hi && rv >= in.v_lo &&
                    rv <= in.v_hi;
    out.accepted[i] = ok ? 1 : 0;
    out.px[i] = ok ? static_cast<std::int32_t>(ru) : 0;
    out.py[i] = ok ? static_cast<std::int32_t>(rv) : 0;
    out.depth[i] = depth;
  }
}

void unproject_points(const UnprojectInputs& in, const UnprojectOutputs& out) {
  const double* r = in.camera_to_world.r;
  const double* t = in.translation;
  const PinholeParams& k = in.pinhole;
  const std::size_t n = in.u.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = (in.u[i] - k.cx) / k.fx;
    const double dy = -((in.v[i] - k.cy) / k.fy);
    double s = in.depth[i];
    if (in.ray_distance) s = s / std::sqrt(dx * dx + dy * dy + 1.0);
    const double xc = dx * s;
    const double yc = dy * s;
    const double zc = -s;
    out.x[i] = r[0] * xc + r[1] * yc + r[2] * zc + t[0];
    out.y[i] = r[3] * xc + r[4] * yc + r[5] * zc + t[1];
    out.z[i] = r[6] * xc + r[7] * yc + r[8] * zc + t[2];
  }
}

double sum(std::span<const double> a) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc[i % 4] += a[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc[i % 4] += a[i] * b[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &project_points, &unproject_points, &sum, &dot};
  return table;
}

}  // namespace worldwalk::kernels
