#pragma once

// Test-side reference computations. These deliberately avoid the library's
// own math (no quaternions, no kernels) so that they can catch its mistakes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "worldwalk/geometry.hpp"

namespace oracle {

using M3 = std::array<long double, 9>;
struct V3 {
  long double x = 0, y = 0, z = 0;
};

inline M3 mul(const M3& a, const M3& b) {
  M3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
  return r;
}

inline M3 yaw_matrix(long double deg) {
  const long double a = deg * 3.14159265358979323846264338327950288L / 180.0L;
  return {std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a)};
}

inline M3 from(const worldwalk::Mat3& m) {
  M3 r;
  for (int i = 0; i < 9; ++i) r[i] = m.m[i];
  return r;
}

struct Pose {
  M3 rotation;
  V3 position;
};

/// Frame-by-frame simulation: yaw grows linearly, the camera steps along the
/// negative third column of each frame's rotation.
inline std::vector<Pose> walk(const std::string& keys, long double eta, long double theta_deg, int f,
                              const M3& r0 = {1, 0, 0, 0, 1, 0, 0, 0, 1}, V3 t0 = {}) {
  auto has = [&](char c) { return keys.find(c) != std::string::npos; };
  const int turn = (has('A') ? 1 : 0) - (has('D') ? 1 : 0);
  const int move = (has('W') ? 1 : 0) - (has('S') ? 1 : 0);
  std::vector<Pose> out{{r0, t0}};
  V3 t = t0;
  for (int k = 1; k <= f; ++k) {
    const M3 r = mul(r0, yaw_matrix(turn * theta_deg * k / f));
    t.x += move * eta * -r[2];
    t.y += move * eta * -r[5];
    t.z += move * eta * -r[8];
    out.push_back({r, t});
  }
  return out;
}

/// Pinhole projection written out directly.
inline std::pair<long double, long double> project(long double fx, long double fy, long double cx,
                                                   long double cy, V3 p) {
  return {cx + fx * p.x / -p.z, cy - fy * p.y / -p.z};
}

/// Top-k by score descending, ties by smaller index, via a full sort.
inline std::vector<std::uint64_t> top_k(std::vector<std::pair<std::uint64_t, double>> scored, std::size_t k) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].first);
  return out;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  if (std::sqrt(aa) < 1e-12L || std::sqrt(bb) < 1e-12L) return 0.0;
  return static_cast<double>(ab / (std::sqrt(aa) * std::sqrt(bb)));
}

/// Frame groups as lists of 1-based frame numbers: {1}, {2..1+r}, ...
inline std::vector<std::vector<int>> frame_groups(int f, int r) {
  std::vector<std::vector<int>> groups{{1}};
  for (int start = 2; start <= f; start += r) {
    std::vector<int> g;
    for (int i = start; i < start + r && i <= f; ++i) g.push_back(i);
    groups.push_back(g);
  }
  return groups;
}

/// Distance from a point to the surface of an axis-aligned box centered at the origin,
/// for points inside or on the box.
inline double box_surface_distance(const worldwalk::Vec3& p, const std::array<double, 3>& h) {
  return std::min({h[0] - std::abs(p.x), h[1] - std::abs(p.y), h[2] - std::abs(p.z)});
}

}  // namespace oracle
