#include <doctest.h>

#include <cstring>
#include <random>

#include "worldwalk/kernels.hpp"

using namespace worldwalk::kernels;

namespace {

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

Rotation3 random_rotation3(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  double w = n(rng), x = n(rng), y = n(rng), z = n(rng);
  const double s = 1.0 / std::sqrt(w * w + x * x + y * y + z * z);
  w *= s, x *= s, y *= s, z *= s;
  return {{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
           2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
           2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
}

}  // namespace

TEST_CASE("active table honours the environment override") {
  const KernelTable& t = active();
  CHECK((t.name == "scalar" || t.name == "avx2"));
  CHECK(scalar_table().name == "scalar");
  if (avx2_table() == nullptr) MESSAGE("AVX2 unavailable; equivalence tests compare scalar with itself");
}

TEST_CASE("sum and dot: scalar and AVX2 agree bit for bit") {
  const KernelTable& s = scalar_table();
  const KernelTable& v = avx2_table() ? *avx2_table() : s;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1e3, 1e3);
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 63u, 1000u, 4099u}) {
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng);
    const double s1 = s.sum(a), v1 = v.sum(a);
    const double s2 = s.dot(a, b), v2 = v.dot(a, b);
    CHECK(std::memcmp(&s1, &v1, sizeof s1) == 0);
    CHECK(std::memcmp(&s2, &v2, sizeof s2) == 0);
    long double ref = 0;
    for (double x : a) ref += x;
    CHECK(std::abs(s1 - static_cast<double>(ref)) <= 1e-9 * std::max(1.0, std::abs(s1)) + 1e-9);
  }
}

TEST_CASE("sum uses four interleaved partial sums") {
  // 1e16 + 1 - 1e16 depends on grouping; pin the documented order.
  const std::vector<double> a{1e16, 1.0, -1e16, 1.0, 1.0};
  const double lane0 = 1e16 + 1.0 /* items 0 and 4 */, lane1 = 1.0, lane2 = -1e16, lane3 = 1.0;
  const double want = (lane0 + lane1) + (lane2 + lane3);
  CHECK(scalar_table().sum(a) == want);
  if (avx2_table()) CHECK(avx2_table()->sum(a) == want);
}

TEST_CASE("project and unproject: scalar and AVX2 agree bit for bit") {
  const KernelTable& s = scalar_table();
  const KernelTable& v = avx2_table() ? *avx2_table() : s;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(-10, 10);
  for (std::size_t n : {1u, 3u, 4u, 5u, 31u, 1024u, 5003u}) {
    std::vector<double> x(n), y(n), z(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = coord(rng), y[i] = coord(rng), z[i] = coord(rng);
    if (n > 3) z[2] = 0.0, z[3] = -0.0;  // degenerate depths
    ProjectInputs in{x, y, z, random_rotation3(rng), {coord(rng), coord(rng), coord(rng)},
                     {300, 310, 160.5, 95.5}, 1e-6, -1, 320, -1, 192};
    std::vector<std::int32_t> px1(n), py1(n), px2(n), py2(n);
    std::vector<double> d1(n), d2(n);
    std::vector<std::uint8_t> a1(n), a2(n);
    s.project_points(in, {px1, py1, d1, a1});
    v.project_points(in, {px2, py2, d2, a2});
    CHECK(a1 == a2);
    for (std::size_t i = 0; i < n; ++i) {
      if (!a1[i]) continue;
      CHECK(px1[i] == px2[i]);
      CHECK(py1[i] == py2[i]);
      CHECK(std::memcmp(&d1[i], &d2[i], sizeof(double)) == 0);
    }

    std::vector<double> u(n), vv(n), depth(n);
    std::uniform_real_distribution<double> pix(-0.5, 320), dep(0.01, 50);
    for (std::size_t i = 0; i < n; ++i) u[i] = pix(rng), vv[i] = pix(rng), depth[i] = dep(rng);
    for (bool ray : {false, true}) {
      UnprojectInputs ui{u, vv, depth, {300, 310, 160.5, 95.5}, random_rotation3(rng),
                         {coord(rng), coord(rng), coord(rng)}, ray};
      std::vector<double> ox1(n), oy1(n), oz1(n), ox2(n), oy2(n), oz2(n);
      s.unproject_points(ui, {ox1, oy1, oz1});
      v.unproject_points(ui, {ox2, oy2, oz2});
      CHECK(same_bits(ox1, ox2));
      CHECK(same_bits(oy1, oy2));
      CHECK(same_bits(oz1, oz2));
    }
  }
}

TEST_CASE("project rejects points behind the near plane and outside the window") {
  const std::vector<double> x{0, 0, 0, 100}, y{0, 0, 0, 0}, z{-1, 1, -1e-7, -1};
  ProjectInputs in{x, y, z, {{1, 0, 0, 0, 1, 0, 0, 0, 1}}, {0, 0, 0}, {10, 10, 5, 5}, 1e-6, 0, 10, 0, 10};
  std::vector<std::int32_t> px(4), py(4);
  std::vector<double> d(4);
  std::vector<std::uint8_t> acc(4);
  for (const KernelTable* t : {&scalar_table(), avx2_table()}) {
    if (!t) continue;
    t->project_points(in, {px, py, d, acc});
    CHECK(acc == std::vector<std::uint8_t>{1, 0, 0, 0});
    CHECK(px[0] == 5);
    CHECK(d[0] == 1.0);
  }
}
