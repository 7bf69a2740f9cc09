#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "worldwalk/depth.hpp"
#include "worldwalk/error.hpp"
#include "worldwalk/png_io.hpp"

using namespace worldwalk;
namespace fs = std::filesystem;

namespace {

const CameraIntrinsics kSmall{100, 100, 50, 50, 101, 101};

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "worldwalk_test_depth";
  fs::create_directories(dir);
  return dir / name;
}

// Hand-assembled big-endian PFM (positive scale) with rows stored bottom-up.
std::vector<std::uint8_t> big_endian_pfm(int w, int h, const std::vector<float>& top_down) {
  const std::string header = "Pf\n" + std::to_string(w) + " " + std::to_string(h) + "\n1.0\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (int row = h - 1; row >= 0; --row) {
    for (int u = 0; u < w; ++u) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(top_down[row * w + u]);
      for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(bits >> s));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("analytic depth examples") {
  SceneDescription plane;
  plane.kind = SceneKind::kTexturedPlane;
  CHECK(analytic_sample(plane, kSmall, CameraPose::identity(), 50, 50).depth == 5.0);

  SceneDescription room;
  room.half_extents = {5, 5, 5};
  const auto s = analytic_sample(room, kSmall, CameraPose::identity(), 50, 50);
  CHECK(s.hit);
  CHECK(s.depth == 5.0);
  const auto side = analytic_sample(room, kSmall, {rotation_y(90), {}}, 50, 50);
  CHECK(side.depth == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("checker cells half a period wide alternate") {
  SceneDescription plane;
  plane.kind = SceneKind::kTexturedPlane;
  // Rays through u = 55 and u = 65 hit x = 0.25 and x = 0.75 on the plane at distance 5.
  const auto a = analytic_sample(plane, kSmall, CameraPose::identity(), 55, 45);
  const auto b = analytic_sample(plane, kSmall, CameraPose::identity(), 65, 45);
  CHECK_FALSE(a.color == b.color);
  // Two points inside the same cell share a color.
  const auto c = analytic_sample(plane, kSmall, CameraPose::identity(), 57, 47);
  CHECK(a.color == c.color);
}

TEST_CASE("textures are seed-deterministic") {
  SceneDescription a, b;
  b.palette_seed = 8;
  const auto fa = analytic_render(a, kSmall, CameraPose::identity()).first;
  CHECK(fa == analytic_render(a, kSmall, CameraPose::identity()).first);
  CHECK_FALSE(fa == analytic_render(b, kSmall, CameraPose::identity()).first);
}

TEST_CASE("analytic depth satisfies the surface equation") {
  const CameraIntrinsics intr = CameraIntrinsics::centered(320, 192, 160);
  const SceneDescription room;
  const CameraPose pose{rotation_y(70), {-3, 1, 4}};
  const auto [frame, depth] = analytic_render(room, intr, pose);
  CHECK(depth.valid_count() == depth.pixel_count());
  double worst = 0.0;
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Vec3 c = unproject(intr, {double(u), double(v)}, depth.at(u, v), DepthMode::kZDepth);
      worst = std::max(worst, std::abs(oracle::box_surface_distance(camera_to_world(pose, c), room.half_extents)));
    }
  }
  CHECK(worst < 1e-6);

  SceneDescription field;
  field.kind = SceneKind::kColumnField;
  field.columns = {{0, -6, 1.0}, {3, -4, 0.5}};
  const auto [ff, fd] = analytic_render(field, intr, CameraPose::identity());
  std::size_t sky = 0;
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      if (!fd.is_valid(u, v)) {
        ++sky;
        CHECK(ff.at(u, v) == field.sky);
        continue;
      }
      const Vec3 p = camera_to_world(CameraPose::identity(),
                                     unproject(intr, {double(u), double(v)}, fd.at(u, v), DepthMode::kZDepth));
      double d = std::abs(p.y + field.floor_height);
      for (const Column& col : field.columns) d = std::min(d, std::abs(std::hypot(p.x - col.x, p.z - col.z) - col.radius));
      CHECK(d < 1e-6);
    }
  }
  CHECK(sky > 0);
}

TEST_CASE("analytic_render rejects poses outside the room") {
  CHECK_THROWS_AS(analytic_render(SceneDescription{}, kSmall, {Rotation::identity(), {0, 0, 11}}), InvalidArgument);
  SceneDescription bad;
  bad.half_extents = {1, 0, 1};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("depth mode conversion is exact both ways") {
  const auto [frame, z] = analytic_render(SceneDescription{}, kSmall, CameraPose::identity());
  DepthMap ray = z;
  convert_depth_mode(ray, kSmall, DepthMode::kZDepth, DepthMode::kRayDistance);
  for (int v = 0; v < kSmall.height; v += 7) {
    for (int u = 0; u < kSmall.width; u += 7) {
      const Vec3 a = unproject(kSmall, {double(u), double(v)}, z.at(u, v), DepthMode::kZDepth);
      const Vec3 b = unproject(kSmall, {double(u), double(v)}, ray.at(u, v), DepthMode::kRayDistance);
      CHECK((a - b).norm() < 1e-12);
    }
  }
  DepthMap back = ray;
  convert_depth_mode(back, kSmall, DepthMode::kRayDistance, DepthMode::kZDepth);
  for (std::size_t i = 0; i < back.values.size(); ++i) CHECK(std::abs(back.values[i] - z.values[i]) < 1e-12);
}

TEST_CASE("load_depth: PFM examples") {
  const fs::path p = temp_path("two.pfm");
  DepthMap d(4, 3);
  for (int v = 0; v < 3; ++v)
    for (int u = 0; u < 4; ++u) d.set(u, v, 2.0);
  save_depth(p, d, DepthFormat::kPfm);
  const DepthMap loaded = load_depth(p, DepthFormat::kPfm);
  CHECK(loaded == d);

  std::vector<float> vals(12, 3.0f);
  vals[5] = std::nanf("");
  vals[0] = 1.0f;  // top-left
  png::write_file(p, big_endian_pfm(4, 3, vals));
  const DepthMap nan = load_depth(p, DepthFormat::kPfm, 0.5);
  CHECK_FALSE(nan.is_valid(1, 1));
  CHECK(nan.valid_count() == 11);
  CHECK(nan.at(0, 0) == 0.5);
  CHECK(nan.at(3, 2) == 1.5);

  CHECK_THROWS_AS(load_depth(p, DepthFormat::kPfm, 1.0, std::make_pair(5, 3)), IoError);
}

TEST_CASE("PFM parser rejects malformed input") {
  auto parse = [](const std::string& s) {
    return parse_pfm(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  };
  CHECK_THROWS_AS(parse("PF\n1 1\n-1.0\n0000"), IoError);  // color PFM
  CHECK_THROWS_AS(parse("Pf\nx 1\n-1.0\n0000"), IoError);
  CHECK_THROWS_AS(parse("Pf\n2 2\n-1.0\n0000"), IoError);  // truncated
  CHECK_THROWS_AS(parse("Pf\n1 1\n0\n0000"), IoError);
  CHECK_NOTHROW(parse(std::string("Pf\n1 1\n-1.0\n") + std::string(4, '\0')));
}

TEST_CASE("load_depth: PNG16 scaling and round trip") {
  const fs::path p = temp_path("d16.png");
  png::write_file(p, png::encode_gray16({2, 1, {1000, 0}}));
  const DepthMap d = load_depth(p, DepthFormat::kPng16, 0.001);
  CHECK(d.at(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(d.is_valid(1, 0));

  std::mt19937_64 rng(4);
  DepthMap m(17, 9);
  for (int v = 0; v < 9; ++v)
    for (int u = 0; u < 17; ++u) {
      if (rng() % 5 == 0) continue;
      m.set(u, v, static_cast<double>(1 + rng() % 60000) * 0.001);
    }
  save_depth(p, m, DepthFormat::kPng16, 0.001);
  const DepthMap r = load_depth(p, DepthFormat::kPng16, 0.001);
  CHECK(r.valid == m.valid);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    if (m.valid[i]) CHECK(r.values[i] == doctest::Approx(m.values[i]).epsilon(1e-12));

  const fs::path q = temp_path("rt.pfm");
  save_depth(q, m, DepthFormat::kPfm);
  const DepthMap f = load_depth(q, DepthFormat::kPfm);
  CHECK(f.valid == m.valid);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    if (m.valid[i]) CHECK(f.values[i] == static_cast<double>(static_cast<float>(m.values[i])));

  CHECK_THROWS_AS(load_depth(temp_path("missing.pfm"), DepthFormat::kPfm), IoError);
}

TEST_CASE("depth_from_render") {
  RenderOutput empty = render_point_cloud({}, kSmall, CameraPose::identity());
  CHECK(depth_from_render(empty).valid_count() == 0);

  PointCloud plane;
  for (int v = 0; v < 101; ++v)
    for (int u = 0; u < 101; ++u) plane.push_back(unproject(kSmall, {double(u), double(v)}, 3.0, DepthMode::kZDepth), {});
  const DepthMap d = depth_from_render(render_point_cloud(plane, kSmall, CameraPose::identity(), {0, {}}));
  CHECK(d.valid_count() == 101u * 101u);
  for (double x : d.values) CHECK(x == doctest::Approx(3.0).epsilon(1e-15));

  const CameraIntrinsics intr = CameraIntrinsics::centered(160, 96, 80);
  const auto [frame, truth] = analytic_render(SceneDescription{}, intr, CameraPose::identity());
  const PointCloud cloud = build_point_cloud(frame, truth, intr, CameraPose::identity(), 1, DepthMode::kZDepth);
  const DepthMap back = depth_from_render(render_point_cloud(cloud, intr, CameraPose::identity(), {0, {}}));
  for (std::size_t i = 0; i < back.values.size(); ++i) {
    REQUIRE(back.valid[i]);
    CHECK(std::abs(back.values[i] - truth.values[i]) < 1e-6);
  }
}

TEST_CASE("scene JSON round trip and strict keys") {
  SceneDescription s;
  s.kind = SceneKind::kColumnField;
  s.columns = {{1, -2, 0.3}};
  s.palette_seed = 99;
  nlohmann::json j = s;
  CHECK(j.get<SceneDescription>() == s);
  j["colour"] = 1;
  CHECK_THROWS(j.get<SceneDescription>());

  const fs::path p = temp_path("scene.json");
  std::ofstream(p) << R"({"kind": "textured-plane", "plane_distance": 3})";
  const SceneDescription loaded = load_scene(p);
  CHECK(loaded.kind == SceneKind::kTexturedPlane);
  CHECK(loaded.plane_distance == 3.0);
}
