#include "worldwalk/depth.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "worldwalk/error.hpp"
#include "worldwalk/png_io.hpp"

namespace worldwalk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_cell(std::int64_t a, std::int64_t b, int face, std::uint64_t seed) {
  std::uint64_t h = mix(seed);
  h = mix(h ^ static_cast<std::uint64_t>(a));
  h = mix(h ^ static_cast<std::uint64_t>(b));
  return mix(h ^ static_cast<std::uint64_t>(face));
}

Rgb palette_color(std::uint64_t seed, bool light, std::uint64_t index) {
  const std::uint64_t h = mix(seed * 31 + (light ? 1 : 2) * 1000003ULL + index);
  const int base = light ? 150 : 20;
  const int span = light ? 106 : 90;
  return {static_cast<std::uint8_t>(base + (h & 0xffff) % span),
          static_cast<std::uint8_t>(base + ((h >> 16) & 0xffff) % span),
          static_cast<std::uint8_t>(base + ((h >> 32) & 0xffff) % span)};
}

Rgb checker(const SceneDescription& scene, double a, double b, int face) {
  const double cell = scene.checker_period / 2.0;
  const auto ia = static_cast<std::int64_t>(std::floor(a / cell));
  const auto ib = static_cast<std::int64_t>(std::floor(b / cell));
  const bool light = ((ia + ib) & 1) == 0;
  return palette_color(scene.palette_seed, light, hash_cell(ia, ib, face, scene.palette_seed) % 4);
}

// Nearest surface along origin + s * dir, s > 0. Writes the face id.
double intersect(const SceneDescription& scene, const Vec3& o, const Vec3& dir, int& face) {
  double best = kInf;
  face = -1;
  switch (scene.kind) {
    case SceneKind::kTexturedPlane: {
      if (dir.z < 0.0) {
        best = (-scene.plane_distance - o.z) / dir.z;
        face = 0;
      }
      break;
    }
    case SceneKind::kBoxRoom: {
      const double oc[3] = {o.x, o.y, o.z};
      const double dc[3] = {dir.x, dir.y, dir.z};
      for (int a = 0; a < 3; ++a) {
        if (dc[a] == 0.0) continue;
        const double wall = dc[a] > 0.0 ? scene.half_extents[a] : -scene.half_extents[a];
        const double s = (wall - oc[a]) / dc[a];
        if (s > 0.0 && s < best) {
          best = s;
          face = a * 2 + (dc[a] > 0.0 ? 1 : 0);
        }
      }
      break;
    }
    case SceneKind::kColumnField: {
      if (dir.y < 0.0) {
        best = (-scene.floor_height - o.y) / dir.y;
        face = 0;
      }
      const double qa = dir.x * dir.x + dir.z * dir.z;
      if (qa <= 0.0) break;
      for (std::size_t j = 0; j < scene.columns.size(); ++j) {
        const Column& c = scene.columns[j];
        const double px = o.x - c.x;
        const double pz = o.z - c.z;
        const double qb = 2.0 * (px * dir.x + pz * dir.z);
        const double qc = px * px + pz * pz - c.radius * c.radius;
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0) continue;
        const double s = (-qb - std::sqrt(disc)) / (2.0 * qa);
        if (s > 0.0 && s < best) {
          best = s;
          face = 1 + static_cast<int>(j);
        }
      }
      break;
    }
  }
  return best;
}

Rgb texture_for_face(const SceneDescription& scene, const Vec3& p, int face) {
  switch (scene.kind) {
    case SceneKind::kTexturedPlane:
      return checker(scene, p.x, p.y, 0);
    case SceneKind::kBoxRoom: {
      const int axis = face / 2;
      if (axis == 0) return checker(scene, p.z, p.y, face);
      if (axis == 1) return checker(scene, p.x, p.z, face);
      return checker(scene, p.x, p.y, face);
    }
    case SceneKind::kColumnField: {
      if (face == 0) return checker(scene, p.x, p.z, 0);
      const Column& c = scene.columns[static_cast<std::size_t>(face - 1)];
      const double arc = std::atan2(p.z - c.z, p.x - c.x) * c.radius;
      return checker(scene, arc, p.y, face);
    }
  }
  return {};
}

const char* kind_name(SceneKind k) {
  switch (k) {
    case SceneKind::kTexturedPlane: return "textured-plane";
    case SceneKind::kBoxRoom: return "box-room";
    case SceneKind::kColumnField: return "column-field";
  }
  return "";
}

}  // namespace

void SceneDescription::validate() const {
  if (!(checker_period > 0.0)) throw InvalidArgument("scene: checker_period must be > 0");
  switch (kind) {
    case SceneKind::kTexturedPlane:
      if (!(plane_distance > 0.0)) throw InvalidArgument("scene: plane_distance must be > 0");
      break;
    case SceneKind::kBoxRoom:
      for (double e : half_extents) {
        if (!(e > 0.0)) throw InvalidArgument("scene: half_extents must be > 0");
      }
      break;
    case SceneKind::kColumnField:
      if (!(floor_height > 0.0)) throw InvalidArgument("scene: floor_height must be > 0");
      for (const Column& c : columns) {
        if (!(c.radius > 0.0)) throw InvalidArgument("scene: column radius must be > 0");
      }
      break;
  }
}

bool SceneDescription::in_free_space(const Vec3& p) const {
  switch (kind) {
    case SceneKind::kTexturedPlane:
      return p.z > -plane_distance;
    case SceneKind::kBoxRoom:
      return std::abs(p.x) < half_extents[0] && std::abs(p.y) < half_extents[1] &&
             std::abs(p.z) < half_extents[2];
    case SceneKind::kColumnField:
      if (!(p.y > -floor_height)) return false;
      for (const Column& c : columns) {
        if (std::hypot(p.x - c.x, p.z - c.z) <= c.radius) return false;
      }
      return true;
  }
  return false;
}

void to_json(nlohmann::json& j, const SceneDescription& s) {
  j = nlohmann::json{{"kind", kind_name(s.kind)},
                     {"plane_distance", s.plane_distance},
                     {"half_extents", s.half_extents},
                     {"floor_height", s.floor_height},
                     {"checker_period", s.checker_period},
                     {"palette_seed", s.palette_seed},
                     {"sky", {s.sky.r, s.sky.g, s.sky.b}}};
  nlohmann::json cols = nlohmann::json::array();
  for (const Column& c : s.columns) cols.push_back({{"x", c.x}, {"z", c.z}, {"radius", c.radius}});
  j["columns"] = cols;
}

void from_json(const nlohmann::json& j, SceneDescription& s) {
  static const char* kKnown[] = {"kind",           "plane_distance", "half_extents",
                                 "floor_height",   "columns",        "checker_period",
                                 "palette_seed",   "sky"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(kKnown), std::end(kKnown),
                     [&](const char* k) { return key == k; }) == std::end(kKnown)) {
      throw InvalidArgument("scene: unknown key '" + key + "'");
    }
  }
  s = SceneDescription{};
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "textured-plane") {
    s.kind = SceneKind::kTexturedPlane;
  } else if (kind == "box-room") {
    s.kind = SceneKind::kBoxRoom;
  } else if (kind == "column-field") {
    s.kind = SceneKind::kColumnField;
  } else {
    throw InvalidArgument("scene: unknown kind '" + kind + "'");
  }
  s.plane_distance = j.value("plane_distance", s.plane_distance);
  s.half_extents = j.value("half_extents", s.half_extents);
  s.floor_height = j.value("floor_height", s.floor_height);
  s.checker_period = j.value("checker_period", s.checker_period);
  s.palette_seed = j.value("palette_seed", s.palette_seed);
  if (j.contains("sky")) {
    const auto sky = j.at("sky").get<std::array<int, 3>>();
    s.sky = {static_cast<std::uint8_t>(sky[0]), static_cast<std::uint8_t>(sky[1]),
             static_cast<std::uint8_t>(sky[2])};
  }
  if (j.contains("columns")) {
    for (const auto& c : j.at("columns")) {
      s.columns.push_back({c.at("x").get<double>(), c.at("z").get<double>(),
                           c.value("radius", 0.5)});
    }
  }
  s.validate();
}

SceneDescription load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file " + path.string());
  try {
    return nlohmann::json::parse(in).get<SceneDescription>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("scene file " + path.string() + ": " + e.what());
  }
}

Rgb scene_texture(const SceneDescription& scene, const Vec3& point) {
  // Identify the face by proximity; only used for points already on a surface.
  int face = 0;
  switch (scene.kind) {
    case SceneKind::kTexturedPlane:
      break;
    case SceneKind::kBoxRoom: {
      const double pc[3] = {point.x, point.y, point.z};
      double best = kInf;
      for (int a = 0; a < 3; ++a) {
        const double gap = std::abs(scene.half_extents[a] - std::abs(pc[a]));
        if (gap < best) {
          best = gap;
          face = a * 2 + (pc[a] > 0.0 ? 1 : 0);
        }
      }
      break;
    }
    case SceneKind::kColumnField: {
      double best = std::abs(point.y + scene.floor_height);
      for (std::size_t j = 0; j < scene.columns.size(); ++j) {
        const Column& c = scene.columns[j];
        const double gap = std::abs(std::hypot(point.x - c.x, point.z - c.z) - c.radius);
        if (gap < best) {
          best = gap;
          face = 1 + static_cast<int>(j);
        }
      }
      break;
    }
  }
  return texture_for_face(scene, point, face);
}

GroundTruthSample analytic_sample(const SceneDescription& scene, const CameraIntrinsics& intr,
                                  const CameraPose& pose, double u, double v) {
  const Vec3 ray_camera{(u - intr.cx) / intr.fx, -((v - intr.cy) / intr.fy), -1.0};
  const Vec3 dir = pose.rotation.matrix() * ray_camera;
  int face = -1;
  // The camera-space ray has unit -z, so the ray parameter is the z-depth.
  const double s = intersect(scene, pose.translation, dir, face);
  GroundTruthSample out;
  if (face < 0 || !std::isfinite(s)) {
    out.color = scene.sky;
    return out;
  }
  out.hit = true;
  out.depth = s;
  out.color = texture_for_face(scene, pose.translation + dir * s, face);
  return out;
}

std::pair<Frame, DepthMap> analytic_render(const SceneDescription& scene,
                                           const CameraIntrinsics& intr, const CameraPose& pose) {
  scene.validate();
  intr.validate();
  if (!scene.in_free_space(pose.translation)) {
    throw InvalidArgument("analytic_render: camera outside the scene's free space");
  }
  Frame frame(intr.width, intr.height);
  DepthMap depth(intr.width, intr.height);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const GroundTruthSample s = analytic_sample(scene, intr, pose, u, v);
      frame.set(u, v, s.color);
      if (s.hit) depth.set(u, v, s.depth);
    }
  }
  return {std::move(frame), std::move(depth)};
}

void convert_depth_mode(DepthMap& depth, const CameraIntrinsics& intr, DepthMode from,
                        DepthMode to) {
  if (from == to) return;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const double dx = (u - intr.cx) / intr.fx;
      const double dy = (v - intr.cy) / intr.fy;
      const double len = std::sqrt(dx * dx + dy * dy + 1.0);
      const std::size_t i = static_cast<std::size_t>(v) * depth.width + u;
      depth.values[i] = to == DepthMode::kRayDistance ? depth.values[i] * len
                                                      : depth.values[i] / len;
    }
  }
}

// ---------------------------------------------------------------------------
// Files

DepthMap parse_pfm(std::span<const std::uint8_t> bytes) {
  // Header: "Pf" <ws> width <ws> height <ws> scale <single ws> raster.
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
  };
  auto token = [&] {
    skip_ws();
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  const std::string magic = token();
  if (magic != "Pf") throw IoError("pfm: expected grayscale 'Pf' header, got '" + magic + "'");
  int width = 0, height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(token());
    height = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::exception&) {
    throw IoError("pfm: malformed header");
  }
  if (width <= 0 || height <= 0 || scale == 0.0 || !std::isfinite(scale)) {
    throw IoError("pfm: malformed header");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw IoError("pfm: malformed header");
  ++pos;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < count * 4) throw IoError("pfm: truncated raster");

  const bool little = scale < 0.0;
  DepthMap depth(width, height);
  for (int row = 0; row < height; ++row) {
    const int v = height - 1 - row;  // stored bottom-up
    for (int u = 0; u < width; ++u) {
      std::uint8_t b[4];
      std::memcpy(b, bytes.data() + pos + (static_cast<std::size_t>(row) * width + u) * 4, 4);
      if (little != (std::endian::native == std::endian::little)) {
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
      }
      float value;
      std::memcpy(&value, b, 4);
      depth.set(u, v, static_cast<double>(value));
    }
  }
  return depth;
}

std::vector<std::uint8_t> encode_pfm(const DepthMap& depth) {
  std::ostringstream header;
  header << "Pf\n" << depth.width << ' ' << depth.height << "\n-1.0\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(out.size() + depth.pixel_count() * 4);
  for (int row = 0; row < depth.height; ++row) {
    const int v = depth.height - 1 - row;
    for (int u = 0; u < depth.width; ++u) {
      const float value = depth.is_valid(u, v) ? static_cast<float>(depth.at(u, v))
                                               : std::numeric_limits<float>::quiet_NaN();
      std::uint8_t b[4];
      std::memcpy(b, &value, 4);
      if constexpr (std::endian::native == std::endian::big) {
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
      }
      out.insert(out.end(), b, b + 4);
    }
  }
  return out;
}

DepthMap load_depth(const std::filesystem::path& path, DepthFormat format, double scale,
                    std::optional<std::pair<int, int>> expected_size) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("load_depth: scale must be > 0");
  const std::vector<std::uint8_t> bytes = png::read_file(path);
  DepthMap depth;
  if (format == DepthFormat::kPfm) {
    depth = parse_pfm(bytes);
    for (std::size_t i = 0; i < depth.values.size(); ++i) {
      depth.values[i] *= scale;
      depth.valid[i] = (std::isfinite(depth.values[i]) && depth.values[i] > 0.0) ? 1 : 0;
    }
  } else {
    const png::Gray16 g = png::decode_gray16(bytes);
    depth = DepthMap(g.width, g.height);
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const double value = g.values[i] * scale;
      depth.values[i] = value;
      depth.valid[i] = value > 0.0 ? 1 : 0;
    }
  }
  if (expected_size && (depth.width != expected_size->first || depth.height != expected_size->second)) {
    throw IoError("load_depth: " + path.string() + " is " + std::to_string(depth.width) + "x" +
                  std::to_string(depth.height) + ", paired image is " +
                  std::to_string(expected_size->first) + "x" + std::to_string(expected_size->second));
  }
  return depth;
}

void save_depth(const std::filesystem::path& path, const DepthMap& depth, DepthFormat format,
                double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("save_depth: scale must be > 0");
  if (format == DepthFormat::kPfm) {
    DepthMap scaled = depth;
    for (double& v : scaled.values) v /= scale;
    png::write_file(path, encode_pfm(scaled));
    return;
  }
  png::Gray16 g{depth.width, depth.height, std::vector<std::uint16_t>(depth.pixel_count(), 0)};
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    if (!depth.valid[i]) continue;
    const double q = std::round(depth.values[i] / scale);
    if (q < 1.0 || q > 65535.0) throw InvalidArgument("save_depth: value out of PNG16 range");
    g.values[i] = static_cast<std::uint16_t>(q);
  }
  png::write_file(path, png::encode_gray16(g));
}

DepthMap depth_from_render(const RenderOutput& render) {
  DepthMap depth(render.color.width, render.color.height);
  for (std::size_t i = 0; i < render.depth.size(); ++i) {
    depth.values[i] = render.depth[i];
    depth.valid[i] = (std::isfinite(render.depth[i]) && render.depth[i] > 0.0) ? 1 : 0;
  }
  return depth;
}

}  // namespace worldwalk
