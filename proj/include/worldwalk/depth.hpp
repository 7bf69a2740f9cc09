#pragma once

// Depth sources: closed-form synthetic scenes (exact ground truth), depth
// files on disk, and the depth buffer of a previous render.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "worldwalk/geometry.hpp"
#include "worldwalk/image.hpp"
#include "worldwalk/pointcloud.hpp"

namespace worldwalk {

enum class SceneKind { kTexturedPlane, kBoxRoom, kColumnField };

struct Column {
  double x = 0.0;
  double z = 0.0;
  double radius = 0.5;
  bool operator==(const Column&) const = default;
};

struct SceneDescription {
  SceneKind kind = SceneKind::kBoxRoom;
  double plane_distance = 5.0;                        // textured-plane: surface z = -distance
  std::array<double, 3> half_extents{8.0, 3.0, 10.0};  // box-room, centered at the origin
  double floor_height = 1.5;                          // column-field: floor y = -floor_height
  std::vector<Column> columns;                        // column-field: vertical cylinders
  double checker_period = 1.0;  // one light and one dark cell per period
  std::uint64_t palette_seed = 7;
  Rgb sky{0, 0, 0};  // column-field rays that hit nothing

  /// Throws InvalidArgument unless every extent is positive.
  void validate() const;
  /// True when `point` lies strictly inside the scene's free space.
  bool in_free_space(const Vec3& point) const;
  bool operator==(const SceneDescription&) const = default;
};

void to_json(nlohmann::json& j, const SceneDescription& scene);
void from_json(const nlohmann::json& j, SceneDescription& scene);
SceneDescription load_scene(const std::filesystem::path& path);

struct GroundTruthSample {
  Rgb color;
  double depth = 0.0;  // z-depth; meaningful only when hit
  bool hit = false;
};

/// Closed-form ray cast through pixel (u, v). Does not check free space.
GroundTruthSample analytic_sample(const SceneDescription& scene, const CameraIntrinsics& intr,
                                  const CameraPose& pose, double u, double v);

/// Procedural surface color at a world point on the scene surface.
Rgb scene_texture(const SceneDescription& scene, const Vec3& point);

/// Color and z-depth at every pixel center. Throws InvalidArgument when the
/// camera is outside the free space.
std::pair<Frame, DepthMap> analytic_render(const SceneDescription& scene,
                                           const CameraIntrinsics& intr, const CameraPose& pose);

/// Converts z-depth to distance along the unit pixel ray (or back) in place.
void convert_depth_mode(DepthMap& depth, const CameraIntrinsics& intr, DepthMode from,
                        DepthMode to);

enum class DepthFormat { kPfm, kPng16 };

/// Values are multiplied by `scale`. Non-positive and NaN samples become invalid.
DepthMap load_depth(const std::filesystem::path& path, DepthFormat format, double scale = 1.0,
                    std::optional<std::pair<int, int>> expected_size = std::nullopt);
/// PFM is written as little-endian float32; PNG16 stores round(value / scale),
/// with invalid pixels written as 0.
void save_depth(const std::filesystem::path& path, const DepthMap& depth, DepthFormat format,
                double scale = 1.0);

DepthMap parse_pfm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pfm(const DepthMap& depth);

/// Copies the depth buffer; pixels with no point become invalid.
DepthMap depth_from_render(const RenderOutput& render);

}  // namespace worldwalk
