#pragma once

// Interactive autoregressive loop. Each step maps an action to a trajectory,
// builds a point cloud from the current frame, renders it along the
// trajectory, retrieves history latents, runs the generator, and folds the
// generated frames back into the cache and the state.

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "worldwalk/depth.hpp"
#include "worldwalk/generator.hpp"
#include "worldwalk/geometry.hpp"
#include "worldwalk/history_cache.hpp"
#include "worldwalk/pointcloud.hpp"

namespace worldwalk {

enum class DepthFeedback {
  kAnalytic,  // query the synthetic scene at the new pose
  kRendered,  // depth buffer of the step's last render
  kFile,      // the initial depth, reused every step
};

struct SessionConfig {
  CameraIntrinsics intrinsics = CameraIntrinsics::centered(832, 480, 416.0);
  ActionParams defaults;
  RenderOptions render;
  int stride = 1;
  DepthMode depth_mode = DepthMode::kRayDistance;
  std::optional<DepthFeedback> feedback;  // unset: analytic with a scene, rendered otherwise
  std::optional<SceneDescription> scene;
  std::size_t cache_capacity = HistoryCache::kDefaultCapacity;
  int spatial_factor = PatchMeanEncoder::kDefaultSpatialFactor;
  int temporal_factor = PatchMeanEncoder::kDefaultTemporalFactor;

  DepthFeedback resolved_feedback() const;
  void validate() const;
};

nlohmann::json config_json(const SessionConfig& config);
SessionConfig config_from_json(const nlohmann::json& j);

struct SessionState {
  std::shared_ptr<const SessionConfig> config;
  CameraPose pose;
  Frame last_frame;
  DepthMap last_depth;  // in config->depth_mode semantics
  // Zero where last_frame is a hole: unrendered and still background after
  // generation. Empty when every pixel carries content.
  std::vector<std::uint8_t> last_content;
  DepthMap initial_depth;  // used by DepthFeedback::kFile
  HistoryCache cache;
  std::optional<LatentFrame> staged_pin;  // scene-image latent, pinned at the first update
  int step = 0;

  bool operator==(const SessionState& o) const;
};

/// Starts at the identity pose with an empty cache. Without an image, a
/// configured scene is rendered analytically at the start pose. Without a
/// depth map, the scene supplies depth.
SessionState init_session(const SessionConfig& config, std::optional<Frame> scene_image = std::nullopt,
                          std::optional<DepthMap> depth = std::nullopt);

struct StageTiming {
  std::string stage;
  double milliseconds = 0.0;
};

struct StepResult {
  std::vector<Frame> frames;  // f generated frames
  Trajectory trajectory;
  PointCloudVideo pc_video;
  RetrievalResult retrieval;
  std::vector<std::uint64_t> evicted;
  std::vector<StageTiming> timings;  // in pipeline order
  SessionState state;
};

/// Executes one interaction. `state` is never modified; on any exception the
/// caller's state is exactly as before.
StepResult step(const SessionState& state, const Action& action, Generator& generator);

/// Latent of a single frame under the session's encoder (the retrieval query).
LatentFrame frame_latent(const SessionConfig& config, const Frame& frame, LatentOrigin origin);

}  // namespace worldwalk
