#include "worldwalk/session.hpp"

#include <chrono>

#include "worldwalk/error.hpp"
#include "worldwalk/wire.hpp"

namespace worldwalk {

namespace {

const char* feedback_name(DepthFeedback f) {
  switch (f) {
    case DepthFeedback::kAnalytic: return "analytic";
    case DepthFeedback::kRendered: return "rendered";
    case DepthFeedback::kFile: return "file";
  }
  return "";
}

DepthFeedback feedback_from_name(const std::string& s) {
  if (s == "analytic") return DepthFeedback::kAnalytic;
  if (s == "rendered") return DepthFeedback::kRendered;
  if (s == "file") return DepthFeedback::kFile;
  throw InvalidArgument("unknown depth feedback '" + s + "'");
}

// A pixel the render left empty and the generator left at the background
// color is a hole; its depth must not seed the next cloud. Generators cannot
// report this themselves (the wire reply carries frames only), so every
// generator is judged the same way.
std::vector<std::uint8_t> content_mask(const RenderOutput& render, const Frame& frame, Rgb background) {
  std::vector<std::uint8_t> content(render.valid.size(), 1);
  bool any_hole = false;
  for (std::size_t i = 0; i < content.size(); ++i) {
    if (render.valid[i]) continue;
    const std::uint8_t* p = &frame.pixels[i * 3];
    if (p[0] == background.r && p[1] == background.g && p[2] == background.b) {
      content[i] = 0;
      any_hole = true;
    }
  }
  if (!any_hole) content.clear();
  return content;
}

DepthMap analytic_depth(const SessionConfig& config, const CameraPose& pose) {
  DepthMap depth = analytic_render(*config.scene, config.intrinsics, pose).second;
  convert_depth_mode(depth, config.intrinsics, DepthMode::kZDepth, config.depth_mode);
  return depth;
}

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}
  void mark(const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    out_.push_back({stage, std::chrono::duration<double, std::milli>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>& out_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace

DepthFeedback SessionConfig::resolved_feedback() const {
  if (feedback) return *feedback;
  return scene ? DepthFeedback::kAnalytic : DepthFeedback::kRendered;
}

void SessionConfig::validate() const {
  intrinsics.validate();
  defaults.validate();
  if (stride < 1) throw InvalidArgument("config: stride must be >= 1");
  if (render.splat_radius < 0) throw InvalidArgument("config: splat radius must be >= 0");
  if (cache_capacity < 1) throw InvalidArgument("config: cache capacity must be >= 1");
  if (spatial_factor < 1 || temporal_factor < 1) {
    throw InvalidArgument("config: encoder factors must be >= 1");
  }
  if (intrinsics.width % spatial_factor != 0 || intrinsics.height % spatial_factor != 0) {
    throw InvalidArgument("config: image size must be divisible by the spatial factor");
  }
  if ((defaults.frames - 1) % temporal_factor != 0) {
    throw InvalidArgument("config: frames must be 1 mod the temporal factor");
  }
  if (scene) scene->validate();
  if (resolved_feedback() == DepthFeedback::kAnalytic && !scene) {
    throw InvalidArgument("config: analytic depth feedback needs a scene");
  }
}

nlohmann::json config_json(const SessionConfig& c) {
  nlohmann::json j{{"intrinsics", wire::intrinsics_json(c.intrinsics)},
                   {"eta", c.defaults.eta},
                   {"theta_deg", c.defaults.theta_deg},
                   {"frames", c.defaults.frames},
                   {"splat_radius", c.render.splat_radius},
                   {"background", {c.render.background.r, c.render.background.g, c.render.background.b}},
                   {"stride", c.stride},
                   {"depth_mode", c.depth_mode == DepthMode::kZDepth ? "z-depth" : "ray-distance"},
                   {"depth_feedback", feedback_name(c.resolved_feedback())},
                   {"cache_capacity", c.cache_capacity},
                   {"spatial_factor", c.spatial_factor},
                   {"temporal_factor", c.temporal_factor}};
  j["scene"] = c.scene ? nlohmann::json(*c.scene) : nlohmann::json(nullptr);
  return j;
}

SessionConfig config_from_json(const nlohmann::json& j) {
  SessionConfig c;
  c.intrinsics = wire::intrinsics_from_json(j.at("intrinsics"));
  c.defaults.eta = j.at("eta").get<double>();
  c.defaults.theta_deg = j.at("theta_deg").get<double>();
  c.defaults.frames = j.at("frames").get<int>();
  c.render.splat_radius = j.at("splat_radius").get<int>();
  const auto bg = j.at("background").get<std::array<int, 3>>();
  c.render.background = {static_cast<std::uint8_t>(bg[0]), static_cast<std::uint8_t>(bg[1]),
                         static_cast<std::uint8_t>(bg[2])};
  c.stride = j.at("stride").get<int>();
  const std::string mode = j.at("depth_mode").get<std::string>();
  if (mode == "z-depth") {
    c.depth_mode = DepthMode::kZDepth;
  } else if (mode == "ray-distance") {
    c.depth_mode = DepthMode::kRayDistance;
  } else {
    throw InvalidArgument("unknown depth mode '" + mode + "'");
  }
  c.feedback = feedback_from_name(j.at("depth_feedback").get<std::string>());
  c.cache_capacity = j.at("cache_capacity").get<std::size_t>();
  c.spatial_factor = j.at("spatial_factor").get<int>();
  c.temporal_factor = j.at("temporal_factor").get<int>();
  if (!j.at("scene").is_null()) c.scene = j.at("scene").get<SceneDescription>();
  c.validate();
  return c;
}

bool SessionState::operator==(const SessionState& o) const {
  const bool same_config =
      config == o.config || (config && o.config && config_json(*config) == config_json(*o.config));
  return same_config && pose == o.pose && last_frame == o.last_frame && last_depth == o.last_depth &&
         last_content == o.last_content && initial_depth == o.initial_depth && cache == o.cache &&
         staged_pin == o.staged_pin && step == o.step;
}

LatentFrame frame_latent(const SessionConfig& config, const Frame& frame, LatentOrigin origin) {
  return encode_latents(std::span<const Frame>(&frame, 1), config.spatial_factor,
                        config.temporal_factor, origin)
      .front();
}

SessionState init_session(const SessionConfig& config, std::optional<Frame> scene_image,
                          std::optional<DepthMap> depth) {
  config.validate();
  const CameraIntrinsics& k = config.intrinsics;
  if (!scene_image || !depth) {
    if (!config.scene) throw InvalidArgument("init_session: need an image and depth, or a scene");
  }
  if (config.resolved_feedback() == DepthFeedback::kFile && !depth) {
    throw InvalidArgument("init_session: file depth feedback needs a depth map");
  }

  SessionState s;
  s.config = std::make_shared<const SessionConfig>(config);
  s.pose = CameraPose::identity();
  if (config.scene && (!scene_image || !depth)) {
    auto [frame, zdepth] = analytic_render(*config.scene, k, s.pose);
    if (!scene_image) scene_image = std::move(frame);
    if (!depth) {
      convert_depth_mode(zdepth, k, DepthMode::kZDepth, config.depth_mode);
      depth = std::move(zdepth);
    }
  }
  scene_image->validate();
  if (scene_image->width != k.width || scene_image->height != k.height) {
    throw InvalidArgument("init_session: image is " + std::to_string(scene_image->width) + "x" +
                          std::to_string(scene_image->height) + ", intrinsics expect " +
                          std::to_string(k.width) + "x" + std::to_string(k.height));
  }
  if (depth->width != k.width || depth->height != k.height) {
    throw InvalidArgument("init_session: depth size does not match the intrinsics");
  }
  s.last_frame = std::move(*scene_image);
  s.last_depth = *depth;
  s.initial_depth = std::move(*depth);
  s.cache = HistoryCache(config.cache_capacity);
  s.staged_pin = frame_latent(config, s.last_frame, {LatentOrigin::Kind::kSceneImage, 0, 1});
  return s;
}

StepResult step(const SessionState& state, const Action& action, Generator& generator) {
  const SessionConfig& config = *state.config;
  action.params.validate();
  if ((action.params.frames - 1) % config.temporal_factor != 0) {
    throw InvalidArgument("step: frames must be 1 mod the temporal factor");
  }

  StepResult result;
  StageClock clock(result.timings);
  const int n = state.step + 1;

  result.trajectory = action_to_trajectory(action, state.pose);
  clock.mark("trajectory");

  DepthMap cloud_depth = state.last_depth;
  if (!state.last_content.empty()) {
    for (std::size_t i = 0; i < cloud_depth.valid.size(); ++i) {
      if (!state.last_content[i]) cloud_depth.valid[i] = 0;
    }
  }
  const PointCloud cloud = build_point_cloud(state.last_frame, cloud_depth, config.intrinsics,
                                             state.pose, config.stride, config.depth_mode);
  clock.mark("point_cloud");

  result.pc_video = render_trajectory(cloud, config.intrinsics, result.trajectory, config.render);
  clock.mark("render");

  const LatentFrame query = frame_latent(config, state.last_frame, {LatentOrigin::Kind::kStep, n, 0});
  result.retrieval = retrieve(state.cache, query);
  clock.mark("retrieve");

  GeneratorInput input;
  input.step = n;
  input.first_frame = &state.last_frame;
  input.action = action;
  input.pc_video = &result.pc_video;
  input.history = result.retrieval;
  GeneratorOutput generated = generator.generate(input);
  clock.mark("generate");

  const int f = action.params.frames;
  if (static_cast<int>(generated.frames.size()) != f) {
    throw GeneratorError(GeneratorErrorKind::kWrongCount,
                         "generator returned " + std::to_string(generated.frames.size()) +
                             " frames, expected " + std::to_string(f));
  }
  for (const Frame& frame : generated.frames) {
    frame.validate();
    if (frame.width != config.intrinsics.width || frame.height != config.intrinsics.height) {
      throw GeneratorError(GeneratorErrorKind::kDimension, "generator frame has wrong dimensions");
    }
  }

  const std::vector<LatentFrame> latents =
      encode_latents(generated.frames, config.spatial_factor, config.temporal_factor,
                     {LatentOrigin::Kind::kStep, n, 0});
  HistoryCache cache = state.cache;
  if (state.staged_pin) cache = cache.with_pinned(*state.staged_pin);
  CacheUpdate update = cache_update(cache, latents);
  result.evicted = std::move(update.evicted);
  clock.mark("cache_update");

  SessionState next = state;
  next.pose = result.trajectory.final();
  next.last_frame = generated.frames.back();
  next.last_content = content_mask(result.pc_video.back(), next.last_frame, config.render.background);
  switch (config.resolved_feedback()) {
    case DepthFeedback::kAnalytic:
      next.last_depth = analytic_depth(config, next.pose);
      break;
    case DepthFeedback::kRendered: {
      DepthMap d = depth_from_render(result.pc_video.back());
      convert_depth_mode(d, config.intrinsics, DepthMode::kZDepth, config.depth_mode);
      next.last_depth = std::move(d);
      break;
    }
    case DepthFeedback::kFile:
      next.last_depth = state.initial_depth;
      break;
  }
  next.cache = std::move(update.cache);
  next.staged_pin.reset();
  next.step = n;
  clock.mark("depth_feedback");

  result.frames = std::move(generated.frames);
  result.state = std::move(next);
  return result;
}

}  // namespace worldwalk
