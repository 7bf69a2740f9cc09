#include "worldwalk/offline.hpp"

#include <cstdio>
#include <fstream>

#include "worldwalk/error.hpp"
#include "worldwalk/metrics.hpp"
#include "worldwalk/png_io.hpp"
#include "worldwalk/wire.hpp"

namespace worldwalk {

namespace fs = std::filesystem;

namespace {

std::string numbered(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03d", prefix, n);
  return buf;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

nlohmann::json retrieval_json(const RetrievalResult& r) {
  nlohmann::json arr = nlohmann::json::array();
  for (const RetrievedEntry& e : r.selected) arr.push_back({{"index", e.index}, {"score", e.score}});
  return arr;
}

}  // namespace

nlohmann::json manifest_json(const RunOptions& o) {
  nlohmann::json actions = nlohmann::json::array();
  for (const Action& a : o.script.actions) actions.push_back(wire::action_json(a));
  return {{"format", "worldwalk-manifest/1"},
          {"config", config_json(o.config)},
          {"image", o.image ? nlohmann::json(fs::absolute(*o.image).string()) : nlohmann::json(nullptr)},
          {"depth", o.depth ? nlohmann::json(fs::absolute(*o.depth).string()) : nlohmann::json(nullptr)},
          {"depth_format", o.depth_format == DepthFormat::kPfm ? "pfm" : "png16"},
          {"depth_scale", o.depth_scale},
          {"actions", actions},
          {"generator", o.generator},
          {"generator_timeout_ms", o.generator_timeout.count()},
          {"seed", o.seed}};
}

RunOptions options_from_manifest(const nlohmann::json& m) {
  if (m.value("format", "") != "worldwalk-manifest/1") throw InvalidArgument("not a worldwalk manifest");
  RunOptions o;
  o.config = config_from_json(m.at("config"));
  if (!m.at("image").is_null()) o.image = m.at("image").get<std::string>();
  if (!m.at("depth").is_null()) o.depth = m.at("depth").get<std::string>();
  o.depth_format = m.at("depth_format").get<std::string>() == "png16" ? DepthFormat::kPng16 : DepthFormat::kPfm;
  o.depth_scale = m.at("depth_scale").get<double>();
  for (const auto& a : m.at("actions")) {
    Action action;
    action.keys = KeySet::parse(a.at("keys").get<std::string>());
    action.params.eta = a.at("eta").get<double>();
    action.params.theta_deg = a.at("theta_deg").get<double>();
    action.params.frames = a.at("frames").get<int>();
    action.params.validate();
    o.script.actions.push_back(action);
  }
  o.generator = m.at("generator").get<std::string>();
  o.generator_timeout = std::chrono::milliseconds(m.at("generator_timeout_ms").get<long long>());
  o.seed = m.at("seed").get<std::uint64_t>();
  return o;
}

int run_offline(const RunOptions& options, std::ostream& log) {
  const fs::path& out = options.out;
  SessionState state;
  std::unique_ptr<Generator> generator;
  try {
    fs::create_directories(out);
    fs::remove(out / "PARTIAL");
    write_json(out / "manifest.json", manifest_json(options));

    std::optional<Frame> image;
    std::optional<DepthMap> depth;
    if (options.image) image = png::read_rgb(*options.image);
    if (options.depth) {
      std::optional<std::pair<int, int>> size;
      if (image) size = std::make_pair(image->width, image->height);
      depth = load_depth(*options.depth, options.depth_format, options.depth_scale, size);
    }
    state = init_session(options.config, std::move(image), std::move(depth));
    generator = make_generator(options.generator, options.generator_timeout);
  } catch (const IoError& e) {
    log << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    log << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    log << "setup failed: " << e.what() << '\n';
    return kExitUsage;
  }

  const SessionConfig& config = *state.config;
  nlohmann::json trajectories = nlohmann::json::array();
  nlohmann::json cache_log = nlohmann::json::array();
  nlohmann::json step_metrics = nlohmann::json::array();
  FrameError overall;
  int exit_code = kExitOk;

  auto flush = [&] {
    write_json(out / "poses.json", {{"trajectories", trajectories}});
    write_json(out / "cache_log.json", cache_log);
    nlohmann::json metrics{{"ground_truth", config.scene.has_value()}};
    if (config.scene) {
      metrics["steps"] = step_metrics;
      metrics["valid_fraction"] = overall.valid_fraction();
      metrics["mean_abs_error"] = overall.mean_abs_error();
      metrics["mean_abs_error_strict"] = overall.mean_abs_error_strict();
    }
    write_json(out / "metrics.json", metrics);
  };

  try {
    for (const Action& action : options.script.actions) {
      StepResult r;
      try {
        r = step(state, action, *generator);
      } catch (const std::exception& e) {
        log << "step " << state.step + 1 << " failed: " << e.what() << '\n';
        std::ofstream marker(out / "PARTIAL");
        marker << "step " << state.step + 1 << " failed: " << e.what() << '\n';
        exit_code = kExitStep;
        break;
      }
      const int n = r.state.step;
      const fs::path dir = out / numbered("step", n);
      fs::create_directories(dir);
      for (std::size_t k = 0; k < r.frames.size(); ++k) {
        png::write_rgb(dir / (numbered("frame", static_cast<int>(k) + 1) + ".png"), r.frames[k]);
      }

      nlohmann::json poses = nlohmann::json::array();
      for (const CameraPose& p : r.trajectory.poses) poses.push_back(wire::pose_json(p));
      trajectories.push_back({{"step", n}, {"action", wire::action_json(action)}, {"poses", poses}});
      cache_log.push_back({{"step", n},
                           {"occupancy", r.state.cache.occupancy()},
                           {"evicted", r.evicted},
                           {"retrieved", retrieval_json(r.retrieval)}});

      if (config.scene) {
        FrameError total;
        double min_valid = 1.0;
        for (std::size_t k = 0; k < r.frames.size(); ++k) {
          const Frame truth =
              analytic_render(*config.scene, config.intrinsics, r.trajectory.poses[k + 1]).first;
          const FrameError e = compare_frames(r.frames[k], r.pc_video[k].valid, truth);
          min_valid = std::min(min_valid, e.valid_fraction());
          total += e;
        }
        overall += total;
        step_metrics.push_back({{"step", n},
                                {"valid_fraction", total.valid_fraction()},
                                {"min_valid_fraction", min_valid},
                                {"mean_abs_error", total.mean_abs_error()},
                                {"mean_abs_error_strict", total.mean_abs_error_strict()}});
      }
      for (const StageTiming& t : r.timings) log << "  step " << n << ' ' << t.stage << ' ' << t.milliseconds << " ms\n";
      state = std::move(r.state);
    }
    flush();
  } catch (const std::exception& e) {
    log << "io error: " << e.what() << '\n';
    return kExitIo;
  }
  return exit_code;
}

}  // namespace worldwalk
