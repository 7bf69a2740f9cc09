// worldwalk: scripted offline runs and the live WebSocket service.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "worldwalk/error.hpp"
#include "worldwalk/offline.hpp"
#include "worldwalk/server.hpp"

using namespace worldwalk;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct RunFlags {
  std::string image, depth, depth_format = "pfm", scene, script, actions, generator = "passthrough";
  std::string depth_mode = "ray", out, manifest;
  double depth_scale = 1.0;
  std::optional<double> eta, theta;
  std::optional<int> frames;
  int splat_radius = 1, stride = 1;
  double timeout_s = 300.0;
  std::uint64_t seed = 0;
};

int do_run(const RunFlags& f) {
  RunOptions o;
  try {
    if (!f.manifest.empty()) {
      o = options_from_manifest(nlohmann::json::parse(slurp(f.manifest)));
      if (f.out.empty()) throw InvalidArgument("--out is required");
      o.out = f.out;
      return run_offline(o, std::cerr);
    }
    if (f.out.empty()) throw InvalidArgument("--out is required");
    o.out = f.out;
    if (!f.scene.empty()) o.config.scene = load_scene(f.scene);
    if (!f.image.empty()) o.image = f.image;
    if (!f.depth.empty()) o.depth = f.depth;
    if (o.image && !o.depth && !o.config.scene) throw InvalidArgument("--image needs --depth or --scene");
    if (!o.image && !o.config.scene) o.config.scene = SceneDescription{};  // default box room
    if (f.depth_format == "pfm") {
      o.depth_format = DepthFormat::kPfm;
    } else if (f.depth_format == "png16") {
      o.depth_format = DepthFormat::kPng16;
    } else {
      throw InvalidArgument("--depth-format must be pfm or png16");
    }
    o.depth_scale = f.depth_scale;
    if (!(o.depth_scale > 0.0)) throw InvalidArgument("--depth-scale must be positive");
    if (f.depth_mode == "ray") {
      o.config.depth_mode = DepthMode::kRayDistance;
    } else if (f.depth_mode == "z") {
      o.config.depth_mode = DepthMode::kZDepth;
    } else {
      throw InvalidArgument("--depth-mode must be ray or z");
    }
    if (f.eta) o.config.defaults.eta = *f.eta;
    if (f.theta) o.config.defaults.theta_deg = *f.theta;
    if (f.frames) o.config.defaults.frames = *f.frames;
    o.config.render.splat_radius = f.splat_radius;
    o.config.stride = f.stride;
    o.config.validate();
    o.generator = f.generator;
    o.generator_timeout = std::chrono::milliseconds(static_cast<long long>(f.timeout_s * 1000.0));
    o.seed = f.seed;
    make_generator(o.generator, o.generator_timeout);  // reject bad specs before any output

    if (f.script.empty() == f.actions.empty()) throw InvalidArgument("give exactly one of --script or --actions");
    const std::string text = f.actions.empty() ? slurp(f.script) : f.actions;
    try {
      o.script = parse_script(text, o.config.defaults);
    } catch (const ParseError& e) {
      std::cerr << "parse error in " << (f.actions.empty() ? f.script : std::string("--actions")) << ": "
                << e.what() << '\n';
      return kExitParse;
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: bad manifest: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return run_offline(o, std::cerr);
}

struct ServeFlags {
  std::string bind, scene, generator = "passthrough", static_dir;
  std::size_t queue_depth = 8;
};

int do_serve(const ServeFlags& f) {
  ServerConfig cfg;
  try {
    cfg.apply_environment();
    if (!f.bind.empty()) {
      const auto colon = f.bind.rfind(':');
      if (colon == std::string::npos) throw InvalidArgument("--bind must be host:port");
      cfg.host = f.bind.substr(0, colon);
      cfg.port = static_cast<std::uint16_t>(std::stoi(f.bind.substr(colon + 1)));
    }
    if (!f.scene.empty()) cfg.session.scene = load_scene(f.scene);
    if (!cfg.session.scene) cfg.session.scene = SceneDescription{};
    cfg.generator = f.generator;
    cfg.queue_depth = f.queue_depth;
    if (!f.static_dir.empty()) cfg.static_dir = f.static_dir;
    make_generator(cfg.generator);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);  // inherited by server threads

  try {
    Server server(cfg);
    server.start();
    std::cerr << "listening on " << cfg.host << ':' << server.port() << '\n';
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"worldwalk: action-driven camera walks over point clouds"};
  app.require_subcommand(1);

  RunFlags rf;
  CLI::App* run = app.add_subcommand("run", "Run an action script offline and write frames and logs");
  run->add_option("--image", rf.image, "Scene image (PNG)");
  run->add_option("--depth", rf.depth, "Depth map for --image");
  run->add_option("--depth-format", rf.depth_format, "pfm or png16")->capture_default_str();
  run->add_option("--depth-scale", rf.depth_scale, "World units per stored depth unit")->capture_default_str();
  run->add_option("--scene", rf.scene, "Analytic scene JSON (ground truth)");
  run->add_option("--script", rf.script, "Action script file");
  run->add_option("--actions", rf.actions, "Inline action script, e.g. \"W,W,A\"");
  run->add_option("--eta", rf.eta, "Translation per frame");
  run->add_option("--theta", rf.theta, "Yaw per action, degrees");
  run->add_option("--frames", rf.frames, "Frames per action");
  run->add_option("--generator", rf.generator, "passthrough, holefill or external:<cmd>")->capture_default_str();
  run->add_option("--splat-radius", rf.splat_radius)->capture_default_str();
  run->add_option("--stride", rf.stride, "Pixel stride when building point clouds")->capture_default_str();
  run->add_option("--depth-mode", rf.depth_mode, "ray or z")->capture_default_str();
  run->add_option("--out", rf.out, "Output directory");
  run->add_option("--seed", rf.seed, "Reserved for stochastic generators")->capture_default_str();
  run->add_option("--manifest", rf.manifest, "Rerun from a manifest.json");
  run->add_option("--timeout", rf.timeout_s, "External generator timeout, seconds")->capture_default_str();

  ServeFlags sf;
  CLI::App* serve = app.add_subcommand("serve", "Serve interactive sessions over WebSocket");
  serve->add_option("--bind", sf.bind, "host:port (default 127.0.0.1:8765 or $WORLDWALK_BIND)");
  serve->add_option("--scene", sf.scene, "Scene JSON (default $WORLDWALK_SCENE or a box room)");
  serve->add_option("--generator", sf.generator)->capture_default_str();
  serve->add_option("--static-dir", sf.static_dir, "Serve UI assets from this directory");
  serve->add_option("--queue-depth", sf.queue_depth)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }
  if (*run) return do_run(rf);
  return do_serve(sf);
}
