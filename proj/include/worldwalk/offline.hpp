#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "worldwalk/depth.hpp"
#include "worldwalk/script.hpp"
#include "worldwalk/session.hpp"

namespace worldwalk {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitParse = 2,
  kExitStep = 3,
  kExitIo = 4,
};

struct RunOptions {
  SessionConfig config;
  std::optional<std::filesystem::path> image;
  std::optional<std::filesystem::path> depth;
  DepthFormat depth_format = DepthFormat::kPfm;
  double depth_scale = 1.0;
  ActionScript script;
  std::string generator = "passthrough";
  std::chrono::milliseconds generator_timeout = ExternalGenerator::kDefaultTimeout;
  std::uint64_t seed = 0;  // reserved for stochastic generators
  std::filesystem::path out;
};

/// Everything needed to reproduce a run, as written to manifest.json.
nlohmann::json manifest_json(const RunOptions& options);
RunOptions options_from_manifest(const nlohmann::json& manifest);

/// Writes step_NNN/frame_KKK.png, poses.json, cache_log.json, metrics.json
/// and manifest.json under options.out. A failed step leaves a PARTIAL marker
/// next to whatever was written. Returns an ExitCode.
int run_offline(const RunOptions& options, std::ostream& log);

}  // namespace worldwalk
