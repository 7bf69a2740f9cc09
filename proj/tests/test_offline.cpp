#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "worldwalk/offline.hpp"
#include "worldwalk/png_io.hpp"

using namespace worldwalk;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "worldwalk_test_offline" / name;
  fs::remove_all(p);
  return p;
}

RunOptions small_run(const fs::path& out) {
  RunOptions o;
  o.config.intrinsics = CameraIntrinsics::centered(64, 48, 32);
  o.config.defaults.frames = 5;
  o.config.scene = SceneDescription{};
  o.script = parse_script("W,A,S", o.config.defaults);
  o.out = out;
  return o;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(e.path(), root).string()] = s.str();
  }
  return files;
}

}  // namespace

TEST_CASE("offline run writes the documented layout") {
  const fs::path out = fresh_dir("layout");
  std::ostringstream log;
  REQUIRE(run_offline(small_run(out), log) == kExitOk);
  for (int n = 1; n <= 3; ++n) {
    for (int k = 1; k <= 5; ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "step_%03d/frame_%03d.png", n, k);
      const Frame f = png::read_rgb(out / name);
      CHECK(f.width == 64);
      CHECK(f.height == 48);
    }
  }
  CHECK_FALSE(fs::exists(out / "step_001/frame_006.png"));
  CHECK_FALSE(fs::exists(out / "PARTIAL"));

  const auto poses = read_json(out / "poses.json").at("trajectories");
  REQUIRE(poses.size() == 3);
  CHECK(poses[0].at("poses").size() == 6);
  CHECK(poses[1].at("poses")[0] == poses[0].at("poses")[5]);
  CHECK(poses[2].at("action").at("keys") == "S");

  const auto cache = read_json(out / "cache_log.json");
  REQUIRE(cache.size() == 3);
  CHECK(cache[0].at("occupancy") == 2);
  CHECK(cache[2].at("occupancy") == 4);
  CHECK(cache[1].at("retrieved").size() == 2);
  CHECK(cache[1].at("retrieved")[0].contains("score"));

  const auto metrics = read_json(out / "metrics.json");
  CHECK(metrics.at("ground_truth") == true);
  CHECK(metrics.at("steps").size() == 3);
  CHECK(metrics.at("steps")[0].at("valid_fraction").get<double>() == 1.0);
  CHECK(read_json(out / "manifest.json").at("format") == "worldwalk-manifest/1");
}

TEST_CASE("rerunning from the manifest reproduces the tree bit for bit") {
  const fs::path a = fresh_dir("a"), b = fresh_dir("b");
  std::ostringstream log;
  REQUIRE(run_offline(small_run(a), log) == kExitOk);
  RunOptions again = options_from_manifest(read_json(a / "manifest.json"));
  again.out = b;
  REQUIRE(run_offline(again, log) == kExitOk);
  const auto ta = tree(a), tb = tree(b);
  CHECK(ta.size() == 3 * 5 + 4);
  CHECK(ta == tb);
}

TEST_CASE("a failing generator aborts with a partial marker") {
  const fs::path out = fresh_dir("partial");
  RunOptions o = small_run(out);
  o.generator = std::string("external:") + WORLDWALK_ECHO_GENERATOR + " fail-after 1";
  std::ostringstream log;
  CHECK(run_offline(o, log) == kExitStep);
  CHECK(fs::exists(out / "PARTIAL"));
  CHECK(fs::exists(out / "step_001/frame_005.png"));
  CHECK_FALSE(fs::exists(out / "step_002"));
  CHECK(read_json(out / "poses.json").at("trajectories").size() == 1);
}

TEST_CASE("missing inputs are IO failures") {
  RunOptions o = small_run(fresh_dir("io"));
  o.image = "/nonexistent/image.png";
  o.depth = "/nonexistent/depth.pfm";
  std::ostringstream log;
  CHECK(run_offline(o, log) == kExitIo);
}
