#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "worldwalk/geometry.hpp"
#include "worldwalk/history_cache.hpp"
#include "worldwalk/image.hpp"
#include "worldwalk/pointcloud.hpp"

namespace worldwalk {

/// Everything a frame generator is conditioned on for one interaction step.
struct GeneratorInput {
  int step = 0;  // n + 1, the step being generated
  const Frame* first_frame = nullptr;
  Action action;
  const PointCloudVideo* pc_video = nullptr;
  RetrievalResult history;
};

struct GeneratorOutput {
  std::vector<Frame> frames;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string name() const = 0;
  virtual GeneratorOutput generate(const GeneratorInput& input) = 0;
};

/// Returns the point-cloud video colors verbatim (holes stay background).
class PassthroughGenerator final : public Generator {
 public:
  std::string name() const override { return "passthrough"; }
  GeneratorOutput generate(const GeneratorInput& input) override;
};

/// Point-cloud colors with holes filled from the best retrieved latent,
/// upsampled nearest-neighbor. Without history, holes keep the background.
class HoleFillGenerator final : public Generator {
 public:
  explicit HoleFillGenerator(Rgb background = {}) : background_(background) {}
  std::string name() const override { return "holefill"; }
  GeneratorOutput generate(const GeneratorInput& input) override;

 private:
  Rgb background_;
};

/// Fills the invalid pixels of `render` from `latent` (values in [0, 1]).
Frame fill_holes(const RenderOutput& render, const LatentFrame* latent, Rgb background);

/// Child process speaking line-delimited JSON on stdin/stdout. The child is
/// started on first use and restarted after a timeout or crash.
class ExternalGenerator final : public Generator {
 public:
  static constexpr std::chrono::seconds kDefaultTimeout{300};

  explicit ExternalGenerator(std::string command,
                             std::chrono::milliseconds timeout = kDefaultTimeout);
  ~ExternalGenerator() override;
  ExternalGenerator(const ExternalGenerator&) = delete;
  ExternalGenerator& operator=(const ExternalGenerator&) = delete;

  std::string name() const override { return "external:" + command_; }
  GeneratorOutput generate(const GeneratorInput& input) override;

 private:
  class Process;
  std::string command_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<Process> process_;
};

/// "passthrough", "holefill" or "external:<command>". Throws InvalidArgument.
std::unique_ptr<Generator> make_generator(const std::string& spec,
                                          std::chrono::milliseconds timeout =
                                              ExternalGenerator::kDefaultTimeout);

}  // namespace worldwalk
