#include "worldwalk/generator.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include "worldwalk/error.hpp"
#include "worldwalk/wire.hpp"

namespace worldwalk {

GeneratorOutput PassthroughGenerator::generate(const GeneratorInput& input) {
  GeneratorOutput out;
  out.frames.reserve(input.pc_video->size());
  for (const RenderOutput& r : *input.pc_video) out.frames.push_back(r.color);
  return out;
}

Frame fill_holes(const RenderOutput& render, const LatentFrame* latent, Rgb background) {
  Frame out = render.color;
  const int w = out.width;
  const int h = out.height;
  const std::size_t plane =
      latent != nullptr ? static_cast<std::size_t>(latent->height) * latent->width : 0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t p = static_cast<std::size_t>(v) * w + u;
      if (render.valid[p]) continue;
      if (latent == nullptr) {
        out.set(u, v, background);
        continue;
      }
      const int lx = static_cast<int>(static_cast<long long>(u) * latent->width / w);
      const int ly = static_cast<int>(static_cast<long long>(v) * latent->height / h);
      const std::size_t at = static_cast<std::size_t>(ly) * latent->width + lx;
      std::uint8_t rgb[3];
      for (int c = 0; c < 3; ++c) {
        const double value = latent->values[(c % latent->channels) * plane + at];
        rgb[c] = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 1.0) * 255.0));
      }
      out.set(u, v, {rgb[0], rgb[1], rgb[2]});
    }
  }
  return out;
}

GeneratorOutput HoleFillGenerator::generate(const GeneratorInput& input) {
  const LatentFrame* best =
      input.history.selected.empty() ? nullptr : input.history.selected.front().latent.get();
  GeneratorOutput out;
  out.frames.reserve(input.pc_video->size());
  for (const RenderOutput& r : *input.pc_video) out.frames.push_back(fill_holes(r, best, background_));
  return out;
}

// ---------------------------------------------------------------------------

class ExternalGenerator::Process {
 public:
  explicit Process(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (pipe2(to_child, O_CLOEXEC) != 0 || pipe2(from_child, O_CLOEXEC) != 0) {
      throw GeneratorError(GeneratorErrorKind::kProcess, std::string("pipe: ") + std::strerror(errno));
    }
    pid_ = fork();
    if (pid_ < 0) throw GeneratorError(GeneratorErrorKind::kProcess, "fork failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    stdin_fd_ = to_child[1];
    stdout_fd_ = from_child[0];
  }

  ~Process() {
    if (stdin_fd_ >= 0) close(stdin_fd_);
    if (stdout_fd_ >= 0) close(stdout_fd_);
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
    }
  }

  void write_line(const std::string& line) {
    std::string data = line;
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = write(stdin_fd_, data.data() + off, data.size() - off);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        throw GeneratorError(GeneratorErrorKind::kProcess, "generator process closed its input");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        throw GeneratorError(GeneratorErrorKind::kTimeout, "generator timed out");
      }
      pollfd pfd{stdout_fd_, POLLIN, 0};
      const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
      if (ready < 0 && errno == EINTR) continue;
      if (ready == 0) continue;
      char chunk[65536];
      const ssize_t n = read(stdout_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw GeneratorError(GeneratorErrorKind::kProcess, "generator process exited");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string buffer_;
};

ExternalGenerator::ExternalGenerator(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (command_.empty()) throw InvalidArgument("external generator: empty command");
  // A dead child must surface as an error, not terminate us.
  signal(SIGPIPE, SIG_IGN);
}

ExternalGenerator::~ExternalGenerator() = default;

GeneratorOutput ExternalGenerator::generate(const GeneratorInput& input) {
  const std::string request = wire::generate_request(input).dump();
  if (!process_) process_ = std::make_unique<Process>(command_);
  try {
    process_->write_line(request);
    const std::string reply = process_->read_line(timeout_);
    return wire::parse_frames_response(reply, input.step, input.action.params.frames,
                                       input.first_frame->width, input.first_frame->height);
  } catch (const GeneratorError&) {
    // The child's stream position is unknown after any failure; start fresh next time.
    process_.reset();
    throw;
  }
}

std::unique_ptr<Generator> make_generator(const std::string& spec, std::chrono::milliseconds timeout) {
  if (spec == "passthrough") return std::make_unique<PassthroughGenerator>();
  if (spec == "holefill") return std::make_unique<HoleFillGenerator>();
  constexpr std::string_view kExternal = "external:";
  if (spec.rfind(kExternal, 0) == 0) {
    return std::make_unique<ExternalGenerator>(spec.substr(kExternal.size()), timeout);
  }
  throw InvalidArgument("unknown generator '" + spec + "'");
}

}  // namespace worldwalk
