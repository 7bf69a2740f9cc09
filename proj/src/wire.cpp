#include "worldwalk/wire.hpp"

#include <boost/beast/core/detail/base64.hpp>

#include "worldwalk/error.hpp"
#include "worldwalk/png_io.hpp"

namespace worldwalk::wire {

namespace b64 = boost::beast::detail::base64;

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  // Padded encoding only; the decoder stops at the first '=' so padding is
  // stripped here and everything before it must be consumed.
  if (text.size() % 4 != 0) throw InvalidArgument("base64: length is not a multiple of 4");
  std::size_t body = text.size();
  for (int i = 0; i < 2 && body > 0 && text[body - 1] == '='; ++i) --body;
  std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
  const auto [written, consumed] = b64::decode(out.data(), text.data(), body);
  if (consumed != body) throw InvalidArgument("base64: invalid character");
  out.resize(written);
  return out;
}

std::string png_b64(const Frame& frame) { return base64_encode(png::encode_rgb(frame)); }

Frame frame_from_png_b64(std::string_view text) { return png::decode_rgb(base64_decode(text)); }

std::vector<std::uint32_t> validity_rle(std::span<const std::uint8_t> mask) {
  std::vector<std::uint32_t> runs;
  if (mask.empty()) return runs;
  std::uint8_t current = 0;
  std::uint32_t length = 0;
  for (std::uint8_t m : mask) {
    const std::uint8_t bit = m != 0 ? 1 : 0;
    if (bit != current) {
      runs.push_back(length);
      current = bit;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

std::vector<std::uint8_t> decode_validity_rle(std::span<const std::uint32_t> runs, std::size_t size) {
  std::vector<std::uint8_t> mask;
  mask.reserve(size);
  std::uint8_t bit = 0;
  for (std::uint32_t r : runs) {
    if (mask.size() + r > size) throw InvalidArgument("rle: runs exceed mask size");
    mask.insert(mask.end(), r, bit);
    bit ^= 1;
  }
  if (mask.size() != size) throw InvalidArgument("rle: runs do not cover the mask");
  return mask;
}

nlohmann::json pose_json(const CameraPose& pose) {
  const Mat3 r = pose.rotation.matrix();
  return {{"R", r.m}, {"t", {pose.translation.x, pose.translation.y, pose.translation.z}}};
}

CameraPose pose_from_json(const nlohmann::json& j) {
  Mat3 m;
  m.m = j.at("R").get<std::array<double, 9>>();
  const auto t = j.at("t").get<std::array<double, 3>>();
  return {Rotation::from_matrix(m), {t[0], t[1], t[2]}};
}

nlohmann::json intrinsics_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics k{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                     j.at("cy").get<double>(), j.at("width").get<int>(),  j.at("height").get<int>()};
  k.validate();
  return k;
}

nlohmann::json action_json(const Action& action) {
  return {{"keys", action.keys.str()},
          {"eta", action.params.eta},
          {"theta_deg", action.params.theta_deg},
          {"frames", action.params.frames}};
}

nlohmann::json generate_request(const GeneratorInput& input) {
  nlohmann::json pc = nlohmann::json::array();
  nlohmann::json rle = nlohmann::json::array();
  for (const RenderOutput& r : *input.pc_video) {
    pc.push_back(png_b64(r.color));
    rle.push_back(validity_rle(r.valid));
  }
  nlohmann::json history = nlohmann::json::array();
  for (const RetrievedEntry& e : input.history.selected) {
    history.push_back({{"index", e.index},
                       {"score", e.score},
                       {"latent_shape", {e.latent->channels, e.latent->height, e.latent->width}},
                       {"latent", e.latent->values}});
  }
  return {{"type", "generate"},
          {"step", input.step},
          {"frames", input.action.params.frames},
          {"action", action_json(input.action)},
          {"first_frame_png_b64", png_b64(*input.first_frame)},
          {"pc_video_png_b64", std::move(pc)},
          {"pc_validity_rle", std::move(rle)},
          {"history", std::move(history)}};
}

GeneratorOutput parse_frames_response(std::string_view line, int step, int frames, int width,
                                      int height) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw GeneratorError(GeneratorErrorKind::kMalformed, std::string("generator reply is not JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("type", "") != "frames" || !j.contains("step") ||
      !j["step"].is_number_integer() || !j.contains("frames_png_b64") ||
      !j["frames_png_b64"].is_array()) {
    throw GeneratorError(GeneratorErrorKind::kMalformed, "generator reply is not a frames message");
  }
  if (j["step"].get<int>() != step) {
    throw GeneratorError(GeneratorErrorKind::kMalformed,
                         "generator replied for step " + std::to_string(j["step"].get<int>()) +
                             ", expected " + std::to_string(step));
  }
  const auto& items = j["frames_png_b64"];
  if (static_cast<int>(items.size()) != frames) {
    throw GeneratorError(GeneratorErrorKind::kWrongCount,
                         "generator returned " + std::to_string(items.size()) + " frames, expected " +
                             std::to_string(frames));
  }
  GeneratorOutput out;
  out.frames.reserve(items.size());
  for (const auto& item : items) {
    if (!item.is_string()) throw GeneratorError(GeneratorErrorKind::kMalformed, "frame is not a string");
    Frame f;
    try {
      f = frame_from_png_b64(item.get<std::string>());
    } catch (const std::exception& e) {
      throw GeneratorError(GeneratorErrorKind::kMalformed, std::string("undecodable frame: ") + e.what());
    }
    if (f.width != width || f.height != height) {
      throw GeneratorError(GeneratorErrorKind::kDimension, "generator frame has wrong dimensions");
    }
    out.frames.push_back(std::move(f));
  }
  return out;
}

}  // namespace worldwalk::wire
