#pragma once

// JSON encodings shared by the external-generator protocol, the session
// output files and the WebSocket service.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "worldwalk/generator.hpp"
#include "worldwalk/geometry.hpp"

namespace worldwalk::wire {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws InvalidArgument on characters outside the base64 alphabet.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string png_b64(const Frame& frame);
Frame frame_from_png_b64(std::string_view text);

/// Run lengths of a 0/1 mask in row-major order, alternating and starting
/// with a (possibly zero-length) run of invalid pixels.
std::vector<std::uint32_t> validity_rle(std::span<const std::uint8_t> mask);
std::vector<std::uint8_t> decode_validity_rle(std::span<const std::uint32_t> runs, std::size_t size);

/// {"R": 9 numbers row-major, "t": 3 numbers}
nlohmann::json pose_json(const CameraPose& pose);
CameraPose pose_from_json(const nlohmann::json& j);

nlohmann::json intrinsics_json(const CameraIntrinsics& intr);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);

nlohmann::json action_json(const Action& action);

/// {"type":"generate", ...} request for the external generator.
nlohmann::json generate_request(const GeneratorInput& input);

/// Validates a {"type":"frames"} reply: step echo, exactly `frames` PNG frames
/// of the given size. Throws GeneratorError.
GeneratorOutput parse_frames_response(std::string_view line, int step, int frames, int width,
                                      int height);

}  // namespace worldwalk::wire
