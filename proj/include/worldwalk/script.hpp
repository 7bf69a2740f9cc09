#pragma once

#include <string_view>
#include <vector>

#include "worldwalk/geometry.hpp"

namespace worldwalk {

/// Ordered actions parsed from text.
struct ActionScript {
  std::vector<Action> actions;
};

/// Tokens are separated by commas or whitespace; '#' starts a comment. Each
/// token is a non-empty subset of "WASD" or "IDLE", optionally followed by
/// overrides such as "WA(theta=45, eta=0.1, frames=17)". Throws ParseError
/// carrying the 1-based line and column of the offending token.
ActionScript parse_script(std::string_view text, const ActionParams& defaults = {});

}  // namespace worldwalk
