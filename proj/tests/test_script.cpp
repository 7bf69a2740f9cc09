#include <doctest.h>

#include "worldwalk/error.hpp"
#include "worldwalk/script.hpp"

using namespace worldwalk;

TEST_CASE("seven-command script with defaults") {
  const ActionScript s = parse_script("W,W,A,W,D,S,W");
  REQUIRE(s.actions.size() == 7);
  const char* want[] = {"W", "W", "A", "W", "D", "S", "W"};
  for (int i = 0; i < 7; ++i) {
    CHECK(s.actions[i].keys.str() == want[i]);
    CHECK(s.actions[i].params == ActionParams{});
  }
}

TEST_CASE("per-token overrides") {
  const ActionScript s = parse_script("WA(theta=45)");
  REQUIRE(s.actions.size() == 1);
  CHECK(s.actions[0].keys == KeySet{Key::W, Key::A});
  CHECK(s.actions[0].params.theta_deg == 45.0);
  CHECK(s.actions[0].params.eta == ActionParams::kDefaultEta);

  const ActionScript t = parse_script("d( eta = 0.1 , frames=9, theta_deg=10 )  idle\n# comment W\nS(f=5)");
  REQUIRE(t.actions.size() == 3);
  CHECK(t.actions[0].params == ActionParams{0.1, 10, 9});
  CHECK(t.actions[1].keys.empty());
  CHECK(t.actions[2].params.frames == 5);
}

TEST_CASE("script defaults come from the caller") {
  const ActionScript s = parse_script("W A", {0.2, 15, 17});
  CHECK(s.actions[1].params == ActionParams{0.2, 15, 17});
}

TEST_CASE("bad tokens report line and column") {
  try {
    parse_script("X");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 1);
    CHECK(e.token() == "X");
    CHECK(std::string(e.what()).find("'X'") != std::string::npos);
  }
  try {
    parse_script("W,\n  A, WQ");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 6);
    CHECK(e.token() == "WQ");
  }
  CHECK_THROWS_AS(parse_script("WW"), ParseError);
  CHECK_THROWS_AS(parse_script("W(speed=1)"), ParseError);
  CHECK_THROWS_AS(parse_script("W(eta=fast)"), ParseError);
  CHECK_THROWS_AS(parse_script("W(frames=32)"), ParseError);
  CHECK_THROWS_AS(parse_script("W(theta=200)"), ParseError);
  CHECK_THROWS_AS(parse_script("W(eta=1"), ParseError);
  CHECK_THROWS_AS(parse_script("W;A"), ParseError);
  CHECK_THROWS_AS(parse_script("W(frames=4.5)"), ParseError);
}

TEST_CASE("empty and comment-only scripts") {
  CHECK(parse_script("").actions.empty());
  CHECK(parse_script("  # nothing\n, ,").actions.empty());
}
