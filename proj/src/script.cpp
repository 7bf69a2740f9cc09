#include "worldwalk/script.hpp"

#include <cctype>
#include <charconv>
#include <string>

#include "worldwalk/error.hpp"

namespace worldwalk {

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }
  std::size_t pos() const { return pos_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

  char take() {
    const char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  void skip_separators() {
    while (!done()) {
      const char c = peek();
      if (c == '#') {
        while (!done() && peek() != '\n') take();
      } else if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
        take();
      } else {
        break;
      }
    }
  }

  void skip_blanks() {
    while (!done() && (peek() == ' ' || peek() == '\t')) take();
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

bool is_token_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

double parse_number(const std::string& text) {
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw InvalidArgument("'" + text + "' is not a number");
  }
  return value;
}

void apply_override(ActionParams& params, const std::string& name, const std::string& value) {
  const double number = parse_number(value);
  if (name == "eta") {
    params.eta = number;
  } else if (name == "theta" || name == "theta_deg") {
    params.theta_deg = number;
  } else if (name == "frames" || name == "f") {
    if (number != static_cast<int>(number)) throw InvalidArgument("frames must be an integer");
    params.frames = static_cast<int>(number);
  } else {
    throw InvalidArgument("unknown parameter '" + name + "'");
  }
}

}  // namespace

ActionScript parse_script(std::string_view text, const ActionParams& defaults) {
  ActionScript script;
  Cursor cur(text);
  for (;;) {
    cur.skip_separators();
    if (cur.done()) break;
    const std::size_t line = cur.line();
    const std::size_t column = cur.column();
    const std::size_t start = cur.pos();
    std::string keys_text;
    while (!cur.done() && is_token_char(cur.peek())) keys_text.push_back(cur.take());
    if (keys_text.empty()) {
      throw ParseError("unexpected character", line, column, std::string(1, cur.peek()));
    }

    Action action;
    action.params = defaults;
    std::string upper;
    for (char c : keys_text) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (upper != "IDLE") {
      for (char c : upper) {
        if (c != 'W' && c != 'A' && c != 'S' && c != 'D') {
          throw ParseError(std::string("unknown key '") + c + "'", line, column, keys_text);
        }
        if (upper.find(c) != upper.rfind(c)) {
          throw ParseError(std::string("repeated key '") + c + "'", line, column, keys_text);
        }
      }
    }
    action.keys = KeySet::parse(upper);

    if (cur.peek() == '(') {
      cur.take();
      for (;;) {
        cur.skip_blanks();
        std::string name, value;
        while (!cur.done() && is_token_char(cur.peek())) name.push_back(cur.take());
        cur.skip_blanks();
        if (cur.peek() != '=') {
          throw ParseError("expected name=value override", line, column,
                           std::string(text.substr(start, cur.pos() - start + 1)));
        }
        cur.take();
        cur.skip_blanks();
        while (!cur.done() && cur.peek() != ',' && cur.peek() != ')' &&
               !std::isspace(static_cast<unsigned char>(cur.peek()))) {
          value.push_back(cur.take());
        }
        try {
          apply_override(action.params, name, value);
        } catch (const InvalidArgument& e) {
          throw ParseError(e.what(), line, column, std::string(text.substr(start, cur.pos() - start)));
        }
        cur.skip_blanks();
        if (cur.peek() == ',') {
          cur.take();
          continue;
        }
        if (cur.peek() == ')') {
          cur.take();
          break;
        }
        throw ParseError("unterminated override list", line, column,
                         std::string(text.substr(start, cur.pos() - start)));
      }
    }
    const std::string token(text.substr(start, cur.pos() - start));
    if (!cur.done() && cur.peek() != ',' && cur.peek() != '#' &&
        !std::isspace(static_cast<unsigned char>(cur.peek()))) {
      throw ParseError("unexpected character", line, column, token + cur.peek());
    }
    try {
      action.params.validate();
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line, column, token);
    }
    script.actions.push_back(action);
  }
  return script;
}

}  // namespace worldwalk
