#include "agentjudge/actions.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>

#include "agentjudge/hash.hpp"

namespace agentjudge {
namespace {

double quantize_coord(double v) { return std::round(v * 100.0) / 100.0; }

std::string to_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::string escape_text(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\\' || c == '"') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

/// Parses a double-quoted string with \" and \\ escapes starting at `pos`
/// (which must point at the opening quote). Returns the unescaped payload and
/// leaves `pos` one past the closing quote, or nullopt on malformed input.
std::optional<std::string> parse_quoted(const std::string& s, std::size_t& pos) {
  if (pos >= s.size() || s[pos] != '"') return std::nullopt;
  std::string out;
  for (std::size_t i = pos + 1; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\\') {
      if (i + 1 >= s.size()) return std::nullopt;
      char next = s[i + 1];
      if (next != '"' && next != '\\') return std::nullopt;
      out.push_back(next);
      ++i;
    } else if (c == '"') {
      pos = i + 1;
      return out;
    } else {
      out.push_back(c);
    }
  }
  return std::nullopt;  // unterminated
}

void skip_spaces(const std::string& s, std::size_t& pos) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
}

/// Matches a keyword case-insensitively at `pos` followed by end or a
/// non-alphanumeric boundary; advances past it on success.
bool match_keyword(const std::string& s, std::size_t& pos, const std::string& keyword) {
  if (s.size() - pos < keyword.size()) return false;
  for (std::size_t i = 0; i < keyword.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != keyword[i]) return false;
  }
  std::size_t end = pos + keyword.size();
  if (end < s.size() && std::isalnum(static_cast<unsigned char>(s[end]))) return false;
  pos = end;
  return true;
}

std::optional<double> parse_number(const std::string& s, std::size_t& pos) {
  std::size_t start = pos;
  if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
  bool digits = false;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    ++pos;
    digits = true;
  }
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      ++pos;
      digits = true;
    }
  }
  if (!digits) {
    pos = start;
    return std::nullopt;
  }
  return std::stod(s.substr(start, pos - start));
}

std::optional<SwipeDirection> parse_direction(const std::string& word) {
  std::string w = to_lower(word);
  if (w == "up") return SwipeDirection::kUp;
  if (w == "down") return SwipeDirection::kDown;
  if (w == "left") return SwipeDirection::kLeft;
  if (w == "right") return SwipeDirection::kRight;
  return std::nullopt;
}

std::optional<PressKey> parse_key(const std::string& word) {
  std::string w = to_lower(word);
  if (w == "home") return PressKey::kHome;
  if (w == "back") return PressKey::kBack;
  if (w == "enter") return PressKey::kEnter;
  return std::nullopt;
}

std::optional<Action> try_parse(const std::string& raw) {
  const std::string s = trim(raw);
  std::size_t pos = 0;
  if (match_keyword(s, pos, "click")) {
    skip_spaces(s, pos);
    if (pos >= s.size() || (s[pos] != '[' && s[pos] != '(')) return std::nullopt;
    char close = s[pos] == '[' ? ']' : ')';
    ++pos;
    skip_spaces(s, pos);
    auto x = parse_number(s, pos);
    if (!x) return std::nullopt;
    skip_spaces(s, pos);
    if (pos >= s.size() || s[pos] != ',') return std::nullopt;
    ++pos;
    skip_spaces(s, pos);
    auto y = parse_number(s, pos);
    if (!y) return std::nullopt;
    skip_spaces(s, pos);
    if (pos >= s.size() || s[pos] != close) return std::nullopt;
    ++pos;
    skip_spaces(s, pos);
    if (pos != s.size()) return std::nullopt;
    if (*x < 0.0 || *x > 1.0 || *y < 0.0 || *y > 1.0) return std::nullopt;
    return Action::click(*x, *y);
  }
  pos = 0;
  if (match_keyword(s, pos, "type")) {
    skip_spaces(s, pos);
    auto text = parse_quoted(s, pos);
    if (!text || pos != s.size()) return std::nullopt;
    return Action::type_text(*text);
  }
  pos = 0;
  if (match_keyword(s, pos, "swipe")) {
    skip_spaces(s, pos);
    std::string word = s.substr(pos);
    if (!word.empty() && word.front() == '"' && word.back() == '"' && word.size() >= 2) {
      word = word.substr(1, word.size() - 2);
    }
    auto direction = parse_direction(trim(word));
    if (!direction) return std::nullopt;
    return Action::swipe(*direction);
  }
  pos = 0;
  if (match_keyword(s, pos, "press")) {
    skip_spaces(s, pos);
    std::string word = s.substr(pos);
    if (!word.empty() && word.front() == '"') {
      std::size_t qpos = pos;
      auto quoted = parse_quoted(s, qpos);
      if (!quoted || qpos != s.size()) return std::nullopt;
      word = *quoted;
    }
    auto key = parse_key(trim(word));
    if (!key) return std::nullopt;
    return Action::press(*key);
  }
  pos = 0;
  if (match_keyword(s, pos, "stop")) {
    skip_spaces(s, pos);
    if (pos == s.size()) return Action::stop();
    if (s[pos] == '"') {
      auto answer = parse_quoted(s, pos);
      if (!answer || pos != s.size()) return std::nullopt;
      return Action::stop(*answer);
    }
    if (s[pos] == '[' && s.back() == ']') {  // WebArena-style stop [answer]
      return Action::stop(trim(s.substr(pos + 1, s.size() - pos - 2)));
    }
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

Action Action::click(double x, double y) {
  Action a;
  a.kind = ActionKind::kClick;
  a.x = quantize_coord(x);
  a.y = quantize_coord(y);
  return a;
}

Action Action::type_text(std::string text) {
  Action a;
  a.kind = ActionKind::kType;
  a.text = std::move(text);
  return a;
}

Action Action::swipe(SwipeDirection direction) {
  Action a;
  a.kind = ActionKind::kSwipe;
  a.direction = direction;
  return a;
}

Action Action::press(PressKey key) {
  Action a;
  a.kind = ActionKind::kPress;
  a.key = key;
  return a;
}

Action Action::stop() {
  Action a;
  a.kind = ActionKind::kStop;
  return a;
}

Action Action::stop(std::string answer) {
  Action a;
  a.kind = ActionKind::kStop;
  a.text = std::move(answer);
  return a;
}

Action Action::raw(std::string text) {
  Action a;
  a.kind = ActionKind::kRaw;
  a.text = std::move(text);
  return a;
}

bool Action::operator==(const Action& other) const {
  if (kind != other.kind) return false;
  switch (kind) {
    case ActionKind::kClick:
      return x == other.x && y == other.y;
    case ActionKind::kType:
    case ActionKind::kStop:
    case ActionKind::kRaw:
      return text == other.text;
    case ActionKind::kSwipe:
      return direction == other.direction;
    case ActionKind::kPress:
      return key == other.key;
  }
  return false;
}

Action parse_action(const std::string& text) {
  if (auto parsed = try_parse(text)) return *parsed;
  return Action::raw(text);
}

std::string render_action(const Action& action) {
  switch (action.kind) {
    case ActionKind::kClick: {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "click [%.2f, %.2f]", action.x, action.y);
      return buf;
    }
    case ActionKind::kType:
      return "Type \"" + escape_text(action.text) + "\"";
    case ActionKind::kSwipe:
      return std::string("swipe ") + to_string(action.direction);
    case ActionKind::kPress:
      return std::string("press \"") + to_string(action.key) + "\"";
    case ActionKind::kStop:
      if (action.text.empty()) return "stop";
      return "stop \"" + escape_text(action.text) + "\"";
    case ActionKind::kRaw:
      return action.text;
  }
  return action.text;
}

const char* to_string(SwipeDirection direction) {
  switch (direction) {
    case SwipeDirection::kUp:
      return "up";
    case SwipeDirection::kDown:
      return "down";
    case SwipeDirection::kLeft:
      return "left";
    case SwipeDirection::kRight:
      return "right";
  }
  return "up";
}

const char* to_string(PressKey key) {
  switch (key) {
    case PressKey::kHome:
      return "Home";
    case PressKey::kBack:
      return "Back";
    case PressKey::kEnter:
      return "Enter";
  }
  return "Home";
}

Action remap_ios_action(const Action& action, RemapMode mode, std::uint64_t rng_seed) {
  if (action.kind != ActionKind::kSwipe || action.direction != SwipeDirection::kUp) {
    return action;
  }
  if (mode == RemapMode::kEvaluation) return Action::swipe(SwipeDirection::kRight);
  Rng rng(mix_seed(rng_seed, 0x105));
  return Action::swipe(rng.next_double() < 0.5 ? SwipeDirection::kLeft
                                               : SwipeDirection::kRight);
}

}  // namespace agentjudge
