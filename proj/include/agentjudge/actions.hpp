#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace agentjudge {

enum class ActionKind { kClick, kType, kSwipe, kPress, kStop, kRaw };

enum class SwipeDirection { kUp, kDown, kLeft, kRight };

enum class PressKey { kHome, kBack, kEnter };

/// One UI action. Canonical string forms:
///   click [0.50, 0.25]    coordinates normalized to [0,1], 2-decimal fixed
///   Type "Hello"          text with \" and \\ escapes
///   swipe up              up | down | left | right
///   press "Home"          Home | Back | Enter
///   stop                  optionally stop "answer text"
/// Anything else parses as a Raw action carrying the verbatim string, so a
/// model-emitted action is never dropped on the floor.
struct Action {
  ActionKind kind = ActionKind::kRaw;
  double x = 0.0;  ///< click only; quantized to 2 decimals on construction
  double y = 0.0;
  std::string text;  ///< Type payload, Stop answer, or Raw verbatim string
  SwipeDirection direction = SwipeDirection::kUp;
  PressKey key = PressKey::kHome;

  static Action click(double x, double y);
  static Action type_text(std::string text);
  static Action swipe(SwipeDirection direction);
  static Action press(PressKey key);
  static Action stop();
  static Action stop(std::string answer);
  static Action raw(std::string text);

  bool operator==(const Action& other) const;
  bool operator!=(const Action& other) const { return !(*this == other); }
};

/// Total parser: every string yields an Action, with Raw as the fallback for
/// anything outside the grammar (including clicks with out-of-range coords).
Action parse_action(const std::string& text);

/// Canonical string form. render_action(parse_action(s)) == s for canonical
/// strings, and parse_action(render_action(a)) == a for every non-Raw action.
std::string render_action(const Action& action);

const char* to_string(SwipeDirection direction);
const char* to_string(PressKey key);

enum class RemapMode {
  kEvaluation,  ///< swipe up always becomes swipe right
  kCollection,  ///< swipe up becomes swipe left or right, 50/50 by seed
};

/// iOS home screens treat an upward swipe as a page change; evaluation
/// replays it as a horizontal swipe. Non-swipe-up actions pass through
/// untouched. Deterministic for a given (action, mode, rng_seed).
Action remap_ios_action(const Action& action, RemapMode mode, std::uint64_t rng_seed);

}  // namespace agentjudge
