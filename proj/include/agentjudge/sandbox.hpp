#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentjudge/actions.hpp"
#include "agentjudge/gateway.hpp"
#include "agentjudge/judges.hpp"
#include "agentjudge/trajectory.hpp"

namespace agentjudge {

/// Clicking a widget with an effect writes `value` into the named text slot.
struct WidgetEffect {
  std::string slot;
  std::string value;
};

struct Widget {
  std::string label;
  std::array<double, 4> bbox{0, 0, 0, 0};  ///< normalized [x0, y0, x1, y1]
  std::optional<std::string> target;       ///< destination screen when clicked
  std::optional<WidgetEffect> effect;

  double cx() const { return (bbox[0] + bbox[2]) / 2.0; }
  double cy() const { return (bbox[1] + bbox[3]) / 2.0; }
  bool contains(double x, double y) const {
    return bbox[0] <= x && x <= bbox[2] && bbox[1] <= y && y <= bbox[3];
  }
};

struct Screen {
  std::string id;
  std::string title;
  std::vector<Widget> widgets;
  std::map<std::string, std::string> swipes;  ///< direction name -> screen id
  std::optional<std::string> back;            ///< screen id reached by press "Back"
  std::optional<std::string> slot;            ///< text slot edited by Type here
  std::vector<std::string> facts;             ///< informational strings on screen
};

/// A finite clickable screen graph with named text slots.
struct ScreenGraph {
  std::string id;
  std::string initial_screen;
  std::map<std::string, std::string> initial_slots;
  std::vector<Screen> screens;

  bool has_screen(const std::string& screen_id) const;
  const Screen& screen(const std::string& screen_id) const;  ///< SchemaError if unknown
};

/// Success predicate over the final state: every present part must hold.
struct GoalSpec {
  std::optional<std::string> screen;
  std::map<std::string, std::string> slots;
  std::optional<std::string> response_contains;

  bool needs_response() const { return response_contains.has_value(); }
};

struct SandboxTask {
  std::string task_id;
  std::string graph_id;
  Instruction instruction;
  GoalSpec goal;
  std::vector<std::string> type_values;  ///< texts the actor may Type
  int max_steps = 8;
};

struct SandboxSuite {
  std::string suite_id;
  std::vector<ScreenGraph> graphs;
  std::vector<SandboxTask> tasks;

  const ScreenGraph& graph(const std::string& graph_id) const;
};

/// Parses and validates a suite document. Dangling screen references raise
/// SchemaError; screens unreachable from the initial screen raise
/// UnreachableScreen.
SandboxSuite parse_suite_json(const std::string& json_text);

/// Loads a suite from a file path, or the shipped suite for "builtin:default".
SandboxSuite load_suite(const std::string& path_or_builtin);

/// The shipped 24-task, 3-graph suite.
SandboxSuite builtin_suite();

struct SandboxState {
  std::string screen;
  std::map<std::string, std::string> slots;
  std::optional<std::string> response;
  bool done = false;

  bool operator==(const SandboxState& other) const = default;
};

/// Canonical, invertible state key (compact JSON with sorted keys).
std::string sandbox_state_key(const SandboxState& state);
SandboxState sandbox_state_from_key(const std::string& key);

/// Deterministic simulator for one (graph, task) pair. Precomputes the
/// reachable state space and shortest distances to the goal.
class SandboxSim {
 public:
  static constexpr int kUnreachable = 1 << 20;

  /// Throws UnreachableScreen when the goal cannot be reached from the
  /// initial state.
  SandboxSim(ScreenGraph graph, SandboxTask task);

  SandboxState initial_state() const;

  /// Deterministic enumeration: widget clicks in listed order, swipes in
  /// up/down/left/right order, press Back then press Home, Type values in
  /// task order (on slot screens), stop, then stop "<fact>" for each fact on
  /// screen when the goal needs a response.
  std::vector<Action> legal_actions(const SandboxState& state) const;

  SandboxState apply(const SandboxState& state, const Action& action) const;
  bool is_goal(const SandboxState& state) const;

  /// Fewest actions from `state` to any goal state (kUnreachable if none).
  int distance(const SandboxState& state) const;

  /// At a goal state: plain stop. Otherwise the first legal action that
  /// minimizes 1 + distance(next).
  Action optimal_action(const SandboxState& state) const;

  /// Action count of a perfect run, including the trailing stop.
  int optimal_path_length() const;

  const ScreenGraph& graph() const { return graph_; }
  const SandboxTask& task() const { return task_; }

 private:
  void explore();

  ScreenGraph graph_;
  SandboxTask task_;
  std::map<std::string, int> distance_;
};

/// Canonical text that stands in for screenshot pixels; its bytes hash to the
/// screenshot ref.
std::string render_screen_text(const ScreenGraph& graph, const SandboxState& state);

/// Synthesized OCR: title, widget labels, displayed slot values, and facts.
std::vector<OcrToken> synth_ocr(const ScreenGraph& graph, const SandboxState& state);

/// Templated markdown screen summary, the captioner stand-in.
std::string synth_caption(const ScreenGraph& graph, const SandboxState& state);

/// Full observation for one sandbox state: synthetic screenshot ref, OCR,
/// and (optionally) the templated caption. When `blobs` is given the
/// screenshot bytes are persisted there.
State make_observation(const ScreenGraph& graph, const SandboxState& state,
                       bool include_caption = true, BlobStore* blobs = nullptr);

/// Hints mined from reflection texts: actions the actor must not repeat
/// (single-quoted after an "avoid repeating" marker).
struct ReflectionSignals {
  std::vector<std::string> avoid;  ///< canonical action strings
};

ReflectionSignals parse_reflection_signals(const std::vector<std::string>& reflections);

/// Synthetic stochastic policy. Picks the simulator's optimal action with
/// probability min(1, skill + reflection_boost * #reflections), otherwise a
/// seeded-random other legal action. Actions named by an "avoid repeating"
/// reflection are excluded outright, so reflecting on a judged-failed attempt
/// that actually succeeded poisons the retry.
struct ScriptedActor {
  double skill = 0.5;
  double reflection_boost = 0.2;
  std::uint64_t rng_seed = 0;

  Action act(const SandboxSim& sim, const SandboxState& state,
             const std::vector<std::string>& reflections,
             std::uint64_t step_seed) const;
};

/// Label-flipping wrapper around the oracle: fn_rate flips true successes to
/// Failure, fp_rate flips true failures to Success.
struct NoisyOracleEvaluator {
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  std::uint64_t rng_seed = 0;
};

Verdict judge_with_noise(bool oracle_success, const NoisyOracleEvaluator& evaluator,
                         std::uint64_t draw_seed);

struct RolloutOptions {
  std::uint64_t seed = 0;
  RemapMode remap_mode = RemapMode::kEvaluation;
  std::vector<std::string> reflections;  ///< actor memory for this attempt
  std::string policy_id = "scripted";
  bool include_captions = true;
  BlobStore* blobs = nullptr;
};

struct RolloutResult {
  Trajectory trajectory;
  std::vector<SandboxState> sandbox_states;  ///< parallel to trajectory.states
  bool oracle_success = false;
  int first_goal_action = -1;  ///< action index after which the goal first held
};

/// Runs the actor until it stops or max_steps is hit. Deterministic given the
/// seed. iOS-domain tasks replay actor swipes through remap_ios_action.
RolloutResult rollout(const SandboxSim& sim, const ScriptedActor& actor,
                      const RolloutOptions& options = {});

/// Ground-truth per-step labels by goal distance: first newly-satisfied step
/// is goal-reached (at most once); otherwise distance down = towards, up =
/// away, unchanged = not-sure. Replays the trajectory's actions from the
/// initial state, so the trajectory must come from a rollout on this sim.
std::vector<StepCategory> synth_per_step_labels(const Trajectory& trajectory,
                                                const SandboxSim& sim);

/// Recomputes sandbox states, oracle outcome, and the first goal-reaching
/// action index by replaying a rollout-produced trajectory.
RolloutResult replay_trajectory(const Trajectory& trajectory, const SandboxSim& sim);

/// Reflection text for a judged-failed attempt. True failures yield a helpful
/// hint ("try '<action>'"); oracle-successful attempts judged failed yield a
/// misleading "avoid repeating '<action>'" naming the goal-reaching action.
std::string synth_reflection(const RolloutResult& attempt, const SandboxSim& sim);

/// Registers the scripted judge answer for a whole-trajectory request.
void add_scripted_trajectory_verdict(ScriptedBackend& backend,
                                     const Trajectory& trajectory,
                                     Architecture architecture,
                                     const GenerationParams& params, bool success);

/// Registers scripted per-step answers from the ground-truth labels.
void add_scripted_step_verdicts(ScriptedBackend& backend, const Trajectory& trajectory,
                                const SandboxSim& sim,
                                const GenerationParams& params);

/// Registers scripted captioner answers for every state of a rollout.
void add_scripted_captions(ScriptedBackend& backend,
                           const std::vector<SandboxState>& states,
                           const ScreenGraph& graph, const GenerationParams& params);

}  // namespace agentjudge
