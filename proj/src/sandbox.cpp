#include "agentjudge/sandbox.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "agentjudge/errors.hpp"
#include "agentjudge/hash.hpp"
#include "agentjudge/perception.hpp"
#include "agentjudge/prompts.hpp"
#include "json.hpp"

namespace agentjudge {
namespace {

constexpr double kOcrConfidence = 0.95;

Widget parse_widget(const nlohmann::json& json) {
  Widget widget;
  widget.label = json.at("label").get<std::string>();
  const auto& bbox = json.at("bbox");
  if (!bbox.is_array() || bbox.size() != 4) {
    throw SchemaError("widget bbox must be a 4-element array");
  }
  for (std::size_t i = 0; i < 4; ++i) widget.bbox[i] = bbox[i].get<double>();
  if (json.contains("target")) widget.target = json.at("target").get<std::string>();
  if (json.contains("effect")) {
    WidgetEffect effect;
    effect.slot = json.at("effect").at("slot").get<std::string>();
    effect.value = json.at("effect").at("value").get<std::string>();
    widget.effect = effect;
  }
  return widget;
}

Screen parse_screen(const nlohmann::json& json) {
  Screen screen;
  screen.id = json.at("id").get<std::string>();
  screen.title = json.at("title").get<std::string>();
  for (const auto& widget : json.value("widgets", nlohmann::json::array())) {
    screen.widgets.push_back(parse_widget(widget));
  }
  if (json.contains("swipes")) {
    for (const auto& [direction, target] : json.at("swipes").items()) {
      screen.swipes[direction] = target.get<std::string>();
    }
  }
  if (json.contains("back")) screen.back = json.at("back").get<std::string>();
  if (json.contains("slot")) screen.slot = json.at("slot").get<std::string>();
  for (const auto& fact : json.value("facts", nlohmann::json::array())) {
    screen.facts.push_back(fact.get<std::string>());
  }
  return screen;
}

void validate_graph(const ScreenGraph& graph) {
  if (!graph.has_screen(graph.initial_screen)) {
    throw SchemaError("graph " + graph.id + ": unknown initial screen " +
                      graph.initial_screen);
  }
  auto check_screen_ref = [&](const std::string& where, const std::string& target) {
    if (!graph.has_screen(target)) {
      throw SchemaError("graph " + graph.id + ": " + where +
                        " references unknown screen " + target);
    }
  };
  auto check_slot_ref = [&](const std::string& where, const std::string& slot) {
    if (!graph.initial_slots.count(slot)) {
      throw SchemaError("graph " + graph.id + ": " + where +
                        " references unknown slot " + slot);
    }
  };
  for (const Screen& screen : graph.screens) {
    for (const Widget& widget : screen.widgets) {
      if (widget.target) check_screen_ref("widget " + widget.label, *widget.target);
      if (widget.effect) check_slot_ref("widget " + widget.label, widget.effect->slot);
      if (widget.bbox[0] > widget.bbox[2] || widget.bbox[1] > widget.bbox[3] ||
          widget.bbox[0] < 0 || widget.bbox[3] > 1) {
        throw SchemaError("graph " + graph.id + ": widget " + widget.label +
                          " has a malformed bbox");
      }
    }
    for (const auto& [direction, target] : screen.swipes) {
      static const std::set<std::string> kDirections = {"up", "down", "left", "right"};
      if (!kDirections.count(direction)) {
        throw SchemaError("graph " + graph.id + ": unknown swipe direction " +
                          direction);
      }
      check_screen_ref("swipe " + direction, target);
    }
    if (screen.back) check_screen_ref("back of " + screen.id, *screen.back);
    if (screen.slot) check_slot_ref("screen " + screen.id, *screen.slot);
  }
  // Every screen must be reachable from the initial screen.
  std::set<std::string> reached = {graph.initial_screen};
  std::deque<std::string> queue = {graph.initial_screen};
  while (!queue.empty()) {
    const Screen& screen = graph.screen(queue.front());
    queue.pop_front();
    std::vector<std::string> next;
    for (const Widget& widget : screen.widgets) {
      if (widget.target) next.push_back(*widget.target);
    }
    for (const auto& [direction, target] : screen.swipes) next.push_back(target);
    if (screen.back) next.push_back(*screen.back);
    next.push_back(graph.initial_screen);  // press Home
    for (const std::string& id : next) {
      if (reached.insert(id).second) queue.push_back(id);
    }
  }
  for (const Screen& screen : graph.screens) {
    if (!reached.count(screen.id)) {
      throw UnreachableScreen("graph " + graph.id + ": screen " + screen.id +
                              " is unreachable from " + graph.initial_screen);
    }
  }
}

ScreenGraph parse_graph(const nlohmann::json& json) {
  ScreenGraph graph;
  graph.id = json.at("id").get<std::string>();
  graph.initial_screen = json.at("initial_screen").get<std::string>();
  if (json.contains("slots")) {
    for (const auto& [slot, value] : json.at("slots").items()) {
      graph.initial_slots[slot] = value.get<std::string>();
    }
  }
  for (const auto& screen : json.at("screens")) {
    graph.screens.push_back(parse_screen(screen));
  }
  validate_graph(graph);
  return graph;
}

SandboxTask parse_task(const nlohmann::json& json, const SandboxSuite& suite) {
  SandboxTask task;
  task.task_id = json.at("task_id").get<std::string>();
  task.graph_id = json.at("graph").get<std::string>();
  const ScreenGraph& graph = suite.graph(task.graph_id);
  task.instruction.task_id = task.task_id;
  task.instruction.text = json.at("instruction").get<std::string>();
  const std::string domain = json.value("domain", std::string("sandbox"));
  const auto parsed_domain = domain_from_string(domain);
  if (!parsed_domain) throw SchemaError("task " + task.task_id + ": unknown domain " + domain);
  task.instruction.domain = *parsed_domain;
  const auto& goal = json.at("goal");
  if (goal.contains("screen")) {
    task.goal.screen = goal.at("screen").get<std::string>();
    if (!graph.has_screen(*task.goal.screen)) {
      throw SchemaError("task " + task.task_id + ": goal screen " +
                        *task.goal.screen + " is not in graph " + task.graph_id);
    }
  }
  if (goal.contains("slots")) {
    for (const auto& [slot, value] : goal.at("slots").items()) {
      if (!graph.initial_slots.count(slot)) {
        throw SchemaError("task " + task.task_id + ": goal slot " + slot +
                          " is not in graph " + task.graph_id);
      }
      task.goal.slots[slot] = value.get<std::string>();
    }
  }
  if (goal.contains("response_contains")) {
    task.goal.response_contains = goal.at("response_contains").get<std::string>();
  }
  if (!task.goal.screen && task.goal.slots.empty() && !task.goal.response_contains) {
    throw SchemaError("task " + task.task_id + ": goal has no conditions");
  }
  for (const auto& value : json.value("type_values", nlohmann::json::array())) {
    task.type_values.push_back(value.get<std::string>());
  }
  task.max_steps = json.value("max_steps", 8);
  if (task.max_steps < 1) {
    throw SchemaError("task " + task.task_id + ": max_steps must be positive");
  }
  return task;
}

/// Slots whose values show on this screen: the editable slot first, then any
/// slot a widget effect writes (a toggle displays its state).
std::vector<std::string> displayed_slots(const Screen& screen) {
  std::vector<std::string> slots;
  auto add = [&](const std::string& slot) {
    if (std::find(slots.begin(), slots.end(), slot) == slots.end()) {
      slots.push_back(slot);
    }
  };
  if (screen.slot) add(*screen.slot);
  for (const Widget& widget : screen.widgets) {
    if (widget.effect) add(widget.effect->slot);
  }
  return slots;
}

SwipeDirection direction_from_name(const std::string& name) {
  if (name == "up") return SwipeDirection::kUp;
  if (name == "down") return SwipeDirection::kDown;
  if (name == "left") return SwipeDirection::kLeft;
  return SwipeDirection::kRight;
}

}  // namespace

bool ScreenGraph::has_screen(const std::string& screen_id) const {
  for (const Screen& screen : screens) {
    if (screen.id == screen_id) return true;
  }
  return false;
}

const Screen& ScreenGraph::screen(const std::string& screen_id) const {
  for (const Screen& screen : screens) {
    if (screen.id == screen_id) return screen;
  }
  throw SchemaError("graph " + id + ": unknown screen " + screen_id);
}

const ScreenGraph& SandboxSuite::graph(const std::string& graph_id) const {
  for (const ScreenGraph& graph : graphs) {
    if (graph.id == graph_id) return graph;
  }
  throw SchemaError("suite " + suite_id + ": unknown graph " + graph_id);
}

SandboxSuite parse_suite_json(const std::string& json_text) {
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("suite document is not valid JSON: ") + e.what());
  }
  try {
    SandboxSuite suite;
    suite.suite_id = json.at("suite_id").get<std::string>();
    for (const auto& graph : json.at("graphs")) {
      suite.graphs.push_back(parse_graph(graph));
    }
    for (const auto& task : json.at("tasks")) {
      suite.tasks.push_back(parse_task(task, suite));
    }
    return suite;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("suite document is malformed: ") + e.what());
  }
}

SandboxSuite load_suite(const std::string& path_or_builtin) {
  if (path_or_builtin == "builtin:default") return builtin_suite();
  std::ifstream in(path_or_builtin, std::ios::binary);
  if (!in) throw ConfigError("cannot open suite file: " + path_or_builtin);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_suite_json(buffer.str());
}

SandboxSuite builtin_suite() {
  const std::string* text = find_embedded_asset("suites/default_suite.json");
  if (!text) throw ConfigError("embedded default suite is missing");
  return parse_suite_json(*text);
}

std::string sandbox_state_key(const SandboxState& state) {
  nlohmann::json json;
  json["screen"] = state.screen;
  json["slots"] = state.slots;
  if (state.response) {
    json["response"] = *state.response;
  } else {
    json["response"] = nullptr;
  }
  json["done"] = state.done;
  return json.dump();
}

SandboxState sandbox_state_from_key(const std::string& key) {
  SandboxState state;
  const nlohmann::json json = nlohmann::json::parse(key);
  state.screen = json.at("screen").get<std::string>();
  for (const auto& [slot, value] : json.at("slots").items()) {
    state.slots[slot] = value.get<std::string>();
  }
  if (!json.at("response").is_null()) {
    state.response = json.at("response").get<std::string>();
  }
  state.done = json.at("done").get<bool>();
  return state;
}

SandboxSim::SandboxSim(ScreenGraph graph, SandboxTask task)
    : graph_(std::move(graph)), task_(std::move(task)) {
  explore();
  if (distance(initial_state()) >= kUnreachable) {
    throw UnreachableScreen("task " + task_.task_id +
                            ": goal is unreachable from the initial state");
  }
}

SandboxState SandboxSim::initial_state() const {
  SandboxState state;
  state.screen = graph_.initial_screen;
  state.slots = graph_.initial_slots;
  return state;
}

std::vector<Action> SandboxSim::legal_actions(const SandboxState& state) const {
  if (state.done) return {};
  const Screen& screen = graph_.screen(state.screen);
  std::vector<Action> actions;
  for (const Widget& widget : screen.widgets) {
    actions.push_back(Action::click(widget.cx(), widget.cy()));
  }
  for (const char* direction : {"up", "down", "left", "right"}) {
    if (screen.swipes.count(direction)) {
      actions.push_back(Action::swipe(direction_from_name(direction)));
    }
  }
  if (screen.back) actions.push_back(Action::press(PressKey::kBack));
  actions.push_back(Action::press(PressKey::kHome));
  if (screen.slot) {
    for (const std::string& value : task_.type_values) {
      actions.push_back(Action::type_text(value));
    }
  }
  actions.push_back(Action::stop());
  if (task_.goal.needs_response()) {
    for (const std::string& fact : screen.facts) {
      actions.push_back(Action::stop(fact));
    }
  }
  return actions;
}

SandboxState SandboxSim::apply(const SandboxState& state, const Action& action) const {
  if (state.done) return state;
  SandboxState next = state;
  const Screen& screen = graph_.screen(state.screen);
  switch (action.kind) {
    case ActionKind::kClick:
      for (const Widget& widget : screen.widgets) {
        if (!widget.contains(action.x, action.y)) continue;
        if (widget.effect) next.slots[widget.effect->slot] = widget.effect->value;
        if (widget.target) next.screen = *widget.target;
        break;
      }
      break;
    case ActionKind::kType:
      if (screen.slot) next.slots[*screen.slot] = action.text;
      break;
    case ActionKind::kSwipe: {
      const auto it = screen.swipes.find(to_string(action.direction));
      if (it != screen.swipes.end()) next.screen = it->second;
      break;
    }
    case ActionKind::kPress:
      if (action.key == PressKey::kBack && screen.back) {
        next.screen = *screen.back;
      } else if (action.key == PressKey::kHome) {
        next.screen = graph_.initial_screen;
      }
      break;
    case ActionKind::kStop:
      next.done = true;
      if (!action.text.empty()) next.response = action.text;
      break;
    case ActionKind::kRaw:
      break;
  }
  return next;
}

bool SandboxSim::is_goal(const SandboxState& state) const {
  const GoalSpec& goal = task_.goal;
  if (goal.screen && state.screen != *goal.screen) return false;
  for (const auto& [slot, value] : goal.slots) {
    const auto it = state.slots.find(slot);
    if (it == state.slots.end() || it->second != value) return false;
  }
  if (goal.response_contains) {
    if (!state.response) return false;
    if (state.response->find(*goal.response_contains) == std::string::npos) {
      return false;
    }
  }
  return true;
}

void SandboxSim::explore() {
  std::map<std::string, std::vector<std::string>> predecessors;
  std::deque<SandboxState> frontier = {initial_state()};
  std::set<std::string> seen = {sandbox_state_key(initial_state())};
  std::deque<std::string> goal_keys;
  while (!frontier.empty()) {
    const SandboxState state = frontier.front();
    frontier.pop_front();
    const std::string key = sandbox_state_key(state);
    if (is_goal(state)) goal_keys.push_back(key);
    for (const Action& action : legal_actions(state)) {
      const SandboxState next = apply(state, action);
      const std::string next_key = sandbox_state_key(next);
      predecessors[next_key].push_back(key);
      if (seen.insert(next_key).second) frontier.push_back(next);
    }
  }
  for (const std::string& key : goal_keys) distance_[key] = 0;
  while (!goal_keys.empty()) {
    const std::string key = goal_keys.front();
    goal_keys.pop_front();
    const int next_distance = distance_[key] + 1;
    const auto it = predecessors.find(key);
    if (it == predecessors.end()) continue;
    for (const std::string& previous : it->second) {
      if (distance_.emplace(previous, next_distance).second) {
        goal_keys.push_back(previous);
      }
    }
  }
}

int SandboxSim::distance(const SandboxState& state) const {
  const auto it = distance_.find(sandbox_state_key(state));
  return it == distance_.end() ? kUnreachable : it->second;
}

Action SandboxSim::optimal_action(const SandboxState& state) const {
  if (is_goal(state)) return Action::stop();
  std::optional<Action> best;
  int best_cost = kUnreachable;
  for (const Action& action : legal_actions(state)) {
    const int cost = 1 + distance(apply(state, action));
    if (cost < best_cost) {
      best_cost = cost;
      best = action;
    }
  }
  return best ? *best : Action::stop();
}

int SandboxSim::optimal_path_length() const {
  const int to_goal = distance(initial_state());
  // Response goals end on the stop that carries the answer; other goals need
  // one extra plain stop after the goal state is reached.
  return task_.goal.needs_response() ? to_goal : to_goal + 1;
}

std::string render_screen_text(const ScreenGraph& graph, const SandboxState& state) {
  const Screen& screen = graph.screen(state.screen);
  std::ostringstream out;
  out << "screen: " << screen.id << "\n";
  out << "title: " << screen.title << "\n";
  for (const Widget& widget : screen.widgets) {
    out << "widget: " << widget.label << "\n";
  }
  for (const std::string& slot : displayed_slots(screen)) {
    out << "slot: " << slot << "=[" << state.slots.at(slot) << "]\n";
  }
  for (const std::string& fact : screen.facts) {
    out << "fact: " << fact << "\n";
  }
  return out.str();
}

std::vector<OcrToken> synth_ocr(const ScreenGraph& graph, const SandboxState& state) {
  const Screen& screen = graph.screen(state.screen);
  std::vector<OcrToken> tokens;
  tokens.push_back({screen.title, {0.04, 0.02, 0.96, 0.06}, kOcrConfidence});
  for (const Widget& widget : screen.widgets) {
    tokens.push_back({widget.label, widget.bbox, kOcrConfidence});
  }
  double y = 0.58;
  for (const std::string& slot : displayed_slots(screen)) {
    tokens.push_back({slot + "=[" + state.slots.at(slot) + "]",
                      {0.04, y, 0.96, std::min(y + 0.03, 1.0)},
                      kOcrConfidence});
    y += 0.04;
  }
  y = 0.74;
  for (const std::string& fact : screen.facts) {
    tokens.push_back(
        {fact, {0.04, y, 0.96, std::min(y + 0.03, 1.0)}, kOcrConfidence});
    y += 0.04;
  }
  return tokens;
}

std::string synth_caption(const ScreenGraph& graph, const SandboxState& state) {
  const Screen& screen = graph.screen(state.screen);
  std::ostringstream out;
  out << "# " << screen.title << "\n\n";
  out << "Interactive elements:\n";
  if (screen.widgets.empty()) {
    out << "- none\n";
  } else {
    for (const Widget& widget : screen.widgets) {
      out << "- " << widget.label << "\n";
    }
  }
  out << "\nVisible text:\n";
  const std::vector<std::string> slots = displayed_slots(screen);
  if (slots.empty() && screen.facts.empty()) {
    out << "- none\n";
  } else {
    for (const std::string& slot : slots) {
      out << "- " << slot << " field shows [" << state.slots.at(slot) << "]\n";
    }
    for (const std::string& fact : screen.facts) {
      out << "- " << fact << "\n";
    }
  }
  return out.str();
}

State make_observation(const ScreenGraph& graph, const SandboxState& state,
                       bool include_caption, BlobStore* blobs) {
  const std::string bytes = render_screen_text(graph, state);
  State observation;
  if (blobs) {
    observation.screenshot = blobs->put(bytes);
  } else {
    observation.screenshot = {sha256_hex(bytes),
                              "synthetic:" + graph.id + "/" + state.screen};
  }
  observation.ocr = synth_ocr(graph, state);
  if (include_caption) observation.caption = synth_caption(graph, state);
  return observation;
}

ReflectionSignals parse_reflection_signals(
    const std::vector<std::string>& reflections) {
  ReflectionSignals signals;
  for (const std::string& reflection : reflections) {
    if (reflection.find("avoid repeating") == std::string::npos) continue;
    std::size_t pos = 0;
    while (true) {
      const std::size_t open = reflection.find('\'', pos);
      if (open == std::string::npos) break;
      const std::size_t close = reflection.find('\'', open + 1);
      if (close == std::string::npos) break;
      const std::string quoted = reflection.substr(open + 1, close - open - 1);
      if (!quoted.empty() &&
          std::find(signals.avoid.begin(), signals.avoid.end(), quoted) ==
              signals.avoid.end()) {
        signals.avoid.push_back(quoted);
      }
      pos = close + 1;
    }
  }
  return signals;
}

Action ScriptedActor::act(const SandboxSim& sim, const SandboxState& state,
                          const std::vector<std::string>& reflections,
                          std::uint64_t step_seed) const {
  const ReflectionSignals signals = parse_reflection_signals(reflections);
  const bool ios = sim.task().instruction.domain == Domain::kIos;
  // What the environment will actually record once iOS swipes are replayed.
  const auto executed_form = [&](const Action& action) {
    return render_action(ios ? remap_ios_action(action, RemapMode::kEvaluation, 0)
                             : action);
  };
  const auto avoided = [&](const Action& action) {
    const std::string rendered = executed_form(action);
    return std::find(signals.avoid.begin(), signals.avoid.end(), rendered) !=
           signals.avoid.end();
  };
  std::vector<Action> pool;
  for (const Action& action : sim.legal_actions(state)) {
    if (!avoided(action)) pool.push_back(action);
  }
  if (pool.empty()) return Action::stop();
  const Action optimal = sim.optimal_action(state);
  const bool optimal_allowed = !avoided(optimal);
  Rng rng(mix_seed(rng_seed, step_seed));
  const double effective =
      std::min(1.0, skill + reflection_boost * static_cast<double>(reflections.size()));
  if (optimal_allowed && rng.next_double() < effective) return optimal;
  std::vector<Action> others;
  for (const Action& action : pool) {
    if (action != optimal) others.push_back(action);
  }
  if (others.empty()) return optimal_allowed ? optimal : Action::stop();
  return others[rng.next_index(others.size())];
}

Verdict judge_with_noise(bool oracle_success, const NoisyOracleEvaluator& evaluator,
                         std::uint64_t draw_seed) {
  Rng rng(mix_seed(evaluator.rng_seed, draw_seed));
  const double u = rng.next_double();
  bool judged = oracle_success;
  if (oracle_success && u < evaluator.fn_rate) judged = false;
  if (!oracle_success && u < evaluator.fp_rate) judged = true;
  Verdict verdict;
  verdict.status = judged ? VerdictStatus::kSuccess : VerdictStatus::kFailure;
  verdict.thoughts = "noisy oracle draw";
  return verdict;
}

RolloutResult rollout(const SandboxSim& sim, const ScriptedActor& actor,
                      const RolloutOptions& options) {
  const SandboxTask& task = sim.task();
  if (task.max_steps < sim.optimal_path_length()) {
    throw ConfigError("task " + task.task_id +
                      ": max_steps is below the optimal path length");
  }
  RolloutResult result;
  result.trajectory.instruction = task.instruction;
  result.trajectory.policy_id = options.policy_id;
  SandboxState state = sim.initial_state();
  result.sandbox_states.push_back(state);
  result.trajectory.states.push_back(
      make_observation(sim.graph(), state, options.include_captions, options.blobs));
  for (int step = 0; step < task.max_steps; ++step) {
    Action action = actor.act(sim, state, options.reflections,
                              mix_seed(options.seed, static_cast<std::uint64_t>(step)));
    if (task.instruction.domain == Domain::kIos) {
      action = remap_ios_action(
          action, options.remap_mode,
          mix_seed(options.seed, 0x9000 + static_cast<std::uint64_t>(step)));
    }
    state = sim.apply(state, action);
    result.trajectory.actions.push_back(action);
    result.sandbox_states.push_back(state);
    result.trajectory.states.push_back(make_observation(
        sim.graph(), state, options.include_captions, options.blobs));
    if (state.done) break;
  }
  result.trajectory.agent_response = state.response;
  result.oracle_success = sim.is_goal(state);
  for (std::size_t i = 1; i < result.sandbox_states.size(); ++i) {
    if (sim.is_goal(result.sandbox_states[i])) {
      result.first_goal_action = static_cast<int>(i) - 1;
      break;
    }
  }
  return result;
}

std::vector<StepCategory> synth_per_step_labels(const Trajectory& trajectory,
                                                const SandboxSim& sim) {
  std::vector<StepCategory> labels;
  SandboxState state = sim.initial_state();
  bool goal_seen = sim.is_goal(state);
  for (const Action& action : trajectory.actions) {
    const SandboxState next = sim.apply(state, action);
    if (sim.is_goal(next) && !goal_seen) {
      labels.push_back(StepCategory::kGoalReached);
      goal_seen = true;
    } else {
      const int before = sim.distance(state);
      const int after = sim.distance(next);
      if (after < before) {
        labels.push_back(StepCategory::kTowardsGoal);
      } else if (after > before) {
        labels.push_back(StepCategory::kAwayFromGoal);
      } else {
        labels.push_back(StepCategory::kNotSure);
      }
    }
    state = next;
  }
  return labels;
}

RolloutResult replay_trajectory(const Trajectory& trajectory, const SandboxSim& sim) {
  RolloutResult result;
  result.trajectory = trajectory;
  SandboxState state = sim.initial_state();
  result.sandbox_states.push_back(state);
  for (const Action& action : trajectory.actions) {
    state = sim.apply(state, action);
    result.sandbox_states.push_back(state);
  }
  result.oracle_success = sim.is_goal(state);
  for (std::size_t i = 1; i < result.sandbox_states.size(); ++i) {
    if (sim.is_goal(result.sandbox_states[i])) {
      result.first_goal_action = static_cast<int>(i) - 1;
      break;
    }
  }
  return result;
}

std::string synth_reflection(const RolloutResult& attempt, const SandboxSim& sim) {
  const bool ios = sim.task().instruction.domain == Domain::kIos;
  const auto executed_form = [&](const Action& action) {
    return render_action(ios ? remap_ios_action(action, RemapMode::kEvaluation, 0)
                             : action);
  };
  if (attempt.oracle_success) {
    // The judge was wrong; reflecting on a success produces advice that
    // steers the next attempt away from the decisive action.
    int goal_index = attempt.first_goal_action;
    if (goal_index < 0) {
      goal_index = static_cast<int>(attempt.trajectory.actions.size()) - 1;
    }
    const std::string decisive =
        render_action(attempt.trajectory.actions[static_cast<std::size_t>(goal_index)]);
    return "The judge marked this attempt as failed. The step '" + decisive +
           "' looked decisive but did not satisfy the checker, so avoid repeating '" +
           decisive + "' on the next attempt.";
  }
  std::string hint;
  for (std::size_t i = 0; i < attempt.trajectory.actions.size(); ++i) {
    const SandboxState& before = attempt.sandbox_states[i];
    const std::string best = executed_form(sim.optimal_action(before));
    if (render_action(attempt.trajectory.actions[i]) != best) {
      hint = best;
      break;
    }
  }
  if (hint.empty()) hint = executed_form(sim.optimal_action(sim.initial_state()));
  return "The attempt failed against the checker after " +
         std::to_string(attempt.trajectory.actions.size()) +
         " actions. Work toward the goal more directly and try '" + hint +
         "' at the matching screen on the next attempt.";
}

void add_scripted_trajectory_verdict(ScriptedBackend& backend,
                                     const Trajectory& trajectory,
                                     Architecture architecture,
                                     const GenerationParams& params, bool success) {
  const std::vector<ChatMessage> messages =
      architecture == Architecture::kEndToEnd
          ? build_e2e_trajectory_prompt(trajectory)
          : build_modular_trajectory_prompt(trajectory);
  const std::string response =
      success ? "Thoughts: The final state satisfies the user request.\n"
                "Status: \"success\""
              : "Thoughts: The task goal is not met by the final state.\n"
                "Status: \"failure\"";
  backend.add_response(request_digest(messages, params), response);
}

void add_scripted_step_verdicts(ScriptedBackend& backend, const Trajectory& trajectory,
                                const SandboxSim& sim,
                                const GenerationParams& params) {
  const std::vector<StepCategory> labels = synth_per_step_labels(trajectory, sim);
  for (std::size_t i = 0; i < trajectory.actions.size(); ++i) {
    const std::vector<ChatMessage> messages =
        build_step_prompt(trajectory.instruction, trajectory.actions[i],
                          trajectory.states[i], trajectory.states[i + 1]);
    const std::string response =
        std::string("Thoughts: Comparing the two states for progress.\n") +
        "Response: " + to_string(labels[i]);
    backend.add_response(request_digest(messages, params), response);
  }
}

void add_scripted_captions(ScriptedBackend& backend,
                           const std::vector<SandboxState>& states,
                           const ScreenGraph& graph, const GenerationParams& params) {
  for (const SandboxState& state : states) {
    const State observation = make_observation(graph, state, false);
    const std::vector<ChatMessage> messages = build_caption_request(observation);
    backend.add_response(request_digest(messages, params),
                         synth_caption(graph, state));
  }
}

}  // namespace agentjudge
