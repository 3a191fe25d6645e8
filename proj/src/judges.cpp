#include "agentjudge/judges.hpp"

#include <cctype>
#include <optional>
#include <sstream>

#include "agentjudge/errors.hpp"
#include "agentjudge/prompts.hpp"

namespace agentjudge {
namespace {

std::string to_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Strips whitespace plus quote-ish decoration from both ends. Keeps inner
/// hyphens intact, so "towards-the-goal" survives unharmed.
std::string strip_decoration(const std::string& s) {
  static const std::string kStrip = " \t\r\n\"'`.,;:!";
  std::size_t begin = 0, end = s.size();
  while (begin < end && kStrip.find(s[begin]) != std::string::npos) ++begin;
  while (end > begin && kStrip.find(s[end - 1]) != std::string::npos) --end;
  return s.substr(begin, end - begin);
}

/// Returns the value after "<label>:" if the line starts with the label
/// (case-insensitive, leading whitespace allowed).
std::optional<std::string> labeled_value(const std::string& line,
                                         const std::string& label) {
  std::size_t pos = 0;
  while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) {
    ++pos;
  }
  if (line.size() - pos < label.size() + 1) return std::nullopt;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(line[pos + i])) != label[i]) {
      return std::nullopt;
    }
  }
  pos += label.size();
  while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) {
    ++pos;
  }
  if (pos >= line.size() || line[pos] != ':') return std::nullopt;
  return line.substr(pos + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

struct ParsedLines {
  std::string thoughts;
  std::optional<std::string> last_value;
};

ParsedLines scan_labeled(const std::string& text, const std::string& value_label) {
  ParsedLines out;
  bool saw_thoughts = false;
  for (const std::string& line : split_lines(text)) {
    if (auto thought = labeled_value(line, "thoughts"); thought && !saw_thoughts) {
      out.thoughts = strip_decoration(*thought);
      saw_thoughts = true;
    }
    if (auto value = labeled_value(line, value_label)) {
      out.last_value = *value;  // last occurrence wins
    }
  }
  return out;
}

const char* template_id_for(Domain domain, Architecture architecture) {
  const bool web = domain == Domain::kWeb;
  if (architecture == Architecture::kEndToEnd) {
    return web ? "web_e2e_trajectory" : "android_e2e_trajectory";
  }
  return web ? "web_modular_trajectory" : "android_modular_trajectory";
}

std::map<std::string, std::string> trajectory_values(const Trajectory& trajectory) {
  return {{"intent", trajectory.instruction.text},
          {"last_actions", render_action_history(trajectory.actions)},
          {"response", trajectory.agent_response.value_or("N/A")}};
}

}  // namespace

const char* to_string(Architecture architecture) {
  return architecture == Architecture::kEndToEnd ? "end_to_end" : "modular";
}

const char* to_string(Granularity granularity) {
  return granularity == Granularity::kTrajectoryLevel ? "trajectory_level" : "per_step";
}

std::optional<Architecture> architecture_from_string(const std::string& name) {
  if (name == "end_to_end") return Architecture::kEndToEnd;
  if (name == "modular") return Architecture::kModular;
  return std::nullopt;
}

std::optional<Granularity> granularity_from_string(const std::string& name) {
  if (name == "trajectory_level") return Granularity::kTrajectoryLevel;
  if (name == "per_step") return Granularity::kPerStep;
  return std::nullopt;
}

const char* to_string(StepCategory category) {
  switch (category) {
    case StepCategory::kTowardsGoal:
      return "towards-the-goal";
    case StepCategory::kNotSure:
      return "not-sure";
    case StepCategory::kGoalReached:
      return "goal-reached";
    case StepCategory::kAwayFromGoal:
      return "away-from-the-goal";
  }
  return "not-sure";
}

void RewardConfig::validate() const {
  if (!(d < 0.0)) throw ConfigError("reward config: d must be negative");
  if (!(0.0 <= not_sure && not_sure <= p && p <= 1.0)) {
    throw ConfigError("reward config requires 0 <= not_sure <= p <= 1");
  }
}

Verdict parse_trajectory_verdict(const std::string& text) {
  ParsedLines parsed = scan_labeled(text, "status");
  if (!parsed.last_value) {
    throw MissingStatus("verdict text has no Status line");
  }
  const std::string value = to_lower(strip_decoration(*parsed.last_value));
  Verdict verdict;
  verdict.thoughts = parsed.thoughts;
  if (value == "success") {
    verdict.status = VerdictStatus::kSuccess;
  } else if (value == "failure") {
    verdict.status = VerdictStatus::kFailure;
  } else {
    throw UnrecognizedStatus("unrecognized Status value: " + *parsed.last_value);
  }
  return verdict;
}

StepVerdict parse_step_verdict(const std::string& text) {
  ParsedLines parsed = scan_labeled(text, "response");
  if (!parsed.last_value) {
    throw MissingResponse("step verdict text has no Response line");
  }
  const std::string value = to_lower(strip_decoration(*parsed.last_value));
  StepVerdict verdict;
  verdict.thoughts = parsed.thoughts;
  if (value == "towards-the-goal") {
    verdict.category = StepCategory::kTowardsGoal;
  } else if (value == "not-sure") {
    verdict.category = StepCategory::kNotSure;
  } else if (value == "goal-reached") {
    verdict.category = StepCategory::kGoalReached;
  } else if (value == "away-from-the-goal") {
    verdict.category = StepCategory::kAwayFromGoal;
  } else {
    throw UnrecognizedCategory("unrecognized Response value: " + *parsed.last_value);
  }
  return verdict;
}

std::string render_action_history(const std::vector<Action>& actions) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += render_action(actions[i]);
  }
  return out;
}

std::vector<ChatMessage> build_e2e_trajectory_prompt(const Trajectory& trajectory) {
  if (trajectory.states.empty()) {
    throw EvaluationError("trajectory has no states", -1);
  }
  const PromptTemplate& templ =
      get_prompt_template(template_id_for(trajectory.instruction.domain,
                                          Architecture::kEndToEnd));
  std::vector<ChatMessage> messages;
  messages.push_back(ChatMessage::system(*templ.system));
  messages.push_back(ChatMessage::user(
      render_template(templ.user, trajectory_values(trajectory)),
      {trajectory.states.back().screenshot}));
  return messages;
}

std::vector<ChatMessage> build_modular_trajectory_prompt(const Trajectory& trajectory) {
  if (trajectory.states.empty()) {
    throw EvaluationError("trajectory has no states", -1);
  }
  const State& final_state = trajectory.states.back();
  if (!final_state.caption) {
    throw MissingCaption("final state has no caption; run the captioner first");
  }
  const PromptTemplate& templ =
      get_prompt_template(template_id_for(trajectory.instruction.domain,
                                          Architecture::kModular));
  auto values = trajectory_values(trajectory);
  values["cap"] = *final_state.caption;
  std::vector<ChatMessage> messages;
  messages.push_back(ChatMessage::system(*templ.system));
  messages.push_back(ChatMessage::user(render_template(templ.user, values)));
  return messages;
}

std::vector<ChatMessage> build_step_prompt(const Instruction& instruction,
                                           const Action& action, const State& current,
                                           const State& next) {
  if (!current.caption || !next.caption) {
    throw MissingCaption("step evaluation needs captions for both states");
  }
  const PromptTemplate& templ = get_prompt_template("modular_step");
  const std::map<std::string, std::string> values = {
      {"intent", instruction.text},
      {"action", render_action(action)},
      {"current_state", *current.caption},
      {"next_state", *next.caption}};
  std::vector<ChatMessage> messages;
  messages.push_back(ChatMessage::system(*templ.system));
  messages.push_back(ChatMessage::user(render_template(templ.user, values)));
  return messages;
}

RewardSequence rewards_from_verdict(const Verdict& verdict, std::size_t n_actions) {
  if (n_actions == 0) throw EmptyInput("reward sequence needs at least one action");
  RewardSequence rewards;
  rewards.granularity = Granularity::kTrajectoryLevel;
  rewards.values.assign(n_actions, 0.0);
  rewards.values.back() = verdict.status == VerdictStatus::kSuccess ? 1.0 : 0.0;
  return rewards;
}

RewardSequence rewards_from_categories(const std::vector<StepCategory>& categories,
                                       const RewardConfig& config) {
  config.validate();
  RewardSequence rewards;
  rewards.granularity = Granularity::kPerStep;
  rewards.values.reserve(categories.size());
  for (StepCategory category : categories) {
    switch (category) {
      case StepCategory::kGoalReached:
        rewards.values.push_back(1.0);
        break;
      case StepCategory::kTowardsGoal:
        rewards.values.push_back(config.p);
        break;
      case StepCategory::kNotSure:
        rewards.values.push_back(config.not_sure);
        break;
      case StepCategory::kAwayFromGoal:
        rewards.values.push_back(config.d);
        break;
    }
  }
  return rewards;
}

RewardSequence evaluate(const Trajectory& trajectory, const EvaluatorSpec& spec,
                        Gateway& gateway, const GenerationParams& params) {
  spec.reward.validate();
  if (trajectory.actions.empty() ||
      trajectory.states.size() != trajectory.actions.size() + 1) {
    throw EvaluationError("trajectory shape is invalid: " +
                              std::to_string(trajectory.actions.size()) +
                              " actions, " + std::to_string(trajectory.states.size()) +
                              " states",
                          -1);
  }
  if (spec.granularity == Granularity::kTrajectoryLevel) {
    const auto messages = spec.architecture == Architecture::kEndToEnd
                              ? build_e2e_trajectory_prompt(trajectory)
                              : build_modular_trajectory_prompt(trajectory);
    const std::string response = gateway.complete(messages, params);
    return rewards_from_verdict(parse_trajectory_verdict(response),
                                trajectory.actions.size());
  }
  if (spec.architecture != Architecture::kModular) {
    throw ConfigError(
        "per-step evaluation is caption-based and requires the modular architecture");
  }
  std::vector<StepCategory> categories;
  categories.reserve(trajectory.actions.size());
  for (std::size_t i = 0; i < trajectory.actions.size(); ++i) {
    try {
      const auto messages =
          build_step_prompt(trajectory.instruction, trajectory.actions[i],
                            trajectory.states[i], trajectory.states[i + 1]);
      const std::string response = gateway.complete(messages, params);
      categories.push_back(parse_step_verdict(response).category);
    } catch (const EvaluationError&) {
      throw;
    } catch (const Error& e) {
      throw EvaluationError("step " + std::to_string(i) + ": " + e.what(),
                            static_cast<int>(i));
    }
  }
  return rewards_from_categories(categories, spec.reward);
}

bool judged_success(const RewardSequence& rewards) {
  if (rewards.values.empty()) return false;
  if (rewards.granularity == Granularity::kTrajectoryLevel) {
    return rewards.values.back() == 1.0;
  }
  for (double v : rewards.values) {
    if (v == 1.0) return true;
  }
  return false;
}

}  // namespace agentjudge
