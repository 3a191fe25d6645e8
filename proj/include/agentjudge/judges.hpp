#pragma once

#include <string>
#include <vector>

#include "agentjudge/gateway.hpp"
#include "agentjudge/trajectory.hpp"

namespace agentjudge {

/// How the judge consumes the final state: a vision model looking at the
/// screenshot, or a captioner + text reasoner pipeline.
enum class Architecture { kEndToEnd, kModular };

enum class Granularity { kTrajectoryLevel, kPerStep };

const char* to_string(Architecture architecture);
const char* to_string(Granularity granularity);
std::optional<Architecture> architecture_from_string(const std::string& name);
std::optional<Granularity> granularity_from_string(const std::string& name);

enum class VerdictStatus { kSuccess, kFailure };

struct Verdict {
  VerdictStatus status = VerdictStatus::kFailure;
  std::string thoughts;
};

enum class StepCategory { kTowardsGoal, kNotSure, kGoalReached, kAwayFromGoal };

const char* to_string(StepCategory category);

struct StepVerdict {
  StepCategory category = StepCategory::kNotSure;
  std::string thoughts;
};

/// Per-step reward mapping. Defaults: progress 0.5, unknown 0.0, regress -1.
struct RewardConfig {
  double p = 0.5;         ///< towards-the-goal
  double not_sure = 0.0;  ///< not-sure
  double d = -1.0;        ///< away-from-the-goal; goal-reached is always 1

  /// Enforces d < 0 <= not_sure <= p <= 1.
  void validate() const;
};

struct RewardSequence {
  Granularity granularity = Granularity::kTrajectoryLevel;
  std::vector<double> values;
};

/// Parses the two-line verdict contract: a Thoughts line and a final
///   Status: "success" | "failure"
/// line. Case-insensitive, tolerant of quoting/whitespace; when several
/// Status lines appear the last one wins. Throws MissingStatus /
/// UnrecognizedStatus.
Verdict parse_trajectory_verdict(const std::string& text);

/// Parses the per-step contract: a Thoughts line and a final
///   Response: "towards-the-goal" | "not-sure" | "goal-reached" | "away-from-the-goal"
/// line. Throws MissingResponse / UnrecognizedCategory.
StepVerdict parse_step_verdict(const std::string& text);

/// Action history block for prompts: one canonical string per line.
std::string render_action_history(const std::vector<Action>& actions);

/// Whole-trajectory judge prompt for a vision model; the final screenshot is
/// attached to the user turn. Template chosen by instruction domain.
std::vector<ChatMessage> build_e2e_trajectory_prompt(const Trajectory& trajectory);

/// Whole-trajectory judge prompt for a text reasoner over the final state's
/// caption. Requires the final caption (MissingCaption otherwise).
std::vector<ChatMessage> build_modular_trajectory_prompt(const Trajectory& trajectory);

/// Single-step classification prompt over the captions of the states before
/// and after one action. Requires both captions.
std::vector<ChatMessage> build_step_prompt(const Instruction& instruction,
                                           const Action& action, const State& current,
                                           const State& next);

/// Trajectory-level reward shape: zeros with the last entry 1 iff success.
RewardSequence rewards_from_verdict(const Verdict& verdict, std::size_t n_actions);

/// Per-step reward shape: goal-reached 1, towards p, not-sure, away d.
RewardSequence rewards_from_categories(const std::vector<StepCategory>& categories,
                                       const RewardConfig& config);

struct EvaluatorSpec {
  Architecture architecture = Architecture::kModular;
  Granularity granularity = Granularity::kTrajectoryLevel;
  RewardConfig reward;
};

/// Runs the judge over one trajectory. Trajectory-level evaluation issues
/// exactly one model call; per-step evaluation issues exactly one call per
/// action. Per-step always rides the caption pipeline, so it requires
/// Architecture::kModular (ConfigError otherwise). Model-output parse
/// failures surface as EvaluationError tagged with the step index.
RewardSequence evaluate(const Trajectory& trajectory, const EvaluatorSpec& spec,
                        Gateway& gateway, const GenerationParams& params = {});

/// Collapses a reward sequence to the judged outcome: trajectory-level reads
/// the final entry, per-step asks whether any step reached the goal.
bool judged_success(const RewardSequence& rewards);

}  // namespace agentjudge
