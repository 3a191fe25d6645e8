#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agentjudge/gateway.hpp"
#include "agentjudge/judges.hpp"
#include "agentjudge/sandbox.hpp"
#include "agentjudge/trajectory.hpp"

namespace agentjudge {

/// Verbal lessons from failed rounds, oldest first. Scoped to one episode.
struct ReflexionMemory {
  std::vector<std::string> reflections;
};

/// One attempt as seen by the evaluator and reflector ports.
struct AttemptRecord {
  Trajectory trajectory;
  std::optional<bool> oracle_success;
  int attempt_index = 0;
};

struct ReflexionRound {
  Trajectory trajectory;
  std::string trajectory_ref;  ///< sha256 of the trajectory JSONL line
  RewardSequence rewards;
  bool judged_success = false;
  std::optional<bool> oracle_success;
};

struct ReflexionOutcome {
  std::string task_id;
  int rounds_used = 0;  ///< attempts actually executed (>= 1 unless aborted)
  Trajectory final_trajectory;
  std::string final_trajectory_ref;
  bool judged_success = false;
  std::optional<bool> oracle_success;
  std::vector<ReflexionRound> per_round;
  ReflexionMemory memory;
  std::optional<std::string> error;  ///< set when a port failed and the episode aborted
};

/// The policy under refinement. Observations are environment-defined strings;
/// the actor must be deterministic given (inputs, rng_seed).
class ActorPort {
 public:
  virtual ~ActorPort() = default;
  virtual Action act(const Instruction& instruction, const ReflexionMemory& memory,
                     const std::string& observation, std::uint64_t rng_seed) = 0;
  virtual void reset() {}
};

/// An episodic environment that records the attempt it is driven through.
class EnvPort {
 public:
  virtual ~EnvPort() = default;
  /// Restores the initial state exactly and returns the first observation.
  virtual std::string reset() = 0;
  virtual std::string step(const Action& action) = 0;
  virtual bool done() const = 0;
  virtual int max_steps() const = 0;
  virtual Trajectory trajectory() const = 0;
  virtual std::optional<bool> oracle_success() const = 0;
};

using EvaluatorPort = std::function<RewardSequence(const AttemptRecord&)>;
using ReflectorPort = std::function<std::string(const AttemptRecord&, const ReflexionMemory&)>;

/// Attempt / judge / reflect / retry loop. Runs at most max_rounds + 1
/// attempts, stops at the first judged success, and reflects only when
/// another attempt follows, so the memory holds at most max_rounds entries.
/// Port failures abort the episode with the partial record and the error
/// message stored on the outcome.
ReflexionOutcome reflexion_episode(const Instruction& instruction, ActorPort& actor,
                                   EnvPort& env, const EvaluatorPort& evaluator,
                                   const ReflectorPort& reflector, int max_rounds,
                                   std::uint64_t seed);

/// Reflection prompt: instruction, rendered action history of the failed
/// attempt, and all prior reflections verbatim.
std::vector<ChatMessage> build_reflection_request(const Instruction& instruction,
                                                  const Trajectory& failed_trajectory,
                                                  const ReflexionMemory& memory);

/// Reflector that asks a model through the gateway.
ReflectorPort make_model_reflector(Gateway& gateway, const GenerationParams& params = {});

/// Evaluator that judges trajectories with a model through the gateway.
EvaluatorPort make_model_evaluator(const EvaluatorSpec& spec, Gateway& gateway,
                                   const GenerationParams& params = {});

/// ActorPort adapter: observations are sandbox state keys.
class SandboxActorPort : public ActorPort {
 public:
  SandboxActorPort(const SandboxSim& sim, ScriptedActor actor)
      : sim_(sim), actor_(actor) {}

  Action act(const Instruction& instruction, const ReflexionMemory& memory,
             const std::string& observation, std::uint64_t rng_seed) override;

 private:
  const SandboxSim& sim_;
  ScriptedActor actor_;
};

/// EnvPort adapter over SandboxSim; replays iOS swipes like rollout() does,
/// so attempt k of an episode with seed s is bit-identical to
/// rollout(sim, actor, {seed = mix_seed(s, k), ...}).
class SandboxEnv : public EnvPort {
 public:
  SandboxEnv(const SandboxSim& sim, std::uint64_t episode_seed,
             RemapMode remap_mode = RemapMode::kEvaluation,
             bool include_captions = true, std::string policy_id = "scripted");

  std::string reset() override;
  std::string step(const Action& action) override;
  bool done() const override { return state_.done; }
  int max_steps() const override { return sim_.task().max_steps; }
  Trajectory trajectory() const override;
  std::optional<bool> oracle_success() const override;

 private:
  const SandboxSim& sim_;
  std::uint64_t episode_seed_;
  RemapMode remap_mode_;
  bool include_captions_;
  std::string policy_id_;
  int attempt_index_ = -1;
  int step_index_ = 0;
  SandboxState state_;
  std::vector<Action> actions_;
  std::vector<State> observations_;
};

struct SandboxReflexionConfig {
  ScriptedActor actor;
  int max_rounds = 3;
  std::uint64_t seed = 0;  ///< per-episode seed
  std::optional<NoisyOracleEvaluator> noise;  ///< judge label noise; exact oracle if unset
  RemapMode remap_mode = RemapMode::kEvaluation;
  bool include_captions = false;
  std::string policy_id = "scripted";
};

/// Full closed loop on one sandbox task: scripted actor, oracle (optionally
/// noisy) judge, and synthesized reflections.
ReflexionOutcome run_sandbox_reflexion(const SandboxSim& sim,
                                       const SandboxReflexionConfig& config);

/// rates[k] = fraction of outcomes judged successful within k+1 attempts,
/// for k in [0, max_rounds].
std::vector<double> per_round_success_rates(const std::vector<ReflexionOutcome>& outcomes,
                                            int max_rounds);

std::string reflexion_outcome_to_json_line(const ReflexionOutcome& outcome);

/// Parses an outcome record. Trajectories are stored as content refs, so the
/// parsed rounds carry refs and judgments but empty trajectory bodies.
ReflexionOutcome reflexion_outcome_from_json_line(const std::string& line);

/// One behavior-cloning sample: the state before an action, the instruction,
/// the canonical action string, and its per-step reward.
struct BCSample {
  ScreenshotRef screenshot;
  std::string instruction;
  std::string action;
  double reward = 0.0;
  std::string source_trajectory_id;

  bool operator==(const BCSample& other) const;
};

/// Keeps every (state, action) pair whose per-step reward clears the
/// threshold, in trajectory order. Rewards must be per-step and
/// length-matched (GranularityMismatch otherwise).
std::vector<BCSample> filter_bc(
    const std::vector<std::pair<Trajectory, RewardSequence>>& items, double threshold);

/// Same, with the conventional threshold: the towards-the-goal reward p.
std::vector<BCSample> filter_bc(
    const std::vector<std::pair<Trajectory, RewardSequence>>& items,
    const RewardConfig& config);

/// The unfiltered baseline: every pair, identical to filter_bc at -infinity.
std::vector<BCSample> self_training_export(
    const std::vector<std::pair<Trajectory, RewardSequence>>& items);

std::string bc_sample_to_json_line(const BCSample& sample);
BCSample bc_sample_from_json_line(const std::string& line);
void write_bc_samples_jsonl(const std::string& path,
                            const std::vector<BCSample>& samples);
std::vector<BCSample> read_bc_samples_jsonl(const std::string& path);

}  // namespace agentjudge
