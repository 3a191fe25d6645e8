#include "agentjudge/refine.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "agentjudge/errors.hpp"
#include "agentjudge/hash.hpp"
#include "agentjudge/prompts.hpp"
#include "json.hpp"

namespace agentjudge {
namespace {

std::string source_id(const Trajectory& trajectory) {
  const std::string digest = sha256_hex(trajectory_to_json_line(trajectory));
  const std::string short_digest = digest.substr(0, 8);
  if (trajectory.instruction.task_id.empty()) return short_digest;
  return trajectory.instruction.task_id + ":" + short_digest;
}

}  // namespace

ReflexionOutcome reflexion_episode(const Instruction& instruction, ActorPort& actor,
                                   EnvPort& env, const EvaluatorPort& evaluator,
                                   const ReflectorPort& reflector, int max_rounds,
                                   std::uint64_t seed) {
  if (max_rounds < 0) throw ConfigError("max_rounds must be non-negative");
  ReflexionOutcome outcome;
  outcome.task_id = instruction.task_id;
  for (int attempt = 0; attempt <= max_rounds; ++attempt) {
    const std::uint64_t attempt_seed =
        mix_seed(seed, static_cast<std::uint64_t>(attempt));
    AttemptRecord record;
    record.attempt_index = attempt;
    try {
      actor.reset();
      std::string observation = env.reset();
      for (int step = 0; step < env.max_steps() && !env.done(); ++step) {
        const Action action =
            actor.act(instruction, outcome.memory, observation,
                      mix_seed(attempt_seed, static_cast<std::uint64_t>(step)));
        observation = env.step(action);
      }
      record.trajectory = env.trajectory();
      record.oracle_success = env.oracle_success();
    } catch (const std::exception& e) {
      outcome.error = std::string("EnvFailure: ") + e.what();
      return outcome;
    }
    ReflexionRound round;
    round.trajectory = record.trajectory;
    round.trajectory_ref = sha256_hex(trajectory_to_json_line(record.trajectory));
    round.oracle_success = record.oracle_success;
    outcome.rounds_used = attempt + 1;
    outcome.final_trajectory = round.trajectory;
    outcome.final_trajectory_ref = round.trajectory_ref;
    outcome.oracle_success = round.oracle_success;
    try {
      round.rewards = evaluator(record);
    } catch (const std::exception& e) {
      outcome.per_round.push_back(round);
      outcome.judged_success = false;
      outcome.error = std::string("EvaluatorFailure: ") + e.what();
      return outcome;
    }
    round.judged_success = judged_success(round.rewards);
    outcome.per_round.push_back(round);
    outcome.judged_success = round.judged_success;
    if (round.judged_success) break;
    if (attempt < max_rounds) {
      try {
        outcome.memory.reflections.push_back(reflector(record, outcome.memory));
      } catch (const std::exception& e) {
        outcome.error = std::string("ReflectionFailure: ") + e.what();
        return outcome;
      }
    }
  }
  return outcome;
}

std::vector<ChatMessage> build_reflection_request(const Instruction& instruction,
                                                  const Trajectory& failed_trajectory,
                                                  const ReflexionMemory& memory) {
  const PromptTemplate& templ = get_prompt_template("reflexion_reflect");
  std::string prior;
  for (std::size_t i = 0; i < memory.reflections.size(); ++i) {
    if (i > 0) prior.push_back('\n');
    prior += memory.reflections[i];
  }
  const std::map<std::string, std::string> values = {
      {"intent", instruction.text},
      {"last_actions", render_action_history(failed_trajectory.actions)},
      {"reflections", prior}};
  std::vector<ChatMessage> messages;
  messages.push_back(ChatMessage::system(*templ.system));
  messages.push_back(ChatMessage::user(render_template(templ.user, values)));
  return messages;
}

ReflectorPort make_model_reflector(Gateway& gateway, const GenerationParams& params) {
  return [&gateway, params](const AttemptRecord& record, const ReflexionMemory& memory) {
    const auto messages = build_reflection_request(record.trajectory.instruction,
                                                   record.trajectory, memory);
    return gateway.complete(messages, params);
  };
}

EvaluatorPort make_model_evaluator(const EvaluatorSpec& spec, Gateway& gateway,
                                   const GenerationParams& params) {
  return [spec, &gateway, params](const AttemptRecord& record) {
    return evaluate(record.trajectory, spec, gateway, params);
  };
}

Action SandboxActorPort::act(const Instruction& instruction,
                             const ReflexionMemory& memory,
                             const std::string& observation, std::uint64_t rng_seed) {
  (void)instruction;
  return actor_.act(sim_, sandbox_state_from_key(observation), memory.reflections,
                    rng_seed);
}

SandboxEnv::SandboxEnv(const SandboxSim& sim, std::uint64_t episode_seed,
                       RemapMode remap_mode, bool include_captions,
                       std::string policy_id)
    : sim_(sim),
      episode_seed_(episode_seed),
      remap_mode_(remap_mode),
      include_captions_(include_captions),
      policy_id_(std::move(policy_id)) {}

std::string SandboxEnv::reset() {
  ++attempt_index_;
  step_index_ = 0;
  state_ = sim_.initial_state();
  actions_.clear();
  observations_.clear();
  observations_.push_back(
      make_observation(sim_.graph(), state_, include_captions_, nullptr));
  return sandbox_state_key(state_);
}

std::string SandboxEnv::step(const Action& action) {
  if (attempt_index_ < 0) throw ConfigError("SandboxEnv::step before reset");
  Action executed = action;
  if (sim_.task().instruction.domain == Domain::kIos) {
    const std::uint64_t attempt_seed =
        mix_seed(episode_seed_, static_cast<std::uint64_t>(attempt_index_));
    executed = remap_ios_action(
        action, remap_mode_,
        mix_seed(attempt_seed, 0x9000 + static_cast<std::uint64_t>(step_index_)));
  }
  state_ = sim_.apply(state_, executed);
  actions_.push_back(executed);
  observations_.push_back(
      make_observation(sim_.graph(), state_, include_captions_, nullptr));
  ++step_index_;
  return sandbox_state_key(state_);
}

Trajectory SandboxEnv::trajectory() const {
  Trajectory trajectory;
  trajectory.instruction = sim_.task().instruction;
  trajectory.policy_id = policy_id_;
  trajectory.actions = actions_;
  trajectory.states = observations_;
  trajectory.agent_response = state_.response;
  return trajectory;
}

std::optional<bool> SandboxEnv::oracle_success() const {
  return sim_.is_goal(state_);
}

ReflexionOutcome run_sandbox_reflexion(const SandboxSim& sim,
                                       const SandboxReflexionConfig& config) {
  SandboxActorPort actor(sim, config.actor);
  SandboxEnv env(sim, config.seed, config.remap_mode, config.include_captions,
                 config.policy_id);
  const EvaluatorPort evaluator = [&sim, &config](const AttemptRecord& record) {
    const bool oracle =
        record.oracle_success
            ? *record.oracle_success
            : replay_trajectory(record.trajectory, sim).oracle_success;
    bool judged = oracle;
    if (config.noise) {
      const Verdict verdict = judge_with_noise(
          oracle, *config.noise,
          mix_seed(mix_seed(config.seed, 0x4E),
                   static_cast<std::uint64_t>(record.attempt_index)));
      judged = verdict.status == VerdictStatus::kSuccess;
    }
    Verdict verdict;
    verdict.status = judged ? VerdictStatus::kSuccess : VerdictStatus::kFailure;
    verdict.thoughts = "sandbox oracle judgment";
    return rewards_from_verdict(verdict, record.trajectory.actions.size());
  };
  const ReflectorPort reflector = [&sim](const AttemptRecord& record,
                                         const ReflexionMemory&) {
    return synth_reflection(replay_trajectory(record.trajectory, sim), sim);
  };
  return reflexion_episode(sim.task().instruction, actor, env, evaluator, reflector,
                           config.max_rounds, config.seed);
}

std::vector<double> per_round_success_rates(
    const std::vector<ReflexionOutcome>& outcomes, int max_rounds) {
  if (outcomes.empty()) throw EmptyInput("per-round rates need at least one outcome");
  if (max_rounds < 0) throw ConfigError("max_rounds must be non-negative");
  std::vector<double> rates(static_cast<std::size_t>(max_rounds) + 1, 0.0);
  for (const ReflexionOutcome& outcome : outcomes) {
    if (!outcome.judged_success) continue;
    for (std::size_t k = static_cast<std::size_t>(outcome.rounds_used) - 1;
         k < rates.size(); ++k) {
      rates[k] += 1.0;
    }
  }
  for (double& rate : rates) rate /= static_cast<double>(outcomes.size());
  return rates;
}

std::string reflexion_outcome_to_json_line(const ReflexionOutcome& outcome) {
  nlohmann::ordered_json json;
  json["task_id"] = outcome.task_id;
  json["rounds_used"] = outcome.rounds_used;
  json["judged_success"] = outcome.judged_success;
  if (outcome.oracle_success) {
    json["oracle_success"] = *outcome.oracle_success;
  } else {
    json["oracle_success"] = nullptr;
  }
  if (outcome.error) {
    json["error"] = *outcome.error;
  } else {
    json["error"] = nullptr;
  }
  json["reflections"] = outcome.memory.reflections;
  nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
  for (const ReflexionRound& round : outcome.per_round) {
    nlohmann::ordered_json entry;
    entry["trajectory_ref"] = round.trajectory_ref;
    entry["judged_success"] = round.judged_success;
    if (round.oracle_success) {
      entry["oracle_success"] = *round.oracle_success;
    } else {
      entry["oracle_success"] = nullptr;
    }
    entry["granularity"] = to_string(round.rewards.granularity);
    entry["rewards"] = round.rewards.values;
    rounds.push_back(entry);
  }
  json["per_round"] = rounds;
  json["final_trajectory_ref"] = outcome.final_trajectory_ref;
  return json.dump();
}

ReflexionOutcome reflexion_outcome_from_json_line(const std::string& line) {
  ReflexionOutcome outcome;
  try {
    const nlohmann::json json = nlohmann::json::parse(line);
    outcome.task_id = json.at("task_id").get<std::string>();
    outcome.rounds_used = json.at("rounds_used").get<int>();
    outcome.judged_success = json.at("judged_success").get<bool>();
    if (!json.at("oracle_success").is_null()) {
      outcome.oracle_success = json.at("oracle_success").get<bool>();
    }
    if (!json.at("error").is_null()) {
      outcome.error = json.at("error").get<std::string>();
    }
    for (const auto& reflection : json.at("reflections")) {
      outcome.memory.reflections.push_back(reflection.get<std::string>());
    }
    for (const auto& entry : json.at("per_round")) {
      ReflexionRound round;
      round.trajectory_ref = entry.at("trajectory_ref").get<std::string>();
      round.judged_success = entry.at("judged_success").get<bool>();
      if (!entry.at("oracle_success").is_null()) {
        round.oracle_success = entry.at("oracle_success").get<bool>();
      }
      const std::string granularity = entry.at("granularity").get<std::string>();
      const auto parsed = granularity_from_string(granularity);
      if (!parsed) throw SchemaError("unknown granularity: " + granularity);
      round.rewards.granularity = *parsed;
      for (const auto& value : entry.at("rewards")) {
        round.rewards.values.push_back(value.get<double>());
      }
      outcome.per_round.push_back(round);
    }
    outcome.final_trajectory_ref = json.at("final_trajectory_ref").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed reflexion outcome record: ") + e.what());
  }
  return outcome;
}

bool BCSample::operator==(const BCSample& other) const {
  return screenshot == other.screenshot && instruction == other.instruction &&
         action == other.action && reward == other.reward &&
         source_trajectory_id == other.source_trajectory_id;
}

std::vector<BCSample> filter_bc(
    const std::vector<std::pair<Trajectory, RewardSequence>>& items,
    double threshold) {
  std::vector<BCSample> samples;
  for (const auto& [trajectory, rewards] : items) {
    if (rewards.granularity != Granularity::kPerStep) {
      throw GranularityMismatch(
          "filtered BC needs per-step rewards; got a trajectory-level sequence");
    }
    if (rewards.values.size() != trajectory.actions.size()) {
      throw GranularityMismatch(
          "reward count " + std::to_string(rewards.values.size()) +
          " does not match action count " + std::to_string(trajectory.actions.size()));
    }
    const std::string source = source_id(trajectory);
    for (std::size_t i = 0; i < trajectory.actions.size(); ++i) {
      if (rewards.values[i] < threshold) continue;
      BCSample sample;
      sample.screenshot = trajectory.states[i].screenshot;
      sample.instruction = trajectory.instruction.text;
      sample.action = render_action(trajectory.actions[i]);
      sample.reward = rewards.values[i];
      sample.source_trajectory_id = source;
      samples.push_back(sample);
    }
  }
  return samples;
}

std::vector<BCSample> filter_bc(
    const std::vector<std::pair<Trajectory, RewardSequence>>& items,
    const RewardConfig& config) {
  config.validate();
  return filter_bc(items, config.p);
}

std::vector<BCSample> self_training_export(
    const std::vector<std::pair<Trajectory, RewardSequence>>& items) {
  return filter_bc(items, -std::numeric_limits<double>::infinity());
}

std::string bc_sample_to_json_line(const BCSample& sample) {
  nlohmann::ordered_json json;
  json["screenshot"] = sample.screenshot.sha256;
  json["instruction"] = sample.instruction;
  json["action"] = sample.action;
  json["reward"] = sample.reward;
  json["source"] = sample.source_trajectory_id;
  return json.dump();
}

BCSample bc_sample_from_json_line(const std::string& line) {
  BCSample sample;
  try {
    const nlohmann::json json = nlohmann::json::parse(line);
    sample.screenshot.sha256 = json.at("screenshot").get<std::string>();
    sample.instruction = json.at("instruction").get<std::string>();
    sample.action = json.at("action").get<std::string>();
    sample.reward = json.at("reward").get<double>();
    sample.source_trajectory_id = json.at("source").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed BC sample record: ") + e.what());
  }
  return sample;
}

void write_bc_samples_jsonl(const std::string& path,
                            const std::vector<BCSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  for (const BCSample& sample : samples) {
    out << bc_sample_to_json_line(sample) << "\n";
  }
}

std::vector<BCSample> read_bc_samples_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  std::vector<BCSample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      samples.push_back(bc_sample_from_json_line(line));
    } catch (const Error& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

}  // namespace agentjudge
