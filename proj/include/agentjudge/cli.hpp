#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agentjudge/gateway.hpp"
#include "agentjudge/judges.hpp"

namespace agentjudge {

/// Judge configuration file: evaluator spec plus generation parameters and,
/// for the endpoint backend, connection details. Auth material stays in the
/// environment variable named by the config; it never appears in outputs.
struct JudgeConfig {
  EvaluatorSpec spec;
  GenerationParams params;
  std::string model_name = "scripted";
  std::optional<EndpointConfig> endpoint;
};

JudgeConfig load_judge_config(const std::string& path);

struct EvaluateArgs {
  std::string trajectories_path;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string backend = "scripted";
  std::string scripted_responses_path;
  std::string cache_dir;
  std::string blobs_dir;
  std::string request_log_path;  ///< off by default: log rows carry latencies
};

/// Judges every trajectory line in the input file. Malformed lines and
/// failed evaluations become error records; the run always produces one
/// record per input line. Returns 0, or 1 when any record is an error.
int cmd_evaluate(const EvaluateArgs& args);

struct ReflexionArgs {
  std::string suite = "builtin:default";
  std::string config_path;  ///< optional JSON overriding the flags below
  std::string out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  int max_rounds = 3;
  double skill = 0.5;
  double reflection_boost = 0.2;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  bool include_captions = false;
};

/// Runs the attempt/judge/reflect loop over every task of a sandbox suite.
/// Returns 0, or 1 when any episode aborted with a port failure.
int cmd_reflexion(const ReflexionArgs& args);

struct FilterBcArgs {
  std::string run_dir;           ///< evaluate run with per-step rewards
  std::string trajectories_path; ///< must hash-match the run's input
  std::string out_dir;
  std::optional<double> threshold;  ///< default: the run's towards-goal reward p
};

/// Joins an evaluate run with its trajectories and keeps the step samples
/// whose reward clears the threshold.
int cmd_filter_bc(const FilterBcArgs& args);

struct MetricsArgs {
  std::string pred_run_dir;
  std::string oracle_path;  ///< {"task_id": bool} JSON object
  std::string out_dir;
  std::string rank_a_path;  ///< optional {"policy": score} for rank correlation
  std::string rank_b_path;
};

/// Agreement between a run's judged outcomes and oracle labels, plus an
/// optional Kendall rank correlation between two policy score files.
int cmd_metrics(const MetricsArgs& args);

struct SandboxGenArgs {
  std::string suite = "builtin:default";
  std::string config_path;  ///< optional judge config; pins scripted params
  std::string out_dir;
  std::uint64_t seed = 0;
  double skill = 1.0;
  double reflection_boost = 0.0;
  std::vector<double> policy_skills;  ///< extra policies for ranking fixtures
};

/// Rolls the scripted actor over a suite and writes trajectories, oracle
/// labels, and a scripted-response file that answers every judge and
/// captioner request for them.
int cmd_sandbox_gen(const SandboxGenArgs& args);

/// Parses argv and dispatches. Exit codes: 0 success, 1 task-level errors,
/// 2 configuration or usage errors.
int run_cli(int argc, const char* const* argv);

}  // namespace agentjudge
