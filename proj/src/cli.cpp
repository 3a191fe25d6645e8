#include "agentjudge/cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "agentjudge/errors.hpp"
#include "agentjudge/hash.hpp"
#include "agentjudge/metrics.hpp"
#include "agentjudge/prompts.hpp"
#include "agentjudge/refine.hpp"
#include "agentjudge/sandbox.hpp"
#include "agentjudge/store.hpp"
#include "agentjudge/trajectory.hpp"
#include "json.hpp"

namespace agentjudge {
namespace {

namespace fs = std::filesystem;

std::string basename_of(const std::string& path) {
  return fs::path(path).filename().string();
}

/// Shortest-roundtrip decimal form, the same notation JSON output uses.
std::string double_str(double value) { return nlohmann::json(value).dump(); }

/// Runs fn(0..n-1) on up to `jobs` worker threads. Exceptions escaping fn are
/// rethrown on the caller thread after all workers join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const int workers =
      std::max(1, std::min(jobs, static_cast<int>(std::min<std::size_t>(n, 1024))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) break;
          fn(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Result keys must be unique per (task, kind); repeated task ids get a
/// stable #2, #3, ... suffix in input order.
std::vector<std::string> dedup_task_keys(const std::vector<std::string>& bases) {
  std::map<std::string, int> seen;
  std::vector<std::string> keys;
  keys.reserve(bases.size());
  for (const std::string& base : bases) {
    const int count = ++seen[base];
    keys.push_back(count == 1 ? base : base + "#" + std::to_string(count));
  }
  return keys;
}

InputRef input_ref_for_file(const std::string& path) {
  return {basename_of(path), file_sha256(path)};
}

/// Suites load either from a file or from the compiled-in default; either
/// way the manifest pins the exact bytes.
InputRef input_ref_for_suite(const std::string& path_or_builtin) {
  if (path_or_builtin.rfind("builtin:", 0) == 0) {
    const std::string* text = find_embedded_asset("suites/default_suite.json");
    if (!text) throw ConfigError("embedded default suite is missing");
    return {path_or_builtin, sha256_hex(*text)};
  }
  return input_ref_for_file(path_or_builtin);
}

struct ParsedLine {
  int line_no = 0;
  std::optional<Trajectory> trajectory;
  std::string error;
};

/// Reads a trajectory JSONL file line by line, holding on to per-line parse
/// or validation failures instead of aborting the run.
std::vector<ParsedLine> read_trajectory_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open trajectories file: " + path);
  std::vector<ParsedLine> items;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ParsedLine item;
    item.line_no = line_no;
    try {
      Trajectory trajectory = trajectory_from_json_line(line);
      const std::vector<Violation> violations = validate_trajectory(trajectory);
      if (!violations.empty()) {
        item.error = "invalid trajectory: " + violations.front().field + ": " +
                     violations.front().rule;
      } else {
        item.trajectory = std::move(trajectory);
      }
    } catch (const Error& e) {
      item.error = e.what();
    }
    items.push_back(std::move(item));
  }
  if (items.empty()) throw ConfigError("no trajectory lines in " + path);
  return items;
}

std::shared_ptr<ChatBackend> make_backend(const EvaluateArgs& args,
                                          const JudgeConfig& config,
                                          const std::string& blobs_dir) {
  if (args.backend == "scripted") {
    if (args.scripted_responses_path.empty()) {
      throw ConfigError("the scripted backend needs --scripted-responses");
    }
    return ScriptedBackend::from_json_file(args.scripted_responses_path);
  }
  if (args.backend == "endpoint") {
    if (!config.endpoint) {
      throw ConfigError("judge config has no endpoint section for --backend endpoint");
    }
    BlobResolver resolver;
    if (!blobs_dir.empty()) {
      auto blobs = std::make_shared<BlobStore>(blobs_dir);
      resolver = [blobs](const ScreenshotRef& ref) { return blobs->get(ref.sha256); };
    }
    return std::make_shared<HttpEndpointBackend>(*config.endpoint, resolver);
  }
  throw ConfigError("unknown backend: " + args.backend);
}

nlohmann::ordered_json error_payload(const std::string& message, int line_no) {
  nlohmann::ordered_json payload;
  payload["message"] = message;
  payload["line"] = line_no;
  return payload;
}

}  // namespace

JudgeConfig load_judge_config(const std::string& path) {
  const std::string text = read_file(path);
  JudgeConfig config;
  config.spec = evaluator_spec_from_json_text(text);
  try {
    const nlohmann::json json = nlohmann::json::parse(text);
    if (json.contains("params")) {
      const nlohmann::json& params = json.at("params");
      config.params.temperature = params.value("temperature", 0.0);
      config.params.max_tokens = params.value("max_tokens", 1024);
      if (params.contains("top_k") && !params.at("top_k").is_null()) {
        config.params.top_k = params.at("top_k").get<int>();
      }
    }
    config.model_name = json.value("model_name", std::string("scripted"));
    if (json.contains("endpoint") && !json.at("endpoint").is_null()) {
      const nlohmann::json& ep = json.at("endpoint");
      EndpointConfig endpoint;
      endpoint.base_url = ep.at("base_url").get<std::string>();
      endpoint.model_name = ep.value("model_name", config.model_name);
      endpoint.auth_token_env = ep.value("auth_token_env", std::string());
      endpoint.timeout_ms = ep.value("timeout_ms", 30000);
      endpoint.max_retries = ep.value("max_retries", 2);
      endpoint.initial_backoff_ms = ep.value("initial_backoff_ms", 250);
      config.endpoint = std::move(endpoint);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed judge config " + path + ": " + e.what());
  }
  return config;
}

int cmd_evaluate(const EvaluateArgs& args) {
  const JudgeConfig config = load_judge_config(args.config_path);
  const std::vector<ParsedLine> items = read_trajectory_lines(args.trajectories_path);
  const std::shared_ptr<ChatBackend> backend = make_backend(args, config, args.blobs_dir);

  GatewayOptions gateway_options;
  gateway_options.cache_dir = args.cache_dir;
  gateway_options.request_log_path = args.request_log_path;
  gateway_options.max_concurrency = std::max(1, args.jobs);
  Gateway gateway(backend, gateway_options);

  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.seed = args.seed;
  manifest.backend = args.backend;
  manifest.model_name = backend->model_name();
  manifest.evaluator = config.spec;
  manifest.prompt_assets_hash = prompt_assets_hash();
  manifest.inputs.push_back(input_ref_for_file(args.trajectories_path));
  manifest.inputs.push_back(input_ref_for_file(args.config_path));
  if (!args.scripted_responses_path.empty()) {
    manifest.inputs.push_back(input_ref_for_file(args.scripted_responses_path));
  }
  finalize_manifest(manifest);
  fs::create_directories(args.out_dir);
  write_manifest(args.out_dir, manifest);

  std::vector<std::string> bases;
  bases.reserve(items.size());
  for (const ParsedLine& item : items) {
    bases.push_back(item.trajectory && !item.trajectory->instruction.task_id.empty()
                        ? item.trajectory->instruction.task_id
                        : "line:" + std::to_string(item.line_no));
  }
  const std::vector<std::string> keys = dedup_task_keys(bases);

  struct Computed {
    std::string kind;
    nlohmann::ordered_json payload;
  };
  std::vector<Computed> computed(items.size());
  parallel_for(items.size(), args.jobs, [&](std::size_t i) {
    const ParsedLine& item = items[i];
    if (!item.trajectory) {
      computed[i] = {"error", error_payload(item.error, item.line_no)};
      return;
    }
    try {
      const RewardSequence rewards =
          evaluate(*item.trajectory, config.spec, gateway, config.params);
      nlohmann::ordered_json payload;
      payload["granularity"] = to_string(rewards.granularity);
      payload["values"] = rewards.values;
      payload["judged_success"] = judged_success(rewards);
      computed[i] = {"rewards", std::move(payload)};
    } catch (const Error& e) {
      computed[i] = {"error", error_payload(e.what(), item.line_no)};
    }
  });

  ResultStore store((fs::path(args.out_dir) / "results.jsonl").string());
  std::size_t errors = 0;
  for (std::size_t i = 0; i < computed.size(); ++i) {
    store.append({manifest.run_id, keys[i], computed[i].kind, computed[i].payload.dump()});
    if (computed[i].kind == "error") ++errors;
  }

  std::cout << "evaluate: " << (items.size() - errors) << " judged, " << errors
            << " errors -> " << store.path() << "\n";
  return errors > 0 ? 1 : 0;
}

int cmd_reflexion(const ReflexionArgs& args) {
  double skill = args.skill;
  double reflection_boost = args.reflection_boost;
  double fp_rate = args.fp_rate;
  double fn_rate = args.fn_rate;
  int max_rounds = args.max_rounds;
  if (!args.config_path.empty()) {
    try {
      const nlohmann::json json = nlohmann::json::parse(read_file(args.config_path));
      skill = json.value("skill", skill);
      reflection_boost = json.value("reflection_boost", reflection_boost);
      fp_rate = json.value("fp_rate", fp_rate);
      fn_rate = json.value("fn_rate", fn_rate);
      max_rounds = json.value("max_rounds", max_rounds);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("malformed reflexion config " + args.config_path + ": " +
                        e.what());
    }
  }
  if (max_rounds < 0) throw ConfigError("max_rounds must be >= 0");
  if (skill < 0 || skill > 1) throw ConfigError("skill must lie in [0, 1]");
  if (fp_rate < 0 || fp_rate > 1 || fn_rate < 0 || fn_rate > 1) {
    throw ConfigError("noise rates must lie in [0, 1]");
  }

  const SandboxSuite suite = load_suite(args.suite);
  if (suite.tasks.empty()) throw ConfigError("suite has no tasks: " + args.suite);

  RunManifest manifest;
  manifest.command = "reflexion";
  manifest.seed = args.seed;
  manifest.backend = "none";
  manifest.model_name = "sandbox-oracle";
  manifest.prompt_assets_hash = prompt_assets_hash();
  manifest.inputs.push_back(input_ref_for_suite(args.suite));
  if (!args.config_path.empty()) {
    manifest.inputs.push_back(input_ref_for_file(args.config_path));
  }
  manifest.extra["skill"] = double_str(skill);
  manifest.extra["reflection_boost"] = double_str(reflection_boost);
  manifest.extra["max_rounds"] = std::to_string(max_rounds);
  manifest.extra["fp_rate"] = double_str(fp_rate);
  manifest.extra["fn_rate"] = double_str(fn_rate);
  finalize_manifest(manifest);
  fs::create_directories(args.out_dir);
  write_manifest(args.out_dir, manifest);

  std::vector<ReflexionOutcome> outcomes(suite.tasks.size());
  parallel_for(suite.tasks.size(), args.jobs, [&](std::size_t i) {
    const SandboxTask& task = suite.tasks[i];
    SandboxSim sim(suite.graph(task.graph_id), task);
    SandboxReflexionConfig config;
    config.actor = {skill, reflection_boost, mix_seed(args.seed, 0xAC7)};
    config.max_rounds = max_rounds;
    config.seed = mix_seed(args.seed, i);
    if (fp_rate > 0 || fn_rate > 0) {
      config.noise = NoisyOracleEvaluator{fp_rate, fn_rate, mix_seed(args.seed, 0x7E11)};
    }
    config.include_captions = args.include_captions;
    outcomes[i] = run_sandbox_reflexion(sim, config);
  });

  ResultStore store((fs::path(args.out_dir) / "results.jsonl").string());
  std::vector<Trajectory> round_trajectories;
  std::size_t episodes_with_errors = 0;
  std::vector<bool> final_judged, final_oracle, final_both;
  for (const ReflexionOutcome& outcome : outcomes) {
    const std::string line = reflexion_outcome_to_json_line(outcome);
    store.append({manifest.run_id, outcome.task_id, "reflexion",
                  nlohmann::json::parse(line).dump()});
    for (const ReflexionRound& round : outcome.per_round) {
      round_trajectories.push_back(round.trajectory);
    }
    if (outcome.error) ++episodes_with_errors;
    const bool oracle = outcome.oracle_success.value_or(false);
    final_judged.push_back(outcome.judged_success);
    final_oracle.push_back(oracle);
    final_both.push_back(outcome.judged_success && oracle);
  }
  write_trajectories_jsonl((fs::path(args.out_dir) / "trajectories.jsonl").string(),
                           round_trajectories);

  const std::vector<double> per_round = per_round_success_rates(outcomes, max_rounds);
  nlohmann::ordered_json summary;
  summary["tasks"] = outcomes.size();
  summary["max_rounds"] = max_rounds;
  summary["per_round_judged"] = per_round;
  summary["final_judged_rate"] = success_rate(final_judged);
  summary["final_oracle_rate"] = success_rate(final_oracle);
  summary["final_judged_and_oracle_rate"] = success_rate(final_both);
  summary["episodes_with_errors"] = episodes_with_errors;
  write_file((fs::path(args.out_dir) / "summary.json").string(),
             summary.dump(2) + "\n");

  for (std::size_t k = 0; k < per_round.size(); ++k) {
    std::cout << "judged success within " << (k + 1) << " attempt"
              << (k == 0 ? "" : "s") << ": " << per_round[k] << "\n";
  }
  std::cout << "final judged " << success_rate(final_judged) << ", oracle "
            << success_rate(final_oracle) << ", judged&oracle "
            << success_rate(final_both) << " over " << outcomes.size()
            << " tasks (" << episodes_with_errors << " errors)\n";
  return episodes_with_errors > 0 ? 1 : 0;
}

int cmd_filter_bc(const FilterBcArgs& args) {
  const RunManifest run = read_manifest(args.run_dir);
  if (run.command != "evaluate") {
    throw ConfigError("filter-bc needs an evaluate run, got command " + run.command);
  }
  if (!run.evaluator) throw ConfigError("run manifest carries no evaluator spec");
  if (run.evaluator->granularity != Granularity::kPerStep) {
    throw GranularityMismatch("filter-bc needs per-step rewards, run used " +
                              std::string(to_string(run.evaluator->granularity)));
  }
  const std::string trajectories_hash = file_sha256(args.trajectories_path);
  const bool hash_matches =
      std::any_of(run.inputs.begin(), run.inputs.end(),
                  [&](const InputRef& input) { return input.sha256 == trajectories_hash; });
  if (!hash_matches) {
    throw ConfigError("trajectories file does not hash-match any input of run " +
                      run.run_id);
  }

  const std::vector<ResultRecord> records =
      read_result_records((fs::path(args.run_dir) / "results.jsonl").string());
  std::map<std::string, RewardSequence> rewards_by_key;
  for (const ResultRecord& record : records) {
    if (record.kind != "rewards") continue;
    const nlohmann::json payload = nlohmann::json::parse(record.payload_json);
    RewardSequence rewards;
    const auto granularity =
        granularity_from_string(payload.at("granularity").get<std::string>());
    if (!granularity) {
      throw SchemaError("rewards record has an unknown granularity");
    }
    rewards.granularity = *granularity;
    rewards.values = payload.at("values").get<std::vector<double>>();
    rewards_by_key.emplace(record.task_id, std::move(rewards));
  }

  const std::vector<Trajectory> trajectories =
      read_trajectories_jsonl(args.trajectories_path);
  std::vector<std::string> bases;
  bases.reserve(trajectories.size());
  for (const Trajectory& trajectory : trajectories) {
    bases.push_back(trajectory.instruction.task_id);
  }
  const std::vector<std::string> keys = dedup_task_keys(bases);

  const double threshold = args.threshold.value_or(run.evaluator->reward.p);

  RunManifest manifest;
  manifest.command = "filter-bc";
  manifest.seed = 0;
  manifest.backend = "none";
  manifest.model_name = run.model_name;
  manifest.evaluator = run.evaluator;
  manifest.prompt_assets_hash = prompt_assets_hash();
  manifest.inputs.push_back(
      {"manifest.json", sha256_hex(read_file(
                            (fs::path(args.run_dir) / "manifest.json").string()))});
  manifest.inputs.push_back(input_ref_for_file(args.trajectories_path));
  manifest.extra["threshold"] = double_str(threshold);
  finalize_manifest(manifest);
  fs::create_directories(args.out_dir);
  write_manifest(args.out_dir, manifest);

  ResultStore store((fs::path(args.out_dir) / "results.jsonl").string());
  std::vector<BCSample> all_samples;
  std::size_t steps_seen = 0;
  std::size_t evaluated = 0;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto it = rewards_by_key.find(keys[i]);
    if (it == rewards_by_key.end()) continue;  // error records produce no samples
    ++evaluated;
    steps_seen += trajectories[i].actions.size();
    const std::vector<BCSample> samples =
        filter_bc({{trajectories[i], it->second}}, threshold);
    nlohmann::ordered_json payload;
    payload["threshold"] = threshold;
    nlohmann::ordered_json sample_array = nlohmann::ordered_json::array();
    for (const BCSample& sample : samples) {
      sample_array.push_back(
          nlohmann::ordered_json::parse(bc_sample_to_json_line(sample)));
    }
    payload["samples"] = std::move(sample_array);
    store.append({manifest.run_id, keys[i], "bc_samples", payload.dump()});
    all_samples.insert(all_samples.end(), samples.begin(), samples.end());
  }
  if (evaluated == 0) {
    throw ConfigError("no evaluated trajectories to filter; run contained only errors");
  }
  const std::string samples_path =
      (fs::path(args.out_dir) / "bc_samples.jsonl").string();
  write_bc_samples_jsonl(samples_path, all_samples);

  std::cout << "filter-bc: kept " << all_samples.size() << " of " << steps_seen
            << " step samples at threshold " << double_str(threshold) << " -> "
            << samples_path << "\n";
  return 0;
}

int cmd_metrics(const MetricsArgs& args) {
  const RunManifest run = read_manifest(args.pred_run_dir);
  const std::vector<ResultRecord> records =
      read_result_records((fs::path(args.pred_run_dir) / "results.jsonl").string());

  nlohmann::json oracle;
  try {
    oracle = nlohmann::json::parse(read_file(args.oracle_path));
    if (!oracle.is_object()) throw ConfigError("oracle file must be a JSON object");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("malformed oracle file " + args.oracle_path + ": " + e.what());
  }

  std::vector<JudgmentPair> pairs;
  for (const ResultRecord& record : records) {
    if (record.kind != "rewards" && record.kind != "reflexion") continue;
    const nlohmann::json payload = nlohmann::json::parse(record.payload_json);
    const bool predicted = payload.at("judged_success").get<bool>();
    if (!oracle.contains(record.task_id)) {
      throw ConfigError("oracle file has no label for task " + record.task_id);
    }
    pairs.push_back({record.task_id, predicted, oracle.at(record.task_id).get<bool>()});
  }
  const AgreementReport report = agreement(pairs);

  RunManifest manifest;
  manifest.command = "metrics";
  manifest.seed = 0;
  manifest.backend = "none";
  manifest.model_name = run.model_name;
  manifest.evaluator = run.evaluator;
  manifest.prompt_assets_hash = prompt_assets_hash();
  manifest.inputs.push_back(
      {"manifest.json",
       sha256_hex(read_file((fs::path(args.pred_run_dir) / "manifest.json").string()))});
  manifest.inputs.push_back(input_ref_for_file(args.oracle_path));
  if (!args.rank_a_path.empty()) {
    manifest.inputs.push_back(input_ref_for_file(args.rank_a_path));
    manifest.inputs.push_back(input_ref_for_file(args.rank_b_path));
  }
  finalize_manifest(manifest);
  fs::create_directories(args.out_dir);
  write_manifest(args.out_dir, manifest);

  write_file((fs::path(args.out_dir) / "agreement.json").string(),
             agreement_report_json(report) + "\n");
  write_file((fs::path(args.out_dir) / "agreement.txt").string(),
             agreement_report_text(report));
  write_file((fs::path(args.out_dir) / "confusion.csv").string(),
             agreement_report_csv(report));
  write_file((fs::path(args.out_dir) / "pairs.csv").string(),
             judgment_pairs_csv(pairs));

  ResultStore store((fs::path(args.out_dir) / "results.jsonl").string());
  store.append({manifest.run_id, "all", "agreement",
                nlohmann::json::parse(agreement_report_json(report)).dump()});

  std::cout << agreement_report_text(report);

  if (!args.rank_a_path.empty() || !args.rank_b_path.empty()) {
    if (args.rank_a_path.empty() || args.rank_b_path.empty()) {
      throw ConfigError("--rank-a and --rank-b must be given together");
    }
    const auto load_scores = [](const std::string& path) {
      std::map<std::string, double> scores;
      try {
        const nlohmann::json json = nlohmann::json::parse(read_file(path));
        if (!json.is_object()) throw ConfigError("ranking file must be a JSON object");
        for (const auto& [policy, score] : json.items()) {
          scores[policy] = score.get<double>();
        }
      } catch (const nlohmann::json::exception& e) {
        throw SchemaError("malformed ranking file " + path + ": " + e.what());
      }
      return scores;
    };
    const double tau = kendall_tau(load_scores(args.rank_a_path),
                                   load_scores(args.rank_b_path));
    nlohmann::ordered_json kendall;
    kendall["tau"] = tau;
    write_file((fs::path(args.out_dir) / "kendall.json").string(),
               kendall.dump(2) + "\n");
    std::cout << "kendall_tau " << tau << "\n";
  }
  return 0;
}

int cmd_sandbox_gen(const SandboxGenArgs& args) {
  const SandboxSuite suite = load_suite(args.suite);
  if (suite.tasks.empty()) throw ConfigError("suite has no tasks: " + args.suite);
  JudgeConfig config;
  if (!args.config_path.empty()) config = load_judge_config(args.config_path);
  if (args.skill < 0 || args.skill > 1) throw ConfigError("skill must lie in [0, 1]");

  RunManifest manifest;
  manifest.command = "sandbox-gen";
  manifest.seed = args.seed;
  manifest.backend = "scripted";
  manifest.model_name = config.model_name;
  manifest.prompt_assets_hash = prompt_assets_hash();
  manifest.inputs.push_back(input_ref_for_suite(args.suite));
  if (!args.config_path.empty()) {
    manifest.inputs.push_back(input_ref_for_file(args.config_path));
  }
  manifest.extra["skill"] = double_str(args.skill);
  manifest.extra["reflection_boost"] = double_str(args.reflection_boost);
  if (!args.policy_skills.empty()) {
    std::string joined;
    for (const double s : args.policy_skills) {
      if (!joined.empty()) joined += ",";
      joined += double_str(s);
    }
    manifest.extra["policies"] = joined;
  }
  finalize_manifest(manifest);
  fs::create_directories(args.out_dir);
  write_manifest(args.out_dir, manifest);

  auto backend = std::make_shared<ScriptedBackend>(config.model_name);
  std::vector<Trajectory> trajectories;
  std::map<std::string, bool> oracle;
  std::size_t successes = 0;
  const std::string policy_id = "skill-" + double_str(args.skill);
  for (std::size_t i = 0; i < suite.tasks.size(); ++i) {
    const SandboxTask& task = suite.tasks[i];
    SandboxSim sim(suite.graph(task.graph_id), task);
    ScriptedActor actor{args.skill, args.reflection_boost, mix_seed(args.seed, 0xA0)};
    RolloutOptions options;
    options.seed = mix_seed(args.seed, i);
    options.policy_id = policy_id;
    const RolloutResult result = rollout(sim, actor, options);
    trajectories.push_back(result.trajectory);
    oracle[task.task_id] = result.oracle_success;
    if (result.oracle_success) ++successes;
    add_scripted_trajectory_verdict(*backend, result.trajectory,
                                    Architecture::kEndToEnd, config.params,
                                    result.oracle_success);
    add_scripted_trajectory_verdict(*backend, result.trajectory,
                                    Architecture::kModular, config.params,
                                    result.oracle_success);
    add_scripted_step_verdicts(*backend, result.trajectory, sim, config.params);
    add_scripted_captions(*backend, result.sandbox_states, sim.graph(), config.params);
  }

  write_trajectories_jsonl((fs::path(args.out_dir) / "trajectories.jsonl").string(),
                           trajectories);
  write_file((fs::path(args.out_dir) / "oracle.json").string(),
             nlohmann::json(oracle).dump(2) + "\n");
  backend->save_json_file((fs::path(args.out_dir) / "scripted_responses.json").string());

  if (!args.policy_skills.empty()) {
    std::map<std::string, double> rankings;
    std::vector<double> skills = {args.skill};
    skills.insert(skills.end(), args.policy_skills.begin(), args.policy_skills.end());
    for (std::size_t p = 0; p < skills.size(); ++p) {
      const std::string key = "skill-" + double_str(skills[p]);
      if (rankings.count(key)) continue;
      ScriptedActor actor{skills[p], 0.0, mix_seed(args.seed, 0xA0)};
      std::vector<bool> outcomes;
      for (std::size_t i = 0; i < suite.tasks.size(); ++i) {
        const SandboxTask& task = suite.tasks[i];
        SandboxSim sim(suite.graph(task.graph_id), task);
        RolloutOptions options;
        options.seed = mix_seed(args.seed, 0x5A000 + p * 4096 + i);
        options.policy_id = key;
        options.include_captions = false;
        outcomes.push_back(rollout(sim, actor, options).oracle_success);
      }
      rankings[key] = success_rate(outcomes);
    }
    write_file((fs::path(args.out_dir) / "rankings_oracle.json").string(),
               nlohmann::json(rankings).dump(2) + "\n");
  }

  std::cout << "sandbox-gen: " << trajectories.size() << " trajectories ("
            << successes << " oracle successes) -> " << args.out_dir << "\n";
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Judge, refine, and package digital-agent trajectories"};
  app.name("agent-judge");
  app.require_subcommand(1);
  int rc = 0;

  EvaluateArgs evaluate_args;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Judge every trajectory in a JSONL file and write a run");
  evaluate->add_option("--trajectories", evaluate_args.trajectories_path,
                       "Trajectory JSONL input")->required();
  evaluate->add_option("--config", evaluate_args.config_path, "Judge config JSON")
      ->required();
  evaluate->add_option("--out", evaluate_args.out_dir, "Run output directory")
      ->required();
  evaluate->add_option("--seed", evaluate_args.seed, "Run seed recorded in the manifest");
  evaluate->add_option("--jobs", evaluate_args.jobs, "Worker threads")
      ->check(CLI::PositiveNumber);
  evaluate->add_option("--backend", evaluate_args.backend, "scripted or endpoint")
      ->check(CLI::IsMember({"scripted", "endpoint"}));
  evaluate->add_option("--scripted-responses", evaluate_args.scripted_responses_path,
                       "Canned responses JSON for the scripted backend");
  evaluate->add_option("--cache", evaluate_args.cache_dir, "Response cache directory");
  evaluate->add_option("--blobs", evaluate_args.blobs_dir,
                       "Screenshot blob store for the endpoint backend");
  evaluate->add_option("--request-log", evaluate_args.request_log_path,
                       "Request log JSONL path (off by default)");
  evaluate->callback([&] { rc = cmd_evaluate(evaluate_args); });

  ReflexionArgs reflexion_args;
  CLI::App* reflexion = app.add_subcommand(
      "reflexion", "Run the attempt/judge/reflect loop over a sandbox suite");
  reflexion->add_option("--suite", reflexion_args.suite,
                        "Suite file or builtin:default");
  reflexion->add_option("--config", reflexion_args.config_path,
                        "Optional JSON overriding the actor/noise flags");
  reflexion->add_option("--out", reflexion_args.out_dir, "Run output directory")
      ->required();
  reflexion->add_option("--seed", reflexion_args.seed, "Episode seed base");
  reflexion->add_option("--jobs", reflexion_args.jobs, "Worker threads")
      ->check(CLI::PositiveNumber);
  reflexion->add_option("--max-rounds", reflexion_args.max_rounds,
                        "Retries after the first attempt");
  reflexion->add_option("--skill", reflexion_args.skill, "Actor base skill");
  reflexion->add_option("--boost", reflexion_args.reflection_boost,
                        "Skill gained per reflection");
  reflexion->add_option("--fp-rate", reflexion_args.fp_rate,
                        "Judge false-positive rate");
  reflexion->add_option("--fn-rate", reflexion_args.fn_rate,
                        "Judge false-negative rate");
  reflexion->add_flag("--captions", reflexion_args.include_captions,
                      "Attach captions to recorded states");
  reflexion->callback([&] { rc = cmd_reflexion(reflexion_args); });

  FilterBcArgs filter_args;
  double filter_threshold = 0.0;
  CLI::App* filter = app.add_subcommand(
      "filter-bc", "Keep step samples whose per-step reward clears a threshold");
  filter->add_option("--run", filter_args.run_dir, "Evaluate run directory")
      ->required();
  filter->add_option("--trajectories", filter_args.trajectories_path,
                     "The trajectory JSONL the run evaluated")->required();
  filter->add_option("--out", filter_args.out_dir, "Output directory")->required();
  CLI::Option* threshold_option = filter->add_option(
      "--threshold", filter_threshold, "Keep rewards >= threshold (default: reward p)");
  filter->callback([&] {
    if (threshold_option->count() > 0) filter_args.threshold = filter_threshold;
    rc = cmd_filter_bc(filter_args);
  });

  MetricsArgs metrics_args;
  CLI::App* metrics = app.add_subcommand(
      "metrics", "Agreement against oracle labels, plus optional rank correlation");
  metrics->add_option("--pred", metrics_args.pred_run_dir,
                      "Run directory with judged results")->required();
  metrics->add_option("--oracle", metrics_args.oracle_path,
                      "Oracle labels JSON ({task_id: bool})")->required();
  metrics->add_option("--out", metrics_args.out_dir, "Output directory")->required();
  metrics->add_option("--rank-a", metrics_args.rank_a_path,
                      "Policy scores JSON ({policy: score})");
  metrics->add_option("--rank-b", metrics_args.rank_b_path,
                      "Second policy scores JSON to rank-correlate against");
  metrics->callback([&] { rc = cmd_metrics(metrics_args); });

  SandboxGenArgs gen_args;
  CLI::App* gen = app.add_subcommand(
      "sandbox-gen", "Roll the scripted actor over a suite and write fixtures");
  gen->add_option("--suite", gen_args.suite, "Suite file or builtin:default");
  gen->add_option("--config", gen_args.config_path,
                  "Judge config JSON pinning scripted-response parameters");
  gen->add_option("--out", gen_args.out_dir, "Output directory")->required();
  gen->add_option("--seed", gen_args.seed, "Rollout seed base");
  gen->add_option("--skill", gen_args.skill, "Actor skill");
  gen->add_option("--boost", gen_args.reflection_boost, "Skill gained per reflection");
  gen->add_option("--policies", gen_args.policy_skills,
                  "Extra policy skills for ranking fixtures");
  gen->callback([&] { rc = cmd_sandbox_gen(gen_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const GranularityMismatch& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UnreachableScreen& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

}  // namespace agentjudge
