#include "agentjudge/cli.hpp"
#include "agentjudge/store.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "agentjudge/errors.hpp"
#include "agentjudge/hash.hpp"

namespace agentjudge {
namespace {

namespace fs = std::filesystem;

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"agent-judge"};
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

RunManifest sample_manifest() {
  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.seed = 7;
  manifest.backend = "scripted";
  manifest.model_name = "scripted";
  manifest.evaluator = EvaluatorSpec{};
  manifest.prompt_assets_hash = sha256_hex("prompt-pack");
  manifest.inputs = {{"trajectories.jsonl", sha256_hex("lines")},
                     {"judge.json", sha256_hex("config")}};
  manifest.extra = {{"threshold", "0.5"}};
  return manifest;
}

class PinnedClock : public ::testing::Test {
 protected:
  void SetUp() override {
    if (const char* old = std::getenv("SOURCE_DATE_EPOCH")) previous_ = old;
    setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  }
  void TearDown() override {
    if (previous_) {
      setenv("SOURCE_DATE_EPOCH", previous_->c_str(), 1);
    } else {
      unsetenv("SOURCE_DATE_EPOCH");
    }
  }

 private:
  std::optional<std::string> previous_;
};

using ManifestTest = PinnedClock;
using CliTest = PinnedClock;

TEST_F(ManifestTest, TimestampHonorsSourceDateEpoch) {
  EXPECT_EQ(timestamp_utc(), "2023-11-14T22:13:20Z");
}

TEST_F(ManifestTest, RunIdDigestsContentButNotCreationTime) {
  RunManifest manifest = sample_manifest();
  finalize_manifest(manifest);
  EXPECT_EQ(manifest.run_id.size(), 64u);
  EXPECT_EQ(manifest.created, "2023-11-14T22:13:20Z");

  RunManifest later = sample_manifest();
  setenv("SOURCE_DATE_EPOCH", "1800000000", 1);
  finalize_manifest(later);
  EXPECT_NE(later.created, manifest.created);
  EXPECT_EQ(later.run_id, manifest.run_id);  // created is outside the digest

  RewardConfig tweaked_reward;
  tweaked_reward.p = 0.7;
  RunManifest different_seed = sample_manifest();
  different_seed.seed = 8;
  RunManifest different_extra = sample_manifest();
  different_extra.extra["threshold"] = "0.9";
  RunManifest different_inputs = sample_manifest();
  different_inputs.inputs[0].sha256 = sha256_hex("other lines");
  RunManifest different_reward = sample_manifest();
  different_reward.evaluator->reward = tweaked_reward;
  for (RunManifest* changed : {&different_seed, &different_extra,
                               &different_inputs, &different_reward}) {
    finalize_manifest(*changed);
    EXPECT_NE(changed->run_id, manifest.run_id);
  }
}

TEST_F(ManifestTest, JsonRoundTripAndValidation) {
  RunManifest manifest = sample_manifest();
  finalize_manifest(manifest);
  const std::string text = manifest_to_json(manifest);
  EXPECT_EQ(text.substr(0, 11), "{\n  \"run_id");
  EXPECT_EQ(text.back(), '\n');
  validate_manifest_json(text);

  const RunManifest parsed = manifest_from_json(text);
  EXPECT_EQ(parsed.run_id, manifest.run_id);
  EXPECT_EQ(parsed.command, "evaluate");
  EXPECT_EQ(parsed.created, manifest.created);
  EXPECT_EQ(parsed.seed, 7u);
  EXPECT_EQ(parsed.backend, "scripted");
  EXPECT_EQ(parsed.model_name, "scripted");
  ASSERT_TRUE(parsed.evaluator.has_value());
  EXPECT_EQ(parsed.evaluator->granularity, Granularity::kTrajectoryLevel);
  EXPECT_EQ(parsed.evaluator->reward.p, 0.5);
  EXPECT_EQ(parsed.prompt_assets_hash, manifest.prompt_assets_hash);
  EXPECT_EQ(parsed.inputs, manifest.inputs);
  EXPECT_EQ(parsed.extra.at("threshold"), "0.5");

  EXPECT_THROW(validate_manifest_json("{}"), SchemaError);
  EXPECT_THROW(validate_manifest_json("not json"), SchemaError);
  EXPECT_THROW(manifest_from_json("[]"), SchemaError);
}

TEST_F(ManifestTest, EvaluatorSpecTextIgnoresUnknownKeys) {
  EvaluatorSpec spec;
  spec.architecture = Architecture::kEndToEnd;
  spec.granularity = Granularity::kTrajectoryLevel;
  spec.reward.p = 0.6;
  const EvaluatorSpec parsed =
      evaluator_spec_from_json_text(evaluator_spec_to_json_text(spec));
  EXPECT_EQ(parsed.architecture, Architecture::kEndToEnd);
  EXPECT_EQ(parsed.reward.p, 0.6);

  // A full judge config object (extra keys) still parses as a spec.
  const EvaluatorSpec from_config = evaluator_spec_from_json_text(
      R"({"architecture":"modular","granularity":"per_step",
          "reward":{"p":0.5,"not_sure":0.0,"d":-1.0},
          "model_name":"scripted","temperature":0.0})");
  EXPECT_EQ(from_config.granularity, Granularity::kPerStep);
  EXPECT_THROW(evaluator_spec_from_json_text(R"({"architecture":"cubist"})"),
               SchemaError);
}

TEST_F(ManifestTest, WrittenManifestsAreImmutable) {
  const std::string dir = ::testing::TempDir() + "manifest_immutable";
  fs::create_directories(dir);
  fs::remove(dir + "/manifest.json");
  RunManifest manifest = sample_manifest();
  finalize_manifest(manifest);
  write_manifest(dir, manifest);
  EXPECT_EQ(read_manifest(dir).run_id, manifest.run_id);
  write_manifest(dir, manifest);  // identical rewrite is fine

  RunManifest changed = sample_manifest();
  changed.seed = 1000;
  finalize_manifest(changed);
  EXPECT_THROW(write_manifest(dir, changed), ConfigError);
  EXPECT_THROW(read_manifest(::testing::TempDir() + "no_such_run"), ConfigError);
}

TEST(ResultStoreTest, AppendOnlyWithOneRecordPerTaskAndKind) {
  const std::string path = ::testing::TempDir() + "results_store.jsonl";
  fs::remove(path);
  ResultStore store(path);
  ResultRecord record;
  record.run_id = std::string(64, '0');
  record.task_id = "task-1";
  record.kind = "rewards";
  record.payload_json =
      R"({"granularity":"trajectory_level","values":[0.0,1.0],"judged_success":true})";
  store.append(record);

  ResultRecord error_record = record;
  error_record.kind = "error";
  error_record.payload_json = R"({"message":"could not parse the verdict"})";
  store.append(error_record);  // same task, different kind

  EXPECT_THROW(store.append(record), ConfigError);  // duplicate key

  // Reopening picks the keys back up from disk.
  ResultStore reopened(path);
  EXPECT_THROW(reopened.append(record), ConfigError);
  ResultRecord other = record;
  other.task_id = "task-2";
  reopened.append(other);

  const std::vector<ResultRecord> records = read_result_records(path);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].task_id, "task-1");
  EXPECT_EQ(records[0].kind, "rewards");
  EXPECT_EQ(records[1].kind, "error");
  EXPECT_EQ(records[2].task_id, "task-2");
}

TEST(ResultStoreTest, PayloadShapesAreEnforcedPerKind) {
  auto line_with = [](const std::string& kind, const std::string& payload) {
    ResultRecord record;
    record.run_id = "r";
    record.task_id = "t";
    record.kind = kind;
    record.payload_json = payload;
    return result_record_to_json_line(record);
  };
  EXPECT_NO_THROW(validate_result_line(line_with(
      "rewards", R"({"granularity":"per_step","values":[0.5],"judged_success":false})")));
  EXPECT_THROW(validate_result_line(line_with("rewards", R"({"values":[1]})")),
               SchemaError);
  EXPECT_THROW(
      validate_result_line(line_with(
          "rewards", R"({"granularity":"hourly","values":[],"judged_success":0})")),
      SchemaError);
  EXPECT_NO_THROW(validate_result_line(line_with(
      "reflexion", R"({"rounds_used":1,"judged_success":true,"per_round":[]})")));
  EXPECT_THROW(validate_result_line(line_with("reflexion", R"({"rounds_used":1})")),
               SchemaError);
  EXPECT_NO_THROW(validate_result_line(line_with(
      "agreement", R"({"accuracy":1.0,"tp":1,"fp":0,"tn":0,"fn":0,"n":1})")));
  EXPECT_THROW(validate_result_line(line_with("agreement", R"({"accuracy":1.0})")),
               SchemaError);
  EXPECT_NO_THROW(
      validate_result_line(line_with("bc_samples", R"({"samples":[]})")));
  EXPECT_THROW(validate_result_line(line_with("bc_samples", R"({"samples":7})")),
               SchemaError);
  EXPECT_THROW(validate_result_line(line_with("banana", R"({"x":1})")), SchemaError);

  ResultRecord empty_task;
  empty_task.kind = "error";
  empty_task.payload_json = R"({"message":"x"})";
  EXPECT_THROW(validate_result_line(result_record_to_json_line(empty_task)),
               SchemaError);

  const ResultRecord parsed = result_record_from_json_line(
      line_with("error", R"({"message":"boom","line":3})"));
  EXPECT_EQ(parsed.kind, "error");
  EXPECT_NE(parsed.payload_json.find("boom"), std::string::npos);
  EXPECT_THROW(result_record_from_json_line("nope"), SchemaError);
}

TEST_F(CliTest, PipelineFromGenerationToFilteredCloning) {
  const std::string root = ::testing::TempDir() + "cli_pipeline";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string gen = root + "/gen";
  const std::string run_traj = root + "/run_traj";
  const std::string run_step = root + "/run_step";
  const std::string bc = root + "/bc";
  const std::string met = root + "/met";

  ASSERT_EQ(run({"sandbox-gen", "--out", gen, "--seed", "5", "--skill", "0.7",
                 "--policies", "0.3", "0.9"}),
            0);
  for (const char* name : {"manifest.json", "trajectories.jsonl", "oracle.json",
                           "scripted_responses.json", "rankings_oracle.json"}) {
    EXPECT_TRUE(fs::exists(gen + "/" + name)) << name;
  }
  EXPECT_EQ(read_manifest(gen).command, "sandbox-gen");

  const std::string traj_config = root + "/judge_traj.json";
  write_file(traj_config,
             R"({"architecture": "modular", "granularity": "trajectory_level",
                 "reward": {"p": 0.5, "not_sure": 0.0, "d": -1.0},
                 "model_name": "scripted"})");
  ASSERT_EQ(run({"evaluate", "--trajectories", gen + "/trajectories.jsonl",
                 "--config", traj_config, "--out", run_traj, "--backend",
                 "scripted", "--scripted-responses",
                 gen + "/scripted_responses.json"}),
            0);
  const std::vector<ResultRecord> judged =
      read_result_records(run_traj + "/results.jsonl");
  EXPECT_EQ(judged.size(), 24u);
  for (const ResultRecord& record : judged) EXPECT_EQ(record.kind, "rewards");

  ASSERT_EQ(run({"metrics", "--pred", run_traj, "--oracle", gen + "/oracle.json",
                 "--out", met, "--rank-a", gen + "/rankings_oracle.json",
                 "--rank-b", gen + "/rankings_oracle.json"}),
            0);
  for (const char* name : {"agreement.json", "agreement.txt", "confusion.csv",
                           "pairs.csv", "kendall.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(met + "/" + name)) << name;
  }
  // The scripted judge replays oracle labels, so agreement is perfect and a
  // ranking correlates perfectly with itself.
  const std::string agreement_text = read_file(met + "/agreement.json");
  EXPECT_NE(agreement_text.find("\"accuracy\":1.0"), std::string::npos);
  EXPECT_NE(read_file(met + "/kendall.json").find("\"tau\": 1.0"),
            std::string::npos);

  const std::string step_config = root + "/judge_step.json";
  write_file(step_config,
             R"({"architecture": "modular", "granularity": "per_step",
                 "reward": {"p": 0.5, "not_sure": 0.0, "d": -1.0},
                 "model_name": "scripted"})");
  ASSERT_EQ(run({"evaluate", "--trajectories", gen + "/trajectories.jsonl",
                 "--config", step_config, "--out", run_step, "--backend",
                 "scripted", "--scripted-responses",
                 gen + "/scripted_responses.json"}),
            0);
  ASSERT_EQ(run({"filter-bc", "--run", run_step, "--trajectories",
                 gen + "/trajectories.jsonl", "--out", bc}),
            0);
  EXPECT_TRUE(fs::exists(bc + "/bc_samples.jsonl"));
  const RunManifest bc_manifest = read_manifest(bc);
  EXPECT_EQ(bc_manifest.command, "filter-bc");
  EXPECT_EQ(bc_manifest.extra.at("threshold"), "0.5");

  // Filtering a trajectory-level run is a granularity violation -> usage error.
  EXPECT_EQ(run({"filter-bc", "--run", run_traj, "--trajectories",
                 gen + "/trajectories.jsonl", "--out", root + "/bc_bad"}),
            2);
}

TEST_F(CliTest, ReflexionCommandWritesRoundSummaries) {
  const std::string out = ::testing::TempDir() + "cli_reflexion";
  fs::remove_all(out);
  ASSERT_EQ(run({"reflexion", "--out", out, "--seed", "3", "--skill", "0.5",
                 "--boost", "0.2", "--max-rounds", "3"}),
            0);
  for (const char* name :
       {"manifest.json", "results.jsonl", "trajectories.jsonl", "summary.json"}) {
    EXPECT_TRUE(fs::exists(out + "/" + name)) << name;
  }
  const std::vector<ResultRecord> records =
      read_result_records(out + "/results.jsonl");
  EXPECT_EQ(records.size(), 24u);
  for (const ResultRecord& record : records) EXPECT_EQ(record.kind, "reflexion");
  const std::string summary = read_file(out + "/summary.json");
  EXPECT_NE(summary.find("per_round_judged"), std::string::npos);
  const RunManifest manifest = read_manifest(out);
  EXPECT_EQ(manifest.extra.at("skill"), "0.5");
  EXPECT_EQ(manifest.extra.at("max_rounds"), "3");
}

TEST_F(CliTest, MalformedTrajectoryLinesBecomeErrorRecords) {
  const std::string root = ::testing::TempDir() + "cli_malformed";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string gen = root + "/gen";
  ASSERT_EQ(run({"sandbox-gen", "--out", gen, "--seed", "5"}), 0);

  // Append a broken line to an otherwise valid file.
  std::string lines = read_file(gen + "/trajectories.jsonl");
  lines += "{\"instruction\": 42}\n";
  const std::string mixed = root + "/mixed.jsonl";
  write_file(mixed, lines);

  const std::string config = root + "/judge.json";
  write_file(config,
             R"({"architecture": "modular", "granularity": "trajectory_level",
                 "reward": {"p": 0.5, "not_sure": 0.0, "d": -1.0}})");
  const std::string out = root + "/run";
  EXPECT_EQ(run({"evaluate", "--trajectories", mixed, "--config", config,
                 "--out", out, "--backend", "scripted", "--scripted-responses",
                 gen + "/scripted_responses.json"}),
            1);
  const std::vector<ResultRecord> records =
      read_result_records(out + "/results.jsonl");
  ASSERT_EQ(records.size(), 25u);
  int errors = 0;
  for (const ResultRecord& record : records) {
    if (record.kind == "error") ++errors;
  }
  EXPECT_EQ(errors, 1);
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  const std::string root = ::testing::TempDir() + "cli_usage";
  fs::remove_all(root);
  fs::create_directories(root);
  EXPECT_EQ(run({"no-such-command"}), 2);
  EXPECT_EQ(run({}), 2);  // a subcommand is required
  EXPECT_EQ(run({"evaluate", "--trajectories", root + "/missing.jsonl",
                 "--config", root + "/missing.json", "--out", root + "/out"}),
            2);

  const std::string config = root + "/judge.json";
  write_file(config, R"({"architecture": "modular", "granularity": "trajectory_level"})");
  const std::string lines = root + "/t.jsonl";
  write_file(lines, "\n");
  // An empty trajectory file is a configuration problem, not a task error.
  EXPECT_EQ(run({"evaluate", "--trajectories", lines, "--config", config,
                 "--out", root + "/out2", "--backend", "scripted",
                 "--scripted-responses", root + "/missing_responses.json"}),
            2);
  // Unknown backend name.
  const std::string some = root + "/some.jsonl";
  write_file(some, "{}\n");
  EXPECT_EQ(run({"evaluate", "--trajectories", some, "--config", config,
                 "--out", root + "/out3", "--backend", "quantum"}),
            2);
  // Bad reward shape in the judge config.
  const std::string bad_config = root + "/bad.json";
  write_file(bad_config,
             R"({"architecture": "modular", "granularity": "per_step",
                 "reward": {"p": 0.5, "not_sure": 0.6, "d": -1.0}})");
  EXPECT_EQ(run({"evaluate", "--trajectories", some, "--config", bad_config,
                 "--out", root + "/out4", "--backend", "scripted",
                 "--scripted-responses", root + "/missing_responses.json"}),
            2);
  EXPECT_EQ(run({"--help"}), 0);
}

}  // namespace
}  // namespace agentjudge
