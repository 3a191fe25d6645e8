#include "agentjudge/trajectory.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "agentjudge/errors.hpp"
#include "agentjudge/hash.hpp"

namespace agentjudge {
namespace {

namespace fs = std::filesystem;

Trajectory make_trajectory(int n_actions) {
  Trajectory t;
  t.instruction = {"Open the orders page.", "task-1", Domain::kWeb};
  t.policy_id = "tester";
  for (int i = 0; i < n_actions; ++i) {
    t.actions.push_back(Action::click(0.1 * (i + 1), 0.5));
  }
  for (int i = 0; i <= n_actions; ++i) {
    State s;
    s.screenshot = {sha256_hex("state" + std::to_string(i)), "synthetic:test"};
    s.caption = "# Screen " + std::to_string(i);
    t.states.push_back(s);
  }
  return t;
}

TEST(ValidateTrajectory, AcceptsWellFormed) {
  EXPECT_TRUE(validate_trajectory(make_trajectory(3)).empty());
  EXPECT_TRUE(validate_trajectory(make_trajectory(1)).empty());
}

TEST(ValidateTrajectory, FlagsZeroActionTrajectories) {
  const std::vector<Violation> violations = validate_trajectory(make_trajectory(0));
  ASSERT_FALSE(violations.empty());
  EXPECT_EQ(violations.front().field, "actions");
}

TEST(ValidateTrajectory, FlagsStateCountMismatch) {
  Trajectory t = make_trajectory(2);
  t.states.pop_back();
  const std::vector<Violation> violations = validate_trajectory(t);
  ASSERT_FALSE(violations.empty());
  EXPECT_EQ(violations.front().field, "states");
}

TEST(ValidateTrajectory, FlagsEmptyInstruction) {
  Trajectory t = make_trajectory(1);
  t.instruction.text = "";
  EXPECT_FALSE(validate_trajectory(t).empty());
}

TEST(ValidateTrajectory, FlagsOutOfRangeClick) {
  Trajectory t = make_trajectory(1);
  t.actions[0].x = 1.7;  // bypasses the factory's quantized range
  const std::vector<Violation> violations = validate_trajectory(t);
  ASSERT_FALSE(violations.empty());
  EXPECT_EQ(violations.front().field, "actions[0]");
}

TEST(ValidateTrajectory, FlagsMalformedOcrBox) {
  Trajectory t = make_trajectory(1);
  t.states[0].ocr = std::vector<OcrToken>{{"word", {0.8, 0.2, 0.1, 0.3}, 0.9}};
  EXPECT_FALSE(validate_trajectory(t).empty());
}

TEST(ValidateTrajectory, FlagsEmptyCaption) {
  Trajectory t = make_trajectory(1);
  t.states[1].caption = "";
  EXPECT_FALSE(validate_trajectory(t).empty());
}

TEST(TrajectoryJsonl, RoundTripsEverything) {
  Trajectory t = make_trajectory(2);
  t.agent_response = "The total is $12.";
  t.states[0].ocr = std::vector<OcrToken>{{"Orders", {0.1, 0.1, 0.3, 0.15}, 0.98},
                                          {"Cart", {0.5, 0.1, 0.6, 0.15}, 0.92}};
  t.actions[1] = Action::type_text("blue mug");
  const std::string line = trajectory_to_json_line(t);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const Trajectory back = trajectory_from_json_line(line);
  EXPECT_EQ(back.instruction.text, t.instruction.text);
  EXPECT_EQ(back.instruction.task_id, t.instruction.task_id);
  EXPECT_EQ(back.instruction.domain, t.instruction.domain);
  EXPECT_EQ(back.policy_id, t.policy_id);
  ASSERT_EQ(back.actions.size(), t.actions.size());
  for (std::size_t i = 0; i < t.actions.size(); ++i) {
    EXPECT_EQ(back.actions[i], t.actions[i]);
  }
  ASSERT_EQ(back.states.size(), t.states.size());
  for (std::size_t i = 0; i < t.states.size(); ++i) {
    EXPECT_EQ(back.states[i].screenshot, t.states[i].screenshot);
    EXPECT_EQ(back.states[i].caption, t.states[i].caption);
    EXPECT_EQ(back.states[i].ocr.has_value(), t.states[i].ocr.has_value());
    if (t.states[i].ocr) EXPECT_EQ(*back.states[i].ocr, *t.states[i].ocr);
  }
  EXPECT_EQ(back.agent_response, t.agent_response);
  // Serialization is deterministic.
  EXPECT_EQ(trajectory_to_json_line(back), line);
}

TEST(TrajectoryJsonl, RejectsMalformedLines) {
  EXPECT_THROW(trajectory_from_json_line("not json"), SchemaError);
  EXPECT_THROW(trajectory_from_json_line("{\"instruction\": \"x\"}"), SchemaError);
}

TEST(TrajectoryJsonl, FileRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "agentjudge_traj_test";
  fs::create_directories(dir);
  const std::string path = (dir / "t.jsonl").string();
  const std::vector<Trajectory> out = {make_trajectory(1), make_trajectory(3)};
  write_trajectories_jsonl(path, out);
  const std::vector<Trajectory> in = read_trajectories_jsonl(path);
  ASSERT_EQ(in.size(), 2u);
  EXPECT_EQ(in[1].actions.size(), 3u);
  fs::remove_all(dir);
}

TEST(BlobStore, PutGetContains) {
  const fs::path dir = fs::temp_directory_path() / "agentjudge_blob_test";
  fs::remove_all(dir);
  BlobStore store(dir.string());
  const std::string bytes = "fake png bytes \x89PNG";
  const ScreenshotRef ref = store.put(bytes);
  EXPECT_EQ(ref.sha256, sha256_hex(bytes));
  EXPECT_TRUE(store.contains(ref.sha256));
  EXPECT_EQ(store.get(ref.sha256), bytes);
  EXPECT_FALSE(store.contains(sha256_hex("missing")));
  EXPECT_EQ(store.get(sha256_hex("missing")), std::nullopt);
  // Re-putting identical bytes is a no-op with the same ref.
  EXPECT_EQ(store.put(bytes).sha256, ref.sha256);
  fs::remove_all(dir);
}

TEST(ScreenshotRef, EqualityIsHashEquality) {
  const ScreenshotRef a{sha256_hex("img"), "file:/a.png"};
  const ScreenshotRef b{sha256_hex("img"), "s3://elsewhere"};
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace agentjudge
