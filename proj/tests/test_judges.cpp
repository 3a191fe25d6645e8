#include "agentjudge/judges.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <string>
#include <vector>

#include "agentjudge/errors.hpp"
#include "agentjudge/hash.hpp"
#include "agentjudge/prompts.hpp"

namespace agentjudge {
namespace {

Trajectory judged_trajectory(Domain domain, int n_actions = 2,
                             bool with_captions = true) {
  Trajectory t;
  t.instruction = {"Find the cheapest mug.", "judge-task", domain};
  t.policy_id = "tester";
  for (int i = 0; i < n_actions; ++i) {
    t.actions.push_back(i + 1 == n_actions ? Action::stop()
                                           : Action::click(0.2 * (i + 1), 0.4));
  }
  for (int i = 0; i <= n_actions; ++i) {
    State s;
    s.screenshot = {sha256_hex("shot" + std::to_string(i)), "synthetic:test"};
    if (with_captions) s.caption = "# Screen " + std::to_string(i);
    t.states.push_back(s);
  }
  return t;
}

// --- verdict parsing (representatives; the full battery is in acceptance) --

TEST(TrajectoryVerdict, ParsesCanonicalAndKeepsThoughts) {
  const Verdict v = parse_trajectory_verdict(
      "Thoughts: The final screen shows the orders page as asked.\n"
      "Status: \"success\"");
  EXPECT_EQ(v.status, VerdictStatus::kSuccess);
  // Decoration (including the trailing period) is stripped from the value.
  EXPECT_EQ(v.thoughts, "The final screen shows the orders page as asked");
}

TEST(TrajectoryVerdict, LastStatusWins) {
  const Verdict v = parse_trajectory_verdict(
      "Status: \"success\"\nOn reflection that was wrong.\nStatus: \"failure\"");
  EXPECT_EQ(v.status, VerdictStatus::kFailure);
}

TEST(TrajectoryVerdict, MissingAndUnknownThrow) {
  EXPECT_THROW(parse_trajectory_verdict("no verdict here"), MissingStatus);
  EXPECT_THROW(parse_trajectory_verdict("Status: \"maybe\""), UnrecognizedStatus);
}

TEST(StepVerdict, ParsesAllFourCategories) {
  EXPECT_EQ(parse_step_verdict("Response: towards-the-goal").category,
            StepCategory::kTowardsGoal);
  EXPECT_EQ(parse_step_verdict("Response: not-sure").category,
            StepCategory::kNotSure);
  EXPECT_EQ(parse_step_verdict("Response: goal-reached").category,
            StepCategory::kGoalReached);
  EXPECT_EQ(parse_step_verdict("Response: away-from-the-goal").category,
            StepCategory::kAwayFromGoal);
  EXPECT_THROW(parse_step_verdict("Thoughts: hm"), MissingResponse);
  EXPECT_THROW(parse_step_verdict("Response: sideways"), UnrecognizedCategory);
}

// --- reward shapes ---------------------------------------------------------

TEST(Rewards, TrajectoryLevelShape) {
  Verdict success;
  success.status = VerdictStatus::kSuccess;
  const RewardSequence r = rewards_from_verdict(success, 4);
  EXPECT_EQ(r.granularity, Granularity::kTrajectoryLevel);
  ASSERT_EQ(r.values.size(), 4u);
  EXPECT_EQ(r.values, (std::vector<double>{0.0, 0.0, 0.0, 1.0}));
  Verdict failure;
  failure.status = VerdictStatus::kFailure;
  EXPECT_EQ(rewards_from_verdict(failure, 3).values,
            (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_THROW(rewards_from_verdict(success, 0), EmptyInput);
}

TEST(Rewards, PerStepMappingUsesTheConfig) {
  RewardConfig config;
  config.p = 0.7;
  config.not_sure = 0.1;
  config.d = -0.5;
  const RewardSequence r = rewards_from_categories(
      {StepCategory::kTowardsGoal, StepCategory::kNotSure, StepCategory::kGoalReached,
       StepCategory::kAwayFromGoal},
      config);
  EXPECT_EQ(r.granularity, Granularity::kPerStep);
  EXPECT_EQ(r.values, (std::vector<double>{0.7, 0.1, 1.0, -0.5}));
}

TEST(Rewards, ConfigInvariantEnforced) {
  RewardConfig bad;
  bad.d = 0.0;  // d must stay negative
  EXPECT_THROW(bad.validate(), ConfigError);
  RewardConfig swapped;
  swapped.p = 0.1;
  swapped.not_sure = 0.4;  // not_sure must not exceed p
  EXPECT_THROW(swapped.validate(), ConfigError);
  RewardConfig fine;  // defaults satisfy d < 0 <= not_sure <= p <= 1
  fine.validate();
}

// --- prompt building -------------------------------------------------------

TEST(JudgePrompts, E2eAttachesFinalScreenshotAndFillsSlots) {
  const Trajectory t = judged_trajectory(Domain::kWeb);
  const std::vector<ChatMessage> request = build_e2e_trajectory_prompt(t);
  ASSERT_EQ(request.size(), 2u);
  EXPECT_EQ(request[0].role, Role::kSystem);
  ASSERT_EQ(request[1].images.size(), 1u);
  EXPECT_EQ(request[1].images[0], t.states.back().screenshot);
  EXPECT_NE(request[1].text.find("Find the cheapest mug."), std::string::npos);
  EXPECT_NE(request[1].text.find("click [0.20, 0.40]"), std::string::npos);
  EXPECT_NE(request[1].text.find("stop"), std::string::npos);
  EXPECT_EQ(request[1].text.find('{'), std::string::npos);  // no unfilled slots
}

TEST(JudgePrompts, MissingAgentResponseRendersAsNotAvailable) {
  Trajectory t = judged_trajectory(Domain::kWeb);
  const std::string without = build_e2e_trajectory_prompt(t)[1].text;
  EXPECT_NE(without.find("N/A"), std::string::npos);
  t.agent_response = "It costs 9 dollars.";
  const std::string with = build_e2e_trajectory_prompt(t)[1].text;
  EXPECT_NE(with.find("It costs 9 dollars."), std::string::npos);
  EXPECT_EQ(with.find("N/A"), std::string::npos);
}

TEST(JudgePrompts, DomainSelectsTheTemplateFamily) {
  const std::string web = build_e2e_trajectory_prompt(judged_trajectory(Domain::kWeb))[1].text;
  const std::string android =
      build_e2e_trajectory_prompt(judged_trajectory(Domain::kAndroid))[1].text;
  const std::string ios =
      build_e2e_trajectory_prompt(judged_trajectory(Domain::kIos))[1].text;
  const std::string sandbox =
      build_e2e_trajectory_prompt(judged_trajectory(Domain::kSandbox))[1].text;
  EXPECT_NE(web, android);            // web has its own wording
  EXPECT_EQ(android, ios);            // device domains share one template
  EXPECT_EQ(android, sandbox);
}

TEST(JudgePrompts, ModularUsesFinalCaptionInsteadOfPixels) {
  const Trajectory t = judged_trajectory(Domain::kWeb);
  const std::vector<ChatMessage> request = build_modular_trajectory_prompt(t);
  EXPECT_TRUE(request.back().images.empty());
  EXPECT_NE(request.back().text.find("# Screen 2"), std::string::npos);
  Trajectory uncaptioned = judged_trajectory(Domain::kWeb, 2, false);
  EXPECT_THROW(build_modular_trajectory_prompt(uncaptioned), MissingCaption);
}

TEST(JudgePrompts, StepPromptComparesAdjacentCaptions) {
  const Trajectory t = judged_trajectory(Domain::kAndroid);
  const std::vector<ChatMessage> request =
      build_step_prompt(t.instruction, t.actions[0], t.states[0], t.states[1]);
  const std::string& text = request.back().text;
  EXPECT_NE(text.find("# Screen 0"), std::string::npos);
  EXPECT_NE(text.find("# Screen 1"), std::string::npos);
  EXPECT_NE(text.find("click [0.20, 0.40]"), std::string::npos);
  State bare = t.states[0];
  bare.caption.reset();
  EXPECT_THROW(build_step_prompt(t.instruction, t.actions[0], bare, t.states[1]),
               MissingCaption);
}

// --- evaluate() ------------------------------------------------------------

struct ScriptedJudge {
  std::shared_ptr<ScriptedBackend> backend = std::make_shared<ScriptedBackend>();
  GenerationParams params;

  void expect_trajectory(const Trajectory& t, Architecture architecture,
                         const std::string& response) {
    const auto request = architecture == Architecture::kEndToEnd
                             ? build_e2e_trajectory_prompt(t)
                             : build_modular_trajectory_prompt(t);
    backend->add_response(request_digest(request, params), response);
  }

  void expect_step(const Trajectory& t, std::size_t i, const std::string& response) {
    const auto request =
        build_step_prompt(t.instruction, t.actions[i], t.states[i], t.states[i + 1]);
    backend->add_response(request_digest(request, params), response);
  }
};

TEST(Evaluate, TrajectoryLevelIssuesExactlyOneCall) {
  const Trajectory t = judged_trajectory(Domain::kWeb);
  ScriptedJudge judge;
  judge.expect_trajectory(t, Architecture::kModular, "Status: \"success\"");
  Gateway gateway(judge.backend);
  EvaluatorSpec spec;
  spec.architecture = Architecture::kModular;
  spec.granularity = Granularity::kTrajectoryLevel;
  const RewardSequence rewards = evaluate(t, spec, gateway, judge.params);
  EXPECT_EQ(judge.backend->calls(), 1);
  EXPECT_EQ(rewards.values, (std::vector<double>{0.0, 1.0}));
  EXPECT_TRUE(judged_success(rewards));
}

TEST(Evaluate, PerStepIssuesOneCallPerAction) {
  const Trajectory t = judged_trajectory(Domain::kAndroid, 3);
  ScriptedJudge judge;
  judge.expect_step(t, 0, "Response: towards-the-goal");
  judge.expect_step(t, 1, "Response: not-sure");
  judge.expect_step(t, 2, "Response: goal-reached");
  Gateway gateway(judge.backend);
  EvaluatorSpec spec;
  spec.architecture = Architecture::kModular;
  spec.granularity = Granularity::kPerStep;
  const RewardSequence rewards = evaluate(t, spec, gateway, judge.params);
  EXPECT_EQ(judge.backend->calls(), 3);
  EXPECT_EQ(rewards.values, (std::vector<double>{0.5, 0.0, 1.0}));
  EXPECT_TRUE(judged_success(rewards));
}

TEST(Evaluate, PerStepRequiresTheModularArchitecture) {
  const Trajectory t = judged_trajectory(Domain::kWeb);
  ScriptedJudge judge;
  Gateway gateway(judge.backend);
  EvaluatorSpec spec;
  spec.architecture = Architecture::kEndToEnd;
  spec.granularity = Granularity::kPerStep;
  EXPECT_THROW(evaluate(t, spec, gateway, judge.params), ConfigError);
  EXPECT_EQ(judge.backend->calls(), 0);
}

TEST(Evaluate, ParseFailureNamesTheStep) {
  const Trajectory t = judged_trajectory(Domain::kWeb, 2);
  ScriptedJudge judge;
  judge.expect_step(t, 0, "Response: towards-the-goal");
  judge.expect_step(t, 1, "utter gibberish");
  Gateway gateway(judge.backend);
  EvaluatorSpec spec;
  spec.architecture = Architecture::kModular;
  spec.granularity = Granularity::kPerStep;
  try {
    evaluate(t, spec, gateway, judge.params);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_EQ(e.step(), 1);
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
  }
}

TEST(Evaluate, InvalidShapeIsRejectedBeforeAnyCall) {
  Trajectory t = judged_trajectory(Domain::kWeb);
  t.states.pop_back();
  ScriptedJudge judge;
  Gateway gateway(judge.backend);
  EvaluatorSpec spec;
  EXPECT_THROW(evaluate(t, spec, gateway, judge.params), EvaluationError);
  EXPECT_EQ(judge.backend->calls(), 0);
}

TEST(JudgedSuccess, PerStepSucceedsOnlyWhenAStepReachedTheGoal) {
  RewardSequence r;
  r.granularity = Granularity::kPerStep;
  r.values = {0.5, 0.0, -1.0};
  EXPECT_FALSE(judged_success(r));
  r.values = {0.5, 1.0, 0.0};
  EXPECT_TRUE(judged_success(r));
}

}  // namespace
}  // namespace agentjudge
