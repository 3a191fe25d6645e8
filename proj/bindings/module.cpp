#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "agentjudge/actions.hpp"
#include "agentjudge/cli.hpp"
#include "agentjudge/errors.hpp"
#include "agentjudge/judges.hpp"
#include "agentjudge/metrics.hpp"
#include "agentjudge/prompts.hpp"
#include "agentjudge/refine.hpp"
#include "agentjudge/sandbox.hpp"
#include "agentjudge/trajectory.hpp"

namespace py = pybind11;

namespace {

using namespace agentjudge;

std::vector<Action> parse_actions(const std::vector<std::string>& texts) {
  std::vector<Action> actions;
  actions.reserve(texts.size());
  for (const std::string& text : texts) actions.push_back(parse_action(text));
  return actions;
}

RewardConfig reward_config(double p, double not_sure, double d) {
  RewardConfig config;
  config.p = p;
  config.not_sure = not_sure;
  config.d = d;
  config.validate();
  return config;
}

const SandboxTask& find_task(const SandboxSuite& suite, const std::string& task_id) {
  for (const SandboxTask& task : suite.tasks) {
    if (task.task_id == task_id) return task;
  }
  throw ConfigError("unknown task: " + task_id);
}

}  // namespace

PYBIND11_MODULE(_agentjudge, m) {
  m.doc() = "Trajectory judging, Reflexion refinement, and sandbox rollouts";

  py::register_exception<Error>(m, "AgentJudgeError");

  // --- actions -------------------------------------------------------------
  m.def(
      "canonical_action",
      [](const std::string& text) { return render_action(parse_action(text)); },
      py::arg("text"),
      "Parse an action string and return its canonical rendering.");
  m.def(
      "remap_ios_action",
      [](const std::string& text, bool collection, std::uint64_t seed) {
        const RemapMode mode =
            collection ? RemapMode::kCollection : RemapMode::kEvaluation;
        return render_action(remap_ios_action(parse_action(text), mode, seed));
      },
      py::arg("text"), py::arg("collection") = false, py::arg("seed") = 0,
      "Apply the iOS swipe remapping to an action string.");
  m.def(
      "action_match_score",
      [](const std::vector<std::string>& predicted,
         const std::vector<std::string>& reference, double tap_radius) {
        return action_match_score(parse_actions(predicted), parse_actions(reference),
                                  tap_radius);
      },
      py::arg("predicted"), py::arg("reference"),
      py::arg("tap_radius") = kDefaultTapRadius,
      "Fraction of reference actions matched in order by the predictions.");

  // --- verdict parsing and rewards ----------------------------------------
  m.def(
      "parse_trajectory_verdict",
      [](const std::string& text) {
        const Verdict verdict = parse_trajectory_verdict(text);
        return py::make_tuple(verdict.status == VerdictStatus::kSuccess,
                              verdict.thoughts);
      },
      py::arg("text"), "Parse a Status verdict; returns (success, thoughts).");
  m.def(
      "parse_step_verdict",
      [](const std::string& text) {
        const StepVerdict verdict = parse_step_verdict(text);
        return py::make_tuple(std::string(to_string(verdict.category)),
                              verdict.thoughts);
      },
      py::arg("text"), "Parse a Response verdict; returns (category, thoughts).");
  m.def(
      "rewards_from_verdict",
      [](bool success, std::size_t n_actions) {
        Verdict verdict;
        verdict.status = success ? VerdictStatus::kSuccess : VerdictStatus::kFailure;
        return rewards_from_verdict(verdict, n_actions).values;
      },
      py::arg("success"), py::arg("n_actions"),
      "Trajectory-level reward sequence: zeros with the last entry 0/1.");
  m.def(
      "rewards_from_categories",
      [](const std::vector<std::string>& categories, double p, double not_sure,
         double d) {
        std::vector<StepCategory> parsed;
        parsed.reserve(categories.size());
        for (const std::string& name : categories) {
          if (name == "towards-the-goal") {
            parsed.push_back(StepCategory::kTowardsGoal);
          } else if (name == "not-sure") {
            parsed.push_back(StepCategory::kNotSure);
          } else if (name == "goal-reached") {
            parsed.push_back(StepCategory::kGoalReached);
          } else if (name == "away-from-the-goal") {
            parsed.push_back(StepCategory::kAwayFromGoal);
          } else {
            throw UnrecognizedCategory("unknown step category: " + name);
          }
        }
        return rewards_from_categories(parsed, reward_config(p, not_sure, d)).values;
      },
      py::arg("categories"), py::arg("p") = 0.5, py::arg("not_sure") = 0.0,
      py::arg("d") = -1.0, "Per-step rewards from category names.");

  // --- metrics -------------------------------------------------------------
  m.def(
      "agreement",
      [](const std::vector<std::tuple<std::string, bool, bool>>& rows) {
        std::vector<JudgmentPair> pairs;
        pairs.reserve(rows.size());
        for (const auto& [task_id, predicted, oracle] : rows) {
          pairs.push_back({task_id, predicted, oracle});
        }
        const AgreementReport report = agreement(pairs);
        py::dict out;
        out["accuracy"] = report.accuracy;
        out["tp"] = report.tp;
        out["fp"] = report.fp;
        out["tn"] = report.tn;
        out["fn"] = report.fn;
        out["n"] = report.n;
        return out;
      },
      py::arg("pairs"),
      "Accuracy and confusion counts over (task_id, predicted, oracle) rows.");
  m.def("kendall_tau", &kendall_tau, py::arg("lhs"), py::arg("rhs"),
        "Kendall tau-a between two {policy: score} maps.");
  m.def("relative_improvement", &relative_improvement, py::arg("baseline"),
        py::arg("treatment"), "(treatment - baseline) / baseline.");
  m.def(
      "success_rate",
      [](const std::vector<bool>& outcomes) { return success_rate(outcomes); },
      py::arg("outcomes"));

  // --- prompts -------------------------------------------------------------
  m.def("prompt_template_ids", &prompt_template_ids);
  m.def(
      "render_prompt",
      [](const std::string& template_id,
         const std::map<std::string, std::string>& values) {
        const PromptTemplate& prompt = get_prompt_template(template_id);
        py::dict out;
        if (prompt.system) out["system"] = render_template(*prompt.system, values);
        out["user"] = render_template(prompt.user, values);
        return out;
      },
      py::arg("template_id"), py::arg("values"),
      "Fill a prompt template's placeholders; returns {system?, user}.");

  // --- sandbox -------------------------------------------------------------
  m.def(
      "suite_task_ids",
      [](const std::string& suite) {
        std::vector<std::string> ids;
        for (const SandboxTask& task : load_suite(suite).tasks) {
          ids.push_back(task.task_id);
        }
        return ids;
      },
      py::arg("suite") = "builtin:default");
  m.def(
      "sandbox_rollout",
      [](const std::string& suite_name, const std::string& task_id, double skill,
         std::uint64_t seed) {
        const SandboxSuite suite = load_suite(suite_name);
        const SandboxTask& task = find_task(suite, task_id);
        SandboxSim sim(suite.graph(task.graph_id), task);
        ScriptedActor actor{skill, 0.0, seed};
        RolloutOptions options;
        options.seed = seed;
        const RolloutResult result = rollout(sim, actor, options);
        std::vector<std::string> actions;
        for (const Action& action : result.trajectory.actions) {
          actions.push_back(render_action(action));
        }
        py::dict out;
        out["oracle_success"] = result.oracle_success;
        out["actions"] = actions;
        out["optimal_path_length"] = sim.optimal_path_length();
        return out;
      },
      py::arg("suite") = "builtin:default", py::arg("task_id") = "",
      py::arg("skill") = 1.0, py::arg("seed") = 0,
      "Roll the scripted actor on one task; returns the outcome and actions.");
  m.def(
      "reflexion_episode",
      [](const std::string& suite_name, const std::string& task_id, double skill,
         double reflection_boost, double fp_rate, double fn_rate, int max_rounds,
         std::uint64_t seed) {
        const SandboxSuite suite = load_suite(suite_name);
        const SandboxTask& task = find_task(suite, task_id);
        SandboxSim sim(suite.graph(task.graph_id), task);
        SandboxReflexionConfig config;
        config.actor = {skill, reflection_boost, seed};
        config.max_rounds = max_rounds;
        config.seed = seed;
        if (fp_rate > 0 || fn_rate > 0) {
          config.noise = NoisyOracleEvaluator{fp_rate, fn_rate, seed};
        }
        const ReflexionOutcome outcome = run_sandbox_reflexion(sim, config);
        py::dict out;
        out["judged_success"] = outcome.judged_success;
        out["oracle_success"] = outcome.oracle_success.value_or(false);
        out["rounds_used"] = outcome.rounds_used;
        out["reflections"] = outcome.memory.reflections;
        return out;
      },
      py::arg("suite") = "builtin:default", py::arg("task_id") = "",
      py::arg("skill") = 0.5, py::arg("reflection_boost") = 0.2,
      py::arg("fp_rate") = 0.0, py::arg("fn_rate") = 0.0, py::arg("max_rounds") = 3,
      py::arg("seed") = 0, "Run one attempt/judge/reflect episode on a task.");

  // --- CLI -----------------------------------------------------------------
  m.def(
      "main",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv;
        argv.push_back("agent-judge");
        for (const std::string& arg : args) argv.push_back(arg.c_str());
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"),
      "Invoke the command-line interface in process; returns the exit code.");
}
