#include "agentjudge/metrics.hpp"

#include <cmath>
#include <sstream>

#include "agentjudge/errors.hpp"
#include "json.hpp"

namespace agentjudge {
namespace {

bool actions_match(const Action& predicted, const Action& reference,
                   double tap_radius) {
  if (predicted.kind != reference.kind) return false;
  switch (reference.kind) {
    case ActionKind::kClick: {
      const double dx = predicted.x - reference.x;
      const double dy = predicted.y - reference.y;
      return std::sqrt(dx * dx + dy * dy) <= tap_radius;
    }
    case ActionKind::kType:
      return predicted.text == reference.text;
    case ActionKind::kSwipe:
      return predicted.direction == reference.direction;
    case ActionKind::kPress:
      return predicted.key == reference.key;
    case ActionKind::kStop:
      return true;  // answers are graded separately, kinds suffice here
    case ActionKind::kRaw:
      return predicted.text == reference.text;
  }
  return false;
}

}  // namespace

AgreementReport agreement(const std::vector<JudgmentPair>& pairs) {
  if (pairs.empty()) throw EmptyInput("agreement needs at least one judgment pair");
  AgreementReport report;
  report.n = pairs.size();
  for (const JudgmentPair& pair : pairs) {
    if (pair.predicted && pair.oracle) {
      ++report.tp;
    } else if (pair.predicted && !pair.oracle) {
      ++report.fp;
    } else if (!pair.predicted && !pair.oracle) {
      ++report.tn;
    } else {
      ++report.fn;
    }
  }
  report.accuracy =
      static_cast<double>(report.tp + report.tn) / static_cast<double>(report.n);
  return report;
}

double kendall_tau(const std::map<std::string, double>& lhs,
                   const std::map<std::string, double>& rhs) {
  if (lhs.size() != rhs.size()) {
    throw MismatchedPolicySets("policy sets differ in size");
  }
  for (const auto& [policy, score] : lhs) {
    (void)score;
    if (!rhs.count(policy)) {
      throw MismatchedPolicySets("policy missing from second score set: " + policy);
    }
  }
  std::vector<std::pair<double, double>> scores;
  scores.reserve(lhs.size());
  for (const auto& [policy, score] : lhs) {
    scores.emplace_back(score, rhs.at(policy));
  }
  const std::size_t n = scores.size();
  if (n < 2) throw EmptyInput("kendall_tau needs at least two policies");
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double da = scores[i].first - scores[j].first;
      const double db = scores[i].second - scores[j].second;
      const double product = da * db;
      if (product > 0.0) {
        ++concordant;
      } else if (product < 0.0) {
        ++discordant;
      }
      // ties in either ranking contribute to neither count
    }
  }
  const double denom = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(concordant - discordant) / denom;
}

double action_match_score(const std::vector<Action>& predicted,
                          const std::vector<Action>& reference, double tap_radius) {
  if (reference.empty()) throw EmptyInput("action match needs a non-empty reference");
  std::size_t matched = 0;
  const std::size_t count = std::min(predicted.size(), reference.size());
  for (std::size_t i = 0; i < count; ++i) {
    if (actions_match(predicted[i], reference[i], tap_radius)) ++matched;
  }
  return static_cast<double>(matched) / static_cast<double>(reference.size());
}

double success_rate(const std::vector<bool>& outcomes) {
  if (outcomes.empty()) throw EmptyInput("success_rate needs at least one outcome");
  std::size_t successes = 0;
  for (bool outcome : outcomes) {
    if (outcome) ++successes;
  }
  return static_cast<double>(successes) / static_cast<double>(outcomes.size());
}

double relative_improvement(double baseline, double treatment) {
  if (baseline == 0.0) {
    throw ZeroBaseline("relative improvement is undefined for a zero baseline");
  }
  return (treatment - baseline) / baseline;
}

std::string agreement_report_json(const AgreementReport& report) {
  nlohmann::ordered_json json;
  json["accuracy"] = report.accuracy;
  json["tp"] = report.tp;
  json["fp"] = report.fp;
  json["tn"] = report.tn;
  json["fn"] = report.fn;
  json["n"] = report.n;
  return json.dump();
}

std::string agreement_report_text(const AgreementReport& report) {
  std::ostringstream out;
  out << "accuracy: " << report.accuracy << "\n"
      << "tp:       " << report.tp << "\n"
      << "fp:       " << report.fp << "\n"
      << "tn:       " << report.tn << "\n"
      << "fn:       " << report.fn << "\n"
      << "n:        " << report.n << "\n";
  return out.str();
}

std::string agreement_report_csv(const AgreementReport& report) {
  std::ostringstream out;
  out << ",oracle_true,oracle_false\n"
      << "predicted_true," << report.tp << "," << report.fp << "\n"
      << "predicted_false," << report.fn << "," << report.tn << "\n";
  return out.str();
}

std::string judgment_pairs_csv(const std::vector<JudgmentPair>& pairs) {
  std::ostringstream out;
  out << "task_id,predicted,oracle\n";
  for (const JudgmentPair& pair : pairs) {
    out << pair.task_id << "," << (pair.predicted ? 1 : 0) << ","
        << (pair.oracle ? 1 : 0) << "\n";
  }
  return out.str();
}

}  // namespace agentjudge
