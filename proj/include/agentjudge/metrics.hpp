#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "agentjudge/actions.hpp"

namespace agentjudge {

/// One judged trajectory paired with its ground-truth label.
struct JudgmentPair {
  std::string task_id;
  bool predicted = false;
  bool oracle = false;
};

/// Confusion-matrix style agreement summary between judge and ground truth.
struct AgreementReport {
  double accuracy = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  std::size_t n = 0;
};

/// Computes accuracy and the confusion matrix over predicted/oracle pairs.
/// Throws EmptyInput when no pairs are given.
AgreementReport agreement(const std::vector<JudgmentPair>& pairs);

/// Kendall rank correlation (tau-a) between two scores over the same policies.
/// Keys must match exactly, otherwise MismatchedPolicySets is thrown; ties in
/// either score count toward neither concordant nor discordant.
double kendall_tau(const std::map<std::string, double>& lhs,
                   const std::map<std::string, double>& rhs);

/// Default click-distance tolerance for action matching.
inline constexpr double kDefaultTapRadius = 0.14;

/// Fraction of reference actions matched, in order, by the predicted actions.
/// Clicks match when the Euclidean distance between centers is within
/// tap_radius; other kinds need exact payload equality, except Stop which
/// matches on kind alone.
double action_match_score(const std::vector<Action>& predicted,
                          const std::vector<Action>& reference,
                          double tap_radius = kDefaultTapRadius);

/// Fraction of true values. Throws EmptyInput on an empty vector.
double success_rate(const std::vector<bool>& outcomes);

/// (treatment - baseline) / baseline. Throws ZeroBaseline when baseline == 0.
double relative_improvement(double baseline, double treatment);

/// Serializes an agreement report to a stable-keyed JSON object string.
std::string agreement_report_json(const AgreementReport& report);

/// Renders an agreement report as aligned human-readable text lines.
std::string agreement_report_text(const AgreementReport& report);

/// Renders the 2x2 confusion matrix as CSV (predicted rows, oracle columns).
std::string agreement_report_csv(const AgreementReport& report);

/// Renders per-task predicted/oracle rows as CSV with a header line.
std::string judgment_pairs_csv(const std::vector<JudgmentPair>& pairs);

}  // namespace agentjudge
