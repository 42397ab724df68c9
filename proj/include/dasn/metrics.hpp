#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dasn {

// Scores are genuine-class probabilities; label 1 = genuine, 0 = spoof.
// A sample is accepted as genuine when score >= threshold.
struct ScoreSet {
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const { return scores.size(); }
  std::size_t genuine_count() const;
  std::size_t spoof_count() const;
};

struct ErrorRates {
  double far = 0.0;  // spoof samples accepted / spoof samples
  double frr = 0.0;  // genuine samples rejected / genuine samples
};

struct RocPoint {
  double threshold;
  double far;
  double tpr;  // 1 - frr
};

struct EvalReport {
  double auc = 0.0;
  double hter = 0.0;
  double eer_threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
  std::vector<RocPoint> roc;
};

struct HterResult {
  double hter;
  double threshold;
  ErrorRates rates;
};

// P(genuine score > spoof score) + 1/2 P(tie).
double auc(const ScoreSet& scores);
ErrorRates far_frr(const ScoreSet& scores, double threshold);
// Candidate thresholds are -inf, the midpoints between adjacent distinct
// scores, and +inf. Picks the one minimizing |far - frr|, then far + frr,
// then the threshold value.
HterResult hter(const ScoreSet& scores);
// Candidate thresholds in increasing order.
std::vector<double> candidate_thresholds(const ScoreSet& scores);

EvalReport evaluate(const ScoreSet& scores);

void write_scores_csv(std::ostream& out, const ScoreSet& scores);
ScoreSet read_scores_csv(std::istream& in);
std::string report_json(const EvalReport& report);
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace dasn
