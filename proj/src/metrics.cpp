#include "dasn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>

#include "json.hpp"

#include "dasn/error.hpp"
#include "dasn/synthdata.hpp"

namespace dasn {

namespace {

void validate(const ScoreSet& s) {
  if (s.scores.size() != s.labels.size()) throw MetricError("scores and labels differ in length");
  if (s.scores.empty()) throw MetricError("empty score set");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.labels[i] != 0 && s.labels[i] != 1) throw MetricError("labels must be 0 or 1");
    if (!std::isfinite(s.scores[i])) throw MetricError("non-finite score");
  }
}

void require_both_classes(const ScoreSet& s) {
  validate(s);
  if (s.genuine_count() == 0 || s.spoof_count() == 0) {
    throw MetricError("metric needs both genuine and spoof samples");
  }
}

struct Sorted {
  std::vector<double> genuine;
  std::vector<double> spoof;
};

Sorted sorted_by_class(const ScoreSet& s) {
  Sorted out;
  for (std::size_t i = 0; i < s.size(); ++i) (s.labels[i] == 1 ? out.genuine : out.spoof).push_back(s.scores[i]);
  std::sort(out.genuine.begin(), out.genuine.end());
  std::sort(out.spoof.begin(), out.spoof.end());
  return out;
}

ErrorRates rates_at(const Sorted& sorted, double threshold) {
  // accepted = score >= threshold
  const auto spoof_accepted = static_cast<double>(
      sorted.spoof.end() - std::lower_bound(sorted.spoof.begin(), sorted.spoof.end(), threshold));
  const auto genuine_rejected = static_cast<double>(
      std::lower_bound(sorted.genuine.begin(), sorted.genuine.end(), threshold) - sorted.genuine.begin());
  ErrorRates r;
  r.far = sorted.spoof.empty() ? 0.0 : spoof_accepted / static_cast<double>(sorted.spoof.size());
  r.frr = sorted.genuine.empty() ? 0.0 : genuine_rejected / static_cast<double>(sorted.genuine.size());
  return r;
}

nlohmann::ordered_json threshold_json(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  return t;
}

}  // namespace

std::size_t ScoreSet::genuine_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::size_t ScoreSet::spoof_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 0));
}

double auc(const ScoreSet& scores) {
  require_both_classes(scores);
  const Sorted sorted = sorted_by_class(scores);
  // Twice the Mann-Whitney statistic, kept integral so ties count exactly.
  std::uint64_t twice_wins = 0;
  for (const double g : sorted.genuine) {
    const auto below = std::lower_bound(sorted.spoof.begin(), sorted.spoof.end(), g) - sorted.spoof.begin();
    const auto not_above = std::upper_bound(sorted.spoof.begin(), sorted.spoof.end(), g) - sorted.spoof.begin();
    twice_wins += 2 * static_cast<std::uint64_t>(below) + static_cast<std::uint64_t>(not_above - below);
  }
  const std::uint64_t twice_pairs = 2 * static_cast<std::uint64_t>(sorted.genuine.size()) * sorted.spoof.size();
  return static_cast<double>(twice_wins) / static_cast<double>(twice_pairs);
}

ErrorRates far_frr(const ScoreSet& scores, double threshold) {
  validate(scores);
  return rates_at(sorted_by_class(scores), threshold);
}

std::vector<double> candidate_thresholds(const ScoreSet& scores) {
  validate(scores);
  std::vector<double> unique = scores.scores;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<double> out;
  out.reserve(unique.size() + 1);
  out.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 1; i < unique.size(); ++i) out.push_back(unique[i - 1] + (unique[i] - unique[i - 1]) / 2.0);
  out.push_back(std::numeric_limits<double>::infinity());
  return out;
}

HterResult hter(const ScoreSet& scores) {
  require_both_classes(scores);
  const Sorted sorted = sorted_by_class(scores);
  bool have = false;
  HterResult best{};
  for (const double t : candidate_thresholds(scores)) {
    const ErrorRates r = rates_at(sorted, t);
    const double gap = std::abs(r.far - r.frr);
    const double total = r.far + r.frr;
    const double best_gap = std::abs(best.rates.far - best.rates.frr);
    const double best_total = best.rates.far + best.rates.frr;
    // Candidates arrive in increasing order, so strict comparisons keep the
    // smaller threshold on a full tie.
    if (!have || gap < best_gap || (gap == best_gap && total < best_total)) {
      best = HterResult{total / 2.0, t, r};
      have = true;
    }
  }
  return best;
}

EvalReport evaluate(const ScoreSet& scores) {
  EvalReport report;
  report.auc = auc(scores);
  const HterResult h = hter(scores);
  report.hter = h.hter;
  report.eer_threshold = h.threshold;
  report.far = h.rates.far;
  report.frr = h.rates.frr;
  const Sorted sorted = sorted_by_class(scores);
  for (const double t : candidate_thresholds(scores)) {
    const ErrorRates r = rates_at(sorted, t);
    report.roc.push_back(RocPoint{t, r.far, 1.0 - r.frr});
  }
  return report;
}

void write_scores_csv(std::ostream& out, const ScoreSet& scores) {
  validate(scores);
  out << "score,label\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out << format_double(scores.scores[i]) << ',' << scores.labels[i] << '\n';
  }
}

ScoreSet read_scores_csv(std::istream& in) {
  ScoreSet s;
  std::string line;
  if (!std::getline(in, line) || line != "score,label") throw FormatError("score CSV must start with 'score,label'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("score CSV row without a comma: " + line);
    s.scores.push_back(parse_double(std::string_view(line).substr(0, comma)));
    const std::string label = line.substr(comma + 1);
    if (label != "0" && label != "1") throw FormatError("score CSV label must be 0 or 1: " + line);
    s.labels.push_back(label == "1" ? 1 : 0);
  }
  return s;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["auc"] = report.auc;
  j["hter"] = report.hter;
  j["eer_threshold"] = threshold_json(report.eer_threshold);
  j["far"] = report.far;
  j["frr"] = report.frr;
  nlohmann::ordered_json roc = nlohmann::ordered_json::array();
  for (const auto& p : report.roc) roc.push_back({{"threshold", threshold_json(p.threshold)}, {"far", p.far}, {"tpr", p.tpr}});
  j["roc"] = std::move(roc);
  return j.dump(2) + "\n";
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "auc,hter,eer_threshold,far,frr\n"
      << format_double(report.auc) << ',' << format_double(report.hter) << ','
      << format_double(report.eer_threshold) << ',' << format_double(report.far) << ','
      << format_double(report.frr) << '\n';
}

}  // namespace dasn
