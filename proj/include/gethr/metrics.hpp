#ifndef GETHR_METRICS_HPP
#define GETHR_METRICS_HPP

// Evaluation metrics: classification accuracy, (mean) average precision over
// per-class rankings, and a normalized edit distance for step-labeled
// streams.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gethr/errors.hpp"
#include "gethr/matrix.hpp"

namespace gethr {

using LabelSeq = std::vector<std::size_t>;

enum class Metric { accuracy, map, edit };

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::accuracy: return "accuracy";
    case Metric::map: return "map";
    case Metric::edit: return "edit";
  }
  return "?";
}

inline Metric parse_metric(const std::string& s) {
  if (s == "accuracy") return Metric::accuracy;
  if (s == "map") return Metric::map;
  if (s == "edit") return Metric::edit;
  throw value_error("unknown metric '" + s + "' (expected accuracy|map|edit)");
}

inline double accuracy(const LabelSeq& predicted, const LabelSeq& truth) {
  if (predicted.size() != truth.size()) throw value_error("accuracy: length mismatch");
  if (predicted.empty()) throw value_error("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

// Average precision of one ranking: items sorted by descending score, AP =
// mean over relevant items of the precision at that item's rank. No
// interpolation. Score ties are broken by ascending id so the value is
// deterministic. Returns nullopt when nothing is relevant.
inline std::optional<double> average_precision(const Vec& scores,
                                               const std::vector<bool>& relevant,
                                               const std::vector<std::string>& ids) {
  if (scores.size() != relevant.size() || scores.size() != ids.size()) {
    throw value_error("average_precision: length mismatch");
  }
  std::size_t positives = std::count(relevant.begin(), relevant.end(), true);
  if (positives == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });

  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (relevant[order[rank]]) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(positives);
}

// Mean over the defined per-class APs. Classes whose AP is undefined (no
// relevant items) are skipped; if every class is undefined there is no value
// to report.
inline double mean_average_precision(const std::vector<std::optional<double>>& per_class) {
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& ap : per_class) {
    if (ap.has_value()) {
      sum += *ap;
      ++defined;
    }
  }
  if (defined == 0) throw metric_undefined_error("mAP: no class has a relevant item");
  return sum / static_cast<double>(defined);
}

// mAP over an N x K score matrix with one true label per row.
inline double map_from_scores(const Matrix& scores, const LabelSeq& labels,
                              const std::vector<std::string>& ids) {
  if (scores.rows != labels.size() || scores.rows != ids.size()) {
    throw value_error("map_from_scores: row count mismatch");
  }
  if (scores.rows == 0) throw value_error("map_from_scores: empty input");
  std::vector<std::optional<double>> per_class;
  for (std::size_t k = 0; k < scores.cols; ++k) {
    Vec col(scores.rows);
    std::vector<bool> rel(scores.rows);
    for (std::size_t i = 0; i < scores.rows; ++i) {
      col[i] = scores(i, k);
      rel[i] = labels[i] == k;
    }
    per_class.push_back(average_precision(col, rel, ids));
  }
  return mean_average_precision(per_class);
}

// Classic dynamic-programming edit distance with unit costs.
inline std::size_t levenshtein(const LabelSeq& a, const LabelSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Sum of per-stream edit distances over the total number of true labels.
// Lower is better; 0 means every stream is decoded exactly.
inline double normalized_edit_score(const std::vector<LabelSeq>& predicted,
                                    const std::vector<LabelSeq>& truth) {
  if (predicted.size() != truth.size()) throw value_error("normalized_edit_score: count mismatch");
  if (predicted.empty()) throw value_error("normalized_edit_score: empty input");
  std::size_t dist = 0, total = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    dist += levenshtein(predicted[i], truth[i]);
    total += truth[i].size();
  }
  if (total == 0) throw value_error("normalized_edit_score: no true labels");
  return static_cast<double>(dist) / static_cast<double>(total);
}

// Turns per-step labels into an event stream: collapse runs of equal labels,
// drop runs shorter than min_run, remove the null label, and merge any
// duplicates that become adjacent after the removals. The result is stable
// under a second application.
inline LabelSeq collapse_decode(const LabelSeq& steps, std::optional<std::size_t> null_id,
                                std::size_t min_run = 1) {
  if (min_run == 0) throw value_error("collapse_decode: min_run must be >= 1");
  LabelSeq out;
  std::size_t i = 0;
  while (i < steps.size()) {
    std::size_t j = i;
    while (j < steps.size() && steps[j] == steps[i]) ++j;
    std::size_t run = j - i;
    std::size_t label = steps[i];
    if (run >= min_run && !(null_id.has_value() && label == *null_id)) {
      if (out.empty() || out.back() != label) out.push_back(label);
    }
    i = j;
  }
  return out;
}

}  // namespace gethr

#endif
