#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "redslds/linalg.hpp"

namespace redslds {

/// Label assignment: predicted label -> true label. Predicted labels absent
/// from the map get no credit.
using LabelMap = std::map<int, int>;

/// Maximum-weight one-to-one assignment for a rows x cols weight matrix;
/// result[r] is the matched column or -1.
std::vector<int> max_weight_assignment(const Matrix& weights);

LabelMap match_labels(const std::vector<int>& pred, const std::vector<int>& truth);

struct SegmentationScore {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  LabelMap matching;
  std::vector<int> pred_labels;  // row order of `confusion`
  std::vector<int> true_labels;  // column order of `confusion`
  Matrix confusion;              // K_pred x K_true counts
  std::vector<double> class_f1;  // per true label
};

SegmentationScore score(const std::vector<int>& pred, const std::vector<int>& truth);
/// Scores pooled over several sequences.
SegmentationScore score(const std::vector<std::vector<int>>& pred,
                        const std::vector<std::vector<int>>& truth);

/// Per-chain summary consumed by the report.
struct ChainSummary {
  double joint_log_density = 0.0;  // at the final sample
  double evidence_proxy = 0.0;     // forward-filter normalizer sum, final sweep
  std::optional<SegmentationScore> scores;
};

struct ReportRow {
  std::string name;
  double mean = 0.0;
  std::optional<double> std;  // absent for a single chain
};

struct FitReport {
  std::size_t chains = 0;
  std::vector<ReportRow> rows;

  std::string to_json() const;
  std::string to_text() const;
};

FitReport make_report(const std::vector<ChainSummary>& chains);

std::string score_to_json(const SegmentationScore& s);

}  // namespace redslds
