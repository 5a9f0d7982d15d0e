#include "redslds/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <set>
#include <stdexcept>

namespace redslds {

std::vector<int> max_weight_assignment(const Matrix& weights) {
  // Hungarian algorithm (potentials form) on a square cost matrix padded with
  // zeros; costs are negated weights.
  const auto rows = static_cast<int>(weights.rows()), cols = static_cast<int>(weights.cols());
  const int n = std::max(rows, cols);
  if (n == 0) return {};
  Matrix cost = Matrix::Zero(n, n);
  cost.topLeftCorner(rows, cols) = -weights;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(rows, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] - 1 < rows && j - 1 < cols) out[p[j] - 1] = j - 1;
  return out;
}

namespace {

struct Tally {
  std::vector<int> pred_labels, true_labels;
  Matrix confusion;
};

Tally tally(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("prediction and truth differ in length");
  if (pred.empty()) throw std::invalid_argument("cannot score empty label sequences");
  const std::set<int> ps(pred.begin(), pred.end()), ts(truth.begin(), truth.end());
  Tally t{{ps.begin(), ps.end()}, {ts.begin(), ts.end()}, {}};
  t.confusion = Matrix::Zero(static_cast<Eigen::Index>(ps.size()), static_cast<Eigen::Index>(ts.size()));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto r = std::lower_bound(t.pred_labels.begin(), t.pred_labels.end(), pred[i]) - t.pred_labels.begin();
    const auto c = std::lower_bound(t.true_labels.begin(), t.true_labels.end(), truth[i]) - t.true_labels.begin();
    t.confusion(r, c) += 1.0;
  }
  return t;
}

}  // namespace

LabelMap match_labels(const std::vector<int>& pred, const std::vector<int>& truth) {
  const Tally t = tally(pred, truth);
  const std::vector<int> assign = max_weight_assignment(t.confusion);
  LabelMap map;
  for (std::size_t r = 0; r < assign.size(); ++r)
    if (assign[r] >= 0) map[t.pred_labels[r]] = t.true_labels[assign[r]];
  return map;
}

SegmentationScore score(const std::vector<int>& pred, const std::vector<int>& truth) {
  const Tally t = tally(pred, truth);
  SegmentationScore s;
  s.pred_labels = t.pred_labels;
  s.true_labels = t.true_labels;
  s.confusion = t.confusion;
  const std::vector<int> assign = max_weight_assignment(t.confusion);
  const double total = static_cast<double>(pred.size());
  double correct = 0.0;
  std::vector<int> matched_row(t.true_labels.size(), -1);
  for (std::size_t r = 0; r < assign.size(); ++r) {
    if (assign[r] < 0) continue;
    s.matching[t.pred_labels[r]] = t.true_labels[assign[r]];
    matched_row[assign[r]] = static_cast<int>(r);
    correct += t.confusion(static_cast<Eigen::Index>(r), assign[r]);
  }
  s.accuracy = correct / total;
  double macro = 0.0, weighted = 0.0;
  for (std::size_t c = 0; c < t.true_labels.size(); ++c) {
    const double support = t.confusion.col(static_cast<Eigen::Index>(c)).sum();
    double f1 = 0.0;
    if (matched_row[c] >= 0) {
      const auto r = static_cast<Eigen::Index>(matched_row[c]);
      const double tp = t.confusion(r, static_cast<Eigen::Index>(c));
      const double predicted = t.confusion.row(r).sum();
      if (tp > 0.0) {
        const double precision = tp / predicted, recall = tp / support;
        f1 = 2.0 * precision * recall / (precision + recall);
      }
    }
    s.class_f1.push_back(f1);
    macro += f1;
    weighted += f1 * support;
  }
  s.macro_f1 = macro / static_cast<double>(t.true_labels.size());
  s.weighted_f1 = weighted / total;
  return s;
}

SegmentationScore score(const std::vector<std::vector<int>>& pred,
                        const std::vector<std::vector<int>>& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("prediction and truth differ in sequence count");
  std::vector<int> p, t;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != truth[i].size())
      throw std::invalid_argument("sequence " + std::to_string(i) + ": prediction length " +
                                  std::to_string(pred[i].size()) + " differs from truth length " +
                                  std::to_string(truth[i].size()));
    p.insert(p.end(), pred[i].begin(), pred[i].end());
    t.insert(t.end(), truth[i].begin(), truth[i].end());
  }
  return score(p, t);
}

FitReport make_report(const std::vector<ChainSummary>& chains) {
  if (chains.empty()) throw std::invalid_argument("report needs at least one chain");
  FitReport rep;
  rep.chains = chains.size();
  const auto add = [&](const std::string& name, auto get) {
    std::vector<double> v;
    for (const auto& c : chains) v.push_back(get(c));
    ReportRow row{name, 0.0, std::nullopt};
    for (double x : v) row.mean += x;
    row.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - row.mean) * (x - row.mean);
      row.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    rep.rows.push_back(row);
  };
  add("joint_log_density", [](const ChainSummary& c) { return c.joint_log_density; });
  add("evidence_proxy", [](const ChainSummary& c) { return c.evidence_proxy; });
  const bool scored = std::all_of(chains.begin(), chains.end(), [](const auto& c) { return c.scores.has_value(); });
  if (scored) {
    add("accuracy", [](const ChainSummary& c) { return c.scores->accuracy; });
    add("weighted_f1", [](const ChainSummary& c) { return c.scores->weighted_f1; });
    add("macro_f1", [](const ChainSummary& c) { return c.scores->macro_f1; });
  }
  return rep;
}

std::string FitReport::to_json() const {
  nlohmann::json j;
  j["chains"] = chains;
  j["metrics"] = nlohmann::json::object();
  for (const auto& r : rows) {
    nlohmann::json row = {{"mean", r.mean}};
    if (r.std) row["std"] = *r.std;
    j["metrics"][r.name] = row;
  }
  return j.dump(2);
}

std::string FitReport::to_text() const {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s %24s %24s\n", "metric", "mean", chains > 1 ? "std" : "");
  out += buf;
  for (const auto& r : rows) {
    if (r.std)
      std::snprintf(buf, sizeof buf, "%-20s %24.17g %24.17g\n", r.name.c_str(), r.mean, *r.std);
    else
      std::snprintf(buf, sizeof buf, "%-20s %24.17g\n", r.name.c_str(), r.mean);
    out += buf;
  }
  return out;
}

std::string score_to_json(const SegmentationScore& s) {
  nlohmann::json j;
  j["accuracy"] = s.accuracy;
  j["weighted_f1"] = s.weighted_f1;
  j["macro_f1"] = s.macro_f1;
  nlohmann::json m = nlohmann::json::array();
  for (const auto& [p, t] : s.matching) m.push_back({p, t});
  j["matching"] = m;
  j["pred_labels"] = s.pred_labels;
  j["true_labels"] = s.true_labels;
  nlohmann::json conf = nlohmann::json::array();
  for (Eigen::Index r = 0; r < s.confusion.rows(); ++r) {
    std::vector<long long> row;
    for (Eigen::Index c = 0; c < s.confusion.cols(); ++c) row.push_back(static_cast<long long>(s.confusion(r, c)));
    conf.push_back(row);
  }
  j["confusion"] = conf;
  j["class_f1"] = s.class_f1;
  return j.dump(2);
}

}  // namespace redslds
