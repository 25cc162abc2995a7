#pragma once

// Evaluation protocol: accuracy-rejection curves (selective prediction),
// AUC-ROC for out-of-distribution detection, multi-seed aggregation, and the
// CSV report formats.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "graphuq/dataset.hpp"
#include "graphuq/dirichlet.hpp"
#include "graphuq/errors.hpp"
#include "graphuq/model.hpp"
#include "graphuq/textio.hpp"

namespace graphuq {

// ---------------------------------------------------------------------------
// Accuracy-rejection curves
// ---------------------------------------------------------------------------

struct ArcCurve {
  std::vector<double> rejection_rates;  // strictly increasing, in [0,1)
  std::vector<double> accuracies;
  std::string measure;
  std::string model;
};

// p in {0, 0.01, ..., 0.99}.
inline std::vector<double> default_rejection_grid() {
  std::vector<double> g(100);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(i) / 100.0;
  return g;
}

// For each rate p, rejects the ceil(p*n) most-uncertain instances (ties
// broken by instance index, ascending) and reports accuracy on the rest.
// An empty retained set counts as vacuously correct (accuracy 1).
inline ArcCurve arc(const std::vector<double>& uncertainties, const std::vector<bool>& correct,
                    const std::vector<double>& grid) {
  if (uncertainties.empty()) throw std::invalid_argument("arc: empty input");
  if (uncertainties.size() != correct.size())
    throw std::invalid_argument("arc: uncertainties and correctness sizes differ");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] < 1.0))
      throw std::invalid_argument("arc: rejection rates must lie in [0,1)");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument("arc: rejection grid must be strictly increasing");
  }
  const std::size_t n = uncertainties.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (uncertainties[a] != uncertainties[b]) return uncertainties[a] > uncertainties[b];
    return a < b;
  });
  // suffix_correct[r] = number of correct predictions among the n-r retained
  // (least uncertain) instances after rejecting the r most uncertain.
  std::vector<std::size_t> suffix_correct(n + 1, 0);
  for (std::size_t r = n; r-- > 0;)
    suffix_correct[r] = suffix_correct[r + 1] + (correct[order[r]] ? 1u : 0u);

  ArcCurve c;
  c.rejection_rates = grid;
  c.accuracies.reserve(grid.size());
  for (const double p : grid) {
    const auto rejected = static_cast<std::size_t>(
        std::ceil(p * static_cast<double>(n) - 1e-9));
    const std::size_t kept = n - std::min(rejected, n);
    c.accuracies.push_back(kept == 0 ? 1.0
                                     : static_cast<double>(suffix_correct[n - kept]) /
                                           static_cast<double>(kept));
  }
  return c;
}

// ---------------------------------------------------------------------------
// AUC-ROC
// ---------------------------------------------------------------------------

// Mann-Whitney statistic with midrank tie handling:
// P(score_ood > score_id) + 0.5 P(score_ood = score_id).
inline double auc_roc(const std::vector<double>& scores_ood,
                      const std::vector<double>& scores_id) {
  if (scores_ood.empty() || scores_id.empty())
    throw std::invalid_argument("auc_roc: both score sets must be nonempty");
  struct Entry {
    double score;
    bool ood;
  };
  std::vector<Entry> all;
  all.reserve(scores_ood.size() + scores_id.size());
  for (const double s : scores_ood) all.push_back({s, true});
  for (const double s : scores_id) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    return a.score < b.score;
  });

  double rank_sum_ood = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (all[k].ood) rank_sum_ood += midrank;
    i = j;
  }
  const double n_o = static_cast<double>(scores_ood.size());
  const double n_i = static_cast<double>(scores_id.size());
  const double u = rank_sum_ood - n_o * (n_o + 1.0) / 2.0;
  return u / (n_o * n_i);
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample-stddev / sqrt(n); 0 for a single run
};

inline MeanSe aggregate(const std::vector<double>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: need at least one run");
  MeanSe out;
  for (const double v : runs) out.mean += v;
  out.mean /= static_cast<double>(runs.size());
  if (runs.size() > 1) {
    double sq = 0.0;
    for (const double v : runs) sq += (v - out.mean) * (v - out.mean);
    const double var = sq / static_cast<double>(runs.size() - 1);
    out.se = std::sqrt(var / static_cast<double>(runs.size()));
  }
  return out;
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels,
                       const std::vector<std::size_t>& indices) {
  if (indices.empty()) return 1.0;
  std::size_t hits = 0;
  for (const std::size_t i : indices)
    if (predicted[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(indices.size());
}

// ---------------------------------------------------------------------------
// OOD evaluation
// ---------------------------------------------------------------------------

struct OodResult {
  std::string scenario;
  std::map<Measure, double> auc;  // only measures the model populates
  double id_accuracy = 0.0;       // accuracy on unflagged test nodes
};

// Scores flagged vs unflagged test nodes with each populated uncertainty
// measure (higher uncertainty should indicate OOD).
inline OodResult ood_evaluate(const PostNetPredictor& model, const GraphDataset& ds) {
  if (!ds.has_ood_flags()) throw std::invalid_argument("ood_evaluate: dataset has no OOD flags");
  if (!ds.has_masks()) throw std::invalid_argument("ood_evaluate: dataset has no split masks");
  std::vector<std::size_t> flagged, unflagged;
  for (const std::size_t i : ds.test_indices())
    (ds.ood_flags[i] ? flagged : unflagged).push_back(i);
  if (flagged.empty()) throw std::invalid_argument("ood_evaluate: no flagged test nodes");
  if (unflagged.empty())
    throw std::invalid_argument("ood_evaluate: no unflagged test nodes to compare against");

  const Predictions pred = predict_report(model, ds);
  OodResult out;
  out.id_accuracy = accuracy(pred.predicted, ds.labels, unflagged);
  for (const Measure m : all_measures()) {
    if (!measure_value(pred.reports[flagged.front()], m).has_value()) continue;
    std::vector<double> s_ood, s_id;
    s_ood.reserve(flagged.size());
    s_id.reserve(unflagged.size());
    for (const std::size_t i : flagged) s_ood.push_back(*measure_value(pred.reports[i], m));
    for (const std::size_t i : unflagged) s_id.push_back(*measure_value(pred.reports[i], m));
    out.auc[m] = auc_roc(s_ood, s_id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV reports
// ---------------------------------------------------------------------------

struct ArcCsvRow {
  std::string dataset;
  std::string model;
  std::string measure;
  std::size_t seed_count = 0;
  double rejection_rate = 0.0;
  double acc_mean = 0.0;
  double acc_se = 0.0;
};

struct OodCsvRow {
  std::string dataset;
  std::string model;
  std::string scenario;
  std::string measure;
  double auc_mean = 0.0;
  double auc_se = 0.0;
  double id_acc_mean = 0.0;
  double id_acc_se = 0.0;
};

inline constexpr const char* kArcCsvHeader =
    "dataset,model,measure,seed_count,rejection_rate,acc_mean,acc_se";
inline constexpr const char* kOodCsvHeader =
    "dataset,model,scenario,measure,auc_mean,auc_se,id_acc_mean,id_acc_se";

namespace detail {

inline void check_csv_field(const std::string& s) {
  if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos)
    throw std::invalid_argument("csv: field '" + s + "' contains a separator");
}

}  // namespace detail

inline void write_arc_csv(const std::string& path, const std::vector<ArcCsvRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kArcCsvHeader << "\n";
  for (const auto& r : rows) {
    detail::check_csv_field(r.dataset);
    detail::check_csv_field(r.model);
    detail::check_csv_field(r.measure);
    out << r.dataset << ',' << r.model << ',' << r.measure << ',' << r.seed_count << ','
        << format_double(r.rejection_rate) << ',' << format_double(r.acc_mean) << ','
        << format_double(r.acc_se) << "\n";
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline void write_ood_csv(const std::string& path, const std::vector<OodCsvRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kOodCsvHeader << "\n";
  for (const auto& r : rows) {
    detail::check_csv_field(r.dataset);
    detail::check_csv_field(r.model);
    detail::check_csv_field(r.scenario);
    detail::check_csv_field(r.measure);
    out << r.dataset << ',' << r.model << ',' << r.scenario << ',' << r.measure << ','
        << format_double(r.auc_mean) << ',' << format_double(r.auc_se) << ','
        << format_double(r.id_acc_mean) << ',' << format_double(r.id_acc_se) << "\n";
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::vector<ArcCsvRow> read_arc_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != kArcCsvHeader)
    throw IoError(path + ": unexpected header");
  std::vector<ArcCsvRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_on(trim(line), ',');
    if (f.size() != 7) throw IoError(path + ": expected 7 columns");
    ArcCsvRow r;
    r.dataset = f[0];
    r.model = f[1];
    r.measure = f[2];
    r.seed_count = static_cast<std::size_t>(parse_int(f[3], path + " seed_count"));
    r.rejection_rate = parse_double(f[4], path + " rejection_rate");
    r.acc_mean = parse_double(f[5], path + " acc_mean");
    r.acc_se = parse_double(f[6], path + " acc_se");
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<OodCsvRow> read_ood_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != kOodCsvHeader)
    throw IoError(path + ": unexpected header");
  std::vector<OodCsvRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_on(trim(line), ',');
    if (f.size() != 8) throw IoError(path + ": expected 8 columns");
    OodCsvRow r;
    r.dataset = f[0];
    r.model = f[1];
    r.scenario = f[2];
    r.measure = f[3];
    r.auc_mean = parse_double(f[4], path + " auc_mean");
    r.auc_se = parse_double(f[5], path + " auc_se");
    r.id_acc_mean = parse_double(f[6], path + " id_acc_mean");
    r.id_acc_se = parse_double(f[7], path + " id_acc_se");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace graphuq
