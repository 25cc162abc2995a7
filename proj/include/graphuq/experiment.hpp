#pragma once

// Multi-seed experiment orchestration shared by the command-line tool and the
// acceptance checks: deterministic per-run seed derivation, dataset
// preparation (split + optional OOD scenario), training-run bookkeeping, and
// aggregation into the CSV report rows.
//
// One experiment seed drives three independent streams: the split assignment,
// parameter initialisation, and the OOD perturbation draws.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graphuq/checkpoint.hpp"
#include "graphuq/dataset.hpp"
#include "graphuq/errors.hpp"
#include "graphuq/eval.hpp"
#include "graphuq/model.hpp"
#include "graphuq/rng.hpp"
#include "graphuq/textio.hpp"

namespace graphuq {

inline constexpr std::uint64_t kSplitSeedSalt = 0x51u;
inline constexpr std::uint64_t kTrainSeedSalt = 0x7Au;
inline constexpr std::uint64_t kOodSeedSalt = 0x0Du;

// Split masks plus optional perturbation, all derived from one run seed.
inline GraphDataset prepare_run_dataset(const GraphDataset& base, SplitSpec split_template,
                                        std::uint64_t run_seed,
                                        const std::optional<OodScenario>& scenario) {
  split_template.seed = mix_seed(run_seed, kSplitSeedSalt);
  GraphDataset ds = split(base, split_template);
  if (scenario) {
    OodScenario s = *scenario;
    s.seed = mix_seed(run_seed, kOodSeedSalt);
    ds = apply_ood(ds, s);
  }
  return ds;
}

inline TrainResult train_run(ModelKind kind, const GraphDataset& prepared,
                             const ModelConfig& cfg, std::uint64_t run_seed) {
  return train(kind, prepared, cfg, mix_seed(run_seed, kTrainSeedSalt));
}

// ---------------------------------------------------------------------------
// Run metadata embedded in checkpoints
// ---------------------------------------------------------------------------

// Everything needed to rebuild the exact dataset state a checkpoint was
// trained on (given the same base dataset).
inline std::map<std::string, std::string> run_extras(const std::string& dataset_name,
                                                     const SplitSpec& split_template,
                                                     std::uint64_t run_seed,
                                                     const std::optional<OodScenario>& scenario) {
  std::map<std::string, std::string> e;
  e["dataset"] = dataset_name;
  e["run_seed"] = std::to_string(run_seed);
  e["split.train"] = format_double(split_template.train_fraction);
  e["split.val"] = format_double(split_template.val_fraction);
  e["split.test"] = format_double(split_template.test_fraction);
  e["split.stratified"] = split_template.stratified ? "1" : "0";
  if (scenario) {
    e["scenario.kind"] = to_string(scenario->kind);
    if (scenario->kind == OodKind::leave_out_classes) {
      std::string cs;
      for (std::size_t i = 0; i < scenario->classes.size(); ++i) {
        if (i) cs += ',';
        cs += std::to_string(scenario->classes[i]);
      }
      e["scenario.classes"] = cs;
    } else {
      e["scenario.node_fraction"] = format_double(scenario->node_fraction);
      if (scenario->kind == OodKind::bernoulli_dropout)
        e["scenario.keep_prob"] = format_double(scenario->keep_prob);
    }
  }
  return e;
}

struct RunMetadata {
  std::string dataset_name;
  SplitSpec split_template;
  std::uint64_t run_seed = 0;
  std::optional<OodScenario> scenario;
};

inline RunMetadata run_metadata_from_extras(const std::map<std::string, std::string>& e,
                                            const std::string& context) {
  const auto get = [&](const std::string& k) -> const std::string& {
    const auto it = e.find(k);
    if (it == e.end()) throw IoError(context + ": missing run metadata '" + k + "'");
    return it->second;
  };
  RunMetadata md;
  md.dataset_name = get("dataset");
  md.run_seed = static_cast<std::uint64_t>(parse_int(get("run_seed"), context + " run_seed"));
  md.split_template.train_fraction = parse_double(get("split.train"), context);
  md.split_template.val_fraction = parse_double(get("split.val"), context);
  md.split_template.test_fraction = parse_double(get("split.test"), context);
  md.split_template.stratified = get("split.stratified") == "1";
  if (e.count("scenario.kind")) {
    OodScenario s;
    s.kind = ood_kind_from_string(e.at("scenario.kind"));
    if (s.kind == OodKind::leave_out_classes) {
      for (const auto& c : split_on(get("scenario.classes"), ','))
        if (!trim(c).empty())
          s.classes.push_back(static_cast<int>(parse_int(trim(c), context + " classes")));
    } else {
      s.node_fraction = parse_double(get("scenario.node_fraction"), context);
      if (s.kind == OodKind::bernoulli_dropout)
        s.keep_prob = parse_double(get("scenario.keep_prob"), context);
    }
    md.scenario = s;
  }
  return md;
}

inline GraphDataset reconstruct_run_dataset(const GraphDataset& base, const RunMetadata& md) {
  return prepare_run_dataset(base, md.split_template, md.run_seed, md.scenario);
}

// ---------------------------------------------------------------------------
// Per-run evaluation products
// ---------------------------------------------------------------------------

struct RunEvaluation {
  ModelKind kind;
  std::uint64_t run_seed = 0;
  double test_accuracy = 0.0;
  // Per measure, accuracies over the rejection grid (test nodes).
  std::map<Measure, std::vector<double>> arc_accuracies;
};

inline RunEvaluation evaluate_arc_run(const PostNetPredictor& model, const GraphDataset& prepared,
                                      std::uint64_t run_seed, const std::vector<double>& grid) {
  const auto test_idx = prepared.test_indices();
  if (test_idx.empty()) throw std::invalid_argument("arc evaluation: empty test mask");
  const Predictions pred = predict_report(model, prepared);

  RunEvaluation ev;
  ev.kind = model.kind;
  ev.run_seed = run_seed;
  ev.test_accuracy = accuracy(pred.predicted, prepared.labels, test_idx);

  std::vector<bool> correct;
  correct.reserve(test_idx.size());
  for (const std::size_t i : test_idx)
    correct.push_back(pred.predicted[i] == prepared.labels[i]);
  for (const Measure m : all_measures()) {
    if (!measure_value(pred.reports[test_idx.front()], m).has_value()) continue;
    std::vector<double> unc;
    unc.reserve(test_idx.size());
    for (const std::size_t i : test_idx) unc.push_back(*measure_value(pred.reports[i], m));
    ev.arc_accuracies[m] = arc(unc, correct, grid).accuracies;
  }
  return ev;
}

// Aggregates per-seed ARC evaluations of a single model kind into CSV rows.
inline std::vector<ArcCsvRow> arc_rows_from_runs(const std::string& dataset_name, ModelKind kind,
                                                 const std::vector<RunEvaluation>& runs,
                                                 const std::vector<double>& grid) {
  std::vector<ArcCsvRow> rows;
  if (runs.empty()) return rows;
  for (const Measure m : all_measures()) {
    if (!runs.front().arc_accuracies.count(m)) continue;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      std::vector<double> accs;
      accs.reserve(runs.size());
      for (const auto& r : runs) accs.push_back(r.arc_accuracies.at(m)[g]);
      const MeanSe agg = aggregate(accs);
      rows.push_back({dataset_name, to_string(kind), to_string(m), runs.size(), grid[g],
                      agg.mean, agg.se});
    }
  }
  return rows;
}

// Aggregates per-seed OOD results of one (kind, scenario) cell into CSV rows.
inline std::vector<OodCsvRow> ood_rows_from_runs(const std::string& dataset_name, ModelKind kind,
                                                 const std::string& scenario,
                                                 const std::vector<OodResult>& runs) {
  std::vector<OodCsvRow> rows;
  if (runs.empty()) return rows;
  std::vector<double> id_accs;
  for (const auto& r : runs) id_accs.push_back(r.id_accuracy);
  const MeanSe id_agg = aggregate(id_accs);
  for (const Measure m : all_measures()) {
    if (!runs.front().auc.count(m)) continue;
    std::vector<double> aucs;
    aucs.reserve(runs.size());
    for (const auto& r : runs) aucs.push_back(r.auc.at(m));
    const MeanSe agg = aggregate(aucs);
    rows.push_back({dataset_name, to_string(kind), scenario, to_string(m), agg.mean, agg.se,
                    id_agg.mean, id_agg.se});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// End-to-end multi-seed experiments (in-memory; no checkpoint files)
// ---------------------------------------------------------------------------

inline std::vector<ArcCsvRow> arc_experiment(const GraphDataset& base,
                                             const std::vector<ModelKind>& kinds,
                                             const std::vector<std::uint64_t>& seeds,
                                             const SplitSpec& split_template,
                                             const ModelConfig& cfg,
                                             const std::vector<double>& grid) {
  if (kinds.empty() || seeds.empty())
    throw std::invalid_argument("experiment: need at least one model kind and one seed");
  std::vector<ArcCsvRow> rows;
  for (const ModelKind kind : kinds) {
    std::vector<RunEvaluation> runs;
    for (const std::uint64_t seed : seeds) {
      const GraphDataset prepared = prepare_run_dataset(base, split_template, seed, std::nullopt);
      const TrainResult tr = train_run(kind, prepared, cfg, seed);
      runs.push_back(evaluate_arc_run(tr.model, prepared, seed, grid));
    }
    const auto kind_rows = arc_rows_from_runs(base.name, kind, runs, grid);
    rows.insert(rows.end(), kind_rows.begin(), kind_rows.end());
  }
  return rows;
}

inline std::vector<OodCsvRow> ood_experiment(const GraphDataset& base,
                                             const std::vector<ModelKind>& kinds,
                                             const std::vector<OodScenario>& scenarios,
                                             const std::vector<std::uint64_t>& seeds,
                                             const SplitSpec& split_template,
                                             const ModelConfig& cfg) {
  if (kinds.empty() || seeds.empty() || scenarios.empty())
    throw std::invalid_argument("experiment: need at least one model, seed, and scenario");
  std::vector<OodCsvRow> rows;
  for (const ModelKind kind : kinds)
    for (const OodScenario& scenario : scenarios) {
      std::vector<OodResult> runs;
      for (const std::uint64_t seed : seeds) {
        const GraphDataset prepared = prepare_run_dataset(base, split_template, seed, scenario);
        const TrainResult tr = train_run(kind, prepared, cfg, seed);
        OodResult r = ood_evaluate(tr.model, prepared);
        r.scenario = to_string(scenario.kind);
        runs.push_back(std::move(r));
      }
      const auto cell = ood_rows_from_runs(base.name, kind, to_string(scenario.kind), runs);
      rows.insert(rows.end(), cell.begin(), cell.end());
    }
  return rows;
}

// ---------------------------------------------------------------------------
// Training log CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kTrainingLogHeader = "epoch,train_loss,val_loss,val_accuracy";

inline void write_training_log(const std::string& path, const TrainingLog& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kTrainingLogHeader << "\n";
  for (const auto& r : log.rows)
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss)
        << ',' << format_double(r.val_accuracy) << "\n";
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace graphuq
