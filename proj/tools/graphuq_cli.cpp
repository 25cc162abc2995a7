// graphuq: command-line front end for uncertainty-aware graph node
// classification.  Subcommands: synth, train, arc, ood, selfcheck.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 IO error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "graphuq/checkpoint.hpp"
#include "graphuq/dataset.hpp"
#include "graphuq/errors.hpp"
#include "graphuq/eval.hpp"
#include "graphuq/experiment.hpp"
#include "graphuq/model.hpp"
#include "graphuq/selfcheck.hpp"

namespace {

namespace fs = std::filesystem;
using namespace graphuq;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

void write_resolved_config(CLI::App* sub, const fs::path& out_dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "'");
  std::ofstream out(out_dir / name, std::ios::trunc);
  if (!out) throw IoError("cannot write resolved config in '" + out_dir.string() + "'");
  out << sub->config_to_str(/*default_also=*/true, /*write_description=*/false);
}

std::vector<ModelKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<ModelKind> kinds;
  kinds.reserve(names.size());
  for (const auto& n : names) kinds.push_back(model_kind_from_string(n));
  return kinds;
}

std::vector<Measure> parse_measures(const std::vector<std::string>& names) {
  std::vector<Measure> ms;
  ms.reserve(names.size());
  for (const auto& n : names) ms.push_back(measure_from_string(n));
  return ms;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::string preset = "sbm-small";
  std::string name;
  SbmParams params;
  std::uint64_t seed = 0;
  bool force = false;
};

void setup_synth(CLI::App& app, SynthArgs& a) {
  CLI::App* sub = app.add_subcommand("synth", "Generate a synthetic SBM dataset directory");
  sub->set_config("--config", "", "Flat `key = value` config file; flags override it");
  sub->add_option("--out", a.out, "Output dataset directory")->required();
  sub->add_option("--preset", a.preset, "Parameter preset (sbm-small)")
      ->check(CLI::IsMember({"sbm-small"}));
  sub->add_option("--name", a.name, "Dataset name (defaults to the preset name)");
  sub->add_option("--nodes", a.params.n_nodes, "Node count")->capture_default_str();
  sub->add_option("--classes", a.params.n_classes, "Class count")->capture_default_str();
  sub->add_option("--intra-p", a.params.intra_p, "Same-class edge probability")
      ->capture_default_str();
  sub->add_option("--inter-p", a.params.inter_p, "Cross-class edge probability")
      ->capture_default_str();
  sub->add_option("--feature-dim", a.params.feature_dim, "Feature dimension")
      ->capture_default_str();
  sub->add_option("--separation", a.params.class_separation,
                  "Distance of class feature means from the origin")
      ->capture_default_str();
  sub->add_option("--seed", a.seed, "Generation seed")->capture_default_str();
  sub->add_flag("--force", a.force, "Overwrite an existing non-empty output directory");

  sub->callback([&a, sub] {
    if (fs::exists(a.out) && !fs::is_empty(a.out) && !a.force)
      throw IoError("output directory '" + a.out + "' is not empty (use --force to overwrite)");
    const std::string name = a.name.empty() ? a.preset : a.name;
    const GraphDataset ds = synth_sbm(a.params, a.seed, name);
    save_dataset(ds, a.out);
    write_resolved_config(sub, a.out, "synth.resolved.cfg");
    std::cout << "wrote dataset '" << name << "' (" << ds.n_nodes() << " nodes, "
              << ds.adjacency.nnz() / 2 << " edges, " << ds.n_classes << " classes) to "
              << a.out << "\n";
  });
}

// ---------------------------------------------------------------------------
// shared train/eval option bundles
// ---------------------------------------------------------------------------

struct SplitArgs {
  SplitSpec spec;
  bool no_stratify = false;
  SplitSpec resolve() const {
    SplitSpec s = spec;
    s.stratified = !no_stratify;
    return s;
  }
};

void add_split_options(CLI::App* sub, SplitArgs& a) {
  sub->add_option("--train-fraction", a.spec.train_fraction, "Train fraction")
      ->capture_default_str();
  sub->add_option("--val-fraction", a.spec.val_fraction, "Validation fraction")
      ->capture_default_str();
  sub->add_option("--test-fraction", a.spec.test_fraction, "Test fraction")
      ->capture_default_str();
  sub->add_flag("--no-stratify", a.no_stratify, "Disable per-class stratification");
}

struct HyperArgs {
  ModelConfig cfg;
  double delta = -1.0;
  bool delta_set = false;
  ModelConfig resolve() const {
    ModelConfig c = cfg;
    if (delta_set) {
      if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("--delta must lie in (0,1)");
      c.ppr.sparsify_delta = delta;
    }
    return c;
  }
};

void add_hyper_options(CLI::App* sub, HyperArgs& a) {
  sub->add_option("--hidden-dim", a.cfg.hidden_dim, "Encoder hidden width")
      ->capture_default_str();
  sub->add_option("--latent-dim", a.cfg.latent_dim, "Latent dimension")->capture_default_str();
  sub->add_option("--flow-layers", a.cfg.flow_layers, "Radial flow layers per class")
      ->capture_default_str();
  sub->add_option("--entropy-weight", a.cfg.entropy_weight,
                  "Weight of the entropy regularizer")
      ->capture_default_str();
  sub->add_option("--certainty-budget", a.cfg.certainty_budget,
                  "Certainty budget N (0 = number of training nodes)")
      ->capture_default_str();
  sub->add_option("--epsilon", a.cfg.ppr.teleport_epsilon, "PPR teleport probability")
      ->capture_default_str();
  sub->add_option("--power-iterations", a.cfg.ppr.power_iterations, "PPR power iterations")
      ->capture_default_str();
  sub->add_option("--delta", a.delta,
                  "PPR sparsification threshold in (0,1); omitted = automatic "
                  "(enabled for graphs over 10000 nodes)")
      ->each([&a](const std::string&) { a.delta_set = true; });
  sub->add_option("--max-epochs", a.cfg.max_epochs, "Training epoch cap")->capture_default_str();
  sub->add_option("--patience", a.cfg.patience, "Early-stopping patience (validation loss)")
      ->capture_default_str();
  sub->add_option("--lr", a.cfg.adam.learning_rate, "Adam learning rate")->capture_default_str();
  sub->add_option("--grad-clip", a.cfg.grad_clip, "Global gradient-norm clip")
      ->capture_default_str();
}

struct ScenarioArgs {
  std::string name;
  double keep_prob = 0.5;
  double node_fraction = 0.1;
  std::vector<int> left_out;
  std::optional<OodScenario> resolve() const {
    if (name.empty()) return std::nullopt;
    OodScenario s;
    s.kind = ood_kind_from_string(name);
    s.keep_prob = keep_prob;
    s.node_fraction = node_fraction;
    s.classes = left_out;
    return s;
  }
};

void add_scenario_options(CLI::App* sub, ScenarioArgs& a) {
  sub->add_option("--scenario", a.name,
                  "OOD scenario applied before training: leave_out_classes, "
                  "bernoulli_dropout, or gaussian_features");
  sub->add_option("--keep-prob", a.keep_prob, "bernoulli_dropout keep probability")
      ->capture_default_str();
  sub->add_option("--node-fraction", a.node_fraction,
                  "Fraction of all nodes perturbed (drawn from non-train nodes)")
      ->capture_default_str();
  sub->add_option("--left-out-classes", a.left_out,
                  "Classes hidden from training (default: upper half)")
      ->delimiter(',');
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::vector<std::string> models;
  std::vector<std::uint64_t> seeds{0};
  SplitArgs split;
  HyperArgs hyper;
  ScenarioArgs scenario;
};

void setup_train(CLI::App& app, TrainArgs& a) {
  CLI::App* sub = app.add_subcommand(
      "train", "Train one or more models; writes a checkpoint and training log per run");
  sub->set_config("--config", "", "Flat `key = value` config file; flags override it");
  sub->add_option("--data", a.data, "Dataset directory")->required();
  sub->add_option("--out", a.out, "Output directory for checkpoints and logs")->required();
  sub->add_option("--models", a.models,
                  "Model kinds: appnp_baseline, gpn_rw, gpn_sym, lop_gpn")
      ->required()
      ->delimiter(',');
  sub->add_option("--seeds", a.seeds, "Experiment seeds (one training run each)")
      ->delimiter(',')
      ->capture_default_str();
  add_split_options(sub, a.split);
  add_hyper_options(sub, a.hyper);
  add_scenario_options(sub, a.scenario);

  sub->callback([&a, sub] {
    const auto kinds = parse_kinds(a.models);
    const ModelConfig cfg = a.hyper.resolve();
    const SplitSpec split_template = a.split.resolve();
    const auto scenario = a.scenario.resolve();
    const GraphDataset base = load_dataset(a.data);
    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) throw IoError("cannot create output directory '" + a.out + "'");

    for (const ModelKind kind : kinds)
      for (const std::uint64_t seed : a.seeds) {
        const GraphDataset prepared = prepare_run_dataset(base, split_template, seed, scenario);
        const TrainResult tr = train_run(kind, prepared, cfg, seed);
        const std::string stem = to_string(kind) + ".seed" + std::to_string(seed);
        save_checkpoint((fs::path(a.out) / (stem + ".ckpt")).string(), tr.model,
                        run_extras(base.name, split_template, seed, scenario));
        write_training_log((fs::path(a.out) / (stem + ".train_log.csv")).string(), tr.log);
        std::cout << to_string(kind) << " seed " << seed << ": "
                  << (tr.log.rows.empty()
                          ? std::string("0 epochs (initial parameters kept)")
                          : "best epoch " + std::to_string(tr.log.best_epoch) + ", val loss " +
                                format_double(tr.log.best_val_loss) + ", val acc " +
                                format_double(tr.log.final_val_accuracy))
                  << "\n";
      }
    write_resolved_config(sub, a.out, "train.resolved.cfg");
  });
}

// ---------------------------------------------------------------------------
// arc / ood
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string data;
  std::string out;
  std::vector<std::string> checkpoints;
  std::vector<std::string> measures{"tu", "au", "eu", "eu_pc", "eu_so"};
};

void add_eval_options(CLI::App* sub, EvalArgs& a) {
  sub->set_config("--config", "", "Flat `key = value` config file; flags override it");
  sub->add_option("--data", a.data, "Dataset directory the checkpoints were trained on")
      ->required();
  sub->add_option("--out", a.out, "Output directory")->required();
  sub->add_option("--checkpoints", a.checkpoints, "Checkpoint files (one per seed)")
      ->required()
      ->delimiter(',');
  sub->add_option("--measures", a.measures,
                  "Uncertainty measures to report: tu, au, eu, eu_pc, eu_so")
      ->delimiter(',')
      ->capture_default_str();
}

struct LoadedRun {
  PostNetPredictor model;
  RunMetadata metadata;
};

std::vector<LoadedRun> load_runs(const EvalArgs& a, const GraphDataset& base) {
  std::vector<LoadedRun> runs;
  runs.reserve(a.checkpoints.size());
  for (const std::string& path : a.checkpoints) {
    std::map<std::string, std::string> extras;
    LoadedRun run{load_predictor(path, &extras), {}};
    run.metadata = run_metadata_from_extras(extras, "checkpoint '" + path + "'");
    if (run.metadata.dataset_name != base.name)
      throw std::invalid_argument("checkpoint '" + path + "' was trained on dataset '" +
                                  run.metadata.dataset_name + "', not '" + base.name + "'");
    runs.push_back(std::move(run));
  }
  return runs;
}

template <typename Row>
std::vector<Row> filter_measures(std::vector<Row> rows, const std::vector<Measure>& wanted) {
  std::vector<Row> out;
  for (auto& r : rows)
    for (const Measure m : wanted)
      if (r.measure == to_string(m)) {
        out.push_back(std::move(r));
        break;
      }
  return out;
}

void setup_arc(CLI::App& app, EvalArgs& a) {
  CLI::App* sub = app.add_subcommand(
      "arc", "Accuracy-rejection curves on the test split, aggregated over checkpoints");
  add_eval_options(sub, a);
  sub->callback([&a, sub] {
    const auto wanted = parse_measures(a.measures);
    const GraphDataset base = load_dataset(a.data);
    const auto runs = load_runs(a, base);
    const auto grid = default_rejection_grid();

    std::vector<ArcCsvRow> rows;
    for (const ModelKind kind : kAllModelKinds) {
      std::vector<RunEvaluation> evals;
      for (const auto& run : runs) {
        if (run.model.kind != kind) continue;
        const GraphDataset prepared = reconstruct_run_dataset(base, run.metadata);
        evals.push_back(evaluate_arc_run(run.model, prepared, run.metadata.run_seed, grid));
      }
      if (evals.empty()) continue;
      const auto kind_rows = arc_rows_from_runs(base.name, kind, evals, grid);
      rows.insert(rows.end(), kind_rows.begin(), kind_rows.end());
    }
    rows = filter_measures(std::move(rows), wanted);

    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) throw IoError("cannot create output directory '" + a.out + "'");
    const std::string csv = (fs::path(a.out) / "arc.csv").string();
    write_arc_csv(csv, rows);
    write_resolved_config(sub, a.out, "arc.resolved.cfg");
    std::cout << "wrote " << rows.size() << " rows to " << csv << "\n";
  });
}

void setup_ood(CLI::App& app, EvalArgs& a) {
  CLI::App* sub = app.add_subcommand(
      "ood", "OOD detection AUC per uncertainty measure, aggregated over checkpoints");
  add_eval_options(sub, a);
  sub->callback([&a, sub] {
    const auto wanted = parse_measures(a.measures);
    const GraphDataset base = load_dataset(a.data);
    const auto runs = load_runs(a, base);
    for (const auto& run : runs)
      if (!run.metadata.scenario)
        throw std::invalid_argument(
            "a checkpoint has no recorded OOD scenario; retrain with --scenario");

    std::vector<OodCsvRow> rows;
    for (const ModelKind kind : kAllModelKinds)
      for (const OodKind scenario_kind :
           {OodKind::leave_out_classes, OodKind::bernoulli_dropout, OodKind::gaussian_features}) {
        std::vector<OodResult> cell;
        for (const auto& run : runs) {
          if (run.model.kind != kind || run.metadata.scenario->kind != scenario_kind) continue;
          const GraphDataset prepared = reconstruct_run_dataset(base, run.metadata);
          OodResult r = ood_evaluate(run.model, prepared);
          r.scenario = to_string(scenario_kind);
          cell.push_back(std::move(r));
        }
        if (cell.empty()) continue;
        const auto cell_rows =
            ood_rows_from_runs(base.name, kind, to_string(scenario_kind), cell);
        rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
      }
    rows = filter_measures(std::move(rows), wanted);

    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) throw IoError("cannot create output directory '" + a.out + "'");
    const std::string csv = (fs::path(a.out) / "ood.csv").string();
    write_ood_csv(csv, rows);
    write_resolved_config(sub, a.out, "ood.resolved.cfg");
    std::cout << "wrote " << rows.size() << " rows to " << csv << "\n";
  });
}

// ---------------------------------------------------------------------------
// selfcheck
// ---------------------------------------------------------------------------

struct SelfcheckArgs {
  bool quick = false;
};

void setup_selfcheck(CLI::App& app, SelfcheckArgs& a) {
  CLI::App* sub =
      app.add_subcommand("selfcheck", "Run built-in Monte-Carlo, gradient, and sparse oracles");
  sub->add_flag("--quick", a.quick, "Reduced sample counts (still deterministic)");
  sub->callback([&a] {
    const auto results = run_selfchecks(a.quick);
    bool all_ok = true;
    for (const auto& r : results) {
      std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << " — " << r.detail << "\n";
      all_ok = all_ok && r.passed;
    }
    if (!all_ok) throw NumericalError("self-check failed");
    std::cout << "all self-checks passed\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-aware graph node classification: dataset synthesis, training, "
               "selective prediction, and OOD detection"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  TrainArgs train_args;
  EvalArgs arc_args;
  EvalArgs ood_args;
  SelfcheckArgs selfcheck_args;
  setup_synth(app, synth_args);
  setup_train(app, train_args);
  setup_arc(app, arc_args);
  setup_ood(app, ood_args);
  setup_selfcheck(app, selfcheck_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "IO error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "IO error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
