#include "graphuq/experiment.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "graphuq/dataset.hpp"

namespace {

namespace fs = std::filesystem;
using graphuq::GraphDataset;
using graphuq::ModelConfig;
using graphuq::ModelKind;
using graphuq::OodScenario;
using graphuq::prepare_run_dataset;
using graphuq::RunMetadata;
using graphuq::SbmParams;
using graphuq::SplitSpec;
using graphuq::synth_sbm;

GraphDataset base_sbm() {
  SbmParams p;
  p.n_nodes = 60;
  p.n_classes = 3;
  p.intra_p = 0.15;
  p.inter_p = 0.01;
  p.feature_dim = 4;
  return synth_sbm(p, 1234, "unit-sbm");
}

ModelConfig fast_config() {
  ModelConfig cfg;
  cfg.hidden_dim = 6;
  cfg.latent_dim = 2;
  cfg.flow_layers = 1;
  cfg.max_epochs = 4;
  cfg.patience = 4;
  return cfg;
}

SplitSpec wide_split() {
  SplitSpec s;
  s.train_fraction = 0.2;
  s.val_fraction = 0.2;
  s.test_fraction = 0.6;
  return s;
}

TEST(PrepareRun, DeterministicAndSeedSensitive) {
  const GraphDataset base = base_sbm();
  const OodScenario sc = OodScenario::gaussian(0.2, 0);
  const GraphDataset a = prepare_run_dataset(base, wide_split(), 7, sc);
  const GraphDataset b = prepare_run_dataset(base, wide_split(), 7, sc);
  EXPECT_EQ(a.train_mask, b.train_mask);
  EXPECT_EQ(a.ood_flags, b.ood_flags);
  EXPECT_EQ(a.features.values, b.features.values);

  const GraphDataset c = prepare_run_dataset(base, wide_split(), 8, sc);
  EXPECT_NE(a.train_mask, c.train_mask);
}

TEST(PrepareRun, StreamsAreIndependent) {
  // The split must not change when an OOD scenario is added: the scenario
  // draws from its own seed stream.
  const GraphDataset base = base_sbm();
  const GraphDataset plain = prepare_run_dataset(base, wide_split(), 5, std::nullopt);
  const GraphDataset with_ood =
      prepare_run_dataset(base, wide_split(), 5, OodScenario::gaussian(0.2, 0));
  EXPECT_EQ(plain.train_mask, with_ood.train_mask);
  EXPECT_EQ(plain.test_mask, with_ood.test_mask);
}

TEST(RunMetadataRoundTrip, AllScenarioKinds) {
  const std::vector<std::optional<OodScenario>> scenarios = {
      std::nullopt,
      OodScenario::leave_out({0, 2}),
      OodScenario::dropout(0.4, 0.15, 0),
      OodScenario::gaussian(0.25, 0),
  };
  SplitSpec st = wide_split();
  st.stratified = false;
  for (const auto& sc : scenarios) {
    const auto extras = graphuq::run_extras("ds-name", st, 42, sc);
    const RunMetadata md = graphuq::run_metadata_from_extras(extras, "unit");
    EXPECT_EQ(md.dataset_name, "ds-name");
    EXPECT_EQ(md.run_seed, 42u);
    EXPECT_EQ(md.split_template.train_fraction, st.train_fraction);
    EXPECT_EQ(md.split_template.stratified, st.stratified);
    ASSERT_EQ(md.scenario.has_value(), sc.has_value());
    if (sc) {
      EXPECT_EQ(md.scenario->kind, sc->kind);
      if (sc->kind == graphuq::OodKind::leave_out_classes) {
        EXPECT_EQ(md.scenario->classes, sc->classes);
      } else {
        EXPECT_EQ(md.scenario->node_fraction, sc->node_fraction);
        if (sc->kind == graphuq::OodKind::bernoulli_dropout)
          EXPECT_EQ(md.scenario->keep_prob, sc->keep_prob);
      }
    }
  }
  EXPECT_THROW(graphuq::run_metadata_from_extras({}, "unit"), graphuq::IoError);
}

TEST(RunMetadataRoundTrip, ReconstructionMatchesPreparation) {
  const GraphDataset base = base_sbm();
  const OodScenario sc = OodScenario::dropout(0.5, 0.2, 0);
  const GraphDataset prepared = prepare_run_dataset(base, wide_split(), 13, sc);

  const auto extras = graphuq::run_extras(base.name, wide_split(), 13, sc);
  const RunMetadata md = graphuq::run_metadata_from_extras(extras, "unit");
  const GraphDataset rebuilt = graphuq::reconstruct_run_dataset(base, md);
  EXPECT_EQ(prepared.train_mask, rebuilt.train_mask);
  EXPECT_EQ(prepared.val_mask, rebuilt.val_mask);
  EXPECT_EQ(prepared.test_mask, rebuilt.test_mask);
  EXPECT_EQ(prepared.ood_flags, rebuilt.ood_flags);
  EXPECT_EQ(prepared.labels, rebuilt.labels);
  EXPECT_EQ(prepared.features.values, rebuilt.features.values);
}

TEST(ArcExperiment, ProducesAggregatedRowsDeterministically) {
  const GraphDataset base = base_sbm();
  const std::vector<double> grid = {0.0, 0.5};
  const auto rows = graphuq::arc_experiment(base, {ModelKind::appnp_baseline}, {0, 1},
                                            wide_split(), fast_config(), grid);
  // The first-order baseline reports one measure over a two-point grid.
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].dataset, "unit-sbm");
  EXPECT_EQ(rows[0].model, "appnp_baseline");
  EXPECT_EQ(rows[0].measure, "tu");
  EXPECT_EQ(rows[0].seed_count, 2u);
  EXPECT_EQ(rows[0].rejection_rate, 0.0);
  EXPECT_EQ(rows[1].rejection_rate, 0.5);

  const auto again = graphuq::arc_experiment(base, {ModelKind::appnp_baseline}, {0, 1},
                                             wide_split(), fast_config(), grid);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].acc_mean, again[i].acc_mean);
    EXPECT_EQ(rows[i].acc_se, again[i].acc_se);
  }
  EXPECT_THROW(graphuq::arc_experiment(base, {}, {0}, wide_split(), fast_config(), grid),
               std::invalid_argument);
}

TEST(ArcExperiment, SecondOrderModelCoversAllMeasures) {
  const GraphDataset base = base_sbm();
  const std::vector<double> grid = {0.0};
  const auto rows = graphuq::arc_experiment(base, {ModelKind::gpn_rw}, {0}, wide_split(),
                                            fast_config(), grid);
  ASSERT_EQ(rows.size(), graphuq::all_measures().size());
  for (const auto& r : rows) EXPECT_EQ(r.seed_count, 1u);
}

TEST(OodExperiment, AggregatesAcrossSeeds) {
  const GraphDataset base = base_sbm();
  const OodScenario sc = OodScenario::gaussian(0.2, 0);

  const auto one_a = graphuq::ood_experiment(base, {ModelKind::gpn_rw}, {sc}, {3},
                                             wide_split(), fast_config());
  const auto one_b = graphuq::ood_experiment(base, {ModelKind::gpn_rw}, {sc}, {4},
                                             wide_split(), fast_config());
  const auto both = graphuq::ood_experiment(base, {ModelKind::gpn_rw}, {sc}, {3, 4},
                                            wide_split(), fast_config());
  ASSERT_EQ(one_a.size(), graphuq::all_measures().size());
  ASSERT_EQ(both.size(), one_a.size());
  for (std::size_t i = 0; i < both.size(); ++i) {
    EXPECT_EQ(both[i].scenario, "gaussian_features");
    EXPECT_EQ(both[i].measure, one_a[i].measure);
    // Two-seed aggregate: mean of the single-seed runs, SE = half the gap.
    EXPECT_NEAR(both[i].auc_mean, 0.5 * (one_a[i].auc_mean + one_b[i].auc_mean), 1e-12);
    EXPECT_NEAR(both[i].auc_se, 0.5 * std::abs(one_a[i].auc_mean - one_b[i].auc_mean), 1e-12);
    EXPECT_EQ(one_a[i].auc_se, 0.0);  // single run has no spread
  }
}

TEST(TrainingLogCsv, WritesHeaderAndRows) {
  graphuq::TrainingLog log;
  log.rows = {{1, 2.5, 3.25, 0.5}, {2, 2.0, 3.0, 0.625}};
  const fs::path p = fs::path(::testing::TempDir()) / "train_log.csv";
  graphuq::write_training_log(p.string(), log);
  std::ifstream in(p);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, graphuq::kTrainingLogHeader);
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "1,2.5,3.25,0.5");
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "2,2,3,0.625");
  EXPECT_FALSE(std::getline(in, line));
}

}  // namespace
