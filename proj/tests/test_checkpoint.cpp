#include "graphuq/checkpoint.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "graphuq/errors.hpp"
#include "graphuq/model.hpp"

namespace {

namespace fs = std::filesystem;
using graphuq::Checkpoint;
using graphuq::init_predictor;
using graphuq::IoError;
using graphuq::load_checkpoint;
using graphuq::load_predictor;
using graphuq::ModelConfig;
using graphuq::ModelKind;
using graphuq::PostNetPredictor;
using graphuq::save_checkpoint;

fs::path fresh_path(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / name;
  fs::remove(p);
  return p;
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.hidden_dim = 5;
  cfg.latent_dim = 3;
  cfg.flow_layers = 2;
  cfg.certainty_budget = 17.5;
  cfg.ppr.teleport_epsilon = 0.25;
  cfg.ppr.power_iterations = 4;
  cfg.ppr.sparsify_delta = 0.01;
  return cfg;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void expect_same_predictor(PostNetPredictor& a, PostNetPredictor& b) {
  EXPECT_EQ(a.kind, b.kind);
  EXPECT_EQ(a.in_dim, b.in_dim);
  EXPECT_EQ(a.n_classes, b.n_classes);
  EXPECT_EQ(a.certainty_budget, b.certainty_budget);
  EXPECT_EQ(a.class_priors, b.class_priors);
  EXPECT_EQ(a.config.hidden_dim, b.config.hidden_dim);
  EXPECT_EQ(a.config.latent_dim, b.config.latent_dim);
  EXPECT_EQ(a.config.flow_layers, b.config.flow_layers);
  EXPECT_EQ(a.config.entropy_weight, b.config.entropy_weight);
  EXPECT_EQ(a.config.ppr.teleport_epsilon, b.config.ppr.teleport_epsilon);
  EXPECT_EQ(a.config.ppr.power_iterations, b.config.ppr.power_iterations);
  EXPECT_EQ(a.config.ppr.sparsify_delta, b.config.ppr.sparsify_delta);
  EXPECT_EQ(a.config.ppr.normalization, b.config.ppr.normalization);
  const auto pa = a.parameters(), pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name, pb[i]->name);
    EXPECT_EQ(pa[i]->shape.rows, pb[i]->shape.rows);
    EXPECT_EQ(pa[i]->shape.cols, pb[i]->shape.cols);
    EXPECT_EQ(pa[i]->values, pb[i]->values);  // bit-exact
  }
}

TEST(Checkpoint, RoundTripsEveryModelKind) {
  for (const ModelKind kind : graphuq::kAllModelKinds) {
    PostNetPredictor m = init_predictor(kind, 4, 3, tiny_config(), 11);
    m.class_priors = {0.5, 0.3, 0.2};
    const fs::path p = fresh_path("ckpt_" + graphuq::to_string(kind) + ".bin");
    save_checkpoint(p.string(), m, {{"run_seed", "11"}, {"dataset", "unit"}});

    std::map<std::string, std::string> extras;
    PostNetPredictor back = load_predictor(p.string(), &extras);
    expect_same_predictor(m, back);
    EXPECT_EQ(extras.at("run_seed"), "11");
    EXPECT_EQ(extras.at("dataset"), "unit");
  }
}

TEST(Checkpoint, RewriteIsByteIdentical) {
  PostNetPredictor m = init_predictor(ModelKind::lop_gpn, 6, 2, tiny_config(), 3);
  const fs::path p1 = fresh_path("ckpt_a.bin");
  const fs::path p2 = fresh_path("ckpt_b.bin");
  save_checkpoint(p1.string(), m, {{"k", "v"}});
  save_checkpoint(p2.string(), m, {{"k", "v"}});
  const std::string b1 = read_bytes(p1), b2 = read_bytes(p2);
  ASSERT_FALSE(b1.empty());
  EXPECT_EQ(b1, b2);

  // Saving a reloaded model reproduces the file as well.
  PostNetPredictor back = load_predictor(p1.string(), nullptr);
  const fs::path p3 = fresh_path("ckpt_c.bin");
  save_checkpoint(p3.string(), back, {{"k", "v"}});
  EXPECT_EQ(b1, read_bytes(p3));
}

TEST(Checkpoint, StoresReadableHyperparameters) {
  PostNetPredictor m = init_predictor(ModelKind::gpn_sym, 4, 2, tiny_config(), 1);
  m.class_priors = {0.75, 0.25};
  const fs::path p = fresh_path("ckpt_meta.bin");
  save_checkpoint(p.string(), m);
  const Checkpoint ck = load_checkpoint(p.string());
  EXPECT_EQ(ck.kind, ModelKind::gpn_sym);
  EXPECT_EQ(ck.hyperparams.at("latent_dim"), "3");
  EXPECT_EQ(ck.hyperparams.at("normalization"), "symmetric");
  EXPECT_EQ(ck.hyperparams.at("class_priors"), "0.75,0.25");
  EXPECT_EQ(ck.hyperparams.at("sparsify_delta"), "0.01");
}

TEST(Checkpoint, LoadErrors) {
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.bin"), IoError);

  // Wrong magic.
  const fs::path bad = fresh_path("ckpt_badmagic.bin");
  {
    std::ofstream out(bad, std::ios::binary);
    out << "NOTACKPTxxxxxxxxxxxxxxxx";
  }
  EXPECT_THROW(load_checkpoint(bad.string()), IoError);

  // Truncated parameter block.
  PostNetPredictor m = init_predictor(ModelKind::gpn_rw, 4, 2, tiny_config(), 5);
  const fs::path full = fresh_path("ckpt_full.bin");
  save_checkpoint(full.string(), m);
  const std::string bytes = read_bytes(full);
  const fs::path cut = fresh_path("ckpt_cut.bin");
  {
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  EXPECT_THROW(load_checkpoint(cut.string()), IoError);
}

}  // namespace
