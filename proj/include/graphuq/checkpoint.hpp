#pragma once

// Self-describing binary model checkpoints.
//
// Byte layout (all integers little-endian; doubles IEEE-754 little-endian):
//   8 bytes   magic "GUQCKPT1"
//   u32       format version (currently 1)
//   u32       model kind (0 appnp_baseline, 1 gpn_rw, 2 gpn_sym, 3 lop_gpn)
//   u64       byte length of the hyperparameter text block
//   bytes     hyperparameter text: `key = value` lines, sorted by key
//   u64       parameter count P
//   P times:
//     u64       name length, then name bytes
//     u64       rank R, then R u64 dimensions (row-major)
//     doubles   prod(dims) values
//
// The hyperparameter block captures the model configuration, resolved
// certainty budget, class priors, and any run metadata (dataset, split,
// scenario, seeds) supplied at save time under `extra.` keys.  Loading
// reconstructs a predictor and verifies parameter names and shapes.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "graphuq/errors.hpp"
#include "graphuq/model.hpp"
#include "graphuq/textio.hpp"

namespace graphuq {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

struct Checkpoint {
  ModelKind kind = ModelKind::gpn_rw;
  std::map<std::string, std::string> hyperparams;
  std::vector<Parameter> params;  // grad buffers unused
};

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw IoError("checkpoint '" + path + "': truncated");
  return v;
}
inline std::uint64_t read_u64(std::istream& in, const std::string& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw IoError("checkpoint '" + path + "': truncated");
  return v;
}

inline constexpr char kCheckpointMagic[8] = {'G', 'U', 'Q', 'C', 'K', 'P', 'T', '1'};

inline std::string optional_delta_string(const std::optional<double>& d) {
  return d ? format_double(*d) : std::string("none");
}

}  // namespace detail

inline std::map<std::string, std::string> checkpoint_hyperparams(
    const PostNetPredictor& m, const std::map<std::string, std::string>& extras) {
  std::map<std::string, std::string> h;
  h["in_dim"] = std::to_string(m.in_dim);
  h["n_classes"] = std::to_string(m.n_classes);
  h["hidden_dim"] = std::to_string(m.config.hidden_dim);
  h["latent_dim"] = std::to_string(m.config.latent_dim);
  h["flow_layers"] = std::to_string(m.config.flow_layers);
  h["entropy_weight"] = format_double(m.config.entropy_weight);
  h["certainty_budget"] = format_double(m.certainty_budget);
  h["teleport_epsilon"] = format_double(m.config.ppr.teleport_epsilon);
  h["power_iterations"] = std::to_string(m.config.ppr.power_iterations);
  h["sparsify_delta"] = detail::optional_delta_string(m.config.ppr.sparsify_delta);
  h["normalization"] = to_string(m.config.ppr.normalization);
  h["max_epochs"] = std::to_string(m.config.max_epochs);
  h["patience"] = std::to_string(m.config.patience);
  h["learning_rate"] = format_double(m.config.adam.learning_rate);
  h["adam_beta1"] = format_double(m.config.adam.beta1);
  h["adam_beta2"] = format_double(m.config.adam.beta2);
  h["adam_eps"] = format_double(m.config.adam.eps_stability);
  h["grad_clip"] = format_double(m.config.grad_clip);
  std::string priors;
  for (std::size_t c = 0; c < m.class_priors.size(); ++c) {
    if (c) priors += ',';
    priors += format_double(m.class_priors[c]);
  }
  h["class_priors"] = priors;
  for (const auto& [k, v] : extras) h["extra." + k] = v;
  return h;
}

inline void save_checkpoint(const std::string& path, const PostNetPredictor& model,
                            const std::map<std::string, std::string>& extras = {}) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint '" + path + "' for writing");
  out.write(detail::kCheckpointMagic, sizeof detail::kCheckpointMagic);
  detail::write_u32(out, 1);
  detail::write_u32(out, static_cast<std::uint32_t>(model.kind));

  std::ostringstream text;
  for (const auto& [k, v] : checkpoint_hyperparams(model, extras))
    text << k << " = " << v << "\n";
  const std::string block = text.str();
  detail::write_u64(out, block.size());
  out.write(block.data(), static_cast<std::streamsize>(block.size()));

  auto& m = const_cast<PostNetPredictor&>(model);
  const auto params = m.parameters();
  detail::write_u64(out, params.size());
  for (const Parameter* p : params) {
    detail::write_u64(out, p->name.size());
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    detail::write_u64(out, 2);
    detail::write_u64(out, p->shape.rows);
    detail::write_u64(out, p->shape.cols);
    out.write(reinterpret_cast<const char*>(p->values.data()),
              static_cast<std::streamsize>(p->values.size() * sizeof(double)));
  }
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  char magic[8];
  if (!in.read(magic, sizeof magic) ||
      std::memcmp(magic, detail::kCheckpointMagic, sizeof magic) != 0)
    throw IoError("checkpoint '" + path + "': bad magic (not a checkpoint file?)");
  const std::uint32_t version = detail::read_u32(in, path);
  if (version != 1)
    throw IoError("checkpoint '" + path + "': unsupported version " + std::to_string(version));

  Checkpoint ck;
  const std::uint32_t kind_raw = detail::read_u32(in, path);
  if (kind_raw > 3) throw IoError("checkpoint '" + path + "': invalid model kind");
  ck.kind = static_cast<ModelKind>(kind_raw);

  const std::uint64_t text_len = detail::read_u64(in, path);
  std::string block(text_len, '\0');
  if (!in.read(block.data(), static_cast<std::streamsize>(text_len)))
    throw IoError("checkpoint '" + path + "': truncated");
  std::istringstream text(block);
  ck.hyperparams = parse_kv_text(text, "checkpoint '" + path + "'");

  const std::uint64_t n_params = detail::read_u64(in, path);
  ck.params.reserve(n_params);
  for (std::uint64_t i = 0; i < n_params; ++i) {
    const std::uint64_t name_len = detail::read_u64(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name_len)))
      throw IoError("checkpoint '" + path + "': truncated");
    const std::uint64_t rank = detail::read_u64(in, path);
    if (rank != 2)
      throw IoError("checkpoint '" + path + "': unsupported parameter rank " +
                    std::to_string(rank));
    const std::uint64_t rows = detail::read_u64(in, path);
    const std::uint64_t cols = detail::read_u64(in, path);
    std::vector<double> values(rows * cols);
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(double))))
      throw IoError("checkpoint '" + path + "': truncated");
    ck.params.emplace_back(std::move(name),
                           Shape{static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)},
                           std::move(values));
  }
  return ck;
}

namespace detail {

inline const std::string& ck_get(const Checkpoint& ck, const std::string& key,
                                 const std::string& path) {
  const auto it = ck.hyperparams.find(key);
  if (it == ck.hyperparams.end())
    throw IoError("checkpoint '" + path + "': missing hyperparameter '" + key + "'");
  return it->second;
}

}  // namespace detail

// Rebuilds a ready-to-use predictor; throws IoError when names or shapes do
// not match the architecture described by the hyperparameters.
inline PostNetPredictor predictor_from_checkpoint(const Checkpoint& ck,
                                                  const std::string& path = "<memory>") {
  const auto geti = [&](const std::string& k) {
    return static_cast<std::size_t>(parse_int(detail::ck_get(ck, k, path), "checkpoint " + k));
  };
  const auto getd = [&](const std::string& k) {
    return parse_double(detail::ck_get(ck, k, path), "checkpoint " + k);
  };

  ModelConfig cfg;
  cfg.hidden_dim = geti("hidden_dim");
  cfg.latent_dim = geti("latent_dim");
  cfg.flow_layers = geti("flow_layers");
  cfg.entropy_weight = getd("entropy_weight");
  cfg.certainty_budget = getd("certainty_budget");
  cfg.ppr.teleport_epsilon = getd("teleport_epsilon");
  cfg.ppr.power_iterations = geti("power_iterations");
  const std::string& delta = detail::ck_get(ck, "sparsify_delta", path);
  cfg.ppr.sparsify_delta =
      delta == "none" ? std::nullopt
                      : std::optional<double>(parse_double(delta, "checkpoint sparsify_delta"));
  cfg.ppr.normalization = normalization_from_string(detail::ck_get(ck, "normalization", path));
  cfg.max_epochs = geti("max_epochs");
  cfg.patience = geti("patience");
  cfg.adam.learning_rate = getd("learning_rate");
  cfg.adam.beta1 = getd("adam_beta1");
  cfg.adam.beta2 = getd("adam_beta2");
  cfg.adam.eps_stability = getd("adam_eps");
  cfg.grad_clip = getd("grad_clip");

  PostNetPredictor m = init_predictor(ck.kind, geti("in_dim"), geti("n_classes"), cfg, 0);
  m.certainty_budget = getd("certainty_budget");
  const auto priors = split_on(detail::ck_get(ck, "class_priors", path), ',');
  if (priors.size() != m.n_classes)
    throw IoError("checkpoint '" + path + "': class_priors count mismatch");
  for (std::size_t c = 0; c < priors.size(); ++c)
    m.class_priors[c] = parse_double(trim(priors[c]), "checkpoint class_priors");

  std::map<std::string, const Parameter*> stored;
  for (const Parameter& p : ck.params) stored[p.name] = &p;
  for (Parameter* p : m.parameters()) {
    const auto it = stored.find(p->name);
    if (it == stored.end())
      throw IoError("checkpoint '" + path + "': missing parameter '" + p->name + "'");
    if (!(it->second->shape == p->shape))
      throw IoError("checkpoint '" + path + "': shape mismatch for parameter '" + p->name + "'");
    p->values = it->second->values;
    stored.erase(it);
  }
  if (!stored.empty())
    throw IoError("checkpoint '" + path + "': unexpected parameter '" +
                  stored.begin()->first + "'");
  return m;
}

inline PostNetPredictor load_predictor(const std::string& path,
                                       std::map<std::string, std::string>* extras_out = nullptr) {
  const Checkpoint ck = load_checkpoint(path);
  if (extras_out) {
    extras_out->clear();
    for (const auto& [k, v] : ck.hyperparams)
      if (k.rfind("extra.", 0) == 0) (*extras_out)[k.substr(6)] = v;
  }
  return predictor_from_checkpoint(ck, path);
}

}  // namespace graphuq
