#pragma once

// Graph datasets: on-disk text format, stratified splitting, synthetic
// stochastic-block-model generation, and out-of-distribution scenario
// constructors.
//
// Directory format (UTF-8 text):
//   meta.txt     `key = value`; required keys n_nodes, n_classes, feature_dim;
//                optional key name.
//   edges.tsv    one `src<TAB>dst` pair per line, 0-based, undirected.
//   features.tsv one row per node, tab-separated decimals.
//   labels.tsv   one integer per line.
//   splits.tsv   optional; one of {train,val,test,none} per line.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "graphuq/errors.hpp"
#include "graphuq/rng.hpp"
#include "graphuq/sparse.hpp"
#include "graphuq/textio.hpp"

namespace graphuq {

struct GraphDataset {
  std::string name;
  CsrMatrix adjacency;   // symmetric, {0,1} values
  DenseMatrix features;  // n_nodes x feature_dim
  std::vector<int> labels;
  std::size_t n_classes = 0;
  // Masks are per-node 0/1 vectors; empty means "no split assigned yet".
  std::vector<std::uint8_t> train_mask;
  std::vector<std::uint8_t> val_mask;
  std::vector<std::uint8_t> test_mask;
  // Set by apply_ood; empty otherwise.  Flagged nodes never sit in the train
  // or validation masks.
  std::vector<std::uint8_t> ood_flags;

  std::size_t n_nodes() const { return labels.size(); }
  std::size_t feature_dim() const { return features.n_cols; }
  bool has_masks() const { return !train_mask.empty(); }
  bool has_ood_flags() const { return !ood_flags.empty(); }

  std::vector<std::size_t> indices_where(const std::vector<std::uint8_t>& mask) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> train_indices() const { return indices_where(train_mask); }
  std::vector<std::size_t> val_indices() const { return indices_where(val_mask); }
  std::vector<std::size_t> test_indices() const { return indices_where(test_mask); }

  void validate() const {
    const std::size_t n = n_nodes();
    if (adjacency.n_rows() != n || adjacency.n_cols() != n)
      throw std::invalid_argument("dataset: adjacency shape does not match node count");
    if (features.n_rows != n)
      throw std::invalid_argument("dataset: feature row count does not match node count");
    if (n_classes == 0) throw std::invalid_argument("dataset: n_classes must be positive");
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes)
        throw std::invalid_argument("dataset: label out of range at node " + std::to_string(i));
    for (const double v : adjacency.values())
      if (v != 1.0) throw std::invalid_argument("dataset: adjacency must be unweighted (0/1)");
    if (!is_symmetric(adjacency))
      throw std::invalid_argument("dataset: adjacency must be symmetric");
    const auto check_mask = [&](const std::vector<std::uint8_t>& m, const char* which) {
      if (!m.empty() && m.size() != n)
        throw std::invalid_argument(std::string("dataset: ") + which + " mask size mismatch");
    };
    check_mask(train_mask, "train");
    check_mask(val_mask, "val");
    check_mask(test_mask, "test");
    check_mask(ood_flags, "ood");
    if (has_masks()) {
      for (std::size_t i = 0; i < n; ++i) {
        const int assigned = (train_mask[i] ? 1 : 0) + (val_mask.empty() ? 0 : val_mask[i]) +
                             (test_mask.empty() ? 0 : test_mask[i]);
        if (assigned > 1)
          throw std::invalid_argument("dataset: masks overlap at node " + std::to_string(i));
        if (has_ood_flags() && ood_flags[i] &&
            (train_mask[i] || (!val_mask.empty() && val_mask[i])))
          throw std::invalid_argument("dataset: flagged node " + std::to_string(i) +
                                      " appears in train/val mask");
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Disk format
// ---------------------------------------------------------------------------

namespace detail {

inline std::ifstream open_for_read(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
  return in;
}

inline std::ofstream open_for_write(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  return out;
}

}  // namespace detail

inline GraphDataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw IoError("dataset directory '" + dir + "' does not exist");

  const auto meta = parse_kv_file((root / "meta.txt").string());
  const auto require = [&](const char* key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end())
      throw IoError("meta.txt: missing required key '" + std::string(key) + "'");
    return it->second;
  };
  const long long n_ll = parse_int(require("n_nodes"), "meta.txt n_nodes");
  const long long k_ll = parse_int(require("n_classes"), "meta.txt n_classes");
  const long long d_ll = parse_int(require("feature_dim"), "meta.txt feature_dim");
  if (n_ll <= 0 || k_ll <= 0 || d_ll <= 0)
    throw IoError("meta.txt: n_nodes, n_classes, feature_dim must be positive");
  const auto n = static_cast<std::size_t>(n_ll);
  const auto k = static_cast<std::size_t>(k_ll);
  const auto d = static_cast<std::size_t>(d_ll);

  GraphDataset ds;
  ds.n_classes = k;
  ds.name = meta.count("name") ? meta.at("name") : root.filename().string();

  {
    auto in = detail::open_for_read(root / "edges.tsv");
    std::vector<Triplet> trips;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto t = trim(line);
      if (t.empty()) continue;
      std::istringstream ls{std::string(t)};
      long long src = -1, dst = -1;
      if (!(ls >> src >> dst))
        throw IoError("edges.tsv line " + std::to_string(lineno) + ": expected two integers");
      if (src < 0 || dst < 0 || src >= n_ll || dst >= n_ll)
        throw IoError("edges.tsv line " + std::to_string(lineno) + ": node index out of range");
      trips.push_back({static_cast<std::size_t>(src), static_cast<std::size_t>(dst), 1.0});
      if (src != dst) trips.push_back({static_cast<std::size_t>(dst), static_cast<std::size_t>(src), 1.0});
    }
    ds.adjacency = CsrMatrix::from_triplets(n, n, trips);
    // Duplicate edges in the file would have summed; clamp back to 0/1.
    std::vector<Triplet> dedup;
    dedup.reserve(ds.adjacency.nnz());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t e = ds.adjacency.row_offsets()[i]; e < ds.adjacency.row_offsets()[i + 1]; ++e)
        dedup.push_back({i, ds.adjacency.col_indices()[e], 1.0});
    ds.adjacency = CsrMatrix::from_triplets(n, n, dedup);
  }

  {
    auto in = detail::open_for_read(root / "features.tsv");
    ds.features = DenseMatrix{n, d, std::vector<double>(n * d, 0.0)};
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      if (row >= n) throw IoError("features.tsv: more rows than n_nodes");
      const auto cells = split_on(trim(line), '\t');
      if (cells.size() != d)
        throw IoError("features.tsv row " + std::to_string(row) + ": expected " +
                      std::to_string(d) + " columns, got " + std::to_string(cells.size()));
      for (std::size_t j = 0; j < d; ++j)
        ds.features.at(row, j) = parse_double(trim(cells[j]), "features.tsv row " + std::to_string(row));
      ++row;
    }
    if (row != n) throw IoError("features.tsv: expected " + std::to_string(n) + " rows, got " +
                                std::to_string(row));
  }

  {
    auto in = detail::open_for_read(root / "labels.tsv");
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const long long y = parse_int(trim(line), "labels.tsv");
      if (y < 0 || y >= k_ll)
        throw IoError("labels.tsv: label " + std::to_string(y) + " out of range for " +
                      std::to_string(k) + " classes");
      ds.labels.push_back(static_cast<int>(y));
    }
    if (ds.labels.size() != n)
      throw IoError("labels.tsv: expected " + std::to_string(n) + " labels, got " +
                    std::to_string(ds.labels.size()));
  }

  if (std::filesystem::exists(root / "splits.tsv")) {
    auto in = detail::open_for_read(root / "splits.tsv");
    ds.train_mask.assign(n, 0);
    ds.val_mask.assign(n, 0);
    ds.test_mask.assign(n, 0);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      const auto t = trim(line);
      if (t.empty()) continue;
      if (row >= n) throw IoError("splits.tsv: more rows than n_nodes");
      if (t == "train")
        ds.train_mask[row] = 1;
      else if (t == "val")
        ds.val_mask[row] = 1;
      else if (t == "test")
        ds.test_mask[row] = 1;
      else if (t != "none")
        throw IoError("splits.tsv row " + std::to_string(row) + ": unknown token '" +
                      std::string(t) + "' (expected train/val/test/none)");
      ++row;
    }
    if (row != n) throw IoError("splits.tsv: expected " + std::to_string(n) + " rows, got " +
                                std::to_string(row));
  }

  try {
    ds.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError("dataset '" + dir + "' failed validation: " + e.what());
  }
  return ds;
}

// Writes the directory format.  OOD flags are runtime state and are not part
// of the format; they are intentionally not persisted.
inline void save_dataset(const GraphDataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory '" + dir + "': " + ec.message());
  const fs::path root(dir);

  {
    auto out = detail::open_for_write(root / "meta.txt");
    out << "name = " << ds.name << "\n";
    out << "n_nodes = " << ds.n_nodes() << "\n";
    out << "n_classes = " << ds.n_classes << "\n";
    out << "feature_dim = " << ds.feature_dim() << "\n";
  }
  {
    auto out = detail::open_for_write(root / "edges.tsv");
    for (std::size_t i = 0; i < ds.adjacency.n_rows(); ++i)
      for (std::size_t e = ds.adjacency.row_offsets()[i]; e < ds.adjacency.row_offsets()[i + 1];
           ++e) {
        const std::size_t j = ds.adjacency.col_indices()[e];
        if (j >= i) out << i << '\t' << j << '\n';  // each undirected edge once
      }
  }
  {
    auto out = detail::open_for_write(root / "features.tsv");
    for (std::size_t i = 0; i < ds.features.n_rows; ++i) {
      for (std::size_t j = 0; j < ds.features.n_cols; ++j) {
        if (j) out << '\t';
        out << format_double(ds.features.at(i, j));
      }
      out << '\n';
    }
  }
  {
    auto out = detail::open_for_write(root / "labels.tsv");
    for (const int y : ds.labels) out << y << '\n';
  }
  if (ds.has_masks()) {
    auto out = detail::open_for_write(root / "splits.tsv");
    for (std::size_t i = 0; i < ds.n_nodes(); ++i) {
      if (ds.train_mask[i])
        out << "train\n";
      else if (!ds.val_mask.empty() && ds.val_mask[i])
        out << "val\n";
      else if (!ds.test_mask.empty() && ds.test_mask[i])
        out << "test\n";
      else
        out << "none\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct SplitSpec {
  double train_fraction = 0.05;
  double val_fraction = 0.15;
  double test_fraction = 0.80;
  std::uint64_t seed = 0;
  bool stratified = true;

  void validate() const {
    const double fracs[] = {train_fraction, val_fraction, test_fraction};
    double sum = 0.0;
    for (const double f : fracs) {
      if (!(f >= 0.0) || !std::isfinite(f))
        throw std::invalid_argument("split: fractions must be finite and >= 0");
      sum += f;
    }
    if (sum > 1.0 + 1e-12) throw std::invalid_argument("split: fractions must sum to <= 1");
  }
};

namespace detail {

// Partitions `pool` (already shuffled) into train/val/test counts chosen by
// largest-remainder rounding of the fractions, with every stratum of nonzero
// fraction guaranteed at least one node.  Throws when the pool is too small
// for that guarantee.
inline std::array<std::size_t, 3> strata_counts(std::size_t pool_size, const SplitSpec& s,
                                                const std::string& what) {
  const double fracs[3] = {s.train_fraction, s.val_fraction, s.test_fraction};
  std::size_t n_nonzero = 0;
  for (const double f : fracs)
    if (f > 0.0) ++n_nonzero;
  if (pool_size < n_nonzero)
    throw std::invalid_argument("split: " + what + " has " + std::to_string(pool_size) +
                                " nodes, fewer than the " + std::to_string(n_nonzero) +
                                " requested strata");
  std::array<std::size_t, 3> counts{};
  double rema[3];
  std::size_t assigned = 0;
  for (int t = 0; t < 3; ++t) {
    const double exact = fracs[t] * static_cast<double>(pool_size);
    counts[t] = static_cast<std::size_t>(std::floor(exact + 1e-12));
    rema[t] = exact - static_cast<double>(counts[t]);
    assigned += counts[t];
  }
  // Distribute the whole-node shortfall of the explicit strata by largest
  // remainder (ties favour train, then val, then test).
  const double total_frac = fracs[0] + fracs[1] + fracs[2];
  std::size_t target = static_cast<std::size_t>(
      std::llround(std::min(1.0, total_frac) * static_cast<double>(pool_size)));
  target = std::min(target, pool_size);
  while (assigned < target) {
    int best = -1;
    for (int t = 0; t < 3; ++t)
      if (fracs[t] > 0.0 && (best < 0 || rema[t] > rema[best] + 1e-15)) best = t;
    if (best < 0) break;
    ++counts[best];
    rema[best] -= 1.0;
    ++assigned;
  }
  // Guarantee one node per requested stratum, taking from the largest stratum.
  for (int t = 0; t < 3; ++t) {
    while (fracs[t] > 0.0 && counts[t] == 0) {
      int donor = -1;
      for (int u = 0; u < 3; ++u)
        if (u != t && counts[u] > 1 && (donor < 0 || counts[u] > counts[donor])) donor = u;
      if (assigned < pool_size) {
        ++counts[t];
        ++assigned;
      } else if (donor >= 0) {
        --counts[donor];
        ++counts[t];
      } else {
        throw std::invalid_argument("split: " + what + " cannot give every stratum a node");
      }
    }
  }
  return counts;
}

}  // namespace detail

// Deterministic train/val/test assignment.  Stratified mode splits each class
// independently so per-class sizes track the fractions within one node.
inline GraphDataset split(const GraphDataset& d, const SplitSpec& s) {
  s.validate();
  d.validate();
  const std::size_t n = d.n_nodes();
  GraphDataset out = d;
  out.train_mask.assign(n, 0);
  out.val_mask.assign(n, 0);
  out.test_mask.assign(n, 0);

  Rng rng(mix_seed(s.seed, 0x5B117ULL));
  const auto assign_pool = [&](std::vector<std::size_t> pool, const std::string& what) {
    rng.shuffle(pool);
    const auto counts = detail::strata_counts(pool.size(), s, what);
    std::size_t at = 0;
    for (std::size_t i = 0; i < counts[0]; ++i) out.train_mask[pool[at++]] = 1;
    for (std::size_t i = 0; i < counts[1]; ++i) out.val_mask[pool[at++]] = 1;
    for (std::size_t i = 0; i < counts[2]; ++i) out.test_mask[pool[at++]] = 1;
  };

  if (s.stratified) {
    for (std::size_t c = 0; c < d.n_classes; ++c) {
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < n; ++i)
        if (static_cast<std::size_t>(d.labels[i]) == c) pool.push_back(i);
      if (pool.empty()) continue;  // absent class: nothing to stratify
      assign_pool(std::move(pool), "class " + std::to_string(c));
    }
  } else {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    assign_pool(std::move(pool), "node pool");
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic stochastic block model
// ---------------------------------------------------------------------------

struct SbmParams {
  std::size_t n_nodes = 500;
  std::size_t n_classes = 3;
  double intra_p = 0.05;
  double inter_p = 0.002;
  std::size_t feature_dim = 16;
  double class_separation = 2.0;

  void validate() const {
    if (n_nodes == 0) throw std::invalid_argument("sbm: n_nodes must be positive");
    if (n_classes == 0 || n_classes > n_nodes)
      throw std::invalid_argument("sbm: need 1 <= n_classes <= n_nodes");
    if (feature_dim == 0) throw std::invalid_argument("sbm: feature_dim must be positive");
    if (!(intra_p >= 0.0 && intra_p <= 1.0) || !(inter_p >= 0.0 && inter_p <= 1.0))
      throw std::invalid_argument("sbm: edge probabilities must lie in [0,1]");
    if (!(intra_p > inter_p))
      throw std::invalid_argument("sbm: homophily requires intra_p > inter_p");
    if (!(class_separation >= 0.0) || !std::isfinite(class_separation))
      throw std::invalid_argument("sbm: class_separation must be finite and >= 0");
  }
};

// Homophilic stochastic block model with Gaussian class-conditional features.
// Class means sit at class_separation along cycled coordinate axes (sign
// flipped on each cycle), so distinct classes are class_separation*sqrt(2)
// apart while the noise is unit isotropic.
inline GraphDataset synth_sbm(const SbmParams& p, std::uint64_t seed,
                              const std::string& name = "sbm") {
  p.validate();
  const std::size_t n = p.n_nodes;
  const std::size_t k = p.n_classes;
  const std::size_t d = p.feature_dim;

  GraphDataset ds;
  ds.name = name;
  ds.n_classes = k;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    ds.labels[i] = static_cast<int>((i * k) / n);  // contiguous, near-equal blocks

  Rng edge_rng(mix_seed(seed, 0xED6E5ULL));
  std::vector<Triplet> trips;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double pe = (ds.labels[i] == ds.labels[j]) ? p.intra_p : p.inter_p;
      if (pe > 0.0 && edge_rng.bernoulli(pe)) {
        trips.push_back({i, j, 1.0});
        trips.push_back({j, i, 1.0});
      }
    }
  ds.adjacency = CsrMatrix::from_triplets(n, n, trips);

  std::vector<std::vector<double>> means(k, std::vector<double>(d, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t axis = c % d;
    const double sign = ((c / d) % 2 == 0) ? 1.0 : -1.0;
    means[c][axis] = sign * p.class_separation;
  }
  Rng feat_rng(mix_seed(seed, 0xFEA7ULL));
  ds.features = DenseMatrix{n, d, std::vector<double>(n * d, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      ds.features.at(i, j) = means[static_cast<std::size_t>(ds.labels[i])][j] + feat_rng.normal();

  ds.validate();
  return ds;
}

// Fraction of edges joining same-class endpoints.
inline double homophily_ratio(const GraphDataset& ds) {
  std::size_t intra = 0, total = 0;
  for (std::size_t i = 0; i < ds.adjacency.n_rows(); ++i)
    for (std::size_t e = ds.adjacency.row_offsets()[i]; e < ds.adjacency.row_offsets()[i + 1];
         ++e) {
      const std::size_t j = ds.adjacency.col_indices()[e];
      if (j <= i) continue;
      ++total;
      if (ds.labels[i] == ds.labels[j]) ++intra;
    }
  return total == 0 ? 0.0 : static_cast<double>(intra) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// OOD scenarios
// ---------------------------------------------------------------------------

enum class OodKind { leave_out_classes, bernoulli_dropout, gaussian_features };

inline std::string to_string(OodKind k) {
  switch (k) {
    case OodKind::leave_out_classes: return "leave_out_classes";
    case OodKind::bernoulli_dropout: return "bernoulli_dropout";
    case OodKind::gaussian_features: return "gaussian_features";
  }
  throw std::invalid_argument("unknown OOD kind");
}

inline OodKind ood_kind_from_string(const std::string& s) {
  if (s == "leave_out_classes") return OodKind::leave_out_classes;
  if (s == "bernoulli_dropout") return OodKind::bernoulli_dropout;
  if (s == "gaussian_features") return OodKind::gaussian_features;
  throw std::invalid_argument("unknown OOD scenario '" + s +
                              "'; valid: leave_out_classes, bernoulli_dropout, gaussian_features");
}

struct OodScenario {
  OodKind kind = OodKind::gaussian_features;
  std::vector<int> classes;    // leave_out_classes only; empty = highest floor(K/2) indices
  double keep_prob = 0.5;      // bernoulli_dropout only
  double node_fraction = 0.1;  // perturbation scenarios
  std::uint64_t seed = 0;

  static OodScenario leave_out(std::vector<int> classes) {
    OodScenario s;
    s.kind = OodKind::leave_out_classes;
    s.classes = std::move(classes);
    return s;
  }
  static OodScenario dropout(double keep_prob, double node_fraction, std::uint64_t seed) {
    OodScenario s;
    s.kind = OodKind::bernoulli_dropout;
    s.keep_prob = keep_prob;
    s.node_fraction = node_fraction;
    s.seed = seed;
    return s;
  }
  static OodScenario gaussian(double node_fraction, std::uint64_t seed) {
    OodScenario s;
    s.kind = OodKind::gaussian_features;
    s.node_fraction = node_fraction;
    s.seed = seed;
    return s;
  }
};

namespace detail {

// Picks round(node_fraction * N) nodes outside the train mask, flags them,
// and removes them from the validation mask.  Returns the chosen nodes in
// ascending order.
inline std::vector<std::size_t> flag_non_train_subset(GraphDataset& ds, double node_fraction,
                                                      std::uint64_t seed) {
  if (!(node_fraction > 0.0 && node_fraction <= 1.0))
    throw std::invalid_argument("ood: node_fraction must lie in (0,1]");
  const std::size_t n = ds.n_nodes();
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < n; ++i)
    if (!ds.train_mask[i]) pool.push_back(i);
  const auto count =
      static_cast<std::size_t>(std::llround(node_fraction * static_cast<double>(n)));
  if (count == 0) throw std::invalid_argument("ood: node_fraction selects zero nodes");
  if (count > pool.size())
    throw std::invalid_argument("ood: node_fraction selects " + std::to_string(count) +
                                " nodes but only " + std::to_string(pool.size()) +
                                " non-train nodes exist");
  Rng rng(mix_seed(seed, 0x00DULL));
  rng.shuffle(pool);
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  ds.ood_flags.assign(n, 0);
  for (const std::size_t i : pool) {
    ds.ood_flags[i] = 1;
    ds.val_mask[i] = 0;
  }
  return pool;
}

}  // namespace detail

// Applies an OOD scenario to a dataset that already carries split masks.
// Flagged nodes are guaranteed absent from train and val masks; the test mask
// is untouched, so flagged test nodes act as OOD positives downstream.
inline GraphDataset apply_ood(const GraphDataset& d, const OodScenario& s) {
  d.validate();
  if (!d.has_masks()) throw std::invalid_argument("ood: dataset has no split masks yet");
  GraphDataset ds = d;

  switch (s.kind) {
    case OodKind::leave_out_classes: {
      std::vector<int> out_classes = s.classes;
      if (out_classes.empty()) {
        const std::size_t n_out = d.n_classes / 2;
        if (n_out == 0)
          throw std::invalid_argument("ood: leave_out_classes needs at least 2 classes");
        for (std::size_t c = d.n_classes - n_out; c < d.n_classes; ++c)
          out_classes.push_back(static_cast<int>(c));
      }
      std::sort(out_classes.begin(), out_classes.end());
      out_classes.erase(std::unique(out_classes.begin(), out_classes.end()), out_classes.end());
      for (const int c : out_classes)
        if (c < 0 || static_cast<std::size_t>(c) >= d.n_classes)
          throw std::invalid_argument("ood: left-out class " + std::to_string(c) +
                                      " out of range");
      if (out_classes.size() >= d.n_classes)
        throw std::invalid_argument("ood: must leave at least one class in-distribution");
      const std::size_t n_id = d.n_classes - out_classes.size();
      if (n_id < 2)
        throw std::invalid_argument("ood: leave_out_classes must keep at least 2 ID classes");

      // Re-index densely: ID classes first (ascending), left-out classes after.
      std::vector<int> remap(d.n_classes, -1);
      int next = 0;
      for (std::size_t c = 0; c < d.n_classes; ++c)
        if (!std::binary_search(out_classes.begin(), out_classes.end(), static_cast<int>(c)))
          remap[c] = next++;
      for (const int c : out_classes) remap[static_cast<std::size_t>(c)] = next++;

      ds.ood_flags.assign(d.n_nodes(), 0);
      for (std::size_t i = 0; i < d.n_nodes(); ++i) {
        const bool is_out = std::binary_search(out_classes.begin(), out_classes.end(),
                                               d.labels[i]);
        ds.labels[i] = remap[static_cast<std::size_t>(d.labels[i])];
        if (is_out) {
          ds.ood_flags[i] = 1;
          ds.train_mask[i] = 0;
          ds.val_mask[i] = 0;
        }
      }
      break;
    }
    case OodKind::bernoulli_dropout: {
      if (!(s.keep_prob > 0.0 && s.keep_prob <= 1.0))
        throw std::invalid_argument("ood: keep_prob must lie in (0,1]");
      const auto chosen = detail::flag_non_train_subset(ds, s.node_fraction, s.seed);
      Rng rng(mix_seed(s.seed, 0xD20ULL));
      for (const std::size_t i : chosen)
        for (std::size_t j = 0; j < ds.feature_dim(); ++j)
          if (!rng.bernoulli(s.keep_prob)) ds.features.at(i, j) = 0.0;
      break;
    }
    case OodKind::gaussian_features: {
      const auto chosen = detail::flag_non_train_subset(ds, s.node_fraction, s.seed);
      Rng rng(mix_seed(s.seed, 0x6A55ULL));
      for (const std::size_t i : chosen)
        for (std::size_t j = 0; j < ds.feature_dim(); ++j) ds.features.at(i, j) = rng.normal();
      break;
    }
  }
  ds.validate();
  return ds;
}

}  // namespace graphuq
