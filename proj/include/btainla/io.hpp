#pragma once

// Run configuration files, dataset CSV files, the truth record written by the
// simulator and the report files written by a fit.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "btainla/inla/pipeline.hpp"
#include "btainla/model.hpp"
#include "btainla/simgen.hpp"
#include "btainla/text.hpp"

namespace btainla::io {

namespace fs = std::filesystem;
using text::ParseError;

// ---------------------------------------------------------------------------
// key = value files

class KeyValueFile {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static KeyValueFile parse(std::istream& in, const std::string& source) {
    KeyValueFile kv;
    kv.source_ = source;
    text::LineReader reader(in, source);
    std::string line;
    while (reader.next(line)) {
      std::string_view body = line;
      if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
      body = text::trim(body);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) reader.fail("expected 'key = value'");
      const std::string key(text::trim(body.substr(0, eq)));
      const std::string value(text::trim(body.substr(eq + 1)));
      if (key.empty()) reader.fail("missing key");
      if (value.empty()) reader.fail("missing value for '" + key + "'");
      if (kv.entries_.count(key) != 0) reader.fail("duplicate key '" + key + "'");
      kv.entries_.emplace(key, Entry{value, reader.line()});
    }
    return kv;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return parse(in, path);
  }

  const std::string& source() const noexcept { return source_; }

  /// Throws on the first key (in line order) that is not in `known`.
  void require_known(const std::vector<std::string_view>& known) const {
    const Entry* bad = nullptr;
    std::string bad_key;
    for (const auto& [key, entry] : entries_) {
      if (std::find(known.begin(), known.end(), key) != known.end()) continue;
      if (bad == nullptr || entry.line < bad->line) {
        bad = &entry;
        bad_key = key;
      }
    }
    if (bad != nullptr) throw ParseError(source_, bad->line, "unknown key '" + bad_key + "'");
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  double get_double(const std::string& key, double fallback) const {
    const auto* e = find(key);
    if (e == nullptr) return fallback;
    double v = 0.0;
    if (!text::parse_double(e->value, v)) fail(*e, "'" + key + "' expects a number");
    return v;
  }

  std::size_t get_size(const std::string& key, std::size_t fallback) const {
    const auto* e = find(key);
    if (e == nullptr) return fallback;
    std::size_t v = 0;
    if (!text::parse_int(e->value, v)) fail(*e, "'" + key + "' expects a non-negative integer");
    return v;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto* e = find(key);
    if (e == nullptr) return fallback;
    std::uint64_t v = 0;
    if (!text::parse_int(e->value, v)) fail(*e, "'" + key + "' expects a non-negative integer");
    return v;
  }

  /// Whitespace- or comma-separated numbers; `count` = 0 accepts any length.
  std::optional<std::vector<double>> get_doubles(const std::string& key, std::size_t count = 0) const {
    const auto* e = find(key);
    if (e == nullptr) return std::nullopt;
    std::vector<double> out;
    for (auto tok : text::split(e->value, " \t,")) {
      double v = 0.0;
      if (!text::parse_double(tok, v)) fail(*e, "'" + key + "' has a non-numeric entry");
      out.push_back(v);
    }
    if (count != 0 && out.size() != count) {
      fail(*e, "'" + key + "' expects " + std::to_string(count) + " values");
    }
    if (out.empty()) fail(*e, "'" + key + "' is empty");
    return out;
  }

  std::optional<std::vector<std::size_t>> get_sizes(const std::string& key) const {
    const auto* e = find(key);
    if (e == nullptr) return std::nullopt;
    std::vector<std::size_t> out;
    for (auto tok : text::split(e->value, " \t,")) {
      std::size_t v = 0;
      if (!text::parse_int(tok, v)) fail(*e, "'" + key + "' expects non-negative integers");
      out.push_back(v);
    }
    if (out.empty()) fail(*e, "'" + key + "' is empty");
    return out;
  }

  std::size_t line_of(const std::string& key) const {
    const auto* e = find(key);
    return e == nullptr ? 0 : e->line;
  }

 private:
  const Entry* find(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  [[noreturn]] void fail(const Entry& e, const std::string& msg) const {
    throw ParseError(source_, e.line, msg);
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
};

// ---------------------------------------------------------------------------
// Run configuration shared by `simulate` and `fit`

struct RunConfig {
  std::size_t rows = 8;
  std::size_t cols = 8;
  std::size_t n_t = 16;
  std::size_t n_b = 4;

  // fit
  HyperParameters theta0{};
  double fd_step_gradient = 1e-5;
  double fd_step_hessian = 1e-3;
  std::size_t max_iter = 200;
  double tol_grad = 1e-3;
  double tol_f_rel = 1e-7;
  std::size_t workers = 0;  // 0: not set in the file
  std::uint64_t seed = 1;
  PriorConfig prior{};
  double fixed_effect_prior_precision = 1e-3;
  std::size_t grid_rings = 1;

  // simulate
  HyperParameters theta_true{std::numbers::ln2, 0.0, 0.0, 0.0};
  std::vector<double> beta_true;
  double obs_ratio = 2.0;

  static inline const std::vector<std::string_view> keys{
      "rows", "cols", "n_t", "n_b", "dims", "theta0", "fd_step_gradient", "fd_step_hessian",
      "max_iter", "tol_grad", "tol_f_rel", "workers", "seed", "prior_means", "prior_sds",
      "fixed_effect_prior_precision", "grid_rings", "theta_true", "beta_true", "obs_ratio"};

  static RunConfig from(const KeyValueFile& kv) {
    kv.require_known(keys);
    RunConfig c;
    c.rows = kv.get_size("rows", c.rows);
    c.cols = kv.get_size("cols", c.cols);
    c.n_t = kv.get_size("n_t", c.n_t);
    c.n_b = kv.get_size("n_b", c.n_b);
    if (auto v = kv.get_doubles("theta0", 4)) c.theta0 = HyperParameters::from_array(to_array4(*v));
    c.fd_step_gradient = kv.get_double("fd_step_gradient", c.fd_step_gradient);
    c.fd_step_hessian = kv.get_double("fd_step_hessian", c.fd_step_hessian);
    c.max_iter = kv.get_size("max_iter", c.max_iter);
    c.tol_grad = kv.get_double("tol_grad", c.tol_grad);
    c.tol_f_rel = kv.get_double("tol_f_rel", c.tol_f_rel);
    c.workers = kv.get_size("workers", c.workers);
    c.seed = kv.get_u64("seed", c.seed);
    if (auto v = kv.get_doubles("prior_means", 4)) c.prior.means = to_array4(*v);
    if (auto v = kv.get_doubles("prior_sds", 4)) c.prior.sds = to_array4(*v);
    c.fixed_effect_prior_precision =
        kv.get_double("fixed_effect_prior_precision", c.fixed_effect_prior_precision);
    c.grid_rings = kv.get_size("grid_rings", c.grid_rings);
    if (auto v = kv.get_doubles("theta_true", 4)) c.theta_true = HyperParameters::from_array(to_array4(*v));
    if (auto v = kv.get_doubles("beta_true")) c.beta_true = *v;
    c.obs_ratio = kv.get_double("obs_ratio", c.obs_ratio);

    auto fail = [&](const std::string& key, const std::string& msg) {
      throw ParseError(kv.source(), kv.line_of(key), msg);
    };
    if (auto dims = kv.get_sizes("dims")) {
      if (dims->size() != 3 || (*dims)[0] != c.rows * c.cols || (*dims)[1] != c.n_t || (*dims)[2] != c.n_b) {
        fail("dims", "'dims' must be 'n_s n_t n_b' matching rows*cols, n_t and n_b");
      }
    }
    if (c.rows < 1 || c.cols < 1) fail(kv.has("rows") ? "rows" : "cols", "lattice must be non-empty");
    if (c.n_t < 1) fail("n_t", "n_t must be >= 1");
    if (!(c.fd_step_gradient > 0.0)) fail("fd_step_gradient", "step must be positive");
    if (!(c.fd_step_hessian > 0.0)) fail("fd_step_hessian", "step must be positive");
    if (!(c.tol_grad >= 0.0)) fail("tol_grad", "tolerance must be non-negative");
    if (!(c.tol_f_rel >= 0.0)) fail("tol_f_rel", "tolerance must be non-negative");
    for (double s : c.prior.sds) {
      if (!(s > 0.0)) fail("prior_sds", "prior sds must be positive");
    }
    if (!(c.fixed_effect_prior_precision > 0.0)) {
      fail("fixed_effect_prior_precision", "precision must be positive");
    }
    if (!c.beta_true.empty() && c.beta_true.size() != c.n_b) fail("beta_true", "beta_true needs n_b values");
    if (!(c.obs_ratio > 0.0)) fail("obs_ratio", "obs_ratio must be positive");
    return c;
  }

  static RunConfig load(const std::string& path) { return from(KeyValueFile::load(path)); }

  BtaLayout layout() const { return BtaLayout(rows * cols, n_t, n_b); }

  SimConfig sim_config() const {
    SimConfig s;
    s.rows = rows;
    s.cols = cols;
    s.n_t = n_t;
    s.n_b = n_b;
    s.theta_true = theta_true;
    s.beta_true = beta_true;
    s.obs_per_timestep_ratio = obs_ratio;
    s.seed = seed;
    s.prior_precision_fixed = fixed_effect_prior_precision;
    return s;
  }

  InferenceOptions inference_options() const {
    InferenceOptions o;
    o.bfgs.fd_step = fd_step_gradient;
    o.bfgs.tol_grad = tol_grad;
    o.bfgs.tol_f_rel = tol_f_rel;
    o.bfgs.max_iter = max_iter;
    o.fd_step_hessian = fd_step_hessian;
    o.grid_rings = grid_rings;
    return o;
  }

 private:
  static std::array<double, 4> to_array4(const std::vector<double>& v) {
    return {v[0], v[1], v[2], v[3]};
  }
};

// ---------------------------------------------------------------------------
// Benchmark ladder

struct BenchmarkConfig {
  std::vector<std::size_t> n_s{64};
  std::vector<std::size_t> n_t{32, 64, 128};
  std::size_t n_b = 4;
  std::size_t repetitions = 5;
  std::uint64_t seed = 1;
  /// Observation counts as multiples of n; 0 benchmarks the prior precision.
  std::vector<double> obs_multipliers{1.0};

  static inline const std::vector<std::string_view> keys{"n_s", "n_t", "n_b", "repetitions", "seed",
                                                         "obs_multipliers"};

  static BenchmarkConfig from(const KeyValueFile& kv) {
    kv.require_known(keys);
    BenchmarkConfig c;
    if (auto v = kv.get_sizes("n_s")) c.n_s = *v;
    if (auto v = kv.get_sizes("n_t")) c.n_t = *v;
    c.n_b = kv.get_size("n_b", c.n_b);
    c.repetitions = kv.get_size("repetitions", c.repetitions);
    c.seed = kv.get_u64("seed", c.seed);
    if (auto v = kv.get_doubles("obs_multipliers")) c.obs_multipliers = *v;
    auto fail = [&](const std::string& key, const std::string& msg) {
      throw ParseError(kv.source(), kv.line_of(key), msg);
    };
    for (auto v : c.n_s) if (v < 1) fail("n_s", "n_s entries must be >= 1");
    for (auto v : c.n_t) if (v < 1) fail("n_t", "n_t entries must be >= 1");
    if (c.repetitions < 5) fail("repetitions", "repetitions must be >= 5");
    for (double m : c.obs_multipliers) if (!(m >= 0.0)) fail("obs_multipliers", "multipliers must be >= 0");
    return c;
  }

  static BenchmarkConfig load(const std::string& path) { return from(KeyValueFile::load(path)); }
};

// ---------------------------------------------------------------------------
// CSV helpers

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has no header row
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;  // source line of each row
};

namespace detail {

inline bool numeric_row(std::string_view line) {
  for (auto f : text::split_fields(line, ',')) {
    double v = 0.0;
    if (!text::parse_double(f, v)) return false;
  }
  return true;
}

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace detail

/// Reads a comma-separated numeric table. A first line that does not parse as
/// numbers is taken as the header; blank lines are skipped. Every row must
/// have `columns` fields (0: same as the first row).
inline CsvTable read_csv(std::istream& in, const std::string& source, std::size_t columns = 0) {
  CsvTable t;
  text::LineReader reader(in, source);
  std::string line;
  bool first = true;
  while (reader.next(line)) {
    const auto body = text::trim(line);
    if (body.empty()) continue;
    if (first) {
      first = false;
      if (!detail::numeric_row(body)) {
        for (auto f : text::split_fields(body, ',')) t.header.emplace_back(text::trim(f));
        if (columns == 0) columns = t.header.size();
        continue;
      }
    }
    const auto fields = text::split_fields(body, ',');
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns) {
      reader.fail("expected " + std::to_string(columns) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!text::parse_double(fields[i], row[i])) {
        reader.fail("field " + std::to_string(i + 1) + " is not a number");
      }
      if (!std::isfinite(row[i])) reader.fail("field " + std::to_string(i + 1) + " is not finite");
    }
    t.rows.push_back(std::move(row));
    t.lines.push_back(reader.line());
  }
  return t;
}

inline CsvTable load_csv(const fs::path& path, std::size_t columns = 0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in, path.string(), columns);
}

// ---------------------------------------------------------------------------
// Dataset files: y.csv, A.csv (row,col,value), Z.csv; optional C.csv, G.csv

inline void write_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  {
    auto out = detail::open_out(dir / "y.csv");
    out << "y\n";
    for (double v : data.y()) out << text::format_double(v) << '\n';
  }
  {
    auto out = detail::open_out(dir / "A.csv");
    out << "row,col,value\n";
    for (const auto& t : data.a_triplets()) {
      out << t.row << ',' << t.col << ',' << text::format_double(t.value) << '\n';
    }
  }
  {
    auto out = detail::open_out(dir / "Z.csv");
    const Matrix& z = data.z();
    for (Eigen::Index j = 0; j < z.cols(); ++j) out << (j ? ",z" : "z") << j;
    out << '\n';
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        if (j) out << ',';
        out << text::format_double(z(i, j));
      }
      out << '\n';
    }
  }
}

namespace detail {

inline std::size_t to_index(double v, const fs::path& path, std::size_t line) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 9e15) {
    throw ParseError(path.string(), line, "index must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

inline std::vector<Triplet> read_triplets(const fs::path& path) {
  const auto t = load_csv(path, 3);
  std::vector<Triplet> out;
  out.reserve(t.rows.size());
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& r = t.rows[k];
    out.push_back({to_index(r[0], path, t.lines[k]), to_index(r[1], path, t.lines[k]), r[2]});
  }
  return out;
}

}  // namespace detail

/// Reads the dataset for `layout`. Size mismatches are reported with the file
/// and line that breaks them.
inline Dataset read_dataset(const fs::path& dir, const BtaLayout& layout) {
  const auto y_tab = load_csv(dir / "y.csv", 1);
  const auto n_obs = y_tab.rows.size();
  Vector y(static_cast<Eigen::Index>(n_obs));
  for (std::size_t i = 0; i < n_obs; ++i) y(static_cast<Eigen::Index>(i)) = y_tab.rows[i][0];

  const auto a_path = dir / "A.csv";
  const auto a_tab = load_csv(a_path, 3);
  std::vector<Triplet> a;
  a.reserve(a_tab.rows.size());
  for (std::size_t k = 0; k < a_tab.rows.size(); ++k) {
    const auto& r = a_tab.rows[k];
    const std::size_t line = a_tab.lines[k];
    const Triplet t{detail::to_index(r[0], a_path, line), detail::to_index(r[1], a_path, line), r[2]};
    if (t.row >= n_obs) throw ParseError(a_path.string(), line, "row index beyond y.csv length");
    if (t.col >= layout.n_latent_field()) {
      throw ParseError(a_path.string(), line, "column index beyond n_s * n_t");
    }
    a.push_back(t);
  }

  const auto z_path = dir / "Z.csv";
  const auto nb = static_cast<Eigen::Index>(layout.n_b);
  Matrix z(static_cast<Eigen::Index>(n_obs), nb);
  if (nb > 0) {
    const auto z_tab = load_csv(z_path, layout.n_b);
    if (z_tab.rows.size() != n_obs) {
      throw ParseError(z_path.string(), z_tab.lines.empty() ? 1 : z_tab.lines.back(),
                       "Z.csv has " + std::to_string(z_tab.rows.size()) + " rows, y.csv has " +
                           std::to_string(n_obs));
    }
    for (std::size_t i = 0; i < n_obs; ++i) {
      for (Eigen::Index j = 0; j < nb; ++j) z(static_cast<Eigen::Index>(i), j) = z_tab.rows[i][static_cast<std::size_t>(j)];
    }
  }
  return Dataset(layout, std::move(y), std::move(a), std::move(z));
}

/// User-supplied spatial operators (C.csv lumped mass on the diagonal, G.csv
/// stiffness), both as row,col,value triplets. Absent files give nullopt.
inline std::optional<SpatialOperators> read_spatial_operators(const fs::path& dir, std::size_t n_s) {
  const auto c_path = dir / "C.csv";
  const auto g_path = dir / "G.csv";
  const bool has_c = fs::exists(c_path);
  const bool has_g = fs::exists(g_path);
  if (!has_c && !has_g) return std::nullopt;
  if (has_c != has_g) throw std::runtime_error("C.csv and G.csv must be supplied together");
  SpatialOperators ops;
  ops.mass = Vector::Zero(static_cast<Eigen::Index>(n_s));
  for (const auto& t : detail::read_triplets(c_path)) {
    if (t.row != t.col || t.row >= n_s) {
      throw std::runtime_error(c_path.string() + ": mass matrix must be diagonal n_s x n_s");
    }
    ops.mass(static_cast<Eigen::Index>(t.row)) += t.value;
  }
  std::vector<Eigen::Triplet<double>> g;
  for (const auto& t : detail::read_triplets(g_path)) {
    if (t.row >= n_s || t.col >= n_s) throw std::runtime_error(g_path.string() + ": index beyond n_s");
    g.emplace_back(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col), t.value);
  }
  ops.stiffness = SparseMatrix(static_cast<Eigen::Index>(n_s), static_cast<Eigen::Index>(n_s));
  ops.stiffness.setFromTriplets(g.begin(), g.end());
  return ops;
}

/// Lattice spec from the config, with user operators from `data_dir` when
/// present.
inline ModelSpec model_spec(const RunConfig& cfg, const std::optional<fs::path>& data_dir = std::nullopt) {
  auto spec = build_lattice_spec(cfg.rows, cfg.cols, cfg.n_t, cfg.n_b, cfg.fixed_effect_prior_precision);
  if (data_dir) {
    if (auto ops = read_spatial_operators(*data_dir, spec.layout.n_s)) {
      spec.spatial = std::move(*ops);
      spec.validate();
    }
  }
  return spec;
}

// ---------------------------------------------------------------------------
// truth.csv

struct TruthRecord {
  HyperParameters theta;
  Vector beta;
};

inline void write_truth(const fs::path& path, const SimTruth& truth) {
  auto out = detail::open_out(path);
  out << "name,value\n";
  const auto t = truth.theta.to_array();
  for (std::size_t i = 0; i < HyperParameters::dim; ++i) {
    out << HyperParameters::names[i] << ',' << text::format_double(t[i]) << '\n';
  }
  for (Eigen::Index j = 0; j < truth.beta.size(); ++j) {
    out << "beta_" << j << ',' << text::format_double(truth.beta(j)) << '\n';
  }
}

inline TruthRecord read_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  text::LineReader reader(in, path.string());
  std::string line;
  if (!reader.next_nonblank(line) || text::trim(line) != "name,value") reader.fail("expected header 'name,value'");
  std::array<double, HyperParameters::dim> theta{};
  std::array<bool, HyperParameters::dim> seen{};
  std::vector<double> beta;
  while (reader.next(line)) {
    const auto body = text::trim(line);
    if (body.empty()) continue;
    const auto f = text::split_fields(body, ',');
    double v = 0.0;
    if (f.size() != 2 || !text::parse_double(f[1], v)) reader.fail("expected 'name,value'");
    const auto name = text::trim(f[0]);
    bool matched = false;
    for (std::size_t i = 0; i < HyperParameters::dim; ++i) {
      if (name == HyperParameters::names[i]) {
        theta[i] = v;
        seen[i] = true;
        matched = true;
      }
    }
    if (!matched) {
      std::size_t j = 0;
      if (name.substr(0, 5) != "beta_" || !text::parse_int(name.substr(5), j) || j != beta.size()) {
        reader.fail("unexpected name '" + std::string(name) + "'");
      }
      beta.push_back(v);
    }
  }
  for (bool s : seen) {
    if (!s) reader.fail("missing hyperparameter rows");
  }
  return {HyperParameters::from_array(theta), Eigen::Map<const Vector>(beta.data(), static_cast<Eigen::Index>(beta.size()))};
}

// ---------------------------------------------------------------------------
// Report files

inline const std::array<std::string, 6>& timing_stages() {
  static const std::array<std::string, 6> s{stage::assembly, stage::factorization_numerator,
                                            stage::factorization_denominator, stage::solve,
                                            stage::selected_inversion, stage::other};
  return s;
}

/// `stage,count,total_seconds,fraction`, one row per stage; fractions are
/// relative to the summed stage time.
inline void write_timing_table(std::ostream& out, const StageTimers& timers) {
  double total = 0.0;
  for (const auto& s : timing_stages()) total += timers.seconds(s);
  out << "stage,count,total_seconds,fraction\n";
  for (const auto& s : timing_stages()) {
    const double sec = timers.seconds(s);
    out << s << ',' << timers.count(s) << ',' << text::format_double(sec) << ','
        << text::format_double(total > 0.0 ? sec / total : 0.0) << '\n';
  }
}

inline void write_report(const fs::path& dir, const InferenceReport& r, std::size_t workers) {
  fs::create_directories(dir);
  {
    auto out = detail::open_out(dir / "hyper.csv");
    out << "name,mode_log,sd_log,mode_natural\n";
    for (std::size_t i = 0; i < kThetaDim; ++i) {
      const auto& m = r.hyper[i];
      out << HyperParameters::names[i] << ',' << text::format_double(m.mean) << ','
          << text::format_double(m.sd) << ',' << text::format_double(m.mean_natural) << '\n';
    }
  }
  {
    auto out = detail::open_out(dir / "latent.csv");
    out << "index,mean,sd\n";
    for (Eigen::Index i = 0; i < r.latent.means.size(); ++i) {
      out << i << ',' << text::format_double(r.latent.means(i)) << ','
          << text::format_double(r.latent.sds(i)) << '\n';
    }
  }
  {
    auto out = detail::open_out(dir / "trace.csv");
    out << "iter,f,grad_norm,step\n";
    for (const auto& e : r.trace) {
      out << e.iter << ',' << text::format_double(e.f) << ',' << text::format_double(e.grad_norm)
          << ',' << text::format_double(e.step) << '\n';
    }
  }
  {
    auto out = detail::open_out(dir / "timing.txt");
    write_timing_table(out, r.diagnostics.timers);
  }
  {
    auto out = detail::open_out(dir / "hessian.csv");
    for (std::size_t j = 0; j < kThetaDim; ++j) out << (j ? "," : "") << HyperParameters::names[j];
    out << '\n';
    for (Eigen::Index i = 0; i < r.neg_hessian.rows(); ++i) {
      for (Eigen::Index j = 0; j < r.neg_hessian.cols(); ++j) {
        out << (j ? "," : "") << text::format_double(r.neg_hessian(i, j));
      }
      out << '\n';
    }
  }
  {
    auto out = detail::open_out(dir / "grid.csv");
    for (std::size_t j = 0; j < kThetaDim; ++j) out << HyperParameters::names[j] << ',';
    out << "f\n";
    for (const auto& g : r.grid) {
      for (double v : g.theta) out << text::format_double(v) << ',';
      out << text::format_double(g.value) << '\n';
    }
  }
  {
    auto out = detail::open_out(dir / "summary.txt");
    out << "status = " << to_string(r.status) << '\n'
        << "iterations = " << r.diagnostics.iterations << '\n'
        << "function_evaluations = " << r.diagnostics.function_evaluations << '\n'
        << "objective_at_mode = " << text::format_double(r.objective_at_mode) << '\n'
        << "final_gradient_norm = " << text::format_double(r.diagnostics.final_gradient_norm) << '\n'
        << "hessian_positive_definite = " << (r.hessian_pd ? "true" : "false") << '\n'
        << "workers = " << workers << '\n'
        << "wall_seconds = " << text::format_double(r.diagnostics.wall_seconds) << '\n';
  }
}

}  // namespace btainla::io
