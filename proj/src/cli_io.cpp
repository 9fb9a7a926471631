#include "spiked/cli_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace spiked {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(std::string_view source, const std::string& field, const std::string& message) {
  throw Error(ErrorKind::kConfig, std::string(source) + ": field '" + field + "': " + message);
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json complex_json(Complex z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

class FieldReader {
 public:
  FieldReader(const json& obj, std::string prefix, std::string_view source)
      : obj_(obj), prefix_(std::move(prefix)), source_(source) {}

  bool has(const char* key) const { return obj_.contains(key); }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json& at(const char* key) const {
    if (!obj_.contains(key)) config_error(source_, path(key), "required field is missing");
    return obj_.at(key);
  }

  double number(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) config_error(source_, path(key), "expected a number");
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const char* key) const { return unsigned_of(at(key), path(key)); }

  std::uint64_t unsigned_of(const json& v, const std::string& where) const {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      config_error(source_, where, "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const char* key) const {
    const json& v = at(key);
    if (!v.is_boolean()) config_error(source_, path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) config_error(source_, path(key), "expected a string");
    return v.get<std::string>();
  }

  Complex complex(const char* key) const {
    const json& v = at(key);
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (!v.is_object()) config_error(source_, path(key), "expected a number or {re, im}");
    FieldReader sub(v, path(key), source_);
    sub.reject_unknown({"re", "im"});
    return {sub.number("re"), sub.has("im") ? sub.number("im") : 0.0};
  }

  void reject_unknown(std::initializer_list<const char*> allowed) const {
    if (!obj_.is_object()) config_error(source_, prefix_.empty() ? "<root>" : prefix_, "expected an object");
    const std::set<std::string> names(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj_.items()) {
      if (!names.contains(key)) config_error(source_, path(key), "unknown field");
    }
  }

  std::string_view source() const { return source_; }

 private:
  const json& obj_;
  std::string prefix_;
  std::string_view source_;
};

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json config_to_json(const ExperimentConfig& cfg) {
  json spikes = json::array();
  for (const auto& s : cfg.spikes.spikes) {
    spikes.push_back({{"re", s.mu.real()}, {"im", s.mu.imag()}, {"multiplicity", s.multiplicity}});
  }
  json out{{"n_list", cfg.n_list},
           {"spikes", spikes},
           {"non_normality_tau", cfg.spikes.non_normality_tau},
           {"trials", cfg.trials},
           {"base_seed", cfg.base_seed},
           {"distribution", std::string(to_string(cfg.distribution))},
           {"epsilon_band", cfg.epsilon_band ? json(*cfg.epsilon_band) : json("auto")},
           {"spectral_report", cfg.spectral_report},
           {"zero_bulk", cfg.zero_bulk}};
  if (cfg.k_list.empty()) {
    out["k_exponent"] = cfg.k_exponent;
  } else {
    out["k_list"] = cfg.k_list;
  }
  return out;
}

bool write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  return static_cast<bool>(os);
}

std::filesystem::path resolve_out_dir(const CommandOptions& opts, const ExperimentConfig& cfg) {
  return opts.out_dir.value_or(cfg.output_dir);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& err) {
    throw Error(ErrorKind::kConfig, std::string(source) + ": " + err.what());
  }
  FieldReader r(root, "", source);
  r.reject_unknown({"n_list", "k_exponent", "k_list", "spikes", "non_normality_tau", "trials", "base_seed",
                    "distribution", "epsilon_band", "output_dir", "spectral_report", "zero_bulk", "threads",
                    "lemma"});

  ExperimentConfig cfg;
  const json& n_list = r.at("n_list");
  if (!n_list.is_array() || n_list.empty()) config_error(source, "n_list", "expected a non-empty array");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const std::string where = "n_list[" + std::to_string(i) + "]";
    const auto n = r.unsigned_of(n_list[i], where);
    if (n < 2) config_error(source, where, "dimension must be at least 2");
    if (!cfg.n_list.empty() && n <= cfg.n_list.back()) config_error(source, where, "n_list must be strictly ascending");
    cfg.n_list.push_back(static_cast<std::size_t>(n));
  }

  if (r.has("k_exponent") && r.has("k_list")) config_error(source, "k_list", "give either k_exponent or k_list, not both");
  if (r.has("k_exponent")) {
    cfg.k_exponent = r.number("k_exponent");
    if (!(cfg.k_exponent > 0.0 && cfg.k_exponent < 1.0)) {
      config_error(source, "k_exponent", "must lie in the open interval (0, 1)");
    }
  }
  if (r.has("k_list")) {
    const json& ks = r.at("k_list");
    if (!ks.is_array() || ks.size() != cfg.n_list.size()) {
      config_error(source, "k_list", "expected an array with one entry per n_list entry");
    }
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const std::string where = "k_list[" + std::to_string(i) + "]";
      const auto k = r.unsigned_of(ks[i], where);
      if (k < 1 || k > cfg.n_list[i]) config_error(source, where, "must satisfy 1 <= K <= n");
      cfg.k_list.push_back(static_cast<std::size_t>(k));
    }
  }

  const json& spikes = r.at("spikes");
  if (!spikes.is_array() || spikes.empty()) config_error(source, "spikes", "expected a non-empty array");
  for (std::size_t i = 0; i < spikes.size(); ++i) {
    FieldReader s(spikes[i], "spikes[" + std::to_string(i) + "]", source);
    s.reject_unknown({"re", "im", "multiplicity"});
    Spike spike;
    spike.mu = {s.number("re"), s.has("im") ? s.number("im") : 0.0};
    spike.multiplicity = s.has("multiplicity") ? static_cast<std::size_t>(s.unsigned_int("multiplicity")) : 1;
    cfg.spikes.spikes.push_back(spike);
  }
  if (r.has("non_normality_tau")) cfg.spikes.non_normality_tau = r.number("non_normality_tau");
  try {
    cfg.spikes.validate();
  } catch (const Error& err) {
    config_error(source, "spikes", err.what());
  }
  for (std::size_t n : cfg.n_list) {
    if (n < 2 * cfg.spikes.rank()) {
      config_error(source, "n_list", "n = " + std::to_string(n) + " is smaller than twice the total spike rank");
    }
  }

  if (r.has("trials")) {
    cfg.trials = static_cast<std::size_t>(r.unsigned_int("trials"));
    if (cfg.trials == 0) config_error(source, "trials", "must be positive");
  }
  if (r.has("base_seed")) cfg.base_seed = r.unsigned_int("base_seed");
  if (r.has("distribution")) {
    try {
      cfg.distribution = parse_distribution(r.string("distribution"));
    } catch (const Error& err) {
      config_error(source, "distribution", err.what());
    }
  }
  if (r.has("epsilon_band")) {
    const json& v = r.at("epsilon_band");
    if (v.is_string()) {
      if (v.get<std::string>() != "auto") config_error(source, "epsilon_band", "expected a positive number or \"auto\"");
    } else if (v.is_number() && v.get<double>() > 0.0) {
      cfg.epsilon_band = v.get<double>();
    } else {
      config_error(source, "epsilon_band", "expected a positive number or \"auto\"");
    }
  }
  if (r.has("output_dir")) cfg.output_dir = r.string("output_dir");
  if (r.has("spectral_report")) cfg.spectral_report = r.boolean("spectral_report");
  if (r.has("zero_bulk")) cfg.zero_bulk = r.boolean("zero_bulk");
  if (r.has("threads")) cfg.threads = static_cast<unsigned>(r.unsigned_int("threads"));

  if (r.has("lemma")) {
    FieldReader l(r.at("lemma"), "lemma", source);
    l.reject_unknown({"n", "z", "z_shift", "seeds", "block_rows"});
    if (l.has("n")) {
      cfg.lemma.n = static_cast<std::size_t>(l.unsigned_int("n"));
      if (cfg.lemma.n < 4) config_error(source, "lemma.n", "must be at least 4");
    }
    if (l.has("z")) {
      cfg.lemma.z = l.complex("z");
      if (!(std::abs(cfg.lemma.z) > 1.0)) config_error(source, "lemma.z", "must satisfy |z| > 1");
    }
    if (l.has("z_shift")) cfg.lemma.z_shift = l.complex("z_shift");
    if (!(std::abs(cfg.lemma.z + cfg.lemma.z_shift) > 1.0)) {
      config_error(source, "lemma.z_shift", "z + z_shift must lie outside the unit disk");
    }
    if (l.has("seeds")) {
      cfg.lemma.seeds = static_cast<std::size_t>(l.unsigned_int("seeds"));
      if (cfg.lemma.seeds == 0) config_error(source, "lemma.seeds", "must be positive");
    }
    if (l.has("block_rows")) {
      cfg.lemma.block_rows = static_cast<std::size_t>(l.unsigned_int("block_rows"));
      if (cfg.lemma.block_rows == 0) config_error(source, "lemma.block_rows", "must be positive");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kConfig, "cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), path.string());
}

StudyConfig to_study_config(const ExperimentConfig& cfg) {
  StudyConfig study;
  study.n_list = cfg.n_list;
  study.k_exponent = cfg.k_exponent;
  study.k_list = cfg.k_list;
  study.spikes = cfg.spikes;
  study.trials = cfg.trials;
  study.base_seed = cfg.base_seed;
  study.distribution = cfg.distribution;
  study.threads = cfg.threads;
  study.trial.epsilon_band = cfg.epsilon_band;
  study.trial.compute_spectrum = cfg.spectral_report;
  study.trial.zero_bulk = cfg.zero_bulk;
  return study;
}

LemmaSuiteConfig to_lemma_config(const ExperimentConfig& cfg) {
  LemmaSuiteConfig out;
  out.n = cfg.lemma.n == 0 ? cfg.n_list.back() : cfg.lemma.n;
  out.sparsity_k = default_k_schedule(out.n, cfg.k_exponent);
  if (cfg.lemma.n == 0 && !cfg.k_list.empty()) out.sparsity_k = cfg.k_list.back();
  out.distribution = cfg.distribution;
  out.z = cfg.lemma.z;
  out.z_shift = cfg.lemma.z_shift;
  out.seeds = cfg.lemma.seeds;
  out.base_seed = cfg.base_seed;
  out.zero_bulk = cfg.zero_bulk;
  out.block_rows = cfg.lemma.block_rows;
  out.threads = cfg.threads;
  return out;
}

void write_overlaps_csv(std::ostream& os, const ConvergenceTable& table) {
  os << kOverlapsHeader << '\n';
  for (const auto& row : table.rows) {
    os << row.n << ',' << row.sparsity_k << ',' << num(row.spike.mu.real()) << ',' << num(row.spike.mu.imag()) << ','
       << row.spike.multiplicity << ',' << row.trials << ',' << row.failures << ',' << num(row.mean_overlap) << ','
       << num(row.std_overlap) << ',' << num(row.limit) << ',' << num(row.mean_hausdorff) << ','
       << num(row.count_success_rate) << '\n';
  }
}

json trial_to_json(const TrialResult& trial) {
  json spikes = json::array();
  for (const auto& s : trial.spikes) {
    json rec{{"mu", complex_json(s.mu)}, {"multiplicity", s.multiplicity}, {"ok", s.ok}};
    if (!s.ok) rec["failure"] = s.failure;
    if (s.ok || s.lambda_located != Complex(0.0)) rec["lambda"] = complex_json(s.lambda_located);
    if (s.ok) {
      json cross = json::array();
      for (const auto& c : s.cross_overlaps) {
        cross.push_back({{"mu", complex_json(c.mu)},
                         {"overlap_sq", c.measured},
                         {"remark_prediction", finite_or_null(c.remark_prediction)}});
      }
      rec["overlap_sq"] = s.overlap_sq;
      rec["cross_overlaps"] = cross;
      rec["eigen_residual"] = s.eigen_residual;
      rec["kernel_epsilon"] = s.kernel_epsilon;
      rec["localization_c0"] = finite_or_null(s.localization_c0);
      rec["localization_bound"] = finite_or_null(s.localization_bound);
      rec["off_resonant_ratio"] = finite_or_null(s.off_resonant_ratio);
      rec["localized"] = s.localized;
      rec["c_norm"] = s.c_norm;
      rec["resolvent_norm"] = s.resolvent_norm;
      rec["bulk_leakage"] = s.bulk_leakage;
    }
    spikes.push_back(std::move(rec));
  }
  json out{{"seed", trial.seed},
           {"n", trial.n},
           {"k", trial.sparsity_k},
           {"resolvent_healthy", trial.resolvent_healthy},
           {"spikes", spikes}};
  if (trial.spectrum) {
    json outliers = json::array();
    for (Complex z : trial.spectrum->outliers) outliers.push_back(complex_json(z));
    out["spectrum"] = {{"epsilon_band", trial.spectrum->epsilon_band},
                       {"outliers", outliers},
                       {"m_n", trial.spectrum->m_n},
                       {"count_match", trial.spectrum->count_match},
                       {"hausdorff", finite_or_null(trial.spectrum->hausdorff)}};
  }
  return out;
}

json trials_to_json(const ConvergenceTable& table) {
  json out = json::array();
  for (const auto& per_n : table.trials) {
    for (const auto& t : per_n) out.push_back(trial_to_json(t));
  }
  return out;
}

json lemma_report_to_json(const LemmaSuiteReport& report) {
  const auto& c = report.config;
  json checks = json::array();
  for (const auto& check : report.checks) {
    json stats = json::object();
    for (const auto& [k, v] : check.stats) stats[k] = finite_or_null(v);
    checks.push_back({{"name", check.name},
                      {"kind", check.deterministic ? "deterministic" : "statistical"},
                      {"passed", check.passed},
                      {"stats", stats},
                      {"note", check.note}});
  }
  json seeds = json::array();
  for (const auto& s : report.seeds) {
    json rec{{"seed", s.seed}};
    if (!s.error.empty()) {
      rec["error"] = s.error;
    } else {
      rec["bilinear_same"] = {{"measured", complex_json(s.bilinear_same.measured)},
                              {"predicted", complex_json(s.bilinear_same.predicted)},
                              {"abs_error", s.bilinear_same.abs_error}};
      rec["bilinear_pair_abs_error"] = s.bilinear_pair.abs_error;
      rec["block_op_norm_error"] = s.block.op_norm_error;
      rec["gram_op_norm_error"] = s.gram.op_norm_error;
      rec["resolvent_norm_sq"] = s.norm.measured_sq;
      rec["continuity"] = {{"estimate", s.continuity.estimate}, {"bound", s.continuity.bound}};
      rec["solve_residual"] = s.solve_residual;
    }
    seeds.push_back(std::move(rec));
  }
  const auto& v = report.norm_verdict;
  return json{{"config",
               {{"n", c.n},
                {"k", c.sparsity_k},
                {"distribution", std::string(to_string(c.distribution))},
                {"z", complex_json(c.z)},
                {"z_shift", complex_json(c.z_shift)},
                {"seeds", c.seeds},
                {"base_seed", c.base_seed},
                {"zero_bulk", c.zero_bulk}}},
              {"deterministic_ok", report.deterministic_ok()},
              {"checks", checks},
              {"resolvent_norm",
               {{"mean_measured_sq", finite_or_null(v.mean_measured)},
                {"candidate_inverse", v.candidate_a},
                {"candidate_inverse_sqrt", v.candidate_b},
                {"empirical_winner", v.supported},
                {"sqrt_variant_rejected", v.sqrt_variant_rejected}}},
              {"per_seed", seeds}};
}

std::string spectrum_svg(std::span<const Complex> eigenvalues, std::span<const Complex> spikes, double epsilon_band) {
  double extent = 1.0 + epsilon_band;
  for (Complex z : eigenvalues) extent = std::max({extent, std::abs(z.real()), std::abs(z.imag())});
  for (Complex z : spikes) extent = std::max({extent, std::abs(z.real()), std::abs(z.imag())});
  extent *= 1.1;
  const double size = 600.0;
  const double scale = size / (2.0 * extent);
  const auto px = [&](double re) { return (re + extent) * scale; };
  const auto py = [&](double im) { return (extent - im) * scale; };

  std::ostringstream os;
  os << std::setprecision(6);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
     << size << ' ' << size << "\">\n"
     << "  <rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n"
     << "  <line x1=\"0\" y1=\"" << py(0) << "\" x2=\"" << size << "\" y2=\"" << py(0)
     << "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n"
     << "  <line x1=\"" << px(0) << "\" y1=\"0\" x2=\"" << px(0) << "\" y2=\"" << size
     << "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n"
     << "  <circle id=\"unit-circle\" cx=\"" << px(0) << "\" cy=\"" << py(0) << "\" r=\"" << scale
     << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n"
     << "  <circle id=\"band-circle\" cx=\"" << px(0) << "\" cy=\"" << py(0) << "\" r=\""
     << scale * (1.0 + epsilon_band) << "\" fill=\"none\" stroke=\"gray\" stroke-dasharray=\"4 3\" stroke-width=\"1\"/>\n"
     << "  <g id=\"eigenvalues\" fill=\"#1f77b4\">\n";
  for (Complex z : eigenvalues) {
    os << "    <circle cx=\"" << px(z.real()) << "\" cy=\"" << py(z.imag()) << "\" r=\"1.5\"/>\n";
  }
  os << "  </g>\n  <g id=\"spikes\" stroke=\"#d62728\" stroke-width=\"2\">\n";
  for (Complex z : spikes) {
    const double x = px(z.real());
    const double y = py(z.imag());
    os << "    <line x1=\"" << x - 6 << "\" y1=\"" << y - 6 << "\" x2=\"" << x + 6 << "\" y2=\"" << y + 6 << "\"/>\n"
       << "    <line x1=\"" << x - 6 << "\" y1=\"" << y + 6 << "\" x2=\"" << x + 6 << "\" y2=\"" << y - 6 << "\"/>\n";
  }
  os << "  </g>\n</svg>\n";
  return os.str();
}

int cmd_run(const CommandOptions& opts, std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(opts.config_path);
  } catch (const Error& err) {
    log << "error: " << err.what() << '\n';
    return kExitConfig;
  }
  if (opts.threads) cfg.threads = *opts.threads;
  const auto out_dir = resolve_out_dir(opts, cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    log << "error: cannot create output directory '" << out_dir.string() << "': " << ec.message() << '\n';
    return kExitConfig;
  }

  ConvergenceTable table;
  std::string runtime_error;
  try {
    table = run_convergence_study(to_study_config(cfg));
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::kConfig) {
      log << "error: " << err.what() << '\n';
      return kExitConfig;
    }
    runtime_error = err.what();
  }

  const double failure_rate = table.failure_rate();
  const bool partial = !runtime_error.empty() || failure_rate > 0.5;
  const int exit_code = partial ? kExitRuntime : kExitOk;

  std::ostringstream csv;
  write_overlaps_csv(csv, table);
  json rows = json::array();
  for (const auto& row : table.rows) {
    rows.push_back({{"n", row.n},
                    {"k", row.sparsity_k},
                    {"mu", complex_json(row.spike.mu)},
                    {"multiplicity", row.spike.multiplicity},
                    {"trials", row.trials},
                    {"failures", row.failures},
                    {"mean_overlap", finite_or_null(row.mean_overlap)},
                    {"std_overlap", finite_or_null(row.std_overlap)},
                    {"limit", row.limit},
                    {"mean_cross_overlap", finite_or_null(row.mean_cross_overlap)},
                    {"mean_hausdorff", finite_or_null(row.mean_hausdorff)},
                    {"median_hausdorff", finite_or_null(row.median_hausdorff)},
                    {"count_success_rate", finite_or_null(row.count_success_rate)}});
  }
  json summary{{"partial", partial},
               {"failure_rate", failure_rate},
               {"exit_code", exit_code},
               {"rows", rows},
               {"config", config_to_json(cfg)},
               {"metadata", {{"generated_at", iso_timestamp()}, {"version", kVersion}}}};
  if (!runtime_error.empty()) summary["error"] = runtime_error;
  json trials = {{"partial", partial}, {"trials", trials_to_json(table)}};

  const bool ok = write_text(out_dir / "overlaps.csv", csv.str()) &&
                  write_text(out_dir / "trials.json", trials.dump(2) + "\n") &&
                  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  if (!ok) {
    log << "error: failed to write results to '" << out_dir.string() << "'\n";
    return kExitRuntime;
  }
  for (const auto& row : table.rows) {
    log << "n=" << row.n << " K=" << row.sparsity_k << " mu=" << num(row.spike.mu.real()) << (row.spike.mu.imag() < 0 ? "" : "+")
        << num(row.spike.mu.imag()) << "i mean_overlap=" << num(row.mean_overlap) << " limit=" << num(row.limit)
        << " failures=" << row.failures << '\n';
  }
  if (!runtime_error.empty()) log << "error: " << runtime_error << '\n';
  if (failure_rate > 0.5) log << "error: failure rate " << num(failure_rate) << " exceeds 50%\n";
  return exit_code;
}

int cmd_verify_lemmas(const CommandOptions& opts, std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(opts.config_path);
  } catch (const Error& err) {
    log << "error: " << err.what() << '\n';
    return kExitConfig;
  }
  if (opts.threads) cfg.threads = *opts.threads;
  const auto out_dir = resolve_out_dir(opts, cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    log << "error: cannot create output directory '" << out_dir.string() << "'\n";
    return kExitConfig;
  }
  LemmaSuiteReport report;
  try {
    report = run_lemma_suite(to_lemma_config(cfg));
  } catch (const Error& err) {
    log << "error: " << err.what() << '\n';
    return err.kind() == ErrorKind::kConfig ? kExitConfig : kExitRuntime;
  }
  if (!write_text(out_dir / "lemma_report.json", lemma_report_to_json(report).dump(2) + "\n")) {
    log << "error: failed to write lemma_report.json\n";
    return kExitRuntime;
  }
  for (const auto& c : report.checks) {
    log << (c.passed ? "PASS " : "FAIL ") << (c.deterministic ? "[deterministic] " : "[statistical]   ") << c.name
        << " - " << c.note << '\n';
  }
  return report.deterministic_ok() ? kExitOk : kExitRuntime;
}

int cmd_spectrum_plot(const CommandOptions& opts, std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(opts.config_path);
  } catch (const Error& err) {
    log << "error: " << err.what() << '\n';
    return kExitConfig;
  }
  for (std::size_t n : cfg.n_list) {
    if (n > kDenseGuard) {
      log << "error: n = " << n << " exceeds the dense eigensolver guard " << kDenseGuard << '\n';
      return kExitConfig;
    }
  }
  const auto out_dir = resolve_out_dir(opts, cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    log << "error: cannot create output directory '" << out_dir.string() << "'\n";
    return kExitConfig;
  }
  const StudyConfig study = to_study_config(cfg);
  try {
    for (std::size_t idx = 0; idx < cfg.n_list.size(); ++idx) {
      const std::size_t n = cfg.n_list[idx];
      const SparseModelConfig model{n, resolve_sparsity(study, idx), cfg.distribution,
                                    trial_seed(cfg.base_seed, opts.trial_index)};
      const Perturbation e = build_perturbation(cfg.spikes, n, study_perturbation_seed(cfg.base_seed, n));
      const SparseMatrix x = cfg.zero_bulk ? SparseMatrix::zero(n) : sample_sparse_matrix(model);
      const auto eigenvalues = dense_spectrum(assemble_y(x, e));
      const double band = cfg.epsilon_band.value_or(auto_epsilon_band(cfg.spikes));
      std::vector<Complex> spikes;
      for (const auto& s : cfg.spikes.spikes) spikes.push_back(s.mu);
      const auto path = out_dir / ("spectrum_" + std::to_string(n) + "_" + std::to_string(opts.trial_index) + ".svg");
      if (!write_text(path, spectrum_svg(eigenvalues, spikes, band))) {
        log << "error: failed to write " << path.string() << '\n';
        return kExitRuntime;
      }
      log << "wrote " << path.string() << '\n';
    }
  } catch (const Error& err) {
    log << "error: " << err.what() << '\n';
    return err.kind() == ErrorKind::kConfig ? kExitConfig : kExitRuntime;
  }
  return kExitOk;
}

}  // namespace spiked
