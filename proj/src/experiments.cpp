#include "spiked/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "spiked/rng.hpp"

namespace spiked {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double band_for(const Perturbation& e, const TrialOptions& options) {
  if (options.epsilon_band) return *options.epsilon_band;
  double min_modulus = std::numeric_limits<double>::infinity();
  for (const auto& b : e.blocks()) min_modulus = std::min(min_modulus, std::abs(b.mu));
  return 0.1 * (min_modulus - 1.0);
}

SpikeOutcome failed_outcome(const SpikeBlock& block, std::string why) {
  SpikeOutcome out;
  out.mu = block.mu;
  out.multiplicity = block.columns.size();
  out.ok = false;
  out.failure = std::move(why);
  out.overlap_sq = kNaN;
  return out;
}

// Reduction pipeline at one located outlier: factorize, compress, extract the
// kernel, localize it, reconstruct the eigenvector and measure overlaps.
SpikeOutcome process_root(const SparseMatrix& x, const Perturbation& e, const SpikeBlock& block,
                          const std::vector<SpikeEigenspace>& spaces, std::size_t own, Complex lambda,
                          std::size_t kernel_index, const TrialOptions& options, bool& healthy) {
  SpikeOutcome out = failed_outcome(block, "");
  out.lambda_located = lambda;
  try {
    const ResolventHandle h(x, lambda, options.newton.factorize);
    out.resolvent_norm = h.norm_estimate();
    if (!(out.resolvent_norm <= options.resolvent_health_bound)) {
      healthy = false;
      out.failure = "unhealthy resolvent: ||R(lambda)|| ~ " + std::to_string(out.resolvent_norm);
      return out;
    }
    const CompressedResolvent m = compressed_resolvent(h, e);
    const auto kernel = kernel_basis(m);
    if (kernel.size() <= kernel_index) {
      out.failure = kernel.empty() ? "I + M(lambda) has no kernel vector at tolerance"
                                   : "I + M(lambda) has fewer kernel vectors than repeated roots";
      return out;
    }
    const CVector& a = kernel[kernel_index];
    const KernelDecomposition dec = kernel_localization(a, e, block.mu, m);
    out.kernel_epsilon = dec.epsilon;
    out.localization_c0 = dec.c0;
    out.localization_bound = dec.bound;
    out.off_resonant_ratio = dec.off_resonant_ratio();
    out.localized = dec.localized;

    const CVector u = reconstruct_eigenvector(m, a);
    out.eigen_residual = eigen_residual(x, e, lambda, u);
    if (!(out.eigen_residual <= options.residual_tolerance)) {
      out.failure = "eigen residual " + std::to_string(out.eigen_residual) + " above tolerance";
      return out;
    }

    const SpikeEigenspace& f_own = spaces[own];
    out.overlap_sq = overlap_squared(u, f_own);

    // c_n = Q^* U a_mu with a scaled to ||U a|| = 1.
    const CMatrix& big_u = e.u_factor();
    const double ua_norm = (big_u * a).norm();
    CVector a_mu_only = CVector::Zero(a.size());
    for (Eigen::Index t : dec.mu_columns) a_mu_only(t) = a(t) / ua_norm;
    const CVector c = f_own.q_basis.adjoint() * (big_u * a_mu_only);
    out.c_norm = c.norm();
    const CVector c_unit = out.c_norm > 0.0 ? CVector(c / out.c_norm) : c;
    const double mod = std::abs(block.mu);
    const double remark_scale = (mod * mod - 1.0) / mod;

    CVector projected = f_own.q_basis * (f_own.q_basis.adjoint() * u);
    for (std::size_t j = 0; j < spaces.size(); ++j) {
      if (j == own) continue;
      CrossOverlap cross;
      cross.mu = spaces[j].mu;
      cross.measured = overlap_squared(u, spaces[j]);
      cross.remark_prediction =
          remark_scale * (spaces[j].q_basis.adjoint() * (f_own.q_basis * c_unit)).squaredNorm();
      out.cross_overlaps.push_back(cross);
      projected += spaces[j].q_basis * (spaces[j].q_basis.adjoint() * u);
    }
    out.bulk_leakage = (u - projected).squaredNorm();
    out.ok = true;
    out.failure.clear();
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::kResolventSingular) healthy = false;
    out.failure = err.what();
  }
  return out;
}

CMatrix orthonormal_rows(std::size_t rows, std::size_t n, SequentialRng& rng) {
  CMatrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows));
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.complex_normal();
  }
  return orthonormalize(g).adjoint();
}

CVector random_unit(std::size_t n, SequentialRng& rng) {
  CVector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.complex_normal();
  return v.normalized();
}

void require_unit(const CVector& v, const char* name) {
  if (std::abs(v.norm() - 1.0) > 1e-10) {
    throw Error(ErrorKind::kNormalization, std::string(name) + " must be a unit vector");
  }
}

void require_bounded(const CMatrix& c, const char* name) {
  if (c.size() > 0 && singular_values(c)(0) > 100.0) {
    throw Error(ErrorKind::kConfig, std::string(name) + " exceeds the operator-norm guard 100");
  }
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

LemmaCheck new_check(std::string name, bool deterministic) {
  LemmaCheck c;
  c.name = std::move(name);
  c.deterministic = deterministic;
  return c;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

std::size_t TrialResult::failures() const {
  return static_cast<std::size_t>(std::count_if(spikes.begin(), spikes.end(), [](const SpikeOutcome& s) { return !s.ok; }));
}

TrialResult run_trial_on(const SparseMatrix& x, const Perturbation& e, const TrialOptions& options) {
  if (x.n() != e.n()) throw Error(ErrorKind::kDimension, "X and E dimensions differ");
  TrialResult result;
  result.n = x.n();
  const double band = band_for(e, options);
  if (!(band > 0.0)) throw Error(ErrorKind::kConfig, "epsilon_band must be positive");

  if (options.compute_spectrum) {
    try {
      result.spectrum = spectral_report(x, e, band);
    } catch (const Error&) {
      result.spectrum.reset();
    }
  }
  if (!options.compute_overlaps) return result;

  NewtonOptions newton = options.newton;
  newton.epsilon_band = band;

  std::vector<SpikeEigenspace> spaces;
  for (const auto& b : e.blocks()) spaces.push_back(spike_eigenspace(e, b.mu));

  for (std::size_t own = 0; own < e.blocks().size(); ++own) {
    const SpikeBlock& block = e.blocks()[own];
    const SpikeRoots roots = locate_spike_outliers(x, e, block.mu, newton);
    for (std::size_t i = 0; i < roots.roots.size(); ++i) {
      const Complex lambda = roots.roots[i].lambda;
      // Repeated roots take successive kernel directions.
      const auto copies = static_cast<std::size_t>(std::count_if(
          roots.roots.begin(), roots.roots.begin() + static_cast<std::ptrdiff_t>(i),
          [&](const OutlierRoot& r) { return std::abs(r.lambda - lambda) < 1e-4; }));
      result.spikes.push_back(
          process_root(x, e, block, spaces, own, lambda, copies, options, result.resolvent_healthy));
    }
    const std::size_t missing = block.columns.size() - roots.roots.size();
    for (std::size_t j = 0; j < missing; ++j) {
      std::string why = j < roots.failures.size() ? roots.failures[j] : "outlier not located";
      result.spikes.push_back(failed_outcome(block, std::move(why)));
    }
  }
  return result;
}

TrialResult run_trial(const SparseModelConfig& model_cfg, const SpikeSpec& spike_spec, std::uint64_t seed,
                      const TrialOptions& options) {
  SparseModelConfig cfg = model_cfg;
  cfg.seed = seed;
  cfg.validate();
  spike_spec.validate(options.limits);
  const Perturbation e =
      build_perturbation(spike_spec, cfg.n, options.perturbation_seed.value_or(derive_seed(seed, 0xE5ull)));
  const SparseMatrix x = options.zero_bulk ? SparseMatrix::zero(cfg.n) : sample_sparse_matrix(cfg);
  TrialResult result = run_trial_on(x, e, options);
  result.seed = seed;
  result.sparsity_k = cfg.sparsity_k;
  return result;
}

double ConvergenceTable::failure_rate() const {
  std::size_t slots = 0;
  std::size_t failed = 0;
  for (const auto& per_n : trials) {
    for (const auto& t : per_n) {
      slots += t.spikes.size();
      failed += t.failures();
    }
  }
  return slots == 0 ? 0.0 : static_cast<double>(failed) / static_cast<double>(slots);
}

double overlap_limit(Complex mu) { return 1.0 - 1.0 / std::norm(mu); }

std::size_t resolve_sparsity(const StudyConfig& cfg, std::size_t index) {
  if (!cfg.k_list.empty()) {
    if (cfg.k_list.size() != cfg.n_list.size()) {
      throw Error(ErrorKind::kConfig, "k_list must have one entry per n_list entry");
    }
    return cfg.k_list[index];
  }
  return default_k_schedule(cfg.n_list[index], cfg.k_exponent);
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial_index) {
  return derive_seed(base_seed, trial_index);
}

std::uint64_t study_perturbation_seed(std::uint64_t base_seed, std::size_t n) {
  return derive_seed(base_seed ^ 0xA076'1D64'78BD'642Full, n);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (first_error) std::rethrow_exception(first_error);
}

ConvergenceTable run_convergence_study(const StudyConfig& cfg) {
  if (cfg.n_list.empty()) throw Error(ErrorKind::kConfig, "n_list is empty");
  if (!std::is_sorted(cfg.n_list.begin(), cfg.n_list.end())) {
    throw Error(ErrorKind::kConfig, "n_list must be ascending");
  }
  if (cfg.trials == 0) throw Error(ErrorKind::kConfig, "trials must be positive");
  cfg.spikes.validate(cfg.trial.limits);

  ConvergenceTable table;
  for (std::size_t idx = 0; idx < cfg.n_list.size(); ++idx) {
    const std::size_t n = cfg.n_list[idx];
    SparseModelConfig model{n, resolve_sparsity(cfg, idx), cfg.distribution, 0};
    model.validate();
    const Perturbation e = build_perturbation(cfg.spikes, n, study_perturbation_seed(cfg.base_seed, n));

    std::vector<TrialResult> results(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
      SparseModelConfig trial_model = model;
      trial_model.seed = trial_seed(cfg.base_seed, t);
      const SparseMatrix x =
          cfg.trial.zero_bulk ? SparseMatrix::zero(n) : sample_sparse_matrix(trial_model);
      TrialResult r = run_trial_on(x, e, cfg.trial);
      r.seed = trial_model.seed;
      r.sparsity_k = model.sparsity_k;
      results[t] = std::move(r);
    });

    std::vector<double> hausdorff_finite;
    std::vector<double> hausdorff_all;
    std::size_t count_ok = 0;
    std::size_t spectra = 0;
    for (const auto& r : results) {
      if (!r.spectrum) continue;
      ++spectra;
      hausdorff_all.push_back(r.spectrum->hausdorff);
      if (std::isfinite(r.spectrum->hausdorff)) hausdorff_finite.push_back(r.spectrum->hausdorff);
      if (r.spectrum->count_match) ++count_ok;
    }

    for (const auto& spike : cfg.spikes.spikes) {
      ConvergenceRow row;
      row.n = n;
      row.sparsity_k = model.sparsity_k;
      row.spike = spike;
      row.trials = cfg.trials;
      row.limit = overlap_limit(spike.mu);
      std::vector<double> overlaps;
      std::vector<double> crosses;
      for (const auto& r : results) {
        for (const auto& s : r.spikes) {
          if (s.mu != spike.mu) continue;
          if (!s.ok) {
            ++row.failures;
            continue;
          }
          overlaps.push_back(s.overlap_sq);
          for (const auto& c : s.cross_overlaps) crosses.push_back(c.measured);
        }
      }
      if (!cfg.trial.compute_overlaps) row.failures = 0;
      row.mean_overlap = mean_of(overlaps);
      row.std_overlap = overlaps.empty() ? kNaN : sample_std(overlaps);
      row.mean_cross_overlap = mean_of(crosses);
      row.mean_hausdorff = mean_of(hausdorff_finite);
      row.median_hausdorff = median_of(hausdorff_all);
      row.count_success_rate = spectra == 0 ? kNaN : static_cast<double>(count_ok) / static_cast<double>(spectra);
      table.rows.push_back(row);
    }
    table.trials.push_back(std::move(results));
  }
  return table;
}

// ---- resolvent limit checks -------------------------------------------------

BilinearFormRecord verify_bilinear_form(const ResolventHandle& h, const CVector& u, const CVector& v) {
  require_unit(u, "u");
  require_unit(v, "v");
  BilinearFormRecord out;
  out.measured = inner(CVector(h.solve(u)), v);
  out.predicted = -inner(u, v) / h.shift();
  out.abs_error = std::abs(out.measured - out.predicted);
  return out;
}

BilinearFormRecord verify_bilinear_form(const SparseMatrix& x, Complex z, const CVector& u, const CVector& v) {
  return verify_bilinear_form(ResolventHandle(x, z), u, v);
}

BlockResolventRecord verify_block_resolvent(const ResolventHandle& h, const CMatrix& c1, const CMatrix& c2) {
  require_bounded(c1, "c1");
  require_bounded(c2, "c2");
  if (c1.cols() != static_cast<Eigen::Index>(h.n()) || c2.cols() != static_cast<Eigen::Index>(h.n())) {
    throw Error(ErrorKind::kDimension, "block factors must have n columns");
  }
  const CMatrix deviation = c1 * h.solve(c2.adjoint()) + (c1 * c2.adjoint()) / h.shift();
  BlockResolventRecord out;
  out.op_norm_error = deviation.size() == 0 ? 0.0 : singular_values(deviation)(0);
  out.max_entry_error = deviation.size() == 0 ? 0.0 : deviation.cwiseAbs().maxCoeff();
  out.entrywise_bound = static_cast<double>(c1.rows() * c2.rows()) * out.max_entry_error;
  out.inequality_holds = out.op_norm_error <= out.entrywise_bound * (1.0 + 1e-12) + 1e-300;
  return out;
}

BlockResolventRecord verify_block_resolvent(const SparseMatrix& x, Complex z, const CMatrix& c1, const CMatrix& c2) {
  return verify_block_resolvent(ResolventHandle(x, z), c1, c2);
}

ResolventNormRecord verify_resolvent_norm(const ResolventHandle& h, const CVector& w) {
  require_unit(w, "w");
  const double z2 = std::norm(h.shift());
  if (!(z2 > 1.0)) throw Error(ErrorKind::kConfig, "verify_resolvent_norm needs |z| > 1");
  ResolventNormRecord out;
  out.measured_sq = h.solve(w).squaredNorm();
  out.candidate_a = 1.0 / (z2 - 1.0);
  out.candidate_b = 1.0 / std::sqrt(z2 - 1.0);
  return out;
}

ResolventNormRecord verify_resolvent_norm(const SparseMatrix& x, Complex z, const CVector& w) {
  return verify_resolvent_norm(ResolventHandle(x, z), w);
}

GramResolventRecord verify_gram_resolvent(const ResolventHandle& h, const CMatrix& c1, const CMatrix& c2) {
  require_bounded(c1, "c1");
  require_bounded(c2, "c2");
  const double z2 = std::norm(h.shift());
  if (!(z2 > 1.0)) throw Error(ErrorKind::kConfig, "verify_gram_resolvent needs |z| > 1");
  const CMatrix r1 = h.solve(c1.adjoint());
  const CMatrix r2 = h.solve(c2.adjoint());
  const CMatrix deviation = r1.adjoint() * r2 - (c1 * c2.adjoint()) / (z2 - 1.0);
  return {deviation.size() == 0 ? 0.0 : singular_values(deviation)(0)};
}

GramResolventRecord verify_gram_resolvent(const SparseMatrix& x, Complex z, const CMatrix& c1, const CMatrix& c2) {
  return verify_gram_resolvent(ResolventHandle(x, z), c1, c2);
}

ContinuityRecord verify_resolvent_continuity(const ResolventHandle& at_z, const ResolventHandle& at_zn) {
  if (at_z.n() != at_zn.n()) throw Error(ErrorKind::kDimension, "handles have different dimensions");
  ContinuityRecord out;
  out.estimate = estimate_operator_norm(
      [&](const CVector& v) { return CVector(at_zn.solve(v) - at_z.solve(v)); },
      [&](const CVector& v) { return CVector(at_zn.solve_adjoint(v) - at_z.solve_adjoint(v)); }, at_z.n(),
      at_z.n() == 0 ? 1 : 5);
  const auto norm_of = [](const ResolventHandle& h) {
    return estimate_operator_norm_subspace([&](const CMatrix& b) { return h.solve(b); },
                                           [&](const CMatrix& b) { return h.solve_adjoint(b); }, h.n(),
                                           kContinuityNormBlock, kContinuityNormIterations);
  };
  out.norm_at_z = norm_of(at_z);
  out.norm_at_zn = norm_of(at_zn);
  out.bound = std::abs(at_z.shift() - at_zn.shift()) * out.norm_at_z * out.norm_at_zn;
  out.within_bound = out.estimate <= out.bound * (1.0 + 1e-6);
  return out;
}

ContinuityRecord verify_resolvent_continuity(const SparseMatrix& x, Complex z, Complex z_n) {
  if (!(std::abs(z) > 1.0) || !(std::abs(z_n) > 1.0)) {
    throw Error(ErrorKind::kConfig, "continuity check needs both shifts outside the unit disk");
  }
  return verify_resolvent_continuity(ResolventHandle(x, z), ResolventHandle(x, z_n));
}

ResolventNormVerdict summarize_resolvent_norm(const std::vector<ResolventNormRecord>& records, double tolerance) {
  ResolventNormVerdict out;
  if (records.empty()) return out;
  std::vector<double> measured;
  for (const auto& r : records) measured.push_back(r.measured_sq);
  out.mean_measured = mean_of(measured);
  out.candidate_a = records.front().candidate_a;
  out.candidate_b = records.front().candidate_b;
  const double da = std::abs(out.mean_measured - out.candidate_a);
  const double db = std::abs(out.mean_measured - out.candidate_b);
  out.supported = da <= db ? "1/(|z|^2-1)" : "1/sqrt(|z|^2-1)";
  out.sqrt_variant_rejected = da <= db && db > tolerance;
  return out;
}

bool LemmaSuiteReport::deterministic_ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return !c.deterministic || c.passed; });
}

LemmaSuiteReport run_lemma_suite(const LemmaSuiteConfig& cfg) {
  if (cfg.seeds == 0) throw Error(ErrorKind::kConfig, "lemma suite needs at least one seed");
  if (!(std::abs(cfg.z) > 1.0) || !(std::abs(cfg.z + cfg.z_shift) > 1.0)) {
    throw Error(ErrorKind::kConfig, "lemma suite shifts must lie outside the unit disk");
  }
  SparseModelConfig model{cfg.n, cfg.sparsity_k == 0 ? default_k_schedule(cfg.n, 0.7) : cfg.sparsity_k,
                          cfg.distribution, 0};
  model.validate();
  if (cfg.block_rows == 0 || 2 * cfg.block_rows > cfg.n) {
    throw Error(ErrorKind::kConfig, "block_rows must be positive and at most n/2");
  }

  LemmaSuiteReport report;
  report.config = cfg;
  report.seeds.resize(cfg.seeds);
  parallel_for(cfg.seeds, cfg.threads, [&](std::size_t i) {
    LemmaSeedRecord& rec = report.seeds[i];
    rec.seed = trial_seed(cfg.base_seed, i);
    SparseModelConfig m = model;
    m.seed = rec.seed;
    try {
      const SparseMatrix x = cfg.zero_bulk ? SparseMatrix::zero(cfg.n) : sample_sparse_matrix(m);
      SequentialRng rng(rec.seed, RngStream::kProbe);
      const CVector u = random_unit(cfg.n, rng);
      const CVector v = random_unit(cfg.n, rng);
      const CMatrix c1 = orthonormal_rows(cfg.block_rows, cfg.n, rng);

      const ResolventHandle at_z(x, cfg.z);
      const ResolventHandle at_zn(x, cfg.z + cfg.z_shift);
      rec.bilinear_same = verify_bilinear_form(at_z, u, u);
      rec.bilinear_pair = verify_bilinear_form(at_z, u, v);
      rec.block = verify_block_resolvent(at_z, c1, c1);
      rec.norm = verify_resolvent_norm(at_z, u);
      rec.gram = verify_gram_resolvent(at_z, c1, c1);
      rec.continuity = verify_resolvent_continuity(at_z, at_zn);
      rec.solve_residual = (at_z.apply_shifted(at_z.solve(v)) - v).norm();
    } catch (const Error& err) {
      rec.error = err.what();
    }
  });

  std::vector<const LemmaSeedRecord*> good;
  for (const auto& r : report.seeds) {
    if (r.error.empty()) good.push_back(&r);
  }
  const double good_count = static_cast<double>(good.size());
  const auto fraction = [&](auto pred) {
    if (good.empty()) return 0.0;
    return static_cast<double>(std::count_if(good.begin(), good.end(), pred)) / good_count;
  };
  const auto collect = [&](auto get) {
    std::vector<double> v;
    for (const auto* r : good) v.push_back(get(*r));
    return v;
  };
  const bool all_seeds_ok = good.size() == report.seeds.size();

  {
    LemmaCheck c = new_check("resolvent_solve_residual", true);
    const auto res = collect([](const LemmaSeedRecord& r) { return r.solve_residual; });
    const double worst = res.empty() ? kNaN : *std::max_element(res.begin(), res.end());
    c.passed = all_seeds_ok && worst <= 1e-8;
    c.stats = {{"max_residual", worst}, {"failed_seeds", static_cast<double>(report.seeds.size() - good.size())}};
    c.note = "||(X - zI) R(z) b - b|| <= 1e-8 ||b|| for unit probe b";
    report.checks.push_back(c);
  }
  {
    LemmaCheck c = new_check("block_entrywise_norm_bound", true);
    c.passed = all_seeds_ok && fraction([](const LemmaSeedRecord* r) { return r->block.inequality_holds; }) == 1.0;
    c.stats = {{"max_ratio", [&] {
                  double worst = 0.0;
                  for (const auto* r : good) {
                    if (r->block.entrywise_bound > 0.0) worst = std::max(worst, r->block.op_norm_error / r->block.entrywise_bound);
                  }
                  return worst;
                }()}};
    c.note = "||J|| <= k1 k2 max|J_ij| for the block deviation J";
    report.checks.push_back(c);
  }
  {
    LemmaCheck c = new_check("resolvent_identity_bound", true);
    c.passed = all_seeds_ok && fraction([](const LemmaSeedRecord* r) { return r->continuity.within_bound; }) == 1.0;
    const auto est = collect([](const LemmaSeedRecord& r) { return r.continuity.estimate; });
    c.stats = {{"mean_estimate", mean_of(est)},
               {"max_estimate", est.empty() ? kNaN : *std::max_element(est.begin(), est.end())},
               {"mean_bound", mean_of(collect([](const LemmaSeedRecord& r) { return r.continuity.bound; }))}};
    c.note = "||R(z_n) - R(z)|| <= |z - z_n| ||R(z_n)|| ||R(z)||";
    report.checks.push_back(c);
  }
  if (cfg.zero_bulk) {
    LemmaCheck c = new_check("zero_bulk_exact_values", true);
    const double z2 = std::norm(cfg.z);
    const double gram_target = std::abs(1.0 / z2 - 1.0 / (z2 - 1.0));
    double worst = 0.0;
    for (const auto* r : good) {
      worst = std::max({worst, r->bilinear_same.abs_error, r->bilinear_pair.abs_error, r->block.op_norm_error,
                        std::abs(r->norm.measured_sq - 1.0 / z2), std::abs(r->gram.op_norm_error - gram_target)});
    }
    c.passed = all_seeds_ok && worst <= 1e-12;
    c.stats = {{"max_deviation", worst}};
    c.note = "X = 0 gives R(z) = -I/z exactly";
    report.checks.push_back(c);
  }

  {
    LemmaCheck c = new_check("isotropic_bilinear_form", false);
    const double tol = cfg.bilinear_tolerance;
    const double pass = fraction([&](const LemmaSeedRecord* r) { return r->bilinear_same.abs_error <= tol; });
    c.passed = pass >= cfg.pass_fraction;
    c.stats = {{"pass_fraction", pass},
               {"tolerance", tol},
               {"mean_abs_error_same", mean_of(collect([](const LemmaSeedRecord& r) { return r.bilinear_same.abs_error; }))},
               {"mean_abs_error_pair", mean_of(collect([](const LemmaSeedRecord& r) { return r.bilinear_pair.abs_error; }))}};
    c.note = "|<R(z)u, v> + <u, v>/z| small";
    report.checks.push_back(c);
  }
  {
    LemmaCheck c = new_check("block_resolvent_limit", false);
    const double pass = fraction([&](const LemmaSeedRecord* r) { return r->block.op_norm_error <= cfg.block_tolerance; });
    c.passed = pass >= cfg.pass_fraction;
    c.stats = {{"pass_fraction", pass},
               {"tolerance", cfg.block_tolerance},
               {"mean_error", mean_of(collect([](const LemmaSeedRecord& r) { return r.block.op_norm_error; }))}};
    c.note = "||C1 R(z) C2^* + (1/z) C1 C2^*|| small";
    report.checks.push_back(c);
  }
  {
    LemmaCheck c = new_check("gram_resolvent_limit", false);
    const double pass = fraction([&](const LemmaSeedRecord* r) { return r->gram.op_norm_error <= cfg.gram_tolerance; });
    c.passed = pass >= cfg.pass_fraction;
    c.stats = {{"pass_fraction", pass},
               {"tolerance", cfg.gram_tolerance},
               {"mean_error", mean_of(collect([](const LemmaSeedRecord& r) { return r.gram.op_norm_error; }))}};
    c.note = "||C1 R^* R C2^* - C1 C2^* / (|z|^2 - 1)|| small";
    report.checks.push_back(c);
  }
  {
    std::vector<ResolventNormRecord> norms;
    for (const auto* r : good) norms.push_back(r->norm);
    report.norm_verdict = summarize_resolvent_norm(norms, cfg.norm_tolerance);
    LemmaCheck c = new_check("resolvent_norm_limit", false);
    c.passed = !norms.empty() &&
               std::abs(report.norm_verdict.mean_measured - report.norm_verdict.candidate_a) <= cfg.norm_tolerance;
    c.stats = {{"mean_measured_sq", report.norm_verdict.mean_measured},
               {"candidate_inverse", report.norm_verdict.candidate_a},
               {"candidate_inverse_sqrt", report.norm_verdict.candidate_b},
               {"sqrt_variant_rejected", report.norm_verdict.sqrt_variant_rejected ? 1.0 : 0.0}};
    c.note = "data supports " + report.norm_verdict.supported +
             (report.norm_verdict.sqrt_variant_rejected ? "; 1/sqrt(|z|^2-1) rejected" : "");
    report.checks.push_back(c);
  }
  return report;
}

}  // namespace spiked
