#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spiked/matrix_model.hpp"
#include "spiked/outlier_locator.hpp"
#include "spiked/perturbation.hpp"
#include "spiked/resolvent.hpp"
#include "spiked/types.hpp"

namespace spiked {

struct TrialOptions {
  bool compute_overlaps = true;
  bool compute_spectrum = true;
  /// Test hook: replace X by the zero matrix (Y = E).
  bool zero_bulk = false;
  /// Empty means 0.1 * (min|mu| - 1).
  std::optional<double> epsilon_band;
  /// Seed for E; when empty it is derived from the trial seed.
  std::optional<std::uint64_t> perturbation_seed;
  double residual_tolerance = 1e-6;
  /// Largest ||R(lambda)|| estimate counted as a healthy resolvent.
  double resolvent_health_bound = 1e3;
  NewtonOptions newton;
  SpikeLimits limits;
};

struct CrossOverlap {
  Complex mu;
  double measured = 0.0;
  /// ((|mu|^2 - 1) / |mu|) * ||Q_other^* Q_own c||^2 with c the measured unit c_n.
  double remark_prediction = 0.0;
};

/// One located outlier (or one failed slot) of a spike.
struct SpikeOutcome {
  Complex mu;
  std::size_t multiplicity = 1;
  bool ok = false;
  std::string failure;

  Complex lambda_located;
  double overlap_sq = 0.0;
  std::vector<CrossOverlap> cross_overlaps;
  double eigen_residual = 0.0;
  /// ||M(lambda) + Lambda/mu||
  double kernel_epsilon = 0.0;
  double localization_c0 = 0.0;
  double localization_bound = 0.0;
  double off_resonant_ratio = 0.0;
  bool localized = false;
  /// ||c_n|| = ||Q^* U a_mu|| with a scaled so that ||U a|| = 1.
  double c_norm = 0.0;
  double resolvent_norm = 0.0;
  /// ||(I - sum_l Q_l Q_l^*) u||^2
  double bulk_leakage = 0.0;
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t sparsity_k = 0;
  /// Exactly `multiplicity` entries per spike, in spike order.
  std::vector<SpikeOutcome> spikes;
  bool resolvent_healthy = true;
  std::optional<SpectralReport> spectrum;

  std::size_t failures() const;
};

/// Sample X (seed = trial_seed), build E, locate each spike's outliers and run
/// the reduction pipeline on each. Stage failures are recorded per spike; only
/// configuration errors escape as exceptions.
TrialResult run_trial(const SparseModelConfig& model_cfg, const SpikeSpec& spike_spec, std::uint64_t trial_seed,
                      const TrialOptions& options = {});

/// Same pipeline on caller-provided X and E.
TrialResult run_trial_on(const SparseMatrix& x, const Perturbation& e, const TrialOptions& options);

struct StudyConfig {
  std::vector<std::size_t> n_list;
  /// Used when k_list is empty.
  double k_exponent = 0.7;
  std::vector<std::size_t> k_list;
  SpikeSpec spikes;
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  EntryDistribution distribution = EntryDistribution::kComplexGaussian;
  TrialOptions trial;
  /// 0 = hardware concurrency.
  unsigned threads = 0;
};

struct ConvergenceRow {
  std::size_t n = 0;
  std::size_t sparsity_k = 0;
  Spike spike;
  std::size_t trials = 0;
  /// Failed outlier slots (trials * multiplicity - successes).
  std::size_t failures = 0;
  double mean_overlap = 0.0;
  double std_overlap = 0.0;
  double limit = 0.0;
  /// Over trials with a finite distance; NaN when the spectrum was not computed.
  double mean_hausdorff = 0.0;
  double median_hausdorff = 0.0;
  double count_success_rate = 0.0;
  double mean_cross_overlap = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  /// trials[i] holds the TrialResults for n_list[i], ordered by trial index.
  std::vector<std::vector<TrialResult>> trials;

  double failure_rate() const;
};

/// 1 - 1/|mu|^2
double overlap_limit(Complex mu);

std::size_t resolve_sparsity(const StudyConfig& cfg, std::size_t index);
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial_index);
std::uint64_t study_perturbation_seed(std::uint64_t base_seed, std::size_t n);

ConvergenceTable run_convergence_study(const StudyConfig& cfg);

/// Calls fn(i) for i in [0, count) on up to `threads` workers (0 = auto).
/// Exceptions are rethrown on the caller's thread after all workers join.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

// ---- resolvent limit checks -------------------------------------------------

struct BilinearFormRecord {
  Complex measured;
  Complex predicted;
  double abs_error = 0.0;
};

/// <R(z) u, v> against -<u, v>/z.
BilinearFormRecord verify_bilinear_form(const SparseMatrix& x, Complex z, const CVector& u, const CVector& v);
BilinearFormRecord verify_bilinear_form(const ResolventHandle& h, const CVector& u, const CVector& v);

struct BlockResolventRecord {
  double op_norm_error = 0.0;
  double max_entry_error = 0.0;
  /// k1 * k2 * max_entry_error
  double entrywise_bound = 0.0;
  bool inequality_holds = false;
};

/// ||C1 R(z) C2^* + (1/z) C1 C2^*||, together with the entrywise operator-norm bound.
BlockResolventRecord verify_block_resolvent(const SparseMatrix& x, Complex z, const CMatrix& c1, const CMatrix& c2);
BlockResolventRecord verify_block_resolvent(const ResolventHandle& h, const CMatrix& c1, const CMatrix& c2);

struct ResolventNormRecord {
  double measured_sq = 0.0;
  /// 1/(|z|^2 - 1)
  double candidate_a = 0.0;
  /// 1/sqrt(|z|^2 - 1)
  double candidate_b = 0.0;
};

ResolventNormRecord verify_resolvent_norm(const SparseMatrix& x, Complex z, const CVector& w);
ResolventNormRecord verify_resolvent_norm(const ResolventHandle& h, const CVector& w);

struct GramResolventRecord {
  double op_norm_error = 0.0;
};

/// ||C1 R^* R C2^* - (1/(|z|^2 - 1)) C1 C2^*||
GramResolventRecord verify_gram_resolvent(const SparseMatrix& x, Complex z, const CMatrix& c1, const CMatrix& c2);
GramResolventRecord verify_gram_resolvent(const ResolventHandle& h, const CMatrix& c1, const CMatrix& c2);

struct ContinuityRecord {
  double estimate = 0.0;
  double norm_at_z = 0.0;
  double norm_at_zn = 0.0;
  /// |z - z_n| ||R(z_n)|| ||R(z)||
  double bound = 0.0;
  bool within_bound = false;
};

ContinuityRecord verify_resolvent_continuity(const SparseMatrix& x, Complex z, Complex z_n);
ContinuityRecord verify_resolvent_continuity(const ResolventHandle& at_z, const ResolventHandle& at_zn);

/// Subspace-iteration settings for the norms entering the continuity bound.
inline constexpr std::size_t kContinuityNormBlock = 4;
inline constexpr int kContinuityNormIterations = 15;

struct ResolventNormVerdict {
  double mean_measured = 0.0;
  double candidate_a = 0.0;
  double candidate_b = 0.0;
  /// "1/(|z|^2-1)" or "1/sqrt(|z|^2-1)"
  std::string supported;
  bool sqrt_variant_rejected = false;
};

/// Decides which limit the sample mean supports; a candidate is rejected when it
/// is farther than `tolerance` from the mean while the other is closer.
ResolventNormVerdict summarize_resolvent_norm(const std::vector<ResolventNormRecord>& records,
                                              double tolerance = 0.05);

struct LemmaSuiteConfig {
  std::size_t n = 2000;
  std::size_t sparsity_k = 0;  // 0 = ceil(n^0.7)
  EntryDistribution distribution = EntryDistribution::kComplexGaussian;
  Complex z{2.0, 0.0};
  Complex z_shift{0.01, 0.0};
  std::size_t seeds = 20;
  std::uint64_t base_seed = 0;
  bool zero_bulk = false;
  std::size_t block_rows = 2;
  double bilinear_tolerance = 0.05;
  double block_tolerance = 0.1;
  double gram_tolerance = 0.1;
  double norm_tolerance = 0.05;
  double pass_fraction = 0.9;
  unsigned threads = 0;
};

struct LemmaSeedRecord {
  std::uint64_t seed = 0;
  BilinearFormRecord bilinear_same;
  BilinearFormRecord bilinear_pair;
  BlockResolventRecord block;
  ResolventNormRecord norm;
  GramResolventRecord gram;
  ContinuityRecord continuity;
  double solve_residual = 0.0;
  std::string error;
};

struct LemmaCheck {
  std::string name;
  bool deterministic = false;
  bool passed = false;
  std::vector<std::pair<std::string, double>> stats;
  std::string note;
};

struct LemmaSuiteReport {
  LemmaSuiteConfig config;
  std::vector<LemmaSeedRecord> seeds;
  std::vector<LemmaCheck> checks;
  ResolventNormVerdict norm_verdict;

  bool deterministic_ok() const;
};

LemmaSuiteReport run_lemma_suite(const LemmaSuiteConfig& cfg);

}  // namespace spiked
