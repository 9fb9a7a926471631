#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spiked/matrix_model.hpp"
#include "spiked/perturbation.hpp"
#include "spiked/resolvent.hpp"
#include "spiked/types.hpp"

namespace spiked {

/// Hausdorff distance between finite sets of complex numbers. 0 when both are
/// empty, +inf when exactly one is.
double hausdorff_distance(std::span<const Complex> a, std::span<const Complex> b);

/// Largest n accepted by the dense paths.
inline constexpr std::size_t kDenseGuard = 5000;

/// All eigenvalues of a dense matrix (LAPACK zgeev, Schur based).
std::vector<Complex> dense_spectrum(const CMatrix& y);

struct DenseEigensystem {
  std::vector<Complex> values;
  /// Unit-norm right eigenvectors, column j pairs with values[j].
  CMatrix vectors;
};
DenseEigensystem dense_eigensystem(const CMatrix& y);

/// Y = X + E as a dense matrix (guarded by kDenseGuard).
CMatrix assemble_y(const SparseMatrix& x, const Perturbation& e);

/// ||(Y - lambda I) v|| without forming Y.
double eigen_residual(const SparseMatrix& x, const Perturbation& e, Complex lambda, const CVector& v);

enum class DerivativeMode {
  /// f'/f = tr((I + M)^{-1} M') with M' = V^* R^2 U; one factorization per iterate.
  kAnalytic,
  /// Central difference with step 1e-6 (1 + |lambda|); three factorizations per iterate.
  kCentralDifference,
};

struct NewtonOptions {
  int max_iter = 50;
  /// Acceptance threshold on |det(I + M(lambda))|.
  double tol = 1e-8;
  /// Iterates must stay in |lambda| > 1 + epsilon_band / 2.
  double epsilon_band = 0.1;
  /// Acceptance threshold on the smallest singular value of I + M(lambda).
  double singular_value_guard = 1e-6;
  DerivativeMode derivative = DerivativeMode::kAnalytic;
  FactorizeOptions factorize;
};

struct OutlierRoot {
  Complex lambda;
  double det_modulus = 0.0;
  double smallest_singular_value = 0.0;
  int iterations = 0;
};

/// Complex Newton iteration on f(lambda) = det(I + M(lambda)). Roots listed in
/// `deflate` are divided out of f so the iteration cannot return them again.
/// Throws Error(kNoConvergence) or Error(kLeftOutlierRegion).
OutlierRoot locate_outlier_newton(const SparseMatrix& x, const Perturbation& e, Complex mu_init,
                                  const NewtonOptions& options, std::span<const Complex> deflate = {});

struct SpikeRoots {
  Complex mu;
  std::size_t multiplicity = 1;
  std::vector<OutlierRoot> roots;
  /// One message per start that failed or duplicated an earlier root.
  std::vector<std::string> failures;
};

/// Runs Newton from `multiplicity` starts around mu (mu itself when simple,
/// mu (1 + 1e-2 e^{2 pi i j / k}) otherwise), deflating earlier roots. A root within
/// 1e-4 of earlier ones is kept only when ker(I + M) there has a direction left for
/// it (a repeated eigenvalue); roots closer to another spike are dropped.
SpikeRoots locate_spike_outliers(const SparseMatrix& x, const Perturbation& e, Complex mu,
                                 const NewtonOptions& options);

/// 0.1 * (min |mu| - 1)
double auto_epsilon_band(const SpikeSpec& spec);

struct SpectralReport {
  double epsilon_band = 0.0;
  /// Eigenvalues of Y with |lambda| >= 1 + epsilon_band.
  std::vector<Complex> outliers;
  /// Distinct eigenvalues of E outside the unit disk.
  std::vector<Complex> spike_targets;
  /// |sigma^+(E)| counted with multiplicity.
  std::size_t m_n = 0;
  bool count_match = false;
  double hausdorff = 0.0;
};

SpectralReport spectral_report(const SparseMatrix& x, const Perturbation& e, double epsilon_band);
SpectralReport spectral_report_from_eigenvalues(std::span<const Complex> eigenvalues, const Perturbation& e,
                                                double epsilon_band);

}  // namespace spiked
