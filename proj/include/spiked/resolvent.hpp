#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "spiked/matrix_model.hpp"
#include "spiked/perturbation.hpp"
#include "spiked/types.hpp"

namespace spiked {

enum class FactorizationPath {
  kAuto,
  kDense,
  kSparse,
};

struct FactorizeOptions {
  FactorizationPath path = FactorizationPath::kAuto;
  /// kAuto uses the dense LU when n <= dense_cutoff ...
  std::size_t dense_cutoff = 200;
  /// ... or when nnz / n^2 exceeds this (sparse LU fill makes it slower past here).
  double dense_density = 0.02;
  int power_iterations = 5;
  /// Reciprocal-condition floor below which X - lambda I counts as singular.
  double min_rcond = 1e-13;
};

/// Factorization of (X - lambda I) giving access to R(lambda) = (X - lambda I)^{-1}.
///
/// Immutable after construction; solve() and solve_adjoint() are read-only and
/// may be called concurrently. Copies share the factorization.
class ResolventHandle {
 public:
  /// Throws Error(kResolventSingular) when the shifted matrix is singular to tolerance.
  ResolventHandle(const SparseMatrix& x, Complex lambda, const FactorizeOptions& options = {});

  Complex shift() const noexcept;
  std::size_t n() const noexcept;
  bool uses_dense_path() const noexcept;
  /// ||R(lambda)|| from power iteration on R^* R.
  double norm_estimate() const noexcept;

  CMatrix solve(const CMatrix& rhs) const;
  CMatrix solve_adjoint(const CMatrix& rhs) const;

  /// (X - lambda I) x
  CVector apply_shifted(const CVector& x) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

using LinearMap = std::function<CVector(const CVector&)>;

/// Largest singular value of a linear map by power iteration on A^* A from a
/// fixed pseudo-random start vector.
double estimate_operator_norm(const LinearMap& apply, const LinearMap& apply_adjoint, std::size_t n,
                              int iterations);

using BlockMap = std::function<CMatrix(const CMatrix&)>;

/// Largest singular value by subspace iteration on A^* A with `block` columns,
/// finished by a Rayleigh-Ritz step on the final subspace. The first start
/// column equals the start vector of estimate_operator_norm.
double estimate_operator_norm_subspace(const BlockMap& apply, const BlockMap& apply_adjoint, std::size_t n,
                                       std::size_t block, int iterations);

/// M(lambda) = V^* R(lambda) U for the spike-adapted factors U = P, V = W conj(Lambda).
struct CompressedResolvent {
  Complex shift;
  CMatrix m_matrix;
  CMatrix u_factor;
  CMatrix v_factor;
  /// R(lambda) U, kept for eigenvector reconstruction and derivatives.
  CMatrix resolved_u;

  CMatrix i_plus_m() const { return CMatrix::Identity(m_matrix.rows(), m_matrix.cols()) + m_matrix; }
};

CompressedResolvent compressed_resolvent(const ResolventHandle& h, const Perturbation& e);

/// d/dlambda M(lambda) = V^* R(lambda)^2 U.
CMatrix compressed_resolvent_derivative(const ResolventHandle& h, const CompressedResolvent& m);

/// max(1e-6, r * machine_epsilon * ||I + M||)
double default_kernel_tolerance(const CMatrix& i_plus_m);

/// Singular values of `a`, descending.
Eigen::VectorXd singular_values(const CMatrix& a);
double smallest_singular_value(const CMatrix& a);

/// Right singular vectors of (I + M) with singular value <= tol, ordered by
/// increasing singular value. Empty when I + M is nonsingular to tolerance.
std::vector<CVector> kernel_basis(const CompressedResolvent& m, std::optional<double> tol = std::nullopt);
std::vector<CVector> kernel_basis_of(const CMatrix& matrix, double tol);

/// R(lambda) U a / ||R(lambda) U a||. Throws Error(kDegenerateReconstruction)
/// when ||R(lambda) U a|| < 1e-14.
CVector reconstruct_eigenvector(const ResolventHandle& h, const Perturbation& e, const CVector& a);
CVector reconstruct_eigenvector(const CompressedResolvent& m, const CVector& a);

/// Kernel-vector localization diagnostics around one spike mu.
struct KernelDecomposition {
  CVector a_full;
  /// Components on the mu block (in block order) and on the remaining columns.
  CVector a_mu;
  CVector a_neq;
  std::vector<Eigen::Index> mu_columns;
  std::vector<Eigen::Index> neq_columns;
  /// min over the other spikes nu of |1 - nu/mu|; +inf if there are none.
  double c0 = 0.0;
  /// ||(I + M) - (I - Lambda/mu)||
  double epsilon = 0.0;
  /// epsilon / (c0 - epsilon); 0 without an off-resonant block, +inf if epsilon >= c0.
  double bound = 0.0;
  /// ||K_22^{-1}|| of the off-resonant block of I + M; NaN when that block is empty.
  double k22_inverse_norm = 0.0;
  /// epsilon < c0 / 2, the regime in which ||a_neq|| <= bound * ||a_mu|| is guaranteed.
  bool localized = false;

  double off_resonant_ratio() const;
};

KernelDecomposition kernel_localization(const CVector& a, const Perturbation& e, Complex mu,
                                        const CompressedResolvent& m);

/// Same diagnostics for an arbitrary r x r matrix K standing in for I + M.
KernelDecomposition localize_kernel(const CMatrix& k_matrix, const CVector& lambda_diag, Complex mu,
                                    const CVector& a);

}  // namespace spiked
