#include "spiked/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseLU>

#include "spiked/rng.hpp"

namespace spiked {

using SparseLu = Eigen::SparseLU<SparseCMatrix, Eigen::COLAMDOrdering<Eigen::Index>>;

struct ResolventHandle::Impl {
  Complex lambda;
  SparseCMatrix shifted;
  std::optional<Eigen::PartialPivLU<CMatrix>> dense_lu;
  std::unique_ptr<SparseLu> sparse_lu;
  double norm_estimate = 0.0;
};

namespace {

std::string describe_shift(Complex z) {
  std::ostringstream os;
  os << "(" << z.real() << ", " << z.imag() << ")";
  return os.str();
}

bool all_finite(const CMatrix& m) { return m.allFinite(); }

}  // namespace

ResolventHandle::ResolventHandle(const SparseMatrix& x, Complex lambda, const FactorizeOptions& options) {
  auto impl = std::make_shared<Impl>();
  impl->lambda = lambda;
  const auto dim = static_cast<Eigen::Index>(x.n());
  SparseCMatrix identity(dim, dim);
  identity.setIdentity();
  impl->shifted = x.data() - lambda * identity;
  impl->shifted.makeCompressed();

  const double density = dim == 0 ? 0.0
                                  : static_cast<double>(x.nnz()) / (static_cast<double>(dim) * static_cast<double>(dim));
  bool dense = options.path == FactorizationPath::kDense;
  if (options.path == FactorizationPath::kAuto) {
    dense = x.n() <= options.dense_cutoff || density > options.dense_density;
  }

  const std::string singular = "X - lambda I is singular to tolerance at lambda = " + describe_shift(lambda);
  if (dense) {
    impl->dense_lu.emplace(CMatrix(impl->shifted));
    const double rcond = impl->dense_lu->rcond();
    if (!(rcond > options.min_rcond)) throw Error(ErrorKind::kResolventSingular, singular);
  } else {
    impl->sparse_lu = std::make_unique<SparseLu>();
    impl->sparse_lu->analyzePattern(impl->shifted);
    impl->sparse_lu->factorize(impl->shifted);
    if (impl->sparse_lu->info() != Eigen::Success) throw Error(ErrorKind::kResolventSingular, singular);
  }
  impl_ = impl;

  impl->norm_estimate = estimate_operator_norm([this](const CVector& v) { return CVector(solve(v)); },
                                               [this](const CVector& v) { return CVector(solve_adjoint(v)); },
                                               x.n(), options.power_iterations);
  if (!std::isfinite(impl->norm_estimate)) throw Error(ErrorKind::kResolventSingular, singular);
  if (!dense) {
    // Sparse LU only reports exact zero pivots; screen near-singularity with the
    // 1-norm of the shifted matrix times the resolvent norm estimate.
    double col_max = 0.0;
    for (Eigen::Index j = 0; j < impl->shifted.outerSize(); ++j) {
      double s = 0.0;
      for (SparseCMatrix::InnerIterator it(impl->shifted, j); it; ++it) s += std::abs(it.value());
      col_max = std::max(col_max, s);
    }
    if (!(1.0 / (col_max * impl->norm_estimate) > options.min_rcond)) {
      throw Error(ErrorKind::kResolventSingular, singular);
    }
  }
}

Complex ResolventHandle::shift() const noexcept { return impl_->lambda; }

std::size_t ResolventHandle::n() const noexcept { return static_cast<std::size_t>(impl_->shifted.rows()); }

bool ResolventHandle::uses_dense_path() const noexcept { return impl_->dense_lu.has_value(); }

double ResolventHandle::norm_estimate() const noexcept { return impl_->norm_estimate; }

CMatrix ResolventHandle::solve(const CMatrix& rhs) const {
  CMatrix out = impl_->dense_lu ? CMatrix(impl_->dense_lu->solve(rhs)) : CMatrix(impl_->sparse_lu->solve(rhs));
  if (!all_finite(out)) {
    throw Error(ErrorKind::kResolventSingular, "non-finite resolvent solve at lambda = " + describe_shift(impl_->lambda));
  }
  return out;
}

CMatrix ResolventHandle::solve_adjoint(const CMatrix& rhs) const {
  CMatrix out = impl_->dense_lu ? CMatrix(impl_->dense_lu->adjoint().solve(rhs))
                                : CMatrix(impl_->sparse_lu->adjoint().solve(rhs));
  if (!all_finite(out)) {
    throw Error(ErrorKind::kResolventSingular, "non-finite adjoint solve at lambda = " + describe_shift(impl_->lambda));
  }
  return out;
}

CVector ResolventHandle::apply_shifted(const CVector& x) const { return impl_->shifted * x; }

double estimate_operator_norm(const LinearMap& apply, const LinearMap& apply_adjoint, std::size_t n,
                              int iterations) {
  if (n == 0) return 0.0;
  SequentialRng rng(0x5eed0f0e57ull, RngStream::kProbe);
  CVector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.complex_normal();
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < std::max(1, iterations); ++it) {
    const CVector w = apply(v);
    estimate = w.norm();
    if (!std::isfinite(estimate)) return std::numeric_limits<double>::infinity();
    if (estimate == 0.0) return 0.0;
    CVector y = apply_adjoint(w);
    const double ny = y.norm();
    if (!std::isfinite(ny)) return std::numeric_limits<double>::infinity();
    if (ny == 0.0) break;
    v = y / ny;
  }
  return std::max(estimate, apply(v).norm());
}

double estimate_operator_norm_subspace(const BlockMap& apply, const BlockMap& apply_adjoint, std::size_t n,
                                       std::size_t block, int iterations) {
  if (n == 0) return 0.0;
  const auto b = static_cast<Eigen::Index>(std::clamp<std::size_t>(block, 1, n));
  SequentialRng rng(0x5eed0f0e57ull, RngStream::kProbe);
  CMatrix q(static_cast<Eigen::Index>(n), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    for (Eigen::Index i = 0; i < q.rows(); ++i) q(i, j) = rng.complex_normal();
  }
  q = orthonormalize(q);
  for (int it = 0; it < std::max(1, iterations); ++it) {
    const CMatrix y = apply_adjoint(apply(q));
    if (!y.allFinite()) return std::numeric_limits<double>::infinity();
    if (y.norm() == 0.0) return 0.0;
    q = orthonormalize(y);
  }
  const CMatrix aq = apply(q);
  if (!aq.allFinite()) return std::numeric_limits<double>::infinity();
  return singular_values(aq)(0);
}

CompressedResolvent compressed_resolvent(const ResolventHandle& h, const Perturbation& e) {
  if (h.n() != e.n()) throw Error(ErrorKind::kDimension, "resolvent and perturbation dimensions differ");
  CompressedResolvent out;
  out.shift = h.shift();
  out.u_factor = e.u_factor();
  out.v_factor = e.v_factor();
  out.resolved_u = h.solve(out.u_factor);
  out.m_matrix = out.v_factor.adjoint() * out.resolved_u;
  return out;
}

CMatrix compressed_resolvent_derivative(const ResolventHandle& h, const CompressedResolvent& m) {
  return m.v_factor.adjoint() * h.solve(m.resolved_u);
}

double default_kernel_tolerance(const CMatrix& i_plus_m) {
  const double r = static_cast<double>(i_plus_m.rows());
  const double norm = i_plus_m.rows() == 0 ? 0.0 : singular_values(i_plus_m)(0);
  return std::max(1e-6, r * std::numeric_limits<double>::epsilon() * norm);
}

Eigen::VectorXd singular_values(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues();
}

double smallest_singular_value(const CMatrix& a) {
  const auto sv = singular_values(a);
  return sv.size() == 0 ? 0.0 : sv(sv.size() - 1);
}

std::vector<CVector> kernel_basis_of(const CMatrix& matrix, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::kConfig, "kernel tolerance must be positive");
  Eigen::JacobiSVD<CMatrix> svd(matrix, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  std::vector<CVector> basis;
  // Singular values are sorted descending; walk from the smallest.
  for (Eigen::Index j = sv.size() - 1; j >= 0; --j) {
    if (sv(j) > tol) break;
    basis.emplace_back(svd.matrixV().col(j));
  }
  return basis;
}

std::vector<CVector> kernel_basis(const CompressedResolvent& m, std::optional<double> tol) {
  const CMatrix k = m.i_plus_m();
  return kernel_basis_of(k, tol.value_or(default_kernel_tolerance(k)));
}

CVector reconstruct_eigenvector(const CompressedResolvent& m, const CVector& a) {
  if (a.size() != m.resolved_u.cols()) throw Error(ErrorKind::kDimension, "kernel vector has the wrong length");
  CVector x = m.resolved_u * a;
  const double norm = x.norm();
  if (!(norm >= 1e-14)) {
    throw Error(ErrorKind::kDegenerateReconstruction, "||R(lambda) U a|| is below 1e-14");
  }
  return x / norm;
}

CVector reconstruct_eigenvector(const ResolventHandle& h, const Perturbation& e, const CVector& a) {
  if (a.size() != static_cast<Eigen::Index>(e.rank())) {
    throw Error(ErrorKind::kDimension, "kernel vector has the wrong length");
  }
  CVector x = h.solve(e.u_factor() * a);
  const double norm = x.norm();
  if (!(norm >= 1e-14)) {
    throw Error(ErrorKind::kDegenerateReconstruction, "||R(lambda) U a|| is below 1e-14");
  }
  return x / norm;
}

double KernelDecomposition::off_resonant_ratio() const {
  const double mu_norm = a_mu.norm();
  if (a_neq.size() == 0) return 0.0;
  return mu_norm == 0.0 ? std::numeric_limits<double>::infinity() : a_neq.norm() / mu_norm;
}

KernelDecomposition localize_kernel(const CMatrix& k_matrix, const CVector& lambda_diag, Complex mu,
                                    const CVector& a) {
  const Eigen::Index r = lambda_diag.size();
  if (k_matrix.rows() != r || k_matrix.cols() != r || a.size() != r) {
    throw Error(ErrorKind::kDimension, "kernel localization inputs have inconsistent shapes");
  }
  if (mu == Complex(0.0)) throw Error(ErrorKind::kConfig, "kernel localization needs mu != 0");

  KernelDecomposition out;
  const double scale = 1e-12 * std::max(1.0, std::abs(mu));
  for (Eigen::Index t = 0; t < r; ++t) {
    (std::abs(lambda_diag(t) - mu) <= scale ? out.mu_columns : out.neq_columns).push_back(t);
  }
  if (out.mu_columns.empty()) throw Error(ErrorKind::kLookup, "mu is not an entry of Lambda");

  const double a_norm = a.norm();
  if (!(a_norm > 0.0)) throw Error(ErrorKind::kNormalization, "kernel vector must be nonzero");
  out.a_full = a / a_norm;
  out.a_mu.resize(static_cast<Eigen::Index>(out.mu_columns.size()));
  out.a_neq.resize(static_cast<Eigen::Index>(out.neq_columns.size()));
  for (std::size_t i = 0; i < out.mu_columns.size(); ++i) out.a_mu(static_cast<Eigen::Index>(i)) = out.a_full(out.mu_columns[i]);
  for (std::size_t i = 0; i < out.neq_columns.size(); ++i) out.a_neq(static_cast<Eigen::Index>(i)) = out.a_full(out.neq_columns[i]);

  out.c0 = std::numeric_limits<double>::infinity();
  for (Eigen::Index t : out.neq_columns) out.c0 = std::min(out.c0, std::abs(1.0 - lambda_diag(t) / mu));

  const CMatrix limit = CMatrix::Identity(r, r) - CMatrix((lambda_diag / mu).asDiagonal());
  out.epsilon = singular_values(k_matrix - limit)(0);

  if (out.neq_columns.empty()) {
    out.bound = 0.0;
    out.k22_inverse_norm = std::numeric_limits<double>::quiet_NaN();
    out.localized = true;
    return out;
  }
  out.bound = out.epsilon < out.c0 ? out.epsilon / (out.c0 - out.epsilon) : std::numeric_limits<double>::infinity();
  out.localized = out.epsilon < 0.5 * out.c0;

  const auto m = static_cast<Eigen::Index>(out.neq_columns.size());
  CMatrix k22(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) k22(i, j) = k_matrix(out.neq_columns[i], out.neq_columns[j]);
  }
  const double smin = smallest_singular_value(k22);
  out.k22_inverse_norm = smin > 0.0 ? 1.0 / smin : std::numeric_limits<double>::infinity();
  return out;
}

KernelDecomposition kernel_localization(const CVector& a, const Perturbation& e, Complex mu,
                                        const CompressedResolvent& m) {
  const SpikeBlock& block = e.block_of(mu);
  return localize_kernel(m.i_plus_m(), e.lambda_diag(), block.mu, a);
}

}  // namespace spiked
