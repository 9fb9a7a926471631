#include "spiked/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spiked/rng.hpp"

namespace spiked {

namespace {

std::string format_complex(Complex z) {
  std::ostringstream os;
  os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

CMatrix gaussian_matrix(std::size_t rows, std::size_t cols, SequentialRng& rng) {
  CMatrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.complex_normal();
  }
  return g;
}

}  // namespace

std::size_t SpikeSpec::rank() const noexcept {
  std::size_t r = 0;
  for (const auto& s : spikes) r += s.multiplicity;
  return r;
}

void SpikeSpec::validate(const SpikeLimits& limits) const {
  if (spikes.empty()) throw Error(ErrorKind::kConfig, "spike list is empty");
  if (!(non_normality_tau >= 0.0) || !std::isfinite(non_normality_tau)) {
    throw Error(ErrorKind::kConfig, "non_normality_tau must be a finite nonnegative number");
  }
  double max_modulus = 0.0;
  for (std::size_t i = 0; i < spikes.size(); ++i) {
    const auto& s = spikes[i];
    const std::string where = "spikes[" + std::to_string(i) + "] (mu=" + format_complex(s.mu) + ")";
    if (!std::isfinite(s.mu.real()) || !std::isfinite(s.mu.imag())) {
      throw Error(ErrorKind::kConfig, where + ": mu must be finite");
    }
    if (s.multiplicity == 0) throw Error(ErrorKind::kConfig, where + ": multiplicity must be positive");
    if (std::abs(s.mu) < limits.min_modulus) {
      throw Error(ErrorKind::kConfig, where + ": delta-floor rule violated, |mu| = " +
                                          std::to_string(std::abs(s.mu)) + " < " +
                                          std::to_string(limits.min_modulus));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (spikes[j].mu == s.mu) throw Error(ErrorKind::kConfig, where + ": spikes must be pairwise distinct");
    }
    max_modulus = std::max(max_modulus, std::abs(s.mu));
  }
  if (rank() > limits.max_rank) {
    throw Error(ErrorKind::kConfig, "total rank " + std::to_string(rank()) + " exceeds r_max = " +
                                        std::to_string(limits.max_rank));
  }
  if (max_modulus * (1.0 + non_normality_tau) > limits.max_norm_bound) {
    throw Error(ErrorKind::kConfig, "boundedness rule violated: max|mu| * (1 + tau) exceeds " +
                                        std::to_string(limits.max_norm_bound));
  }
}

Perturbation::Perturbation(CMatrix p_factor, CVector lambda_diag, CMatrix w_factor)
    : p_(std::move(p_factor)), lambda_(std::move(lambda_diag)), w_(std::move(w_factor)) {
  const auto r = p_.cols();
  if (r == 0 || lambda_.size() != r || w_.cols() != r || w_.rows() != p_.rows()) {
    throw Error(ErrorKind::kDimension, "perturbation factors have inconsistent shapes");
  }
  const double biorth = (w_.adjoint() * p_ - CMatrix::Identity(r, r)).norm();
  if (biorth > 1e-10) {
    throw Error(ErrorKind::kDimension, "factors are not biorthogonal: ||W^*P - I|| = " + std::to_string(biorth));
  }
  v_ = w_ * lambda_.conjugate().asDiagonal();
  for (Eigen::Index t = 0; t < r; ++t) {
    auto it = std::find_if(blocks_.begin(), blocks_.end(), [&](const SpikeBlock& b) { return b.mu == lambda_(t); });
    if (it == blocks_.end()) {
      blocks_.push_back({lambda_(t), {t}});
    } else {
      it->columns.push_back(t);
    }
  }
}

CVector Perturbation::apply(const CVector& x) const {
  return p_ * (lambda_.asDiagonal() * (w_.adjoint() * x));
}

const SpikeBlock& Perturbation::block_of(Complex mu) const {
  for (const auto& b : blocks_) {
    if (std::abs(b.mu - mu) <= 1e-12 * std::max(1.0, std::abs(mu))) return b;
  }
  throw Error(ErrorKind::kLookup, "mu = " + format_complex(mu) + " is not a spike of the perturbation");
}

CMatrix orthonormalize(const CMatrix& columns) {
  Eigen::HouseholderQR<CMatrix> qr(columns);
  return qr.householderQ() * CMatrix::Identity(columns.rows(), columns.cols());
}

Perturbation build_perturbation(const SpikeSpec& spec, std::size_t n, std::uint64_t seed) {
  const std::size_t r = spec.rank();
  if (r == 0) throw Error(ErrorKind::kConfig, "spike list is empty");
  if (n < 2 * r) {
    throw Error(ErrorKind::kDimension, "n = " + std::to_string(n) + " is smaller than 2r = " + std::to_string(2 * r));
  }
  SequentialRng rng(seed, RngStream::kPerturbation);
  const CMatrix p = orthonormalize(gaussian_matrix(n, r, rng));

  CMatrix w = p;
  if (spec.non_normality_tau > 0.0) {
    CMatrix g = gaussian_matrix(n, r, rng);
    // Two projection passes keep Z^* P at rounding level.
    g -= p * (p.adjoint() * g);
    CMatrix z = orthonormalize(g);
    z -= p * (p.adjoint() * z);
    w += spec.non_normality_tau * z;
  }

  CVector lambda(static_cast<Eigen::Index>(r));
  Eigen::Index t = 0;
  for (const auto& s : spec.spikes) {
    for (std::size_t j = 0; j < s.multiplicity; ++j) lambda(t++) = s.mu;
  }
  return Perturbation(p, std::move(lambda), std::move(w));
}

CMatrix assemble_dense(const Perturbation& e, std::size_t max_n) {
  if (e.n() > max_n) {
    throw Error(ErrorKind::kSize, "dense assembly of n = " + std::to_string(e.n()) +
                                      " exceeds the guard " + std::to_string(max_n));
  }
  return e.p_factor() * e.lambda_diag().asDiagonal() * e.w_factor().adjoint();
}

SpikeEigenspace spike_eigenspace(const Perturbation& e, Complex mu) {
  const SpikeBlock& block = e.block_of(mu);
  CMatrix cols(e.p_factor().rows(), static_cast<Eigen::Index>(block.columns.size()));
  for (std::size_t j = 0; j < block.columns.size(); ++j) {
    cols.col(static_cast<Eigen::Index>(j)) = e.p_factor().col(block.columns[j]);
  }
  return {block.mu, orthonormalize(cols)};
}

double overlap_squared(const CVector& x, const SpikeEigenspace& f) {
  const double norm = x.norm();
  if (std::abs(norm - 1.0) > 1e-10) {
    throw Error(ErrorKind::kNormalization, "overlap_squared requires a unit vector (||x|| = " + std::to_string(norm) + ")");
  }
  const double value = (f.q_basis.adjoint() * x).squaredNorm();
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace spiked
