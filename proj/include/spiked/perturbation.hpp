#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "spiked/types.hpp"

namespace spiked {

struct Spike {
  Complex mu;
  std::size_t multiplicity = 1;
};

/// Validation limits for a spike list.
struct SpikeLimits {
  std::size_t max_rank = 16;
  /// delta floor: every spike needs |mu| >= min_modulus.
  double min_modulus = 1.05;
  /// Boundedness of the factor columns: max|mu| * (1 + tau) <= max_norm_bound.
  double max_norm_bound = 100.0;
};

struct SpikeSpec {
  std::vector<Spike> spikes;
  double non_normality_tau = 0.0;

  std::size_t rank() const noexcept;
  /// Throws Error(kConfig) naming the violated rule.
  void validate(const SpikeLimits& limits = {}) const;
};

/// Index set of one spike's block inside Lambda.
struct SpikeBlock {
  Complex mu;
  std::vector<Eigen::Index> columns;
};

/// Finite-rank perturbation E = P Lambda W^* with W^* P = I_r.
///
/// The columns of P are right eigenvectors of E (E P = P Lambda). The spike-adapted
/// factorization used by the resolvent reduction is U = P, V = W conj(Lambda), so that
/// E = U V^* and V^* U = Lambda.
class Perturbation {
 public:
  /// Takes explicit factors. Spike blocks are the distinct values of `lambda_diag`
  /// in order of first appearance. Throws Error(kDimension) on shape mismatch or
  /// when ||W^* P - I|| exceeds 1e-10.
  Perturbation(CMatrix p_factor, CVector lambda_diag, CMatrix w_factor);

  std::size_t n() const noexcept { return static_cast<std::size_t>(p_.rows()); }
  std::size_t rank() const noexcept { return static_cast<std::size_t>(p_.cols()); }

  const CMatrix& p_factor() const noexcept { return p_; }
  const CVector& lambda_diag() const noexcept { return lambda_; }
  const CMatrix& w_factor() const noexcept { return w_; }
  const std::vector<SpikeBlock>& blocks() const noexcept { return blocks_; }

  const CMatrix& u_factor() const noexcept { return p_; }
  const CMatrix& v_factor() const noexcept { return v_; }

  /// E x without materializing E.
  CVector apply(const CVector& x) const;

  /// Block for mu; throws Error(kLookup) if mu is not one of the spikes.
  const SpikeBlock& block_of(Complex mu) const;

 private:
  CMatrix p_;
  CVector lambda_;
  CMatrix w_;
  CMatrix v_;
  std::vector<SpikeBlock> blocks_;
};

/// P = orthonormalized complex Gaussian n x r; Z = orthonormalized Gaussian in
/// range(P)^perp; W = P + tau Z. Throws Error(kDimension) when n < 2r.
Perturbation build_perturbation(const SpikeSpec& spec, std::size_t n, std::uint64_t seed);

/// P Lambda W^* as a dense matrix. Throws Error(kSize) when n > max_n.
CMatrix assemble_dense(const Perturbation& e, std::size_t max_n = 5000);

/// Orthonormal basis Q of F = ker(mu I - E).
struct SpikeEigenspace {
  Complex mu;
  CMatrix q_basis;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(q_basis.cols()); }
};

SpikeEigenspace spike_eigenspace(const Perturbation& e, Complex mu);

/// <x, F>^2 = ||Q^* x||^2 for unit x. Throws Error(kNormalization) if | ||x|| - 1 | > 1e-10.
double overlap_squared(const CVector& x, const SpikeEigenspace& f);

/// Orthonormal basis of span(columns) via thin Householder QR.
CMatrix orthonormalize(const CMatrix& columns);

}  // namespace spiked
