#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "spiked/perturbation.hpp"

using namespace spiked;

namespace {

SpikeSpec two_spikes(double tau) {
  return SpikeSpec{{{Complex(2.0, 0.0), 1}, {Complex(-3.0, 0.0), 2}}, tau};
}

double opnorm(const CMatrix& a) {
  return Eigen::JacobiSVD<CMatrix>(a).singularValues()(0);
}

/// Orthonormal basis of ker(a) from the trailing right singular vectors.
CMatrix svd_null_space(const CMatrix& a, double tol) {
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;
  return svd.matrixV().rightCols(a.cols() - rank);
}

double projector_distance(const CMatrix& q1, const CMatrix& q2) {
  return opnorm(q1 * q1.adjoint() - q2 * q2.adjoint());
}

}  // namespace

TEST_CASE("spike spec validation") {
  CHECK(two_spikes(0.0).rank() == 3);
  CHECK_NOTHROW(two_spikes(0.5).validate());

  SpikeSpec weak{{{Complex(1.01, 0.0), 1}}, 0.0};
  CHECK_THROWS_WITH_AS(weak.validate(), doctest::Contains("delta-floor"), Error);

  SpikeSpec repeated{{{Complex(2.0, 0.0), 1}, {Complex(2.0, 0.0), 1}}, 0.0};
  CHECK_THROWS_AS(repeated.validate(), Error);

  SpikeSpec empty{{}, 0.0};
  CHECK_THROWS_AS(empty.validate(), Error);

  SpikeSpec huge{{{Complex(500.0, 0.0), 1}}, 0.0};
  CHECK_THROWS_WITH_AS(huge.validate(), doctest::Contains("boundedness"), Error);

  SpikeSpec zero_mult{{{Complex(2.0, 0.0), 0}}, 0.0};
  CHECK_THROWS_AS(zero_mult.validate(), Error);
}

TEST_CASE("tau = 0 gives W = P and a normal perturbation") {
  const Perturbation e = build_perturbation(two_spikes(0.0), 60, 11);
  CHECK((e.w_factor() - e.p_factor()).norm() == 0.0);
  const CMatrix d = assemble_dense(e);
  CHECK((d * d.adjoint() - d.adjoint() * d).norm() <= 1e-12);
}

TEST_CASE("biorthogonality and right eigenvectors for any tau and seed") {
  for (double tau : {0.0, 0.3, 1.5}) {
    for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
      const Perturbation e = build_perturbation(two_spikes(tau), 40, seed);
      const CMatrix wp = e.w_factor().adjoint() * e.p_factor();
      CHECK((wp - CMatrix::Identity(3, 3)).norm() <= 1e-12);
      const CMatrix d = assemble_dense(e);
      CHECK((d * e.p_factor() - e.p_factor() * e.lambda_diag().asDiagonal()).norm() <= 1e-10);
      CHECK((e.v_factor().adjoint() * e.u_factor() - CMatrix(e.lambda_diag().asDiagonal())).norm() <= 1e-12);
      const CVector x = CVector::Ones(40) / std::sqrt(40.0);
      CHECK((e.apply(x) - d * x).norm() <= 1e-12);
    }
  }
}

TEST_CASE("dense eigenvalues of the assembled perturbation") {
  const Perturbation e = build_perturbation(two_spikes(0.4), 50, 5);
  Eigen::ComplexEigenSolver<CMatrix> solver(assemble_dense(e), false);
  std::vector<Complex> eig(solver.eigenvalues().data(), solver.eigenvalues().data() + 50);
  std::sort(eig.begin(), eig.end(), [](Complex a, Complex b) { return std::abs(a) > std::abs(b); });
  CHECK(std::abs(eig[0] + 3.0) <= 1e-8);
  CHECK(std::abs(eig[1] + 3.0) <= 1e-8);
  CHECK(std::abs(eig[2] - 2.0) <= 1e-8);
  for (std::size_t i = 3; i < eig.size(); ++i) CHECK(std::abs(eig[i]) <= 1e-8);
}

TEST_CASE("assemble_dense on the canonical rank-one example") {
  CMatrix p = CMatrix::Zero(4, 1);
  p(0, 0) = 1.0;
  CVector lambda(1);
  lambda(0) = 2.0;
  const Perturbation e(p, lambda, p);
  CMatrix expected = CMatrix::Zero(4, 4);
  expected(0, 0) = 2.0;
  CHECK((assemble_dense(e) - expected).norm() == 0.0);
  CHECK_THROWS_AS(assemble_dense(e, 3), Error);
}

TEST_CASE("explicit factors must be biorthogonal") {
  CMatrix p = CMatrix::Zero(4, 1);
  p(0, 0) = 1.0;
  CMatrix w = CMatrix::Zero(4, 1);
  w(1, 0) = 1.0;
  CVector lambda(1);
  lambda(0) = 2.0;
  CHECK_THROWS_AS(Perturbation(p, lambda, w), Error);
  CHECK_THROWS_AS(Perturbation(p, CVector::Ones(2), p), Error);
}

TEST_CASE("operator norm of E is bounded by ||Lambda|| ||W||") {
  for (double tau : {0.0, 0.7, 2.0}) {
    const Perturbation e = build_perturbation(two_spikes(tau), 30, 8);
    const double bound = e.lambda_diag().cwiseAbs().maxCoeff() * opnorm(e.w_factor());
    CHECK(opnorm(assemble_dense(e)) <= bound * (1.0 + 1e-12));
  }
}

TEST_CASE("spike eigenspaces") {
  const Perturbation e = build_perturbation(two_spikes(0.0), 40, 3);

  const SpikeEigenspace f1 = spike_eigenspace(e, Complex(2.0, 0.0));
  REQUIRE(f1.dim() == 1);
  const Complex phase = inner(f1.q_basis.col(0), e.p_factor().col(0));
  CHECK(std::abs(std::abs(phase) - 1.0) <= 1e-12);

  const SpikeEigenspace f2 = spike_eigenspace(e, Complex(-3.0, 0.0));
  REQUIRE(f2.dim() == 2);
  CHECK((f2.q_basis.adjoint() * f2.q_basis - CMatrix::Identity(2, 2)).norm() <= 1e-12);

  CHECK_THROWS_AS(spike_eigenspace(e, Complex(5.0, 0.0)), Error);
  try {
    spike_eigenspace(e, Complex(5.0, 0.0));
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::kLookup);
  }
}

TEST_CASE("spike eigenspaces agree with the dense SVD null space at n=40") {
  for (double tau : {0.0, 0.8}) {
    const Perturbation e = build_perturbation(two_spikes(tau), 40, 21);
    const CMatrix d = assemble_dense(e);
    for (Complex mu : {Complex(2.0, 0.0), Complex(-3.0, 0.0)}) {
      const SpikeEigenspace f = spike_eigenspace(e, mu);
      const CMatrix shifted = mu * CMatrix::Identity(40, 40) - d;
      const CMatrix q = svd_null_space(shifted, 1e-9);
      REQUIRE(q.cols() == Eigen::Index(f.dim()));
      CHECK(projector_distance(q, f.q_basis) <= 1e-8);
      CHECK((d * f.q_basis - mu * f.q_basis).norm() <= 1e-10);
    }
  }
}

TEST_CASE("overlap_squared") {
  const Perturbation e = build_perturbation(two_spikes(0.2), 30, 4);
  const SpikeEigenspace f = spike_eigenspace(e, Complex(-3.0, 0.0));
  CHECK(overlap_squared(f.q_basis.col(0), f) == doctest::Approx(1.0).epsilon(1e-12));

  CVector orth = CVector::Zero(30);
  orth(0) = 1.0;
  orth -= f.q_basis * (f.q_basis.adjoint() * orth);
  orth.normalize();
  CHECK(overlap_squared(orth, f) <= 1e-14);

  const CVector mixed = (f.q_basis.col(1) + orth).normalized();
  CHECK(overlap_squared(mixed, f) == doctest::Approx(0.5).epsilon(1e-10));

  CHECK_THROWS_AS(overlap_squared(2.0 * orth, f), Error);
}

TEST_CASE("build_perturbation requires n >= 2r") {
  CHECK_THROWS_AS(build_perturbation(two_spikes(0.0), 5, 1), Error);
  CHECK_NOTHROW(build_perturbation(two_spikes(0.0), 6, 1));
}

TEST_CASE("orthonormalize spans the input") {
  CMatrix a(5, 2);
  a << 1, 2, 0, 1, 0, 0, 1, 0, 0, 3;
  const CMatrix q = orthonormalize(a);
  CHECK((q.adjoint() * q - CMatrix::Identity(2, 2)).norm() <= 1e-14);
  CHECK((a - q * (q.adjoint() * a)).norm() <= 1e-13);
}
