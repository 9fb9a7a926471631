#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace spiked {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using SparseCMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, Eigen::Index>;

enum class ErrorKind {
  kConfig,
  kDimension,
  kSize,
  kLookup,
  kNormalization,
  kResolventSingular,
  kDegenerateReconstruction,
  kNoConvergence,
  kLeftOutlierRegion,
  kOracle,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Hermitian inner product <a, b> = sum_i a_i conj(b_i).
inline Complex inner(const CVector& a, const CVector& b) { return b.dot(a); }

}  // namespace spiked
