#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "spiked/rng.hpp"
#include "spiked/types.hpp"

namespace spiked {

/// Law of the un-normalized entries A_ij. Every kind has mean 0 and E|chi|^2 = 1.
enum class EntryDistribution {
  kComplexGaussian,
  kRealGaussian,
  kRademacher,
};

EntryDistribution parse_distribution(std::string_view name);
std::string_view to_string(EntryDistribution dist) noexcept;

/// One draw of chi for the entry addressed by `counter`.
Complex draw_entry(EntryDistribution dist, const CounterRng& rng, std::uint64_t counter) noexcept;

struct SparseModelConfig {
  std::size_t n = 0;
  std::size_t sparsity_k = 0;
  EntryDistribution distribution = EntryDistribution::kComplexGaussian;
  std::uint64_t seed = 0;

  /// Throws Error(kConfig) unless 1 <= sparsity_k <= n.
  void validate() const;
};

/// Immutable n x n sparse matrix X_n; entries (1/sqrt(K)) * B_ij * A_ij.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  explicit SparseMatrix(SparseCMatrix data);

  static SparseMatrix zero(std::size_t n);
  static SparseMatrix from_dense(const CMatrix& dense);

  std::size_t n() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t nnz() const noexcept { return static_cast<std::size_t>(data_.nonZeros()); }
  const SparseCMatrix& data() const noexcept { return data_; }

  CMatrix to_dense() const;
  CVector apply(const CVector& x) const { return data_ * x; }

  friend bool operator==(const SparseMatrix& a, const SparseMatrix& b);

 private:
  SparseCMatrix data_;
};

/// Fused Bernoulli-mask / entry sampler; B and A are never materialized.
/// Entry (i, j) uses counter i*n + j, so the result is a pure function of cfg.
SparseMatrix sample_sparse_matrix(const SparseModelConfig& cfg);

/// ceil(n^exponent) clamped to [2, n]. Requires n >= 2 and exponent in (0, 1).
std::size_t default_k_schedule(std::size_t n, double exponent);

/// Coordinate dump: header `%n K seed`, then one `row col re im` line per entry.
void write_coordinate_dump(std::ostream& os, const SparseMatrix& x, std::size_t sparsity_k,
                           std::uint64_t seed);

}  // namespace spiked
