#include "spiked/matrix_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace spiked {

EntryDistribution parse_distribution(std::string_view name) {
  if (name == "complex_gaussian") return EntryDistribution::kComplexGaussian;
  if (name == "real_gaussian") return EntryDistribution::kRealGaussian;
  if (name == "rademacher") return EntryDistribution::kRademacher;
  throw Error(ErrorKind::kConfig,
              "unknown distribution '" + std::string(name) +
                  "' (expected complex_gaussian, real_gaussian or rademacher)");
}

std::string_view to_string(EntryDistribution dist) noexcept {
  switch (dist) {
    case EntryDistribution::kComplexGaussian: return "complex_gaussian";
    case EntryDistribution::kRealGaussian: return "real_gaussian";
    case EntryDistribution::kRademacher: return "rademacher";
  }
  return "unknown";
}

Complex draw_entry(EntryDistribution dist, const CounterRng& rng, std::uint64_t counter) noexcept {
  switch (dist) {
    case EntryDistribution::kComplexGaussian: {
      const auto [re, im] = rng.normals(counter, 1);
      return Complex(re, im) * (0.5 * std::numbers::sqrt2);
    }
    case EntryDistribution::kRealGaussian:
      return Complex(rng.normals(counter, 1)[0], 0.0);
    case EntryDistribution::kRademacher:
      return Complex(rng.uniforms(counter, 1)[0] < 0.5 ? -1.0 : 1.0, 0.0);
  }
  return {};
}

void SparseModelConfig::validate() const {
  if (n == 0) throw Error(ErrorKind::kConfig, "matrix dimension n must be positive");
  if (sparsity_k == 0 || sparsity_k > n) {
    throw Error(ErrorKind::kConfig, "sparsity_k must satisfy 1 <= K <= n (got K=" +
                                        std::to_string(sparsity_k) + ", n=" + std::to_string(n) + ")");
  }
}

SparseMatrix::SparseMatrix(SparseCMatrix data) : data_(std::move(data)) {
  if (data_.rows() != data_.cols()) throw Error(ErrorKind::kDimension, "sparse matrix must be square");
  data_.makeCompressed();
}

SparseMatrix SparseMatrix::zero(std::size_t n) {
  const auto dim = static_cast<Eigen::Index>(n);
  return SparseMatrix(SparseCMatrix(dim, dim));
}

SparseMatrix SparseMatrix::from_dense(const CMatrix& dense) {
  return SparseMatrix(dense.sparseView(Complex(1.0), 0.0));
}

CMatrix SparseMatrix::to_dense() const { return CMatrix(data_); }

bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.n() != b.n() || a.nnz() != b.nnz()) return false;
  const auto& da = a.data_;
  const auto& db = b.data_;
  for (Eigen::Index j = 0; j <= da.outerSize(); ++j) {
    if (da.outerIndexPtr()[j] != db.outerIndexPtr()[j]) return false;
  }
  for (Eigen::Index t = 0; t < da.nonZeros(); ++t) {
    if (da.innerIndexPtr()[t] != db.innerIndexPtr()[t]) return false;
    if (da.valuePtr()[t] != db.valuePtr()[t]) return false;
  }
  return true;
}

SparseMatrix sample_sparse_matrix(const SparseModelConfig& cfg) {
  cfg.validate();
  const CounterRng rng(cfg.seed, RngStream::kMatrix);
  const double p = static_cast<double>(cfg.sparsity_k) / static_cast<double>(cfg.n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.sparsity_k));
  const auto dim = static_cast<Eigen::Index>(cfg.n);
  const std::uint64_t n64 = cfg.n;

  SparseCMatrix data(dim, dim);
  data.reserve(static_cast<Eigen::Index>(std::ceil(p * static_cast<double>(cfg.n * cfg.n) * 1.1)) + 16);
  for (Eigen::Index j = 0; j < dim; ++j) {
    data.startVec(j);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const std::uint64_t counter = static_cast<std::uint64_t>(i) * n64 + static_cast<std::uint64_t>(j);
      if (rng.uniforms(counter, 0)[0] < p) {
        data.insertBack(i, j) = scale * draw_entry(cfg.distribution, rng, counter);
      }
    }
  }
  data.finalize();
  return SparseMatrix(std::move(data));
}

std::size_t default_k_schedule(std::size_t n, double exponent) {
  if (n < 2) throw Error(ErrorKind::kConfig, "default_k_schedule requires n >= 2");
  if (!(exponent > 0.0 && exponent < 1.0)) {
    throw Error(ErrorKind::kConfig, "k_exponent must lie in the open interval (0, 1)");
  }
  const double raw = std::ceil(std::pow(static_cast<double>(n), exponent));
  const auto k = static_cast<std::size_t>(raw);
  return std::clamp<std::size_t>(k, 2, n);
}

void write_coordinate_dump(std::ostream& os, const SparseMatrix& x, std::size_t sparsity_k,
                           std::uint64_t seed) {
  os << '%' << x.n() << ' ' << sparsity_k << ' ' << seed << '\n';
  const auto& data = x.data();
  char line[128];
  for (Eigen::Index j = 0; j < data.outerSize(); ++j) {
    for (SparseCMatrix::InnerIterator it(data, j); it; ++it) {
      std::snprintf(line, sizeof line, "%lld %lld %.17g %.17g\n", static_cast<long long>(it.row()),
                    static_cast<long long>(it.col()), it.value().real(), it.value().imag());
      os << line;
    }
  }
}

}  // namespace spiked
