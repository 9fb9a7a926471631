#include <cmath>
#include <sstream>
#include <string>

#include "doctest.h"
#include "spiked/matrix_model.hpp"

using namespace spiked;

TEST_CASE("entry distributions are centred with unit second moment") {
  constexpr std::uint64_t kDraws = 200000;
  const double tol = 5.0 / std::sqrt(double(kDraws));
  for (auto dist : {EntryDistribution::kComplexGaussian, EntryDistribution::kRealGaussian,
                    EntryDistribution::kRademacher}) {
    CAPTURE(to_string(dist));
    const CounterRng rng(2024, RngStream::kMatrix);
    Complex sum{0.0, 0.0};
    double sq = 0.0;
    for (std::uint64_t c = 0; c < kDraws; ++c) {
      const Complex chi = draw_entry(dist, rng, c);
      sum += chi;
      sq += std::norm(chi);
    }
    CHECK(std::abs(sum) / kDraws <= tol);
    CHECK(std::abs(sq / kDraws - 1.0) <= tol);
  }
}

TEST_CASE("distribution names round-trip and unknown names are rejected") {
  for (auto dist : {EntryDistribution::kComplexGaussian, EntryDistribution::kRealGaussian,
                    EntryDistribution::kRademacher}) {
    CHECK(parse_distribution(to_string(dist)) == dist);
  }
  CHECK_THROWS_AS(parse_distribution("cauchy"), Error);
}

TEST_CASE("full sparsity with Rademacher entries gives a dense +-1/2 matrix") {
  const SparseMatrix x = sample_sparse_matrix({4, 4, EntryDistribution::kRademacher, 17});
  CHECK(x.nnz() == 16);
  const CMatrix d = x.to_dense();
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(d(i, j)) == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  const SparseModelConfig cfg{300, 40, EntryDistribution::kComplexGaussian, 77};
  const SparseMatrix a = sample_sparse_matrix(cfg);
  const SparseMatrix b = sample_sparse_matrix(cfg);
  CHECK(a == b);
  SparseModelConfig other = cfg;
  other.seed = 78;
  CHECK_FALSE(a == sample_sparse_matrix(other));
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(sample_sparse_matrix({0, 1, EntryDistribution::kRademacher, 0}), Error);
  CHECK_THROWS_AS(sample_sparse_matrix({10, 11, EntryDistribution::kRademacher, 0}), Error);
  CHECK_THROWS_AS(sample_sparse_matrix({10, 0, EntryDistribution::kRademacher, 0}), Error);
  try {
    sample_sparse_matrix({10, 11, EntryDistribution::kRademacher, 0});
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::kConfig);
  }
}

TEST_CASE("default K schedule") {
  CHECK(default_k_schedule(1500, 0.7) == 168);
  CHECK(default_k_schedule(2, 0.5) == 2);
  CHECK(default_k_schedule(400, 0.7) == 67);
  CHECK(default_k_schedule(1600, 0.7) == 175);
  CHECK_THROWS_AS(default_k_schedule(100, 1.0), Error);
  CHECK_THROWS_AS(default_k_schedule(100, 0.0), Error);
  CHECK_THROWS_AS(default_k_schedule(1, 0.5), Error);
}

TEST_CASE("entry moments at n=2000, K=140 over 20 seeds") {
  constexpr std::size_t n = 2000;
  double mean_modulus_sum = 0.0;
  double row_energy_sum = 0.0;
  constexpr int kSeeds = 20;
  for (int s = 0; s < kSeeds; ++s) {
    const SparseMatrix x = sample_sparse_matrix({n, 140, EntryDistribution::kComplexGaussian, std::uint64_t(1000 + s)});
    const auto& d = x.data();
    Complex sum{0.0, 0.0};
    double energy = 0.0;
    for (Eigen::Index t = 0; t < d.nonZeros(); ++t) {
      sum += d.valuePtr()[t];
      energy += std::norm(d.valuePtr()[t]);
    }
    mean_modulus_sum += std::abs(sum) / double(n * n);
    row_energy_sum += energy / double(n);
  }
  CHECK(mean_modulus_sum / kSeeds <= 0.01);
  CHECK(std::abs(row_energy_sum / kSeeds - 1.0) <= 0.1);
}

TEST_CASE("variance of a fixed entry and the nonzero fraction match the model") {
  constexpr std::size_t n = 500;
  constexpr std::size_t k = 50;
  constexpr int kSamples = 100;
  const double p = double(k) / double(n);
  std::vector<double> sq;
  for (int s = 0; s < kSamples; ++s) {
    const SparseMatrix x = sample_sparse_matrix({n, k, EntryDistribution::kComplexGaussian, std::uint64_t(s)});
    sq.push_back(std::norm(x.data().coeff(3, 7)));

    const double frac = double(x.nnz()) / double(n * n);
    const double se = std::sqrt(p * (1.0 - p) / double(n * n));
    CHECK(std::abs(frac - p) <= 3.0 * se);
  }
  double mean = 0.0;
  for (double v : sq) mean += v;
  mean /= kSamples;
  double var = 0.0;
  for (double v : sq) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (kSamples - 1) / kSamples);
  CHECK(std::abs(mean - 1.0 / double(n)) <= 3.0 * se);
}

TEST_CASE("coordinate dump format") {
  const SparseMatrix x = sample_sparse_matrix({6, 3, EntryDistribution::kRademacher, 5});
  std::ostringstream os;
  write_coordinate_dump(os, x, 3, 5);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "%6 3 5");
  std::size_t lines = 0;
  long long row = 0, col = 0;
  double re = 0.0, im = 0.0;
  while (is >> row >> col >> re >> im) {
    CHECK(row >= 0);
    CHECK(row < 6);
    CHECK(col >= 0);
    CHECK(col < 6);
    CHECK(x.data().coeff(row, col) == Complex(re, im));
    ++lines;
  }
  CHECK(lines == x.nnz());
}
