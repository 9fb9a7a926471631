#include "spiked/outlier_locator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <lapacke.h>

namespace spiked {

namespace {

std::string fmt_complex(Complex z) {
  std::ostringstream os;
  os.precision(10);
  os << "(" << z.real() << ", " << z.imag() << ")";
  return os.str();
}

double point_to_set(Complex z, std::span<const Complex> set) {
  double best = std::numeric_limits<double>::infinity();
  for (Complex w : set) best = std::min(best, std::abs(z - w));
  return best;
}

std::vector<Complex> run_zgeev(CMatrix a, CMatrix* vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  if (a.rows() != a.cols()) throw Error(ErrorKind::kDimension, "eigensolver needs a square matrix");
  if (static_cast<std::size_t>(n) > kDenseGuard) {
    throw Error(ErrorKind::kSize, "dense eigensolver guard exceeded (n = " + std::to_string(n) + ")");
  }
  std::vector<Complex> w(static_cast<std::size_t>(n));
  if (n == 0) return w;
  CMatrix vr;
  if (vectors != nullptr) vr.resize(n, n);
  const lapack_int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', vectors != nullptr ? 'V' : 'N', n, reinterpret_cast<lapack_complex_double*>(a.data()),
      n, reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, 1,
      vectors != nullptr ? reinterpret_cast<lapack_complex_double*>(vr.data()) : nullptr, vectors != nullptr ? n : 1);
  if (info != 0) {
    throw Error(ErrorKind::kOracle, "zgeev failed with info = " + std::to_string(info));
  }
  if (vectors != nullptr) {
    for (Eigen::Index j = 0; j < vr.cols(); ++j) vr.col(j).normalize();
    *vectors = std::move(vr);
  }
  return w;
}

struct DetEvaluation {
  Complex det;
  CompressedResolvent compressed;
};

DetEvaluation evaluate_det(const SparseMatrix& x, const Perturbation& e, Complex lambda,
                           const FactorizeOptions& fopts, std::optional<ResolventHandle>* handle_out) {
  ResolventHandle h(x, lambda, fopts);
  DetEvaluation out{Complex(0.0), compressed_resolvent(h, e)};
  out.det = out.compressed.i_plus_m().fullPivLu().determinant();
  if (handle_out != nullptr) handle_out->emplace(std::move(h));
  return out;
}

}  // namespace

double hausdorff_distance(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (Complex z : a) d = std::max(d, point_to_set(z, b));
  for (Complex z : b) d = std::max(d, point_to_set(z, a));
  return d;
}

std::vector<Complex> dense_spectrum(const CMatrix& y) { return run_zgeev(y, nullptr); }

DenseEigensystem dense_eigensystem(const CMatrix& y) {
  DenseEigensystem out;
  out.values = run_zgeev(y, &out.vectors);
  return out;
}

CMatrix assemble_y(const SparseMatrix& x, const Perturbation& e) {
  if (x.n() != e.n()) throw Error(ErrorKind::kDimension, "X and E dimensions differ");
  if (x.n() > kDenseGuard) {
    throw Error(ErrorKind::kSize, "dense assembly of n = " + std::to_string(x.n()) + " exceeds the guard");
  }
  return x.to_dense() + assemble_dense(e, kDenseGuard);
}

double eigen_residual(const SparseMatrix& x, const Perturbation& e, Complex lambda, const CVector& v) {
  return (x.apply(v) + e.apply(v) - lambda * v).norm();
}

OutlierRoot locate_outlier_newton(const SparseMatrix& x, const Perturbation& e, Complex mu_init,
                                  const NewtonOptions& options, std::span<const Complex> deflate) {
  const double floor = 1.0 + 0.5 * options.epsilon_band;
  Complex lambda = mu_init;
  int iterations = 0;
  bool step_converged = false;
  double prev_step = 0.0;
  double prev_ratio = -1.0;

  for (; iterations < options.max_iter; ++iterations) {
    if (!(std::abs(lambda) > floor)) {
      throw Error(ErrorKind::kLeftOutlierRegion,
                  "Newton iterate " + fmt_complex(lambda) + " entered |lambda| <= " + std::to_string(floor));
    }
    std::optional<ResolventHandle> handle;
    const DetEvaluation eval = evaluate_det(x, e, lambda, options.factorize, &handle);
    // Near a multiple root |det| shrinks like the power of the distance while
    // sigma_min shrinks only linearly, so both are required before stopping.
    if (std::abs(eval.det) <= options.tol &&
        smallest_singular_value(eval.compressed.i_plus_m()) <= options.singular_value_guard) {
      break;
    }

    Complex log_derivative;
    if (options.derivative == DerivativeMode::kAnalytic) {
      const CMatrix dm = compressed_resolvent_derivative(*handle, eval.compressed);
      log_derivative = eval.compressed.i_plus_m().fullPivLu().solve(dm).trace();
    } else {
      const double h = 1e-6 * (1.0 + std::abs(lambda));
      const Complex plus = evaluate_det(x, e, lambda + h, options.factorize, nullptr).det;
      const Complex minus = evaluate_det(x, e, lambda - h, options.factorize, nullptr).det;
      log_derivative = (plus - minus) / (2.0 * h) / eval.det;
    }
    for (Complex root : deflate) log_derivative -= 1.0 / (lambda - root);
    if (!std::isfinite(log_derivative.real()) || !std::isfinite(log_derivative.imag()) ||
        log_derivative == Complex(0.0)) {
      throw Error(ErrorKind::kNoConvergence, "Newton derivative vanished at " + fmt_complex(lambda));
    }
    Complex step = 1.0 / log_derivative;
    // Steady linear contraction q marks a root of multiplicity about 1/(1 - q);
    // scaling the step by that multiplicity restores quadratic convergence.
    const double raw = std::abs(step);
    if (prev_step > 0.0) {
      const double ratio = raw / prev_step;
      if (ratio > 0.4 && ratio < 0.95 && std::abs(ratio - prev_ratio) < 0.05) {
        step *= std::min(std::round(1.0 / (1.0 - ratio)), static_cast<double>(e.rank()));
      }
      prev_ratio = ratio;
    }
    prev_step = raw;
    lambda -= step;
    if (std::abs(step) <= 1e-14 * (1.0 + std::abs(lambda))) {
      step_converged = true;
      ++iterations;
      break;
    }
  }
  if (iterations >= options.max_iter && !step_converged) {
    throw Error(ErrorKind::kNoConvergence, "Newton exceeded " + std::to_string(options.max_iter) +
                                               " iterations from " + fmt_complex(mu_init));
  }
  if (!(std::abs(lambda) > floor)) {
    throw Error(ErrorKind::kLeftOutlierRegion, "Newton root " + fmt_complex(lambda) + " lies inside the band");
  }

  const DetEvaluation final_eval = evaluate_det(x, e, lambda, options.factorize, nullptr);
  OutlierRoot root{lambda, std::abs(final_eval.det), smallest_singular_value(final_eval.compressed.i_plus_m()),
                   iterations};
  if (!(root.det_modulus <= options.tol) || !(root.smallest_singular_value <= options.singular_value_guard)) {
    throw Error(ErrorKind::kNoConvergence, "Newton stopped at " + fmt_complex(lambda) +
                                               " with |det| = " + std::to_string(root.det_modulus) +
                                               ", sigma_min = " + std::to_string(root.smallest_singular_value));
  }
  return root;
}

namespace {

// Kernel dimension of I + M at a root that coincides with earlier roots; a
// genuinely repeated eigenvalue keeps one kernel direction per copy.
std::size_t repeated_kernel_dim(const SparseMatrix& x, const Perturbation& e, Complex lambda,
                                const NewtonOptions& options) {
  try {
    const CompressedResolvent m = compressed_resolvent(ResolventHandle(x, lambda, options.factorize), e);
    return kernel_basis(m, options.singular_value_guard).size();
  } catch (const Error&) {
    return 0;
  }
}

}  // namespace

SpikeRoots locate_spike_outliers(const SparseMatrix& x, const Perturbation& e, Complex mu,
                                 const NewtonOptions& options) {
  const SpikeBlock& block = e.block_of(mu);
  SpikeRoots out;
  out.mu = block.mu;
  out.multiplicity = block.columns.size();
  const std::size_t k = out.multiplicity;

  std::vector<Complex> found;
  for (std::size_t j = 0; j < k; ++j) {
    const Complex start =
        k == 1 ? block.mu
               : block.mu * (1.0 + 1e-2 * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) /
                                                              static_cast<double>(k)));
    try {
      const OutlierRoot root = locate_outlier_newton(x, e, start, options, found);
      const auto coinciding = static_cast<std::size_t>(
          std::count_if(found.begin(), found.end(), [&](Complex z) { return std::abs(z - root.lambda) < 1e-4; }));
      if (coinciding > 0 && repeated_kernel_dim(x, e, root.lambda, options) <= coinciding) {
        out.failures.push_back("start " + fmt_complex(start) + ": duplicate root " + fmt_complex(root.lambda));
        continue;
      }
      const double own = std::abs(root.lambda - block.mu);
      const bool foreign = std::any_of(e.blocks().begin(), e.blocks().end(), [&](const SpikeBlock& b) {
        return b.mu != block.mu && std::abs(root.lambda - b.mu) < own;
      });
      if (foreign) {
        out.failures.push_back("start " + fmt_complex(start) + ": root " + fmt_complex(root.lambda) +
                               " is closer to another spike");
        continue;
      }
      found.push_back(root.lambda);
      out.roots.push_back(root);
    } catch (const Error& err) {
      out.failures.push_back("start " + fmt_complex(start) + ": " + err.what());
    }
  }
  return out;
}

double auto_epsilon_band(const SpikeSpec& spec) {
  if (spec.spikes.empty()) throw Error(ErrorKind::kConfig, "auto epsilon_band needs at least one spike");
  double min_modulus = std::numeric_limits<double>::infinity();
  for (const auto& s : spec.spikes) min_modulus = std::min(min_modulus, std::abs(s.mu));
  return 0.1 * (min_modulus - 1.0);
}

SpectralReport spectral_report_from_eigenvalues(std::span<const Complex> eigenvalues, const Perturbation& e,
                                                double epsilon_band) {
  if (!(epsilon_band > 0.0)) throw Error(ErrorKind::kConfig, "epsilon_band must be positive");
  SpectralReport report;
  report.epsilon_band = epsilon_band;
  for (Complex z : eigenvalues) {
    if (std::abs(z) >= 1.0 + epsilon_band) report.outliers.push_back(z);
  }
  for (const auto& b : e.blocks()) {
    if (std::abs(b.mu) > 1.0) {
      report.spike_targets.push_back(b.mu);
      report.m_n += b.columns.size();
    }
  }
  report.count_match = report.outliers.size() == report.m_n;
  report.hausdorff = hausdorff_distance(report.outliers, report.spike_targets);
  return report;
}

SpectralReport spectral_report(const SparseMatrix& x, const Perturbation& e, double epsilon_band) {
  const auto values = dense_spectrum(assemble_y(x, e));
  return spectral_report_from_eigenvalues(values, e, epsilon_band);
}

}  // namespace spiked
