#include <sstream>
#include <string>
#include <vector>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spiked/cli_io.hpp"

namespace py = pybind11;
using namespace spiked;

namespace {

SpikeSpec spec_from(const std::vector<std::pair<Complex, std::size_t>>& spikes, double tau) {
  SpikeSpec spec;
  spec.non_normality_tau = tau;
  for (const auto& [mu, k] : spikes) spec.spikes.push_back({mu, k});
  return spec;
}

}  // namespace

PYBIND11_MODULE(_spiked, m) {
  m.doc() = "Outliers of finite-rank perturbations of sparse non-Hermitian random matrices";

  static py::exception<Error> spiked_error(m, "SpikedError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::kConfig) {
        PyErr_SetString(PyExc_ValueError, err.what());
      } else {
        PyErr_SetString(spiked_error.ptr(), err.what());
      }
    }
  });

  m.def("version", [] { return std::string(kVersion); });
  m.def("default_k_schedule", &default_k_schedule, py::arg("n"), py::arg("exponent") = 0.7);
  m.def("overlap_limit", &overlap_limit, py::arg("mu"));
  m.def(
      "hausdorff_distance",
      [](const std::vector<Complex>& a, const std::vector<Complex>& b) { return hausdorff_distance(a, b); },
      py::arg("a"), py::arg("b"));

  m.def(
      "sample_matrix",
      [](std::size_t n, std::size_t k, const std::string& distribution, std::uint64_t seed) {
        if (n > kDenseGuard) throw Error(ErrorKind::kConfig, "n exceeds the dense guard");
        return sample_sparse_matrix({n, k, parse_distribution(distribution), seed}).to_dense();
      },
      py::arg("n"), py::arg("k"), py::arg("distribution") = "complex_gaussian", py::arg("seed") = 0,
      "Dense copy of the sparse matrix X (entries scaled by 1/sqrt(K)).");

  m.def(
      "dense_spectrum", [](const CMatrix& y) { return dense_spectrum(y); }, py::arg("matrix"));

  m.def(
      "run_trial_json",
      [](std::size_t n, std::size_t k, const std::vector<std::pair<Complex, std::size_t>>& spikes, double tau,
         std::uint64_t seed, bool zero_bulk) {
        TrialOptions opts;
        opts.zero_bulk = zero_bulk;
        py::gil_scoped_release release;
        const TrialResult t =
            run_trial({n, k, EntryDistribution::kComplexGaussian, 0}, spec_from(spikes, tau), seed, opts);
        return trial_to_json(t).dump();
      },
      py::arg("n"), py::arg("k"), py::arg("spikes"), py::arg("tau") = 0.0, py::arg("seed") = 0,
      py::arg("zero_bulk") = false);

  m.def(
      "run_study",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = parse_config(config_json, "<python>");
        std::ostringstream csv;
        std::string trials;
        {
          py::gil_scoped_release release;
          const ConvergenceTable table = run_convergence_study(to_study_config(cfg));
          write_overlaps_csv(csv, table);
          trials = trials_to_json(table).dump();
        }
        return py::make_tuple(csv.str(), trials);
      },
      py::arg("config_json"), "Returns (overlaps.csv text, trials JSON text).");

  m.def(
      "verify_lemmas_json",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = parse_config(config_json, "<python>");
        py::gil_scoped_release release;
        return lemma_report_to_json(run_lemma_suite(to_lemma_config(cfg))).dump();
      },
      py::arg("config_json"));

  m.attr("OVERLAPS_HEADER") = std::string(kOverlapsHeader);
}
