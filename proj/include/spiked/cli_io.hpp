#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spiked/experiments.hpp"

namespace spiked {

inline constexpr const char* kVersion = "0.3.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct LemmaSettings {
  /// 0 = last entry of n_list.
  std::size_t n = 0;
  Complex z{2.0, 0.0};
  Complex z_shift{0.01, 0.0};
  std::size_t seeds = 20;
  std::size_t block_rows = 2;
};

struct ExperimentConfig {
  std::vector<std::size_t> n_list;
  double k_exponent = 0.7;
  std::vector<std::size_t> k_list;
  SpikeSpec spikes;
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  EntryDistribution distribution = EntryDistribution::kComplexGaussian;
  /// Empty means "auto".
  std::optional<double> epsilon_band;
  std::filesystem::path output_dir = "spiked_out";
  bool spectral_report = true;
  bool zero_bulk = false;
  unsigned threads = 0;
  LemmaSettings lemma;
};

/// Parses and validates a JSON experiment config. Every error is an
/// Error(kConfig) whose message names the source and the offending field (or the
/// line and column for syntax errors).
ExperimentConfig parse_config(std::string_view text, std::string_view source_name = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

StudyConfig to_study_config(const ExperimentConfig& cfg);
LemmaSuiteConfig to_lemma_config(const ExperimentConfig& cfg);

/// Column list of overlaps.csv, in order.
inline constexpr std::string_view kOverlapsHeader =
    "n,k,mu_re,mu_im,multiplicity,trials,failures,mean_overlap,std_overlap,limit,mean_hausdorff,count_success_rate";

void write_overlaps_csv(std::ostream& os, const ConvergenceTable& table);
nlohmann::json trial_to_json(const TrialResult& trial);
nlohmann::json trials_to_json(const ConvergenceTable& table);
nlohmann::json lemma_report_to_json(const LemmaSuiteReport& report);

/// Scatter of eigenvalues with the unit circle, the 1 + epsilon circle and spike markers.
std::string spectrum_svg(std::span<const Complex> eigenvalues, std::span<const Complex> spikes, double epsilon_band);

struct CommandOptions {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out_dir;
  std::optional<unsigned> threads;
  std::size_t trial_index = 0;
};

int cmd_run(const CommandOptions& opts, std::ostream& log);
int cmd_verify_lemmas(const CommandOptions& opts, std::ostream& log);
int cmd_spectrum_plot(const CommandOptions& opts, std::ostream& log);

}  // namespace spiked
