#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spiked/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"spiked: outliers of finite-rank perturbations of sparse non-Hermitian random matrices"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  int threads = -1;
  std::size_t trial = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Experiment config (JSON)")->required();
    sub->add_option("--out", out, "Output directory (overrides the config)");
    sub->add_option("--threads", threads, "Worker threads, 0 = auto")->check(CLI::NonNegativeNumber);
  };

  auto* run = app.add_subcommand("run", "Run the convergence study and write overlaps.csv, trials.json, summary.json");
  add_common(run);
  auto* lemmas = app.add_subcommand("verify-lemmas", "Check the resolvent limit laws and write lemma_report.json");
  add_common(lemmas);
  auto* plot = app.add_subcommand("spectrum-plot", "Write spectrum_<n>_<trial>.svg for one reproducible trial");
  add_common(plot);
  plot->add_option("--trial", trial, "Trial index");
  auto* version = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? spiked::kExitOk : spiked::kExitConfig;
  }

  if (version->parsed()) {
    std::cout << "spiked " << spiked::kVersion << '\n';
    return spiked::kExitOk;
  }

  spiked::CommandOptions opts;
  opts.config_path = config;
  if (!out.empty()) opts.out_dir = out;
  if (threads >= 0) opts.threads = static_cast<unsigned>(threads);
  opts.trial_index = trial;

  try {
    if (run->parsed()) return spiked::cmd_run(opts, std::cerr);
    if (lemmas->parsed()) return spiked::cmd_verify_lemmas(opts, std::cerr);
    if (plot->parsed()) return spiked::cmd_spectrum_plot(opts, std::cerr);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return spiked::kExitRuntime;
  }
  return spiked::kExitConfig;
}
