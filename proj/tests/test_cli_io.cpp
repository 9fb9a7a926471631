#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "spiked/cli_io.hpp"

using namespace spiked;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("spiked_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

/// Minimal XML well-formedness check: declaration, balanced and properly nested tags.
bool balanced_xml(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  bool saw_root = false;
  while ((pos = text.find('<', pos)) != std::string::npos) {
    const std::size_t end = text.find('>', pos);
    if (end == std::string::npos) return false;
    const std::string tag = text.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return false;
    if (tag.front() == '?') continue;
    if (tag.front() == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    const std::string name = tag.substr(0, tag.find_first_of(" \n/"));
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    if (stack.empty()) {
      if (saw_root) return false;
      saw_root = true;
    }
    if (tag.back() != '/') stack.push_back(name);
  }
  return saw_root && stack.empty();
}

const char* kMinimalConfig = R"({
  "n_list": [120],
  "spikes": [{"re": 2.0, "im": 0.0, "multiplicity": 1}],
  "trials": 1,
  "base_seed": 7,
  "threads": 1
})";

}  // namespace

TEST_CASE("config parsing accepts a full config") {
  const ExperimentConfig cfg = parse_config(R"({
    "n_list": [100, 200],
    "k_list": [20, 30],
    "spikes": [{"re": 2.0, "im": 0.5, "multiplicity": 2}, {"re": -3.0}],
    "non_normality_tau": 0.25,
    "trials": 4,
    "base_seed": 12345678901,
    "distribution": "rademacher",
    "epsilon_band": 0.05,
    "output_dir": "out",
    "spectral_report": false,
    "lemma": {"n": 150, "seeds": 3}
  })");
  CHECK(cfg.n_list == std::vector<std::size_t>{100, 200});
  CHECK(cfg.k_list == std::vector<std::size_t>{20, 30});
  REQUIRE(cfg.spikes.spikes.size() == 2);
  CHECK(cfg.spikes.spikes[0].mu == Complex(2.0, 0.5));
  CHECK(cfg.spikes.spikes[0].multiplicity == 2);
  CHECK(cfg.spikes.spikes[1].multiplicity == 1);
  CHECK(cfg.spikes.non_normality_tau == 0.25);
  CHECK(cfg.trials == 4);
  CHECK(cfg.base_seed == 12345678901ULL);
  CHECK(cfg.distribution == EntryDistribution::kRademacher);
  REQUIRE(cfg.epsilon_band.has_value());
  CHECK(*cfg.epsilon_band == 0.05);
  CHECK_FALSE(cfg.spectral_report);
  CHECK(cfg.lemma.n == 150);
  CHECK(cfg.lemma.seeds == 3);

  const LemmaSuiteConfig lemma = to_lemma_config(cfg);
  CHECK(lemma.n == 150);
  const StudyConfig study = to_study_config(cfg);
  CHECK(study.trials == 4);
  CHECK(study.trial.epsilon_band == cfg.epsilon_band);
}

TEST_CASE("config errors name the field") {
  const auto message_of = [](const char* text) {
    try {
      parse_config(text, "cfg.json");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::kConfig);
      return std::string(err.what());
    }
    return std::string("no error");
  };
  CHECK(message_of(R"({"n_list": [100], "spikes": [{"re": 1.01}]})").find("delta-floor") != std::string::npos);
  CHECK(message_of(R"({"n_list": [100], "spikes": [{"re": 2}], "bogus": 1})").find("bogus") != std::string::npos);
  CHECK(message_of(R"({"n_list": [200, 100], "spikes": [{"re": 2}]})").find("n_list[1]") != std::string::npos);
  CHECK(message_of(R"({"n_list": [100], "spikes": [{"re": 2}], "k_exponent": 1.0})").find("k_exponent") !=
        std::string::npos);
  CHECK(message_of(R"({"n_list": [100], "spikes": [{"re": 2}], "trials": 0})").find("trials") != std::string::npos);
  CHECK(message_of(R"({"n_list": [100], "spikes": []})").find("spikes") != std::string::npos);
  CHECK(message_of(R"({"n_list": [100], "spikes": [{"re": 2}], "distribution": "cauchy"})").find("distribution") !=
        std::string::npos);
  CHECK(message_of(R"({"n_list": [100], "spikes": [{"re": 2}], "epsilon_band": -1})").find("epsilon_band") !=
        std::string::npos);
  CHECK(message_of("{\"n_list\": [100],\n \"spikes\": [}").find("cfg.json") != std::string::npos);
}

TEST_CASE("run writes the three outputs and reruns byte-identically") {
  TempDir dir("run");
  write_file(dir.path / "cfg.json", kMinimalConfig);
  CommandOptions opts;
  opts.config_path = dir.path / "cfg.json";
  opts.out_dir = dir.path / "a";
  std::ostringstream log;
  REQUIRE(cmd_run(opts, log) == kExitOk);
  for (const char* name : {"overlaps.csv", "trials.json", "summary.json"}) CHECK(fs::exists(dir.path / "a" / name));

  const std::string csv = read_file(dir.path / "a" / "overlaps.csv");
  const auto lines = lines_of(csv);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == kOverlapsHeader);
  CHECK(lines[1].rfind("120,", 0) == 0);

  const auto summary = nlohmann::json::parse(read_file(dir.path / "a" / "summary.json"));
  CHECK(summary.at("partial") == false);
  const auto trials = nlohmann::json::parse(read_file(dir.path / "a" / "trials.json"));
  CHECK(!trials.empty());

  opts.out_dir = dir.path / "b";
  REQUIRE(cmd_run(opts, log) == kExitOk);
  CHECK(read_file(dir.path / "b" / "overlaps.csv") == csv);
  CHECK(read_file(dir.path / "b" / "trials.json") == read_file(dir.path / "a" / "trials.json"));
}

TEST_CASE("run exit codes for config problems") {
  TempDir dir("bad");
  CommandOptions opts;
  opts.config_path = dir.path / "missing.json";
  std::ostringstream log;
  CHECK(cmd_run(opts, log) == kExitConfig);
  CHECK(cmd_verify_lemmas(opts, log) == kExitConfig);
  CHECK(cmd_spectrum_plot(opts, log) == kExitConfig);

  write_file(dir.path / "weak.json", R"({"n_list": [100], "spikes": [{"re": 1.01}]})");
  opts.config_path = dir.path / "weak.json";
  std::ostringstream weak_log;
  CHECK(cmd_run(opts, weak_log) == kExitConfig);
  CHECK(weak_log.str().find("delta-floor") != std::string::npos);

  write_file(dir.path / "huge.json", R"({"n_list": [6000], "spikes": [{"re": 2}]})");
  opts.config_path = dir.path / "huge.json";
  CHECK(cmd_spectrum_plot(opts, log) == kExitConfig);
}

TEST_CASE("CSV writer uses the declared schema") {
  ConvergenceTable table;
  ConvergenceRow row;
  row.n = 10;
  row.sparsity_k = 3;
  row.spike = {Complex(2.0, -1.0), 2};
  row.trials = 5;
  row.failures = 1;
  row.mean_overlap = 0.5;
  row.std_overlap = 0.125;
  row.limit = 0.8;
  row.mean_hausdorff = std::numeric_limits<double>::quiet_NaN();
  row.count_success_rate = 1.0;
  table.rows.push_back(row);
  std::ostringstream os;
  write_overlaps_csv(os, table);
  const auto lines = lines_of(os.str());
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "n,k,mu_re,mu_im,multiplicity,trials,failures,mean_overlap,std_overlap,limit,mean_hausdorff,"
                    "count_success_rate");
  CHECK(lines[1] == "10,3,2,-1,2,5,1,0.5,0.125,0.8,nan,1");
}

TEST_CASE("verify-lemmas on the zero bulk passes every deterministic check") {
  TempDir dir("lemmas");
  write_file(dir.path / "cfg.json", R"({
    "n_list": [60], "spikes": [{"re": 2}], "zero_bulk": true, "threads": 1,
    "lemma": {"seeds": 2}
  })");
  CommandOptions opts;
  opts.config_path = dir.path / "cfg.json";
  opts.out_dir = dir.path / "out";
  std::ostringstream log;
  REQUIRE(cmd_verify_lemmas(opts, log) == kExitOk);
  const auto report = nlohmann::json::parse(read_file(dir.path / "out" / "lemma_report.json"));
  CHECK(report.at("deterministic_ok") == true);
  const auto& norm = report.at("resolvent_norm");
  CHECK(norm.contains("candidate_inverse"));
  CHECK(norm.contains("candidate_inverse_sqrt"));
  CHECK(norm.contains("empirical_winner"));
}

TEST_CASE("spectrum plot of the zero bulk puts points at the spikes and at zero") {
  TempDir dir("plot");
  write_file(dir.path / "cfg.json", R"({
    "n_list": [20], "spikes": [{"re": 2}, {"re": 0, "im": -3}], "zero_bulk": true
  })");
  CommandOptions opts;
  opts.config_path = dir.path / "cfg.json";
  opts.out_dir = dir.path / "out";
  opts.trial_index = 3;
  std::ostringstream log;
  REQUIRE(cmd_spectrum_plot(opts, log) == kExitOk);
  const fs::path svg_path = dir.path / "out" / "spectrum_20_3.svg";
  REQUIRE(fs::exists(svg_path));
  const std::string svg = read_file(svg_path);
  CHECK(balanced_xml(svg));
  CHECK(svg.find("id=\"unit-circle\"") != std::string::npos);
  CHECK(svg.find("id=\"band-circle\"") != std::string::npos);

  const std::vector<Complex> eigs{Complex(2.0, 0.0), Complex(0.0, -3.0), Complex(0.0, 0.0)};
  const std::vector<Complex> spikes{Complex(2.0, 0.0), Complex(0.0, -3.0)};
  const std::string expected_points = spectrum_svg(eigs, spikes, 0.1);
  const std::regex point(R"re(<circle cx="([^"]+)" cy="([^"]+)" r="1.5"/>)re");
  std::vector<std::string> want, got;
  for (auto it = std::sregex_iterator(expected_points.begin(), expected_points.end(), point); it != std::sregex_iterator(); ++it)
    want.push_back((*it)[0]);
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), point); it != std::sregex_iterator(); ++it)
    got.push_back((*it)[0]);
  CHECK(got.size() == 20);
  for (const std::string& w : want) CHECK(std::find(got.begin(), got.end(), w) != got.end());
}

TEST_CASE("spectrum SVG is well formed") {
  const std::vector<Complex> eigs{Complex(0.3, 0.2), Complex(-0.5, 0.1), Complex(2.1, 0.0)};
  const std::vector<Complex> spikes{Complex(2.0, 0.0)};
  const std::string svg = spectrum_svg(eigs, spikes, 0.1);
  CHECK(balanced_xml(svg));
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK_FALSE(balanced_xml("<svg><g></svg></g>"));
}
