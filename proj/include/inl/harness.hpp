#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace inl {

enum class Experiment { Born, CollapseTime, Competition, Kaon, Highdim, Props };
enum class OutputFormat { Csv, Json };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& name);

struct ExperimentConfig {
  Experiment experiment = Experiment::Born;
  double alpha = 0.5;
  double eta = 1.0;
  double gamma = 1.0;
  int n = 2;
  int m = 1;
  std::size_t trajectories = 1000;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  /// Named tolerances; eps_fact is the factorization tolerance.
  std::map<std::string, double> tolerances{{"eps_fact", 1e-9}};
  /// Empty selects inl_<experiment>.<csv|json>.
  std::string out_path;
  OutputFormat format = OutputFormat::Csv;
  /// 0 selects the number of hardware threads.
  std::size_t threads = 0;
  double theta0 = 1.5707963267948966;
  double phi0 = 0.0;
  double tmax = 100.0;

  /// Throws ConfigError.
  void validate() const;
  std::string data_path() const;
  std::string manifest_path() const;
  nlohmann::json to_json() const;
};

/// Applies one key = value setting. Throws ConfigError on unknown keys or
/// unparsable values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Reads flat "key = value" lines ('#' starts a comment).
std::map<std::string, std::string> read_config_file(const std::string& path);

struct RunManifest {
  nlohmann::json config;
  std::string version;
  double wall_seconds = 0.0;
  nlohmann::json summary;
  std::string data_file;

  nlohmann::json to_json() const;
};

/// Tabular experiment output before serialization.
struct DataTable {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
};

struct ExperimentOutput {
  DataTable table;
  nlohmann::json summary;
};

/// Runs the experiment without touching the file system.
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

/// CSV with a "# manifest=<name>" line, a header row and %.17g numbers.
std::string render_csv(const DataTable& t, const std::string& manifest_name);
std::string render_json(const DataTable& t, const std::string& manifest_name, Experiment e);

/// Validates, runs, writes the data file and the manifest.
RunManifest run(const ExperimentConfig& cfg);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// Command-line entry point: inl <experiment> [flags]. Error records go to
/// `err` as one JSON line.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

const char* version_string();

}  // namespace inl
