// scenario.hpp - Configured runs: exact / SRWA / mean-field trajectories,
// CSV and manifest output, figure presets, and the oracle report.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "btc/analysis.hpp"
#include "btc/meanfield.hpp"

namespace btc {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kCsvHeader = "t,r_n,s,n,sx,sy,sz,sx2,sy2,sz2,syz_sym,purity";

// Invalid configuration; the CLI maps it to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class TimeUnit { periods, inverse_kappa };

struct TaggedTime {
  double value = 0.0;
  TimeUnit unit = TimeUnit::periods;

  double resolve(const ModelParams& p) const;
};

// "400 T0", "400T0", "12.5 1/kappa"
TaggedTime parse_tagged_time(const std::string& text, const std::string& field);

enum class Method { exact, srwa, mft1, cumulant2 };
std::string method_name(Method m);

struct ScenarioConfig {
  std::string label = "run";
  int n_spins = 10;
  double omega0 = 40.0;
  double kappa = 1.0;
  TaggedTime t_end{20.0, TimeUnit::periods};
  int steps_per_period = 200;  // dt = T0 / steps_per_period
  int sample_every = 10;
  // all_down | coherent:THETA,PHI | state:PATH
  std::string initial_state = "all_down";
  std::vector<Method> methods{Method::exact};
  // subset of {fidelity, period, decay, meanfield_error}
  std::vector<std::string> analyses;
  bool srwa_positivity_check = true;
  double srwa_positivity_tolerance = 0.0;  // <= 0: default rule
  std::filesystem::path output;

  ModelParams params() const;
  double dt() const;
  void validate() const;  // throws ConfigError
  std::map<std::string, std::string> as_map() const;
};

// Flat key=value text; '#' starts a comment. Unknown keys are errors.
void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& value);
ScenarioConfig parse_config_text(const std::string& text, ScenarioConfig base = {});
ScenarioConfig load_config(const std::filesystem::path& path);
void apply_overrides(ScenarioConfig& cfg, const std::vector<std::string>& overrides);

DensityMatrix make_initial_state(const SpinBasis& basis, const std::string& spec);

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string sha256;
};

struct OracleDelta {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool gate = true;  // false: reported only
  bool pass() const { return !gate || value < tolerance; }
};

struct RunResult {
  std::vector<OutputFile> files;
  std::vector<std::string> notes;
};

std::string format_csv_row(double t, const StroboscopicTime& st, const MomentRecord& m);
std::string trajectory_csv(const Trajectory& traj);

std::string sha256_hex(const std::string& data);

// Writes `content` below dir and records it.
void write_output(const std::filesystem::path& dir, const std::string& name, const std::string& content,
                  RunResult& result);

RunResult run_scenario(const ScenarioConfig& cfg);

// Fast oracle comparisons: averaged-generator and first-order Magnus
// transcriptions for N in {2, 4}, w/k in {40, 80}; G(s) against the
// cumulative integral at four s values; plus the literal-coefficient G(s).
std::vector<OracleDelta> oracle_report();

enum class Figure { fig1, fig2, fig3, fig4 };
Figure parse_figure(const std::string& name);

RunResult reproduce_figure(Figure which, const std::filesystem::path& out, bool smoke);

struct SteadyStateRow {
  double ratio = 0.0;
  double max_diff = 0.0;
  double sy_numeric = 0.0;
  double sy_predicted = 0.0;  // k (N + 2) / (3 w)
};

std::vector<SteadyStateRow> steady_state_table(int n_spins, const std::vector<double>& ratios);

}  // namespace btc
