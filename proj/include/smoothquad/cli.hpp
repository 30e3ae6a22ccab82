#pragma once

// Config loading, presets and experiment execution behind the command-line
// tool. Kept in a library so the tests can drive it without a subprocess.

#include "smoothquad/analysis.hpp"
#include "smoothquad/estimators.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace smoothquad::cli {

/// Invalid configuration; the message starts with the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class ExperimentKind { Price, QuadStudy, StatStudy, WeakError, MixedDiff, SmoothingStudy, DecayProbe };
enum class OutputFormat { Csv, Jsonl };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& s);

struct StudySettings {
  std::optional<double> reference;
  std::vector<std::size_t> budgets;     // quad-study
  std::vector<std::size_t> samples;     // stat-study
  std::vector<std::size_t> steps;       // weak-error
  bool couple_exact = false;
  double ci_factor = 1.0;
  std::vector<std::size_t> directions;  // mixed-diff
  int k_max = 6;
  std::vector<std::size_t> m_lag_grid;  // smoothing-study
  std::vector<double> tol_grid;
  std::vector<double> offset_grid;
  int max_levels = 3;                   // decay-probe
  std::size_t probe_points = 64;
  bool decompose = false;               // price: add the three-way error split
};

struct RunConfig {
  ExperimentKind kind = ExperimentKind::Price;
  std::string name;  // output basename
  PricingPlan plan;
  StudySettings study;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
  OutputFormat format = OutputFormat::Csv;
  std::string source;  // config text as read
};

/// Command-line overrides; unset fields keep the file's values.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<OutputFormat> format;
};

/// Parses and validates a config (YAML syntax). Throws ConfigError.
RunConfig parse_config(const std::string& text, const Overrides& overrides = {});
RunConfig load_config(const std::string& path, const Overrides& overrides = {});

struct Preset {
  std::string name;
  std::string description;
  std::string parameters;
  double reference;
  double reference_error;  // 0 when the reference is not a sampled value
  /// YAML fragment with the model and payoff blocks.
  std::string blocks;
};

const std::vector<Preset>& presets();
/// Throws ConfigError("preset", ...) for unknown names.
const Preset& find_preset(const std::string& name);
void list_presets(std::ostream& out);

/// Output rows of one experiment.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct RunOutput {
  Table table;
  std::optional<StudyResult> study;
  std::optional<Estimate> estimate;
  double wall_seconds = 0.0;
};

RunOutput execute(const RunConfig& cfg);

/// Resolved plan as JSON text (printed by --dry-run).
std::string describe(const RunConfig& cfg);

void write_table(const Table& t, OutputFormat format, std::ostream& out);
/// Sidecar JSON: config echo, seed, version, wall time, study metadata.
std::string metadata_json(const RunConfig& cfg, const RunOutput& out);

/// Full command-line entry point. Returns 0 on success, 2 on invalid
/// configuration or arguments, 3 on runtime failure.
int main_entry(int argc, char** argv);

}  // namespace smoothquad::cli
