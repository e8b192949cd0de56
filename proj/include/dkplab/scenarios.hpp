#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dkplab {

// One experiment, fully determined by this struct plus the library version:
// identical configs reproduce byte-identical artifacts.
struct ScenarioConfig {
  std::string scenario;  // S1..S7

  int n = 1;
  double h = 0.1;
  double x_max = 4.0;
  double t_max = 4.0;

  std::string family = "identity";
  std::map<std::string, double> params;

  bool pole_at_infinity = false;
  double pole_y0 = 0.0;
  double pole_y1 = 0.0;
  double pole_t = 1.0;
  double infinity_tol = 0.05;

  double window_r0 = 1.0;
  int window_levels = 3;
  double window_extent = 1.0;

  std::string mollifier = "bump";
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  std::vector<double> eps_sweep;      // S4; defaults to {0.02, 0.05, 0.1, 0.2}
  double eps_target = 0.1;            // S6 change-of-pole target
  std::string graph_family = "tilt";  // S7: flat | tilt | parabola | power
  double graph_param = 0.3;           // slope / curvature / exponent
};

struct Diagnostic {
  std::string severity;  // "error" | "warning"
  std::string field;     // dotted path into the config
  int line = 0;          // 1-based line in the file, 0 when unknown
  std::string message;
};

// Parses and applies defaults; throws std::runtime_error carrying the first
// validation error. Unknown keys are errors (they are always typos).
ScenarioConfig load_config(const std::string& path);

// Full schema + cross-field sweep; throws only when the file cannot be read.
std::vector<Diagnostic> validate_config(const std::string& path);

// (id, one-line description) pairs, S1..S7.
std::vector<std::pair<std::string, std::string>> scenario_catalog();

// Runs one scenario; writes CSV artifacts plus run.json (config echo,
// version, summary numbers) and manifest.json (files with fnv1a64 checksums)
// under cfg.output_dir. Returns the artifact names in write order. Module
// errors are rethrown prefixed with the scenario id.
std::vector<std::string> run_scenario(const ScenarioConfig& cfg);

}  // namespace dkplab
