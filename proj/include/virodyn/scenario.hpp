#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "virodyn/lyapunov.hpp"
#include "virodyn/simulate.hpp"

namespace virodyn {

struct ConfigError : std::runtime_error {
  int line;
  ConfigError(int line_, const std::string& what)
      : std::runtime_error("config line " + std::to_string(line_) + ": " + what),
        line(line_) {}
};

struct RunSettings {
  double T = 0.0;
  double h_step = 0.05;
  std::string out = "out";
  MonitorOptions monitor;
};

struct SweepSettings {
  std::string param;            // one of the eleven scalar names
  std::vector<double> values;   // non-empty
};

struct LyapunovSettings {
  bool auto_regime = true;              // evaluate the regime-matched functional
  std::vector<Functional> requested;    // explicit extras beyond auto
  double eps_mono = 1e-6;
};

struct Scenario {
  Parameters parameters;
  std::optional<InitialData> initial;
  std::optional<RunSettings> run;
  std::optional<SweepSettings> sweep;
  LyapunovSettings lyapunov;
  std::vector<std::string> warnings;
};

// Flat block/key grammar, one entry per line (see README). Throws
// ConfigError with a 1-based line number.
Scenario load_scenario_text(const std::string& text);
Scenario load_scenario_file(const std::string& path);

// Scalar parameter assignment by config name; throws std::invalid_argument
// on unknown names.
void set_scalar(Parameters& p, const std::string& name, double value);

}  // namespace virodyn
