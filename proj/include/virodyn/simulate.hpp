#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "virodyn/model.hpp"

namespace virodyn {

// Continuous initial function on [-extent, 0]. Constants and ramps adopt the
// extent they are bound to; tables carry their own grid and must cover it.
class HistoryFunction {
 public:
  static HistoryFunction constant(double value);
  static HistoryFunction ramp(double value_at_start, double value_at_zero);
  static HistoryFunction table(std::vector<std::pair<double, double>> points);

  void bind_extent(double extent);  // validates coverage and nonnegativity
  double extent() const { return extent_; }

  double operator()(double theta) const;  // throws outside [-extent, 0]
  double slope(double theta) const;

 private:
  enum class Kind { Constant, Ramp, Table };
  Kind kind_ = Kind::Constant;
  double a_ = 0.0;  // constant value / ramp start value
  double b_ = 0.0;  // ramp end value
  std::vector<std::pair<double, double>> points_;
  double extent_ = 0.0;
  bool bound_ = false;

  void check_domain(double theta) const;
};

struct InitialData {
  HistoryFunction phi1, phi2, phi3;
  double z0 = 0.0;

  State at(double theta) const { return {phi1(theta), phi2(theta), phi3(theta), z0}; }
};

// Binds each phi to the model's maximal delay and validates nonnegativity.
InitialData make_initial_data(HistoryFunction phi1, HistoryFunction phi2,
                              HistoryFunction phi3, double z0, double hbar);

struct AdmissibilityFlags {
  bool cond_i = false;       // phi2(0) + ∫ f1 phi1 phi3 > 0
  bool cond_ii = false;      // phi3(0) + ∫ f2 phi2 > 0
  bool z0_positive = false;
  bool infection_free() const { return !cond_i && !cond_ii; }
};

AdmissibilityFlags check_admissibility(const InitialData& init, const Parameters& p);

// Uniform-grid solution history over [-n_hist*step, n_end*step], node values
// plus node derivatives for cubic Hermite access in between.
struct Trajectory {
  double step = 0.0;
  int n_hist = 0;  // nodes before t = 0
  std::vector<State> values;  // index 0 holds node -n_hist
  std::vector<State> derivs;

  long clamped_dips = 0;    // negative dips within tolerance, clamped in rhs input
  double worst_dip = 0.0;
  State component_scale{};  // running max magnitude per component

  int first_index() const { return -n_hist; }
  int last_index() const { return (int)values.size() - n_hist - 1; }
  double time_at(int node) const { return node * step; }
  double t_begin() const { return time_at(first_index()); }
  double t_end() const { return time_at(last_index()); }
  const State& at(int node) const { return values[(std::size_t)(node + n_hist)]; }
  const State& deriv_at(int node) const { return derivs[(std::size_t)(node + n_hist)]; }

  State state(double t) const;            // cubic Hermite between nodes
  double component(double t, int c) const;
};

struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Method of steps with classic RK4. The step is adjusted downward so every
// atom lag is an integer node multiple; incommensurate lags are an error.
Trajectory integrate(const Parameters& p, const InitialData& init, double T,
                     double h_step);

double commensurate_step(const Parameters& p, double h_step);

struct MonitorOptions {
  std::optional<double> window;  // default 10*hbar (10 when hbar = 0)
  double change_tol = 1e-8;
  double label_tol = 1e-3;
};

struct MonitorReport {
  double min_component = 0.0;   // over t > 0
  bool g_bound_violation = false;
  double g_sup = 0.0;
  double g_bound = 0.0;
  std::optional<double> steady_state_time;
  std::optional<Equilibrium::Label> limit_label;
};

MonitorReport monitor(const Parameters& p, const Trajectory& traj,
                      const MonitorOptions& opt = {});

// Strict positivity after the delay horizon, with an underflow floor: each
// component must exceed `floor_value` somewhere past hbar and stay positive
// up to the last node where it does.
bool strictly_positive_after(const Trajectory& traj, double hbar,
                             double floor_value = 1e-14);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
std::string render_monitor_report(const MonitorReport& report);

}  // namespace virodyn
