#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "virodyn/simulate.hpp"

namespace virodyn {

// g(x) = x - 1 - ln x; nonnegative, zero only at x = 1.
double g(double x);  // throws std::domain_error for x <= 0

enum class Functional { U0, U1, U2 };
const char* to_string(Functional which);

// Functional certifying the regime's attractor.
Functional regime_functional(RegimeLabel label);

struct LyapunovSample {
  double t = 0.0;
  std::optional<double> value;  // empty where the positivity guard tripped
};

struct LyapunovSeries {
  Functional which = Functional::U0;
  Equilibrium anchor;
  std::vector<LyapunovSample> samples;
  double max_increment = 0.0;  // largest rise between consecutive defined samples
};

// Shared state for evaluating one functional along one trajectory: anchor
// equilibrium, per-node inner integrands and their cumulative integrals.
// Construction throws std::domain_error when the anchor does not exist.
class LyapunovEvaluator {
 public:
  LyapunovEvaluator(const Parameters& p, const Trajectory& traj, Functional which);

  const Equilibrium& anchor() const { return anchor_; }

  // Value at time t in [hbar, t_end]; empty if the positivity guard trips.
  std::optional<double> at(double t) const;

  LyapunovSeries series() const;  // sampled at every grid node t >= hbar

 private:
  const Parameters& p_;
  const Trajectory& traj_;
  Functional which_;
  Equilibrium anchor_;
  double hbar_ = 0.0;
  int window_nodes_ = 0;
  std::vector<double> w1_, w2_;      // inner integrands at each node
  std::vector<double> cum1_, cum2_;  // trapezoid prefix integrals
  std::vector<int> last_bad_;        // prefix max of guard-failing node indices

  bool node_guard(const State& s) const;
  double integrand1(const State& s) const;
  double integrand2(const State& s) const;
  double cum_at(const std::vector<double>& cum, const std::vector<double>& w,
                bool first_integrand, double t) const;
  std::optional<double> eval_node_range(double t, int window_start,
                                        int window_end) const;
};

std::optional<double> eval_u0(const Parameters& p, const Trajectory& traj, double t);
std::optional<double> eval_u1(const Parameters& p, const Trajectory& traj, double t);
std::optional<double> eval_u2(const Parameters& p, const Trajectory& traj, double t);

struct CertifyOptions {
  double eps_mono = 1e-6;
  double tail_fraction = 0.5;        // tail of the sample range checked for gaps
  double max_undefined_tail = 0.01;  // tolerated undefined fraction in the tail
};

struct CertifyVerdict {
  bool pass = false;
  double max_increment = 0.0;
  double max_increment_time = 0.0;
  double undefined_tail_fraction = 0.0;
  std::string message;
};

CertifyVerdict certify_monotone(const LyapunovSeries& series,
                                const CertifyOptions& opt = {});

// Optional deep verification: the finite-difference derivative of U1 must
// match the closed-form decomposition (quadratic dissipation term plus the
// two nonpositive remainders) along the trajectory.
struct DeepCheckResult {
  bool pass = false;
  double max_rel_err = 0.0;       // FD vs closed form where |D| > deriv_floor
  double worst_positive = 0.0;    // largest closed-form value observed
  long points_checked = 0;
  std::string message;
};

DeepCheckResult deep_check_u1(const Parameters& p, const Trajectory& traj,
                              const LyapunovSeries& series, double eps_mono,
                              double rel_tol = 1e-3, double deriv_floor = 1e-6);

// CSV with one row per sample time; cells are empty where a functional is
// not computed or undefined.
void write_lyapunov_csv(std::ostream& os, const LyapunovSeries* u0,
                        const LyapunovSeries* u1, const LyapunovSeries* u2);

}  // namespace virodyn
