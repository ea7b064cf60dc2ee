#pragma once

#include <array>
#include <optional>

#include "virodyn/kernel.hpp"

namespace virodyn {

// State vector (x, y, v, z): uninfected cells, infected cells, free virus,
// CTLs.
using State = std::array<double, 4>;

struct Parameters {
  double s = 0.0;      // uninfected-cell production, cells/time
  double d = 0.0;      // uninfected-cell death rate
  double k = 0.0;      // infection rate in the target-cell loss term
  double k_d = 0.0;    // delayed infection rate, k_d <= k
  double delta = 0.0;  // infected-cell death rate
  double p = 0.0;      // CTL killing rate
  double N = 0.0;      // burst size
  double N_d = 0.0;    // delayed burst size, N_d <= N
  double mu = 0.0;     // virus clearance rate
  double q = 0.0;      // CTL proliferation rate
  double b = 0.0;      // CTL decay rate
  DelayKernel f1;      // infection delay
  DelayKernel f2;      // production delay
};

void validate(const Parameters& p);  // throws std::invalid_argument

inline double max_delay(const Parameters& p) {
  return std::max(p.f1.support_bound, p.f2.support_bound);
}

// Basic reproduction number for viral infection and for the CTL response.
double r0(const Parameters& p);
double r1(const Parameters& p);

struct Equilibrium {
  enum class Label { E0, E1, E2 };
  Label label = Label::E0;
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double z = 0.0;
  State state() const { return {x, y, v, z}; }
};
const char* to_string(Equilibrium::Label label);

Equilibrium equilibrium_uninfected(const Parameters& p);
std::optional<Equilibrium> equilibrium_no_immune(const Parameters& p);  // needs r0 > 1
std::optional<Equilibrium> equilibrium_immune(const Parameters& p);     // needs r1 > 1

enum class RegimeLabel { Clearance, ChronicNoImmune, ChronicWithImmune };
const char* to_string(RegimeLabel label);

struct Regime {
  double r0 = 0.0;
  double r1 = 0.0;
  RegimeLabel label = RegimeLabel::Clearance;
};

// Ties go by the non-strict thresholds: r0 <= 1 clearance, r1 <= 1 no-immune.
Regime classify(const Parameters& p);

// Equilibrium the regime converges to.
Equilibrium::Label predicted_limit(RegimeLabel label);

// Component-wise relative gap, each scaled by max(1, |reference component|).
double relative_distance(const State& a, const State& ref);

struct OrderingReport {
  double x1 = 0.0, y1 = 0.0;  // E1 components
  double x2 = 0.0, y2 = 0.0;  // E2 components
  double x_gap = 0.0;           // x2 - x1
  double predicted_x_gap = 0.0; // (mu/(k_d N_d)) (r1 - 1)
  bool x_increases = false;     // x2 > x1
  bool y_decreases = false;     // y1 > y2
  bool gap_identity = false;    // x_gap matches predicted_x_gap to 1e-10 rel
  bool holds() const { return x_increases && y_decreases && gap_identity; }
};

// Requires r1 > 1 (both infected equilibria present); throws otherwise.
OrderingReport ordering_check(const Parameters& p);

// Right-hand side of the delayed model. `history` must be evaluable on
// [t - max_delay(p), t]; the non-delayed terms use `current`.
template <class H>
State rhs(const Parameters& p, double t, const State& current, H&& history,
          const GridHint* hint = nullptr) {
  const double x = current[0], y = current[1], v = current[2], z = current[3];
  const double infection = convolve(
      p.f1,
      [&](double u) {
        const State h = history(u);
        return h[0] * h[2];
      },
      t, hint);
  const double production =
      convolve(p.f2, [&](double u) { return history(u)[1]; }, t, hint);
  return {p.s - p.d * x - p.k * x * v,
          p.k_d * infection - p.delta * y - p.p * y * z,
          p.N_d * p.delta * production - p.mu * v,
          p.q * y * z - p.b * z};
}

// Discrete-delay model: f1 concentrated at tau with survival-adjusted
// infection rate k e^{-delta tau}, instantaneous virus production.
Parameters from_discrete(double s, double d, double k, double delta, double p,
                         double N, double mu, double q, double b, double tau);

}  // namespace virodyn
