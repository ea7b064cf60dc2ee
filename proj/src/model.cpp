#include "virodyn/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace virodyn {

namespace {

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string("parameters: ") + name +
                                " must be positive and finite");
}

}  // namespace

void validate(const Parameters& p) {
  check_positive(p.s, "s");
  check_positive(p.d, "d");
  check_positive(p.k, "k");
  check_positive(p.k_d, "k_d");
  check_positive(p.delta, "delta");
  check_positive(p.p, "p");
  check_positive(p.N, "N");
  check_positive(p.N_d, "N_d");
  check_positive(p.mu, "mu");
  check_positive(p.q, "q");
  check_positive(p.b, "b");
  if (p.k_d > p.k) throw std::invalid_argument("parameters: k_d must not exceed k");
  if (p.N_d > p.N) throw std::invalid_argument("parameters: N_d must not exceed N");
  validate(p.f1);
  validate(p.f2);
}

double r0(const Parameters& p) { return p.s / (p.d * p.mu / (p.k_d * p.N_d)); }

double r1(const Parameters& p) {
  return p.s / (p.d * p.mu / (p.k_d * p.N_d) + (p.k / p.k_d) * p.delta * p.b / p.q);
}

const char* to_string(Equilibrium::Label label) {
  switch (label) {
    case Equilibrium::Label::E0: return "E0";
    case Equilibrium::Label::E1: return "E1";
    case Equilibrium::Label::E2: return "E2";
  }
  return "?";
}

const char* to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::Clearance: return "Clearance";
    case RegimeLabel::ChronicNoImmune: return "ChronicNoImmune";
    case RegimeLabel::ChronicWithImmune: return "ChronicWithImmune";
  }
  return "?";
}

Equilibrium equilibrium_uninfected(const Parameters& p) {
  return {Equilibrium::Label::E0, p.s / p.d, 0.0, 0.0, 0.0};
}

std::optional<Equilibrium> equilibrium_no_immune(const Parameters& p) {
  if (r0(p) <= 1.0) return std::nullopt;
  const double x1 = p.mu / (p.k_d * p.N_d);
  const double excess = p.s - p.d * x1;
  const double y1 = p.k_d / (p.k * p.delta) * excess;
  const double v1 = p.k_d * p.N_d / (p.k * p.mu) * excess;
  return Equilibrium{Equilibrium::Label::E1, x1, y1, v1, 0.0};
}

std::optional<Equilibrium> equilibrium_immune(const Parameters& p) {
  if (r1(p) <= 1.0) return std::nullopt;
  const double y2 = p.b / p.q;
  const double v2 = p.N_d * p.delta / p.mu * y2;
  const double x2 = p.s / (p.d + p.k * v2);
  const double z2 = p.delta / p.p * (p.k_d * p.N_d * x2 / p.mu - 1.0);
  return Equilibrium{Equilibrium::Label::E2, x2, y2, v2, z2};
}

Regime classify(const Parameters& p) {
  Regime r;
  r.r0 = r0(p);
  r.r1 = r1(p);
  if (r.r0 <= 1.0)
    r.label = RegimeLabel::Clearance;
  else if (r.r1 <= 1.0)
    r.label = RegimeLabel::ChronicNoImmune;
  else
    r.label = RegimeLabel::ChronicWithImmune;
  return r;
}

Equilibrium::Label predicted_limit(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::Clearance: return Equilibrium::Label::E0;
    case RegimeLabel::ChronicNoImmune: return Equilibrium::Label::E1;
    case RegimeLabel::ChronicWithImmune: return Equilibrium::Label::E2;
  }
  return Equilibrium::Label::E0;
}

double relative_distance(const State& a, const State& ref) {
  double dist = 0.0;
  for (int c = 0; c < 4; ++c)
    dist = std::max(dist, std::abs(a[c] - ref[c]) / std::max(1.0, std::abs(ref[c])));
  return dist;
}

OrderingReport ordering_check(const Parameters& p) {
  if (!(r1(p) > 1.0))
    throw std::domain_error("ordering check requires r1 > 1");
  const Equilibrium e1 = *equilibrium_no_immune(p);
  const Equilibrium e2 = *equilibrium_immune(p);
  OrderingReport rep;
  rep.x1 = e1.x;
  rep.y1 = e1.y;
  rep.x2 = e2.x;
  rep.y2 = e2.y;
  rep.x_gap = e2.x - e1.x;
  rep.predicted_x_gap = p.mu / (p.k_d * p.N_d) * (r1(p) - 1.0);
  rep.x_increases = e2.x > e1.x;
  rep.y_decreases = e1.y > e2.y;
  rep.gap_identity = std::abs(rep.x_gap - rep.predicted_x_gap) <=
                     1e-10 * std::max(1.0, std::abs(rep.predicted_x_gap));
  return rep;
}

Parameters from_discrete(double s, double d, double k, double delta, double p,
                         double N, double mu, double q, double b, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("parameters: discrete delay tau must be nonnegative");
  Parameters out;
  out.s = s;
  out.d = d;
  out.k = k;
  out.k_d = k * std::exp(-delta * tau);
  out.delta = delta;
  out.p = p;
  out.N = N;
  out.N_d = N;
  out.mu = mu;
  out.q = q;
  out.b = b;
  out.f1 = make_dirac(tau);
  out.f2 = make_dirac(0.0);
  validate(out);
  return out;
}

}  // namespace virodyn
