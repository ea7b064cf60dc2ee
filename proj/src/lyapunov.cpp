#include "virodyn/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "virodyn/numfmt.hpp"

namespace virodyn {

namespace {

constexpr double kArgFloor = 1e-300;  // keeps ln finite on roundoff undershoot
constexpr double kGuardRel = 1e-12;   // positivity guard, relative to scale

inline double g_floored(double x) { return g(std::max(x, kArgFloor)); }

}  // namespace

double g(double x) {
  if (!(x > 0.0)) throw std::domain_error("g(x) requires x > 0");
  return x - 1.0 - std::log(x);
}

const char* to_string(Functional which) {
  switch (which) {
    case Functional::U0: return "U0";
    case Functional::U1: return "U1";
    case Functional::U2: return "U2";
  }
  return "?";
}

Functional regime_functional(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::Clearance: return Functional::U0;
    case RegimeLabel::ChronicNoImmune: return Functional::U1;
    case RegimeLabel::ChronicWithImmune: return Functional::U2;
  }
  return Functional::U0;
}

LyapunovEvaluator::LyapunovEvaluator(const Parameters& p, const Trajectory& traj,
                                     Functional which)
    : p_(p), traj_(traj), which_(which) {
  switch (which) {
    case Functional::U0:
      anchor_ = equilibrium_uninfected(p);
      break;
    case Functional::U1: {
      const auto e1 = equilibrium_no_immune(p);
      if (!e1) throw std::domain_error("U1 is undefined: E1 absent (r0 <= 1)");
      anchor_ = *e1;
      break;
    }
    case Functional::U2: {
      const auto e2 = equilibrium_immune(p);
      if (!e2) throw std::domain_error("U2 is undefined: E2 absent (r1 <= 1)");
      anchor_ = *e2;
      break;
    }
  }
  hbar_ = max_delay(p);
  window_nodes_ = (int)std::ceil(hbar_ / traj.step - 1e-9);

  const std::size_t n = traj.values.size();
  w1_.resize(n);
  w2_.resize(n);
  cum1_.resize(n);
  cum2_.resize(n);
  last_bad_.resize(n);
  int last_bad = -1;
  for (std::size_t i = 0; i < n; ++i) {
    const State& s = traj.values[i];
    if (!node_guard(s)) last_bad = (int)i;
    last_bad_[i] = last_bad;
    w1_[i] = integrand1(s);
    w2_[i] = integrand2(s);
    if (i == 0) {
      cum1_[0] = 0.0;
      cum2_[0] = 0.0;
    } else {
      cum1_[i] = cum1_[i - 1] + 0.5 * traj.step * (w1_[i - 1] + w1_[i]);
      cum2_[i] = cum2_[i - 1] + 0.5 * traj.step * (w2_[i - 1] + w2_[i]);
    }
  }
}

bool LyapunovEvaluator::node_guard(const State& s) const {
  if (which_ == Functional::U0) return true;  // inner integrands are linear
  const State& scale = traj_.component_scale;
  return s[0] > kGuardRel * scale[0] && s[1] > kGuardRel * scale[1] &&
         s[2] > kGuardRel * scale[2];
}

double LyapunovEvaluator::integrand1(const State& s) const {
  if (which_ == Functional::U0) return s[0] * s[2];
  return g_floored(s[0] * s[2] / (anchor_.x * anchor_.v));
}

double LyapunovEvaluator::integrand2(const State& s) const {
  if (which_ == Functional::U0) return s[1];
  return g_floored(s[1] / anchor_.y);
}

double LyapunovEvaluator::cum_at(const std::vector<double>& cum,
                                 const std::vector<double>& w,
                                 bool first_integrand, double t) const {
  const double pos = t / traj_.step + (double)traj_.n_hist;
  int j = (int)std::floor(pos + 1e-9);
  j = std::clamp(j, 0, (int)cum.size() - 1);
  const double frac = (pos - (double)j) * traj_.step;
  if (frac <= 1e-9 * traj_.step || j + 1 >= (int)cum.size()) return cum[(std::size_t)j];
  const State s = traj_.state(t);
  const double ws = first_integrand ? integrand1(s) : integrand2(s);
  return cum[(std::size_t)j] + 0.5 * frac * (w[(std::size_t)j] + ws);
}

std::optional<double> LyapunovEvaluator::eval_node_range(double t, int lo_node,
                                                         int hi_node) const {
  const State st = traj_.state(t);
  const State& scale = traj_.component_scale;

  if (!(st[0] > kGuardRel * scale[0])) return std::nullopt;
  if (which_ != Functional::U0) {
    const int lo = std::max(lo_node + traj_.n_hist, 0);
    const int hi = std::min(hi_node + traj_.n_hist, (int)last_bad_.size() - 1);
    if (hi >= lo && last_bad_[(std::size_t)hi] >= lo) return std::nullopt;
    if (!(st[1] > kGuardRel * scale[1]) || !(st[2] > kGuardRel * scale[2]))
      return std::nullopt;
  }
  if (which_ == Functional::U2 && !(st[3] > kGuardRel * scale[3]))
    return std::nullopt;

  const GridHint hint{traj_.t_begin(), traj_.step};
  const double cum1_t = cum_at(cum1_, w1_, true, t);
  const double cum2_t = cum_at(cum2_, w2_, false, t);
  const double tail1 = convolve(
      p_.f1, [&](double s) { return cum1_t - cum_at(cum1_, w1_, true, s); }, t,
      &hint);
  const double tail2 = convolve(
      p_.f2, [&](double s) { return cum2_t - cum_at(cum2_, w2_, false, s); }, t,
      &hint);

  const double x = st[0], y = st[1], v = st[2], z = st[3];
  switch (which_) {
    case Functional::U0: {
      const double x0 = anchor_.x;
      return p_.k_d / p_.k * x0 * g(x / x0) + y + v / p_.N_d + p_.p / p_.q * z +
             p_.k_d * tail1 + p_.delta * tail2;
    }
    case Functional::U1: {
      const double x1 = anchor_.x, y1 = anchor_.y, v1 = anchor_.v;
      return 1.0 / (p_.k * v1) * g(x / x1) +
             y1 / (p_.k_d * x1 * v1) * g(y / y1) +
             v1 / (p_.N_d * p_.delta * y1) * g(v / v1) +
             p_.p / (p_.k_d * x1 * v1 * p_.q) * z + tail1 + tail2;
    }
    case Functional::U2: {
      const double x2 = anchor_.x, y2 = anchor_.y, v2 = anchor_.v, z2 = anchor_.z;
      return 1.0 / (p_.k * v2) * g(x / x2) +
             y2 / (p_.k_d * x2 * v2) * g(y / y2) +
             v2 / (p_.N_d * p_.delta * y2) * g(v / v2) +
             p_.p * z2 / (p_.k_d * x2 * v2 * p_.q) * g(z / z2) + tail1 + tail2;
    }
  }
  return std::nullopt;
}

std::optional<double> LyapunovEvaluator::at(double t) const {
  const double tol = 1e-9 * traj_.step;
  if (t < hbar_ - tol || t > traj_.t_end() + tol)
    throw std::out_of_range("lyapunov evaluation outside [hbar, t_end]");
  const int lo_node = (int)std::floor((t - hbar_) / traj_.step + 1e-9);
  const int hi_node = (int)std::ceil(t / traj_.step - 1e-9);
  return eval_node_range(t, lo_node, hi_node);
}

LyapunovSeries LyapunovEvaluator::series() const {
  LyapunovSeries out;
  out.which = which_;
  out.anchor = anchor_;
  const int n_start = (int)std::ceil(hbar_ / traj_.step - 1e-9);
  out.samples.reserve((std::size_t)std::max(0, traj_.last_index() - n_start + 1));
  std::optional<double> prev;
  for (int n = n_start; n <= traj_.last_index(); ++n) {
    const double t = traj_.time_at(n);
    auto value = eval_node_range(t, n - window_nodes_, n);
    if (value && prev)
      out.max_increment = std::max(out.max_increment, *value - *prev);
    if (value) prev = value;
    out.samples.push_back({t, value});
  }
  return out;
}

std::optional<double> eval_u0(const Parameters& p, const Trajectory& traj, double t) {
  return LyapunovEvaluator(p, traj, Functional::U0).at(t);
}

std::optional<double> eval_u1(const Parameters& p, const Trajectory& traj, double t) {
  return LyapunovEvaluator(p, traj, Functional::U1).at(t);
}

std::optional<double> eval_u2(const Parameters& p, const Trajectory& traj, double t) {
  return LyapunovEvaluator(p, traj, Functional::U2).at(t);
}

CertifyVerdict certify_monotone(const LyapunovSeries& series,
                                const CertifyOptions& opt) {
  CertifyVerdict verdict;
  if (series.samples.size() < 2) {
    verdict.message = "fewer than two samples";
    return verdict;
  }

  long defined = 0;
  bool monotone = true;
  const LyapunovSample* prev = nullptr;
  double worst = -std::numeric_limits<double>::infinity();
  double worst_t = series.samples.front().t;
  for (const auto& sample : series.samples) {
    if (!sample.value) continue;
    ++defined;
    if (prev) {
      const double inc = *sample.value - *prev->value;
      if (inc > worst) {
        worst = inc;
        worst_t = sample.t;
      }
      if (inc > opt.eps_mono * std::max(1.0, *prev->value)) monotone = false;
    }
    prev = &sample;
  }
  if (defined >= 2) {
    verdict.max_increment = worst;
    verdict.max_increment_time = worst_t;
  }

  const double t0 = series.samples.front().t;
  const double t1 = series.samples.back().t;
  const double tail_start = t1 - opt.tail_fraction * (t1 - t0);
  long tail_total = 0, tail_undefined = 0;
  for (const auto& sample : series.samples) {
    if (sample.t < tail_start) continue;
    ++tail_total;
    if (!sample.value) ++tail_undefined;
  }
  verdict.undefined_tail_fraction =
      tail_total > 0 ? (double)tail_undefined / (double)tail_total : 1.0;

  if (defined < 2) {
    verdict.message = "fewer than two defined samples";
  } else if (verdict.undefined_tail_fraction > opt.max_undefined_tail) {
    verdict.message = "undefined points in the series tail exceed tolerance "
                      "(positivity guard kept tripping)";
  } else if (!monotone) {
    verdict.message = "increment " + g17(verdict.max_increment) + " at t = " +
                      g17(verdict.max_increment_time) + " exceeds tolerance";
  } else {
    verdict.pass = true;
    verdict.message = "non-increasing";
  }
  return verdict;
}

DeepCheckResult deep_check_u1(const Parameters& p, const Trajectory& traj,
                              const LyapunovSeries& series, double eps_mono,
                              double rel_tol, double deriv_floor) {
  DeepCheckResult result;
  if (series.which != Functional::U1) {
    result.message = "deep check applies to U1 series only";
    return result;
  }
  const Equilibrium& e1 = series.anchor;
  const double x1 = e1.x, y1 = e1.y, v1 = e1.v;
  const GridHint hint{traj.t_begin(), traj.step};
  result.worst_positive = -std::numeric_limits<double>::infinity();

  bool sign_ok = true, match_ok = true;
  for (std::size_t i = 1; i + 1 < series.samples.size(); ++i) {
    const auto& sm = series.samples[i - 1];
    const auto& sc = series.samples[i];
    const auto& sp = series.samples[i + 1];
    if (!sm.value || !sc.value || !sp.value) continue;

    const double fd = (*sp.value - *sm.value) / (sp.t - sm.t);
    const State st = traj.state(sc.t);
    const double x = st[0], y = st[1], v = st[2], z = st[3];

    const double quad =
        -(p.d * x / (p.k * v1 * x1)) * (1.0 - x1 / x) * (1.0 - x1 / x);
    const double c1 =
        -g_floored(x1 / x) -
        convolve(
            p.f1,
            [&](double s) {
              const State h = traj.state(s);
              return g_floored(h[0] * h[2] / (x1 * v1) * (y1 / y));
            },
            sc.t, &hint) -
        convolve(
            p.f2,
            [&](double s) { return g_floored(traj.state(s)[1] / y1 * (v1 / v)); },
            sc.t, &hint);
    const double c2 = p.p * z / (p.k_d * x1 * v1) * (y1 - p.b / p.q);
    const double closed = quad + c1 + c2;

    ++result.points_checked;
    result.worst_positive = std::max(result.worst_positive, closed);
    if (closed > eps_mono) sign_ok = false;
    if (std::abs(closed) > deriv_floor) {
      const double rel = std::abs(fd - closed) / std::abs(closed);
      result.max_rel_err = std::max(result.max_rel_err, rel);
      if (rel > rel_tol) match_ok = false;
    }
  }

  if (result.points_checked == 0) {
    result.message = "no interior points with defined neighbours";
  } else if (!sign_ok) {
    result.message = "closed-form derivative " + g17(result.worst_positive) +
                     " is positive beyond tolerance";
  } else if (!match_ok) {
    result.message = "finite-difference derivative deviates from the "
                     "closed form by " + g17(result.max_rel_err);
  } else {
    result.pass = true;
    result.message = "derivative decomposition agrees";
  }
  return result;
}

void write_lyapunov_csv(std::ostream& os, const LyapunovSeries* u0,
                        const LyapunovSeries* u1, const LyapunovSeries* u2) {
  const LyapunovSeries* ref = u0 ? u0 : (u1 ? u1 : u2);
  os << "t,U0,U1,U2\n";
  if (ref == nullptr) return;
  for (const LyapunovSeries* s : {u0, u1, u2})
    if (s && s->samples.size() != ref->samples.size())
      throw std::logic_error("lyapunov series sampled on different grids");
  for (std::size_t i = 0; i < ref->samples.size(); ++i) {
    os << g17(ref->samples[i].t);
    for (const LyapunovSeries* s : {u0, u1, u2}) {
      os << ',';
      if (s && s->samples[i].value) os << g17(*s->samples[i].value);
    }
    os << '\n';
  }
}

}  // namespace virodyn
