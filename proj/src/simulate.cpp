#include "virodyn/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "virodyn/numfmt.hpp"

namespace virodyn {

namespace {

inline double hermite(double y0, double d0, double y1, double d1, double h,
                      double th) {
  const double th2 = th * th;
  const double th3 = th2 * th;
  return (2.0 * th3 - 3.0 * th2 + 1.0) * y0 + (th3 - 2.0 * th2 + th) * h * d0 +
         (-2.0 * th3 + 3.0 * th2) * y1 + (th3 - th2) * h * d1;
}

inline State clamp_nonneg(const State& s) {
  return {std::max(0.0, s[0]), std::max(0.0, s[1]), std::max(0.0, s[2]),
          std::max(0.0, s[3])};
}

// Hermite evaluation against the stored grid, restricted to nodes <= max_node.
State grid_eval(const Trajectory& tr, int max_node, double t) {
  const double u = t / tr.step;
  int i = (int)std::floor(u);
  i = std::clamp(i, tr.first_index(), max_node - 1);
  const double th = u - (double)i;
  const State& y0 = tr.at(i);
  const State& y1 = tr.at(i + 1);
  const State& d0 = tr.deriv_at(i);
  const State& d1 = tr.deriv_at(i + 1);
  State out;
  for (int c = 0; c < 4; ++c)
    out[c] = hermite(y0[c], d0[c], y1[c], d1[c], tr.step, th);
  return out;
}

}  // namespace

HistoryFunction HistoryFunction::constant(double value) {
  HistoryFunction f;
  f.kind_ = Kind::Constant;
  f.a_ = value;
  return f;
}

HistoryFunction HistoryFunction::ramp(double value_at_start, double value_at_zero) {
  HistoryFunction f;
  f.kind_ = Kind::Ramp;
  f.a_ = value_at_start;
  f.b_ = value_at_zero;
  return f;
}

HistoryFunction HistoryFunction::table(std::vector<std::pair<double, double>> points) {
  HistoryFunction f;
  f.kind_ = Kind::Table;
  f.points_ = std::move(points);
  return f;
}

void HistoryFunction::bind_extent(double extent) {
  if (!(extent >= 0.0) || !std::isfinite(extent))
    throw std::invalid_argument("initial function: bad history extent");
  extent_ = extent;
  bound_ = true;
  auto require_nonneg = [](double v) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("initial function must be nonnegative and finite");
  };
  switch (kind_) {
    case Kind::Constant:
      require_nonneg(a_);
      break;
    case Kind::Ramp:
      require_nonneg(a_);
      require_nonneg(b_);
      break;
    case Kind::Table: {
      if (points_.size() < 2)
        throw std::invalid_argument("initial table needs at least two points");
      double prev = -std::numeric_limits<double>::infinity();
      for (const auto& [theta, value] : points_) {
        if (!(theta > prev))
          throw std::invalid_argument("initial table grid must be strictly increasing");
        require_nonneg(value);
        prev = theta;
      }
      const double tol = 1e-9 * std::max(1.0, extent);
      if (std::abs(points_.back().first) > tol)
        throw std::invalid_argument("initial table must end at time 0");
      if (points_.front().first > -extent + tol)
        throw std::invalid_argument("initial table does not cover the delay horizon");
      break;
    }
  }
}

void HistoryFunction::check_domain(double theta) const {
  if (!bound_)
    throw std::logic_error("initial function evaluated before binding its extent");
  const double tol = 1e-9 * std::max(1.0, extent_);
  if (theta < -extent_ - tol || theta > tol)
    throw std::out_of_range("initial function evaluated outside [-hbar, 0]");
}

double HistoryFunction::operator()(double theta) const {
  check_domain(theta);
  switch (kind_) {
    case Kind::Constant:
      return a_;
    case Kind::Ramp: {
      if (extent_ == 0.0) return b_;
      const double w = std::clamp((theta + extent_) / extent_, 0.0, 1.0);
      return a_ + (b_ - a_) * w;
    }
    case Kind::Table: {
      const double th = std::clamp(theta, points_.front().first, points_.back().first);
      std::size_t i = 0;
      while (i + 2 < points_.size() && points_[i + 1].first <= th) ++i;
      const auto& [ta, va] = points_[i];
      const auto& [tb, vb] = points_[i + 1];
      return va + (vb - va) * ((th - ta) / (tb - ta));
    }
  }
  return 0.0;
}

double HistoryFunction::slope(double theta) const {
  check_domain(theta);
  switch (kind_) {
    case Kind::Constant:
      return 0.0;
    case Kind::Ramp:
      return extent_ == 0.0 ? 0.0 : (b_ - a_) / extent_;
    case Kind::Table: {
      const double th = std::clamp(theta, points_.front().first, points_.back().first);
      std::size_t i = 0;
      while (i + 2 < points_.size() && points_[i + 1].first <= th) ++i;
      const auto& [ta, va] = points_[i];
      const auto& [tb, vb] = points_[i + 1];
      return (vb - va) / (tb - ta);
    }
  }
  return 0.0;
}

InitialData make_initial_data(HistoryFunction phi1, HistoryFunction phi2,
                              HistoryFunction phi3, double z0, double hbar) {
  if (!(z0 >= 0.0) || !std::isfinite(z0))
    throw std::invalid_argument("initial data: z0 must be nonnegative and finite");
  phi1.bind_extent(hbar);
  phi2.bind_extent(hbar);
  phi3.bind_extent(hbar);
  return InitialData{std::move(phi1), std::move(phi2), std::move(phi3), z0};
}

AdmissibilityFlags check_admissibility(const InitialData& init, const Parameters& p) {
  AdmissibilityFlags flags;
  const double c1 =
      init.phi2(0.0) +
      convolve(p.f1, [&](double s) { return init.phi1(s) * init.phi3(s); }, 0.0);
  const double c2 =
      init.phi3(0.0) + convolve(p.f2, [&](double s) { return init.phi2(s); }, 0.0);
  flags.cond_i = c1 > 0.0;
  flags.cond_ii = c2 > 0.0;
  flags.z0_positive = init.z0 > 0.0;
  return flags;
}

State Trajectory::state(double t) const {
  const double tol = 1e-9 * step;
  if (t < t_begin() - tol || t > t_end() + tol)
    throw std::out_of_range("trajectory evaluated outside its time range");
  return grid_eval(*this, last_index(), t);
}

double Trajectory::component(double t, int c) const { return state(t)[c]; }

double commensurate_step(const Parameters& p, double h_step) {
  if (!(h_step > 0.0) || !std::isfinite(h_step))
    throw std::invalid_argument("integrate: step must be positive");
  std::vector<double> lags;
  for (const DelayKernel* k : {&p.f1, &p.f2})
    for (const auto& atom : k->atoms)
      if (atom.lag > 0.0) lags.push_back(atom.lag);
  if (lags.empty()) return h_step;
  std::sort(lags.begin(), lags.end());
  const double shortest = lags.front();
  long m = std::max(1L, (long)std::ceil(shortest / h_step - 1e-9));
  for (;; ++m) {
    const double h = shortest / (double)m;
    bool ok = true;
    for (double lag : lags) {
      const double ratio = lag / h;
      if (std::abs(ratio - (double)std::llround(ratio)) > 1e-9 * std::max(1.0, ratio)) {
        ok = false;
        break;
      }
    }
    if (ok) return h;
    if (h < h_step / 4096.0)
      throw std::invalid_argument(
          "integrate: kernel atom lags are not commensurate with the step");
  }
}

Trajectory integrate(const Parameters& p, const InitialData& init, double T,
                     double h_step) {
  validate(p);
  const double hbar = max_delay(p);
  if (!(T > 0.0) || T < hbar)
    throw std::invalid_argument("integrate: horizon must be positive and >= hbar");
  const double h = commensurate_step(p, h_step);

  Trajectory tr;
  tr.step = h;
  tr.n_hist = (int)std::ceil(hbar / h - 1e-9);
  const int n_end = (int)std::ceil(T / h - 1e-9);
  tr.values.assign((std::size_t)(tr.n_hist + n_end + 1), State{});
  tr.derivs.assign(tr.values.size(), State{});

  // History segment: exact initial functions, clamped at the horizon where
  // the grid overshoots -hbar by a partial step.
  for (int node = -tr.n_hist; node <= 0; ++node) {
    const double theta = std::max(tr.time_at(node), -hbar);
    const std::size_t idx = (std::size_t)(node + tr.n_hist);
    tr.values[idx] = init.at(theta);
    tr.derivs[idx] = {init.phi1.slope(theta), init.phi2.slope(theta),
                      init.phi3.slope(theta), 0.0};
    for (int c = 0; c < 4; ++c)
      tr.component_scale[c] = std::max(tr.component_scale[c], std::abs(tr.values[idx][c]));
  }

  const GridHint hint{tr.t_begin(), h};
  int known = 0;  // highest node with a final value

  // Delayed-state lookup used by all stage evaluations: exact history for
  // s <= 0, Hermite over completed nodes, linear inside the current step.
  auto make_history = [&](double t_base, const State& y_base, double t_stage,
                          const State& y_stage) {
    return [&, t_base, t_stage, y_base, y_stage](double s) -> State {
      if (s <= 0.0) return init.at(std::max(s, -hbar));
      if (s <= t_base + 1e-9 * h) return clamp_nonneg(grid_eval(tr, known, s));
      const double w = (s - t_base) / (t_stage - t_base);
      State out;
      for (int c = 0; c < 4; ++c)
        out[c] = std::max(0.0, y_base[c] + w * (y_stage[c] - y_base[c]));
      return out;
    };
  };

  const State y0 = tr.at(0);
  tr.derivs[(std::size_t)tr.n_hist] = rhs(p, 0.0, y0, make_history(0.0, y0, 0.0, y0), &hint);

  for (int n = 0; n < n_end; ++n) {
    const double tn = tr.time_at(n);
    const State yn = tr.at(n);
    const State k1 = tr.deriv_at(n);

    State y2, y3, y4;
    for (int c = 0; c < 4; ++c) y2[c] = yn[c] + 0.5 * h * k1[c];
    const State k2 = rhs(p, tn + 0.5 * h, clamp_nonneg(y2),
                         make_history(tn, yn, tn + 0.5 * h, y2), &hint);
    for (int c = 0; c < 4; ++c) y3[c] = yn[c] + 0.5 * h * k2[c];
    const State k3 = rhs(p, tn + 0.5 * h, clamp_nonneg(y3),
                         make_history(tn, yn, tn + 0.5 * h, y3), &hint);
    for (int c = 0; c < 4; ++c) y4[c] = yn[c] + h * k3[c];
    const State k4 =
        rhs(p, tn + h, clamp_nonneg(y4), make_history(tn, yn, tn + h, y4), &hint);

    State ynext;
    for (int c = 0; c < 4; ++c)
      ynext[c] = yn[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);

    for (int c = 0; c < 4; ++c) {
      if (ynext[c] < 0.0) {
        const double dip = -ynext[c];
        if (dip > 1e-9 * tr.component_scale[c])
          throw IntegrationError(
              "integrate: component " + std::to_string(c) + " went negative (" +
              g17(ynext[c]) + ") at t = " + g17(tn + h) +
              "; reduce the step size");
        tr.clamped_dips += 1;
        tr.worst_dip = std::max(tr.worst_dip, dip);
      }
      tr.component_scale[c] = std::max(tr.component_scale[c], std::abs(ynext[c]));
    }

    const std::size_t idx = (std::size_t)(n + 1 + tr.n_hist);
    tr.values[idx] = ynext;
    known = n + 1;
    tr.derivs[idx] = rhs(p, tn + h, clamp_nonneg(ynext),
                         make_history(tn, yn, tn + h, ynext), &hint);
  }
  return tr;
}

MonitorReport monitor(const Parameters& p, const Trajectory& tr,
                      const MonitorOptions& opt) {
  MonitorReport rep;
  const double h = tr.step;
  const double hbar = max_delay(p);

  double mn = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= tr.last_index(); ++n)
    for (int c = 0; c < 4; ++c) mn = std::min(mn, tr.at(n)[c]);
  rep.min_component = std::isfinite(mn) ? mn : 0.0;

  const GridHint hint{tr.t_begin(), h};
  auto big_g = [&](double t) {
    const double xconv =
        convolve(p.f1, [&](double s) { return tr.state(s)[0]; }, t, &hint);
    const State st = tr.state(t);
    return p.k_d / p.k * xconv + st[1] + p.p / p.q * st[3];
  };
  const double g_at_0 = big_g(0.0);
  rep.g_bound = std::max(g_at_0, p.s * p.k_d / (p.k * std::min({p.d, p.delta, p.b})));
  double sup = g_at_0;
  for (int n = 1; n <= tr.last_index(); ++n) sup = std::max(sup, big_g(tr.time_at(n)));
  rep.g_sup = sup;
  rep.g_bound_violation = sup > rep.g_bound * (1.0 + 1e-6);

  const double window = opt.window ? *opt.window : (hbar > 0.0 ? 10.0 * hbar : 10.0);
  const int m = std::max(1, (int)std::llround(window / h));
  for (int n = m; n <= tr.last_index(); ++n) {
    bool steady = true;
    for (int c = 0; c < 4 && steady; ++c) {
      double lo = tr.at(n - m)[c], hi = lo;
      for (int j = n - m + 1; j <= n; ++j) {
        lo = std::min(lo, tr.at(j)[c]);
        hi = std::max(hi, tr.at(j)[c]);
        if ((hi - lo) > opt.change_tol * std::max(std::abs(hi), std::abs(lo))) {
          steady = false;
          break;
        }
      }
    }
    if (steady) {
      rep.steady_state_time = tr.time_at(n);
      break;
    }
  }

  if (rep.steady_state_time) {
    const State terminal = tr.at(tr.last_index());
    std::optional<Equilibrium::Label> best;
    double best_dist = std::numeric_limits<double>::infinity();
    auto consider = [&](const std::optional<Equilibrium>& e) {
      if (!e) return;
      const double dist = relative_distance(terminal, e->state());
      if (dist < best_dist) {
        best_dist = dist;
        best = e->label;
      }
    };
    consider(equilibrium_uninfected(p));
    consider(equilibrium_no_immune(p));
    consider(equilibrium_immune(p));
    if (best && best_dist < opt.label_tol) rep.limit_label = best;
  }
  return rep;
}

bool strictly_positive_after(const Trajectory& tr, double hbar, double floor_value) {
  const int start = (int)std::floor(hbar / tr.step + 1e-9) + 1;
  if (start > tr.last_index()) return true;
  for (int c = 0; c < 4; ++c) {
    int last_above = -1;
    for (int n = start; n <= tr.last_index(); ++n)
      if (std::abs(tr.at(n)[c]) > floor_value) last_above = n;
    if (last_above < 0) return false;  // never rose above the floor past hbar
    for (int n = start; n <= last_above; ++n)
      if (!(tr.at(n)[c] > 0.0)) return false;
  }
  return true;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,x,y,v,z\n";
  for (int n = 0; n <= tr.last_index(); ++n) {
    const State& s = tr.at(n);
    os << g17(tr.time_at(n)) << ',' << g17(s[0]) << ',' << g17(s[1]) << ','
       << g17(s[2]) << ',' << g17(s[3]) << '\n';
  }
}

std::string render_monitor_report(const MonitorReport& rep) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"min_component\": " << g17(rep.min_component) << ",\n";
  os << "  \"g_bound_violation\": " << (rep.g_bound_violation ? "true" : "false")
     << ",\n";
  os << "  \"g_sup\": " << g17(rep.g_sup) << ",\n";
  os << "  \"g_bound\": " << g17(rep.g_bound) << ",\n";
  os << "  \"steady_state_time\": "
     << (rep.steady_state_time ? g17(*rep.steady_state_time) : "null") << ",\n";
  os << "  \"limit_label\": ";
  if (rep.limit_label)
    os << '"' << to_string(*rep.limit_label) << '"';
  else
    os << "null";
  os << "\n}\n";
  return os.str();
}

}  // namespace virodyn
