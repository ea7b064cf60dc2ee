#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace virodyn {

// A delay distribution on [0, support_bound]: point masses (atoms) plus a
// piecewise-linear density tabulated on an increasing lag grid. The density
// is zero outside its tabulated range. Total mass must equal one; nothing is
// rescaled silently (see normalize()).
struct DelayKernel {
  struct Atom {
    double lag = 0.0;
    double weight = 0.0;
  };
  struct DensityNode {
    double lag = 0.0;
    double value = 0.0;  // 1/time
  };

  std::vector<Atom> atoms;           // lags strictly increasing
  std::vector<DensityNode> density;  // grid strictly increasing; may be empty
  double support_bound = 0.0;        // limit superior of the delay
};

// Alignment of the integrand's natural sample grid (nodes at origin + n*step).
// convolve() adds quadrature breakpoints wherever such a node falls inside a
// density segment, so the integrand is sampled where it is known best.
struct GridHint {
  double origin = 0.0;
  double step = 0.0;
};

constexpr double kKernelMassTol = 1e-12;

DelayKernel make_uniform(double h);
DelayKernel make_dirac(double tau);
DelayKernel make_table(std::vector<DelayKernel::DensityNode> density,
                       std::vector<DelayKernel::Atom> atoms = {});

// Explicit rescaling to unit mass; errors if the mass is not positive.
DelayKernel normalize(DelayKernel k);

double mass(const DelayKernel& k);
void validate(const DelayKernel& k);  // throws std::invalid_argument

// Evaluates ∫ f(t−τ) dκ(τ): exact sifting over the atoms plus a composite
// trapezoid over the density grid, refined with hint-aligned breakpoints.
template <class F>
double convolve(const DelayKernel& k, F&& f, double t,
                const GridHint* hint = nullptr) {
  double acc = 0.0;
  for (const auto& atom : k.atoms) acc += atom.weight * f(t - atom.lag);
  const auto& dens = k.density;
  for (std::size_t i = 0; i + 1 < dens.size(); ++i) {
    const double a = dens[i].lag, b = dens[i + 1].lag;
    const double va = dens[i].value, vb = dens[i + 1].value;
    const double slope = (vb - va) / (b - a);
    double tau_prev = a;
    double g_prev = va * f(t - a);
    auto advance = [&](double tau, double w) {
      const double g_cur = w * f(t - tau);
      acc += 0.5 * (tau - tau_prev) * (g_prev + g_cur);
      tau_prev = tau;
      g_prev = g_cur;
    };
    if (hint != nullptr && hint->step > 0.0) {
      const double eps = 1e-9 * hint->step;
      // lags where t − τ lands on origin + n*step, ascending in τ
      const long long n_hi =
          (long long)std::floor((t - hint->origin - (a + eps)) / hint->step);
      const long long n_lo =
          (long long)std::ceil((t - hint->origin - (b - eps)) / hint->step);
      for (long long n = n_hi; n >= n_lo; --n) {
        const double tau = t - hint->origin - (double)n * hint->step;
        if (tau <= tau_prev + eps || tau >= b - eps) continue;
        advance(tau, va + slope * (tau - a));
      }
    }
    advance(b, vb);
  }
  return acc;
}

}  // namespace virodyn
