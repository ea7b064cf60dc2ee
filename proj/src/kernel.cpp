#include "virodyn/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace virodyn {

namespace {

void fail(const std::string& what) { throw std::invalid_argument("kernel: " + what); }

}  // namespace

double mass(const DelayKernel& k) {
  double m = 0.0;
  for (const auto& atom : k.atoms) m += atom.weight;
  for (std::size_t i = 0; i + 1 < k.density.size(); ++i) {
    m += 0.5 * (k.density[i + 1].lag - k.density[i].lag) *
         (k.density[i].value + k.density[i + 1].value);
  }
  return m;
}

void validate(const DelayKernel& k) {
  if (!std::isfinite(k.support_bound) || k.support_bound < 0.0)
    fail("support bound must be finite and nonnegative");
  if (k.atoms.empty() && k.density.size() < 2)
    fail("kernel carries no mass (no atoms, no density segment)");
  if (k.density.size() == 1) fail("density needs at least two grid points");

  double tail = 0.0;  // largest lag carrying mass
  double prev = -1.0;
  for (const auto& atom : k.atoms) {
    if (!std::isfinite(atom.lag) || atom.lag < 0.0 || atom.lag > k.support_bound)
      fail("atom lag outside [0, support_bound]");
    if (atom.lag <= prev) fail("atom lags must be strictly increasing");
    if (!(atom.weight > 0.0)) fail("atom weight must be positive");
    prev = atom.lag;
    tail = std::max(tail, atom.lag);
  }
  prev = -1.0;
  for (const auto& node : k.density) {
    if (!std::isfinite(node.lag) || node.lag < 0.0 || node.lag > k.support_bound)
      fail("density lag outside [0, support_bound]");
    if (node.lag <= prev) fail("density grid must be strictly increasing");
    if (!(node.value >= 0.0) || !std::isfinite(node.value))
      fail("density value must be finite and nonnegative");
    prev = node.lag;
  }
  if (!k.density.empty()) tail = std::max(tail, k.density.back().lag);
  if (std::abs(tail - k.support_bound) > 1e-12 * std::max(1.0, k.support_bound))
    fail("support bound does not match the largest mass-carrying lag");

  const double m = mass(k);
  if (std::abs(m - 1.0) > kKernelMassTol)
    fail("total mass is " + std::to_string(m) + ", expected 1 (use normalize)");
}

DelayKernel make_uniform(double h) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw std::invalid_argument("kernel: uniform kernel needs h > 0");
  DelayKernel k;
  k.density = {{0.0, 1.0 / h}, {h, 1.0 / h}};
  k.support_bound = h;
  validate(k);
  return k;
}

DelayKernel make_dirac(double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("kernel: dirac lag must be nonnegative");
  DelayKernel k;
  k.atoms = {{tau, 1.0}};
  k.support_bound = tau;
  validate(k);
  return k;
}

DelayKernel make_table(std::vector<DelayKernel::DensityNode> density,
                       std::vector<DelayKernel::Atom> atoms) {
  DelayKernel k;
  k.density = std::move(density);
  k.atoms = std::move(atoms);
  double tail = 0.0;
  for (const auto& atom : k.atoms) tail = std::max(tail, atom.lag);
  if (!k.density.empty()) tail = std::max(tail, k.density.back().lag);
  k.support_bound = tail;
  validate(k);
  return k;
}

DelayKernel normalize(DelayKernel k) {
  const double m = mass(k);
  if (!(m > 0.0) || !std::isfinite(m))
    throw std::invalid_argument("kernel: cannot normalize nonpositive mass");
  for (auto& atom : k.atoms) atom.weight /= m;
  for (auto& node : k.density) node.value /= m;
  validate(k);
  return k;
}

}  // namespace virodyn
