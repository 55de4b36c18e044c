#pragma once

// Independent eigensolver oracles shared by the unit and acceptance tests.

#include <qwdr/eigensolver.hpp>

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "structures.hpp"

namespace qwdr::testing {

// Bound energies of a symmetric finite square well (uniform mass) from the
// even/odd transcendental equations, each root bracketed between the
// asymptotes of tan and cot.
inline std::vector<double> finite_well_oracle(double width, double depth, double mass) {
  const double c = units::hbar2_over_2me / mass;  // E = c k^2
  const double u0 = 0.5 * width * std::sqrt(depth / c);
  std::vector<double> out;
  for (int n = 0;; ++n) {
    const double lo = n * units::pi / 2.0;
    if (lo >= u0) break;
    const double hi = std::min((n + 1) * units::pi / 2.0, u0);
    // u = k L / 2, v = sqrt(u0^2 - u^2); even: u tan u = v, odd: -u cot u = v
    auto f = [&](double u) {
      const double v = std::sqrt(std::max(0.0, u0 * u0 - u * u));
      return n % 2 == 0 ? u * std::sin(u) - v * std::cos(u) : u * std::cos(u) + v * std::sin(u);
    };
    const double a = lo + 1e-15, b = hi - 1e-15;
    if (f(a) * f(b) > 0.0) continue;
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, a, b, boost::math::tools::eps_tolerance<double>(52), iters);
    const double u = 0.5 * (r.first + r.second);
    out.push_back(c * std::pow(2.0 * u / width, 2));
  }
  return out;
}

// Outgoing-wave pole of an open layered structure, found by a secant
// iteration in the complex energy plane on the incoming amplitude.
struct Slab {
  double V, length;
};

inline std::complex<double> incoming_amplitude(const std::vector<Slab>& slabs, double left_V, double right_V, double mass,
                                               std::complex<double> e) {
  using C = std::complex<double>;
  const double c = units::hbar2_over_2me / mass;
  // Left lead: psi = exp(kappa z), decaying to the left.
  C kappa = std::sqrt((C(left_V) - e) / c);
  if (kappa.real() < 0.0) kappa = -kappa;
  C psi = 1.0, dpsi = kappa;
  for (const auto& s : slabs) {
    C k = std::sqrt((e - s.V) / c);
    const C cs = std::cos(k * s.length), sn = std::sin(k * s.length);
    const C psi1 = psi * cs + dpsi * sn / k;
    const C dpsi1 = -psi * k * sn + dpsi * cs;
    psi = psi1;
    dpsi = dpsi1;
  }
  // Right lead: psi = A exp(i k z) + B exp(-i k z); outgoing branch Re k > 0.
  C k = std::sqrt((e - right_V) / c);
  if (k.real() < 0.0) k = -k;
  return 0.5 * (psi - dpsi / (C(0.0, 1.0) * k));
}

inline std::complex<double> pole_scan(const std::vector<Slab>& slabs, double left_V, double right_V, double mass,
                                      std::complex<double> guess) {
  using C = std::complex<double>;
  auto f = [&](C e) { return incoming_amplitude(slabs, left_V, right_V, mass, e); };
  C x0 = guess, x1 = guess + C(1e-3, -1e-3);
  C f0 = f(x0), f1 = f(x1);
  for (int i = 0; i < 200 && std::abs(x1 - x0) > 1e-13 * std::abs(x1); ++i) {
    const C x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = f(x1);
  }
  return x1;
}

struct ToyOpen {
  double well_nm, barrier_nm, barrier_meV, floor_meV;
};

inline StructureSpec toy_spec(const ToyOpen& t) { return open_well(t.well_nm, t.barrier_nm, t.barrier_meV, t.floor_meV); }

inline std::vector<Slab> toy_slabs(const ToyOpen& t) { return {{0.0, t.well_nm}, {t.barrier_meV, t.barrier_nm}}; }

inline double parity_error(const std::vector<double>& psi) {
  const std::size_t n = psi.size();
  double even = 0.0, odd = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = psi[n - 1 - i];
    even += (psi[i] - r) * (psi[i] - r);
    odd += (psi[i] + r) * (psi[i] + r);
    norm += psi[i] * psi[i];
  }
  return std::sqrt(std::min(even, odd) / norm);
}

}  // namespace qwdr::testing
