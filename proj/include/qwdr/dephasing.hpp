#pragma once

// Phonon form factors, the acoustic and polar-optical overlap integrals,
// and the per-coherence dephasing budget.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "eigensolver.hpp"
#include "error.hpp"
#include "heterostructure.hpp"
#include "units.hpp"

namespace qwdr {

/// G_if(q) = <f| exp(i q z) |i> by trapezoidal quadrature.
inline std::complex<double> form_factor(const PotentialGrid& g, const std::vector<double>& psi_i,
                                        const std::vector<double>& psi_f, double q) {
  if (psi_i.size() != g.size() || psi_f.size() != g.size())
    throw ContractViolation("form_factor: envelopes do not share the grid");
  double re = 0.0, im = 0.0;
  const std::size_t n = g.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
    const double p = w * psi_f[k] * psi_i[k];
    re += p * std::cos(q * g.z[k]);
    im += p * std::sin(q * g.z[k]);
  }
  return {re * g.dz, im * g.dz};
}

struct PhononWeight {
  double value = 0.0;
  double q_max = 0.0;      // nm^-1, symmetric range used
  double tail_estimate = 0.0;  // relative change from the last widening
  bool converged = false;
};

struct PhononQuadratureOptions {
  double q_start = 2.0;          // nm^-1
  double tail_tolerance = 0.01;  // relative
  double relative_error = 1e-6;  // per adaptive quadrature
};

namespace detail {

// Product psi_i psi_f restricted to where it is not negligible.
struct Overlap {
  std::vector<double> z, p;
  double dz = 0.0;
};

inline Overlap trimmed_product(const PotentialGrid& g, const std::vector<double>& psi_i,
                               const std::vector<double>& psi_f) {
  if (psi_i.size() != g.size() || psi_f.size() != g.size())
    throw ContractViolation("phonon weight: envelopes do not share the grid");
  const std::size_t n = g.size();
  std::vector<double> p(n);
  double peak = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
    p[k] = w * psi_i[k] * psi_f[k];
    peak = std::max(peak, std::abs(p[k]));
  }
  Overlap o;
  o.dz = g.dz;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(p[k]) <= 1e-14 * peak) continue;
    o.z.push_back(g.z[k]);
    o.p.push_back(p[k]);
  }
  return o;
}

inline double g_squared(const Overlap& o, double q) {
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < o.z.size(); ++k) {
    re += o.p[k] * std::cos(q * o.z[k]);
    im += o.p[k] * std::sin(q * o.z[k]);
  }
  return (re * re + im * im) * o.dz * o.dz;
}

// 2 * int_0^qmax h(q) dq, widening qmax until the tail is below tolerance.
template <class H>
PhononWeight symmetric_integral(const PotentialGrid& g, H&& h, const PhononQuadratureOptions& opts) {
  using boost::math::quadrature::gauss_kronrod;
  // Beyond pi/(2 dz) the sampled form factor aliases.
  const double q_cap = units::pi / (2.0 * g.dz);
  auto integrate = [&](double a, double b) {
    double err = 0.0;
    return gauss_kronrod<double, 31>::integrate(h, a, b, 15, opts.relative_error, &err);
  };
  PhononWeight w;
  double q = std::min(opts.q_start, q_cap);
  double total = integrate(0.0, q);
  for (;;) {
    const double next = std::min(2.0 * q, q_cap);
    if (next <= q) break;
    const double extra = integrate(q, next);
    total += extra;
    q = next;
    w.tail_estimate = total > 0.0 ? extra / total : 0.0;
    if (w.tail_estimate < opts.tail_tolerance) {
      w.converged = true;
      break;
    }
  }
  w.value = 2.0 * total;
  w.q_max = q;
  return w;
}

}  // namespace detail

/// int |G_if(q)|^2 dq over [-q_max, q_max] (nm^-1).
inline PhononWeight acoustic_weight(const PotentialGrid& g, const std::vector<double>& psi_i,
                                    const std::vector<double>& psi_f, const PhononQuadratureOptions& opts = {}) {
  const detail::Overlap o = detail::trimmed_product(g, psi_i, psi_f);
  return detail::symmetric_integral(g, [&](double q) { return detail::g_squared(o, q); }, opts);
}

/// int |G_if(q)|^2 / (q^2 + Q^2) dq (nm).
inline PhononWeight polar_optical_weight(const PotentialGrid& g, const std::vector<double>& psi_i,
                                         const std::vector<double>& psi_f, double Q,
                                         const PhononQuadratureOptions& opts = {}) {
  if (!(Q > 0.0)) throw SingularParameters("polar_optical_weight: in-plane momentum Q must be > 0");
  const detail::Overlap o = detail::trimmed_product(g, psi_i, psi_f);
  return detail::symmetric_integral(g, [&](double q) { return detail::g_squared(o, q) / (q * q + Q * Q); }, opts);
}

/// GaAs phonon parameters used to turn the overlap integrals into rates.
struct PhononConstants {
  double deformation_potential_eV = 7.0;
  double density_kg_m3 = 5317.0;
  double sound_velocity_m_s = 5220.0;
  double temperature_K = 300.0;
  double lo_phonon_meV = 36.0;
  double eps_inf = 10.89;
  double eps_static = 12.9;
  double effective_mass = 0.067;

  void validate() const {
    if (!(deformation_potential_eV >= 0.0) || !(density_kg_m3 > 0.0) || !(sound_velocity_m_s > 0.0) ||
        !(temperature_K > 0.0) || !(lo_phonon_meV > 0.0) || !(eps_inf > 0.0) || !(eps_static >= eps_inf) ||
        !(effective_mass > 0.0))
      throw ConfigError("invalid phonon constants");
  }

  /// Rate (meV) per unit acoustic weight (nm^-1): hbar D^2 kT m / (2 pi hbar^3 rho v^2).
  double acoustic_prefactor() const {
    const double d = deformation_potential_eV * units::e_C;
    const double kt = units::kB_meV_per_K * temperature_K * units::meV_to_J;
    const double m = effective_mass * units::me_kg;
    const double hb = units::hbar_J_s;
    const double rate_per_inv_m =
        d * d * kt * m / (2.0 * units::pi * hb * hb * hb * density_kg_m3 * sound_velocity_m_s * sound_velocity_m_s);
    return rate_per_inv_m * 1e9 * units::hbar_meV_s;  // per nm^-1, as energy
  }

  /// Rate (meV) per unit polar weight (nm): Froehlich emission with Bose factor N+1.
  double polar_prefactor() const {
    const double omega = lo_phonon_meV * units::meV_to_rad_per_s;
    const double kt = units::kB_meV_per_K * temperature_K;
    const double n_lo = 1.0 / std::expm1(lo_phonon_meV / kt);
    const double m = effective_mass * units::me_kg;
    const double hb = units::hbar_J_s;
    const double rate_per_m = units::e_C * units::e_C * omega * m * (n_lo + 1.0) * (1.0 / eps_inf - 1.0 / eps_static) /
                              (4.0 * units::pi * units::eps0 * hb * hb);
    return rate_per_m * 1e-9 * units::hbar_meV_s;  // per nm, as energy
  }
};

/// Thermal in-plane wavevector sqrt(2 m kT)/hbar in nm^-1.
inline double thermal_in_plane_q(double temperature_K, double effective_mass) {
  return std::sqrt(effective_mass * units::kB_meV_per_K * temperature_K / units::hbar2_over_2me);
}

struct CoherenceBudget {
  double radiative = 0.0;
  double acoustic = 0.0;
  double polar_optical = 0.0;
  double roughness = 0.0;
  double laser_linewidth = 0.0;
  double fano = 0.0;       // interference width of the open doublet
  double tunneling = 0.0;  // escape of the upper level into the continuum

  double total() const { return radiative + acoustic + polar_optical + roughness + laser_linewidth + fano + tunneling; }
};

/// Decay rates (meV) of the three coherences entering the susceptibility.
struct DephasingBudget {
  CoherenceBudget ab, cb, db;

  double gamma_ab() const { return ab.total(); }
  double gamma_cb() const { return cb.total(); }
  double gamma_db() const { return db.total(); }
};

struct MechanismWeights {
  double ab = 1.0, cb = 1.0, db = 1.0;
};

/// Default roughness routing: the IR coherence keeps only its laser width.
inline MechanismWeights default_roughness_weights() { return {1.0, 1.0, 0.0}; }

/// Which coherences receive the Fano width.
struct FanoRouting {
  bool ab = true, cb = false, db = true;
};

struct BudgetInputs {
  // Half the summed radiative decay of the two levels of each coherence.
  double radiative_ab = 0.0, radiative_cb = 0.0, radiative_db = 0.0;
  // Phonon rates of the pair forming each coherence.
  double acoustic_ab = 0.0, acoustic_cb = 0.0, acoustic_db = 0.0;
  double polar_ab = 0.0, polar_cb = 0.0, polar_db = 0.0;
  double roughness = 1.0;  // meV
  MechanismWeights roughness_weights = default_roughness_weights();
  MechanismWeights phonon_weights;
  double laser_linewidth = 0.0;  // meV, db only
  double fano = 0.0;             // meV
  FanoRouting fano_routing;
  // Half the continuum width of the excited level of each coherence.
  double tunneling_ab = 0.0, tunneling_cb = 0.0, tunneling_db = 0.0;
};

inline DephasingBudget assemble_budget(const BudgetInputs& in) {
  for (double v : {in.radiative_ab, in.radiative_cb, in.radiative_db, in.acoustic_ab, in.acoustic_cb, in.acoustic_db,
                   in.polar_ab, in.polar_cb, in.polar_db, in.roughness, in.laser_linewidth, in.roughness_weights.ab,
                   in.roughness_weights.cb, in.roughness_weights.db, in.phonon_weights.ab, in.phonon_weights.cb,
                   in.phonon_weights.db, in.fano, in.tunneling_ab, in.tunneling_cb, in.tunneling_db})
    if (!(v >= 0.0)) throw ContractViolation("assemble_budget: components must be non-negative");
  DephasingBudget b;
  const auto& w = in.phonon_weights;
  const auto& r = in.roughness_weights;
  const auto& f = in.fano_routing;
  b.ab = {in.radiative_ab, w.ab * in.acoustic_ab, w.ab * in.polar_ab, r.ab * in.roughness, 0.0,
          f.ab ? in.fano : 0.0, in.tunneling_ab};
  b.cb = {in.radiative_cb, w.cb * in.acoustic_cb, w.cb * in.polar_cb, r.cb * in.roughness, 0.0,
          f.cb ? in.fano : 0.0, in.tunneling_cb};
  b.db = {in.radiative_db, w.db * in.acoustic_db, w.db * in.polar_db, r.db * in.roughness, in.laser_linewidth,
          f.db ? in.fano : 0.0, in.tunneling_db};
  return b;
}

}  // namespace qwdr
