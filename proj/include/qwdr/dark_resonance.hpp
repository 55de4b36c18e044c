#pragma once

// Four-level double-dark-resonance model in the basis (a, b, c, d):
// probe alpha on b-a, coupling Omega on c-a, IR field Omega_IR on c-d.
// Every energy, rate, and Rabi frequency is in meV.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "error.hpp"
#include "units.hpp"

namespace qwdr {

using cplx = std::complex<double>;

struct FourLevelParams {
  double Omega = 40.0;     // coupling (tunnelling) Rabi energy
  double alpha = 0.4;      // probe Rabi energy
  double Omega_IR = 0.0;   // IR Rabi energy
  double Delta = 0.0;      // probe detuning
  double Delta0 = 0.0;     // coupling detuning
  double Delta_IR = 0.0;   // IR detuning
  double gamma_ab = 1.0;
  double gamma_cb = 0.0;
  double gamma_db = 0.0;
  double eta = 1.0;           // absorption scale, meV
  double gamma_a_to_b = 1.0;  // population decay a -> b
  double ir_linewidth = 0.0;  // meV, already included in gamma_db
  double lambda_probe_um = 2.5;
  double lambda_IR_um = 10.0;
  double N_density_cm3 = 0.0;

  void validate() const {
    if (!(gamma_ab >= 0.0 && gamma_cb >= 0.0 && gamma_db >= 0.0 && gamma_a_to_b >= 0.0 && ir_linewidth >= 0.0))
      throw ConfigError("decay rates must be >= 0");
    if (!(Omega >= 0.0)) throw ConfigError("Omega must be >= 0");
    if (!(lambda_probe_um > 0.0 && lambda_IR_um > 0.0)) throw ConfigError("wavelengths must be > 0");
  }
};

/// eta = 3 gamma N lambda^3 / (8 pi^2), with N in cm^-3 and lambda in um;
/// the result carries the unit of gamma.
inline double eta_from_primitives(double gamma_a_to_b, double N_density_cm3, double lambda_um) {
  const double lambda_cm = lambda_um * 1e-4;
  return 3.0 * gamma_a_to_b * N_density_cm3 * lambda_cm * lambda_cm * lambda_cm / (8.0 * units::pi * units::pi);
}

enum Level : int { level_a = 0, level_b = 1, level_c = 2, level_d = 3 };

/// Interaction Hamiltonian H = Omega|c><a| + alpha|b><a| + Omega_IR|c><d| + h.c.
inline Eigen::Matrix4cd hamiltonian(const FourLevelParams& p) {
  Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
  h(level_c, level_a) = h(level_a, level_c) = p.Omega;
  h(level_b, level_a) = h(level_a, level_b) = p.alpha;
  h(level_c, level_d) = h(level_d, level_c) = p.Omega_IR;
  return h;
}

inline Eigen::Vector4cd hamiltonian_apply(const FourLevelParams& p, const Eigen::Vector4cd& state) {
  Eigen::Vector4cd out;
  out[level_a] = p.Omega * state[level_c] + p.alpha * state[level_b];
  out[level_b] = p.alpha * state[level_a];
  out[level_c] = p.Omega * state[level_a] + p.Omega_IR * state[level_d];
  out[level_d] = p.Omega_IR * state[level_c];
  return out;
}

/// |-> = (Omega|b> - alpha|c>) / sqrt(Omega^2 + alpha^2).
inline Eigen::Vector4cd dark_state(const FourLevelParams& p) {
  const double n = std::hypot(p.Omega, p.alpha);
  if (!(n > 0.0)) throw SingularParameters("dark state undefined for Omega = alpha = 0");
  Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
  v[level_b] = p.Omega / n;
  v[level_c] = -p.alpha / n;
  return v;
}

/// Susceptibility with Omega_IR^2 replaced by `ir_squared`, which may be
/// negative (used for derivatives in Omega_IR^2 at zero field).
inline cplx susceptibility_ir_squared(const FourLevelParams& p, double ir_squared) {
  const cplx i(0.0, 1.0);
  const cplx g_ab = p.gamma_ab + i * p.Delta;
  const cplx g_cb = p.gamma_cb + i * (p.Delta - p.Delta0);
  const cplx g_db = p.gamma_db + i * (p.Delta - p.Delta0 - p.Delta_IR);
  const cplx x = g_cb * g_db + ir_squared;
  const cplx den = g_ab * x + p.Omega * p.Omega * g_db;
  if (den == 0.0) throw SingularParameters("susceptibility denominator vanishes");
  return i * p.eta * x / den;
}

/// Linear probe susceptibility at the detuning stored in p.
inline cplx susceptibility(const FourLevelParams& p) { return susceptibility_ir_squared(p, p.Omega_IR * p.Omega_IR); }

inline cplx susceptibility(FourLevelParams p, double Delta) {
  p.Delta = Delta;
  return susceptibility(p);
}

struct NarrowLine {
  double center = 0.0;  // probe detuning of the revived line, meV
  double width = 0.0;   // half width at half maximum, meV
  bool weak_ir = true;  // Omega_IR < Omega / 5, where the prediction holds
};

/// Position and width of the IR-induced absorption line inside the
/// transparency window.
inline NarrowLine predict_narrow_line(const FourLevelParams& p) {
  p.validate();
  if (!(p.Omega > 0.0)) throw SingularParameters("narrow-line prediction needs Omega > 0");
  NarrowLine n;
  n.center = p.Delta0 + p.Delta_IR;
  n.width = p.gamma_a_to_b * p.Omega_IR * p.Omega_IR / (p.Omega * p.Omega) + p.ir_linewidth;
  n.weak_ir = p.Omega_IR < p.Omega / 5.0;
  return n;
}

struct Spectrum {
  std::vector<double> detuning;     // meV
  std::vector<cplx> chi;
  std::vector<double> transmission;
  std::vector<std::size_t> singular;  // indices replaced by interpolation
  double chi_reference = 0.0;         // Im chi of the bare two-level peak
  double optical_density = 1.0;
};

/// Im chi at line centre of the bare two-level transition (Omega = Omega_IR = 0).
inline double bare_peak(const FourLevelParams& p) {
  if (!(p.gamma_ab > 0.0)) throw SingularParameters("bare two-level peak needs gamma_ab > 0");
  return p.eta / p.gamma_ab;
}

/// chi over the detuning grid; transmission exp(-OD Im chi / Im chi_ref)
/// with Im chi_ref the bare two-level peak, so an isolated b-a line has
/// optical density OD at its centre.
inline Spectrum spectrum(const FourLevelParams& p, const std::vector<double>& detuning, double optical_density = 1.0) {
  for (std::size_t k = 1; k < detuning.size(); ++k)
    if (!(detuning[k] > detuning[k - 1])) throw ContractViolation("spectrum: detuning grid must increase");
  if (!(optical_density >= 0.0)) throw ContractViolation("spectrum: optical density must be >= 0");
  Spectrum s;
  s.detuning = detuning;
  s.optical_density = optical_density;
  s.chi_reference = bare_peak(p);
  s.chi.resize(detuning.size());
  std::vector<bool> bad(detuning.size(), false);
  for (std::size_t k = 0; k < detuning.size(); ++k) {
    try {
      s.chi[k] = susceptibility(p, detuning[k]);
    } catch (const SingularParameters&) {
      bad[k] = true;
      s.singular.push_back(k);
    }
  }
  for (std::size_t k : s.singular) {
    std::size_t lo = k, hi = k;
    while (lo > 0 && bad[lo]) --lo;
    while (hi + 1 < bad.size() && bad[hi]) ++hi;
    if (bad[lo] && bad[hi]) throw SingularParameters("spectrum: no regular grid point to interpolate from");
    if (bad[lo]) {
      s.chi[k] = s.chi[hi];
    } else if (bad[hi]) {
      s.chi[k] = s.chi[lo];
    } else {
      const double t = (detuning[k] - detuning[lo]) / (detuning[hi] - detuning[lo]);
      s.chi[k] = (1.0 - t) * s.chi[lo] + t * s.chi[hi];
    }
  }
  s.transmission.resize(detuning.size());
  for (std::size_t k = 0; k < detuning.size(); ++k)
    s.transmission[k] = std::exp(-optical_density * s.chi[k].imag() / s.chi_reference);
  return s;
}

/// n points evenly spaced over [lo, hi].
inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) throw ConfigError("detuning grid needs n >= 2 and hi > lo");
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return g;
}

}  // namespace qwdr
