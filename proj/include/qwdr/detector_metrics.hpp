#pragma once

// Detector figures of merit: probe signal, efficiency, minimum detectable
// IR power, and the ratio to a conventional QWIP.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dark_resonance.hpp"
#include "error.hpp"
#include "units.hpp"

namespace qwdr {

struct DetectorInputs {
  double lambda_IR_um = 10.0;
  double lambda_probe_um = 2.0;
  double gamma_IR_rad = 0.004;    // meV, radiative decay on the IR transition
  double gamma_probe_rad = 0.1;   // meV, radiative decay on the probe transition
  double alpha = 40.0;            // meV, probe Rabi energy
  double Gamma = 5.0;             // meV, width of the excited states
  double gamma_decoh = 1.0;       // meV, decoherence of the critical (b-c) transition
  double Omega = 40.0;            // meV
  double wavelength_exponent = 3.0;
  double measuring_time_s = 1.0;

  void validate() const {
    if (!(lambda_IR_um > 0.0 && lambda_probe_um > 0.0)) throw ConfigError("wavelengths must be > 0");
    if (!(gamma_IR_rad > 0.0 && gamma_probe_rad > 0.0)) throw ConfigError("radiative rates must be > 0");
    if (!(Gamma > 0.0 && Omega > 0.0)) throw ConfigError("Gamma and Omega must be > 0");
    if (!(gamma_decoh >= 0.0)) throw ConfigError("gamma_decoh must be >= 0");
    if (!(measuring_time_s > 0.0)) throw ConfigError("measuring time must be > 0");
  }
};

struct Efficiency {
  double radiative_factor = 0.0;  // (lambda_IR/lambda_probe)^p * gamma_IR_rad/gamma_probe_rad
  double coherence_factor = 0.0;  // alpha^2 / (Gamma gamma_decoh)
  double total = 0.0;
};

inline Efficiency efficiency(const DetectorInputs& in) {
  in.validate();
  Efficiency e;
  e.radiative_factor =
      std::pow(in.lambda_IR_um / in.lambda_probe_um, in.wavelength_exponent) * in.gamma_IR_rad / in.gamma_probe_rad;
  e.coherence_factor = in.gamma_decoh > 0.0 ? in.alpha * in.alpha / (in.Gamma * in.gamma_decoh)
                                            : std::numeric_limits<double>::infinity();
  e.total = e.radiative_factor * e.coherence_factor;
  return e;
}

struct MinPower {
  double photon_energy_J = 0.0;
  double rate_factor_per_s = 0.0;  // Gamma / sqrt(gamma_probe_rad t_m), s^-1
  double coherence_factor = 0.0;   // gamma_decoh / Omega
  double wavelength_factor = 0.0;  // lambda_IR / lambda_probe
  double watts = 0.0;
};

/// P_min = h nu_IR * Gamma / sqrt(gamma_probe_rad t_m) * (gamma_decoh/Omega)
///         * (lambda_IR/lambda_probe), rates converted from meV to rad/s.
inline MinPower min_power(const DetectorInputs& in) {
  in.validate();
  MinPower p;
  p.photon_energy_J = units::photon_energy_meV(in.lambda_IR_um) * units::meV_to_J;
  const double gamma_rate = in.Gamma * units::meV_to_rad_per_s;
  const double probe_rate = in.gamma_probe_rad * units::meV_to_rad_per_s;
  p.rate_factor_per_s = gamma_rate / std::sqrt(probe_rate * in.measuring_time_s);
  p.coherence_factor = in.gamma_decoh / in.Omega;
  p.wavelength_factor = in.lambda_IR_um / in.lambda_probe_um;
  p.watts = p.photon_energy_J * p.rate_factor_per_s * p.coherence_factor * p.wavelength_factor;
  return p;
}

struct QwipInputs {
  double Gamma_QWIP = 5.0;        // meV
  double gamma_decoh_QWIP = 0.25; // meV

  void validate() const {
    if (!(Gamma_QWIP > 0.0 && gamma_decoh_QWIP > 0.0)) throw ConfigError("QWIP widths must be > 0");
  }
};

struct QwipRatio {
  double width_factor = 0.0;       // Gamma_coh / Gamma_QWIP
  double wavelength_factor = 0.0;  // lambda_probe / lambda_IR
  double coherence_factor = 0.0;   // sqrt(gamma_decoh gamma_probe_rad) / Omega
  double decoherence_factor = 0.0; // sqrt(gamma_decoh / gamma_decoh_QWIP)
  double total = 0.0;
};

inline QwipRatio qwip_ratio(const DetectorInputs& in, const QwipInputs& q) {
  in.validate();
  q.validate();
  QwipRatio r;
  r.width_factor = in.Gamma / q.Gamma_QWIP;
  r.wavelength_factor = in.lambda_probe_um / in.lambda_IR_um;
  r.coherence_factor = std::sqrt(in.gamma_decoh * in.gamma_probe_rad) / in.Omega;
  r.decoherence_factor = std::sqrt(in.gamma_decoh / q.gamma_decoh_QWIP);
  r.total = r.width_factor * r.wavelength_factor * r.coherence_factor * r.decoherence_factor;
  return r;
}

struct Signal {
  double slope = 0.0;   // -dI_total/d(Omega_IR^2) at zero IR, probe-intensity units per meV^2
  double value = 0.0;   // slope * Omega_IR^2
  double step = 0.0;    // finite-difference step in Omega_IR^2 (meV^2)
  double relative_truncation = 0.0;
};

/// Transmitted probe intensity with Omega_IR^2 = s (s may be negative).
inline double transmitted_intensity(const FourLevelParams& p, double s, double probe_intensity,
                                    double optical_density) {
  const cplx chi = susceptibility_ir_squared(p, s);
  return probe_intensity * std::exp(-optical_density * chi.imag() / bare_peak(p));
}

/// Reduction of the transmitted probe when the IR field is switched on,
/// linearised in Omega_IR^2 around zero, at the probe detuning stored in p.
/// The derivative is a central difference whose step is halved until two
/// successive estimates agree to the requested relative truncation.
inline Signal signal_intensity(const FourLevelParams& p, double probe_intensity, double optical_density = 1.0,
                               double relative_tolerance = 1e-3) {
  if (!(probe_intensity >= 0.0)) throw ContractViolation("probe intensity must be >= 0");
  auto total = [&](double s) { return transmitted_intensity(p, s, probe_intensity, optical_density); };
  auto central = [&](double h) { return (total(h) - total(-h)) / (2.0 * h); };
  // chi is a Moebius map of s = Omega_IR^2 with pole at s = -(g_cb g_db + Omega^2 g_db / g_ab);
  // start from a tenth of that distance.
  const cplx i(0.0, 1.0);
  const cplx g_ab = p.gamma_ab + i * p.Delta;
  const cplx g_cb = p.gamma_cb + i * (p.Delta - p.Delta0);
  const cplx g_db = p.gamma_db + i * (p.Delta - p.Delta0 - p.Delta_IR);
  if (g_ab == 0.0) throw SingularParameters("signal: gamma_ab + i Delta vanishes");
  const double scale = std::abs(g_cb * g_db + p.Omega * p.Omega * g_db / g_ab);
  double h = 0.1 * (scale > 0.0 ? scale : 1.0);
  double prev = central(h);
  Signal out;
  for (int it = 0; it < 60; ++it) {
    const double next = central(0.5 * h);
    h *= 0.5;
    // Richardson estimate of the truncation of `next`.
    const double rich = (4.0 * next - prev) / 3.0;
    const double err = std::abs(rich - next);
    const double mag = std::max(std::abs(rich), 1e-300);
    out.slope = -rich;
    out.step = h;
    out.relative_truncation = err / mag;
    if (err <= relative_tolerance * mag || rich == 0.0) break;
    if (!std::isfinite(next)) throw NumericalError("signal: transmission is not smooth in Omega_IR^2");
    prev = next;
  }
  if (!(out.relative_truncation <= relative_tolerance) && out.slope != 0.0)
    throw NumericalError("signal: finite difference did not converge");
  out.value = out.slope * p.Omega_IR * p.Omega_IR;
  return out;
}

}  // namespace qwdr
