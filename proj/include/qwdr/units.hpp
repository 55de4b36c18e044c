#pragma once

// Physical constants and unit conversions. Internal units: energy in meV,
// length in nm, effective mass relative to the free-electron mass.

#include <numbers>

namespace qwdr::units {

inline constexpr double pi = std::numbers::pi;

/// hbar^2 / (2 m_e) = 38.0998 meV nm^2 (CODATA 2018).
inline constexpr double hbar2_over_2me = 38.0998212;  // meV nm^2

inline constexpr double hbar_meV_s = 6.582119569e-13;  // meV s
inline constexpr double h_meV_s = 4.135667696e-12;     // meV s

/// 1 meV of energy expressed as an angular frequency.
inline constexpr double meV_to_rad_per_s = 1.0 / hbar_meV_s;  // 1.519267e12

inline constexpr double hc_meV_um = 1239.84198;  // meV um
inline constexpr double kB_meV_per_K = 8.617333262e-2;

// SI
inline constexpr double e_C = 1.602176634e-19;
inline constexpr double eps0 = 8.8541878128e-12;
inline constexpr double c_m_per_s = 299792458.0;
inline constexpr double hbar_J_s = 1.054571817e-34;
inline constexpr double h_J_s = 6.62607015e-34;
inline constexpr double me_kg = 9.1093837015e-31;
inline constexpr double Z0_ohm = 376.730313668;
inline constexpr double meV_to_J = 1.602176634e-22;

inline constexpr double photon_energy_meV(double wavelength_um) { return hc_meV_um / wavelength_um; }
inline constexpr double wavelength_um(double photon_energy_meV) { return hc_meV_um / photon_energy_meV; }

/// Energy width h * dnu for a linewidth given in GHz.
inline constexpr double linewidth_GHz_to_meV(double ghz) { return h_meV_s * ghz * 1e9; }

}  // namespace qwdr::units
