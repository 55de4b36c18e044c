#pragma once

// Dipole elements, tunnel coupling between neighbouring wells, the Fano
// factor of two broadened levels, and field/radiative conversions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "eigensolver.hpp"
#include "error.hpp"
#include "heterostructure.hpp"
#include "units.hpp"

namespace qwdr {

struct DipoleElement {
  double value = 0.0;  // e nm
  int bra_index = 0;
  int ket_index = 0;
};

/// e <f|z|i>, with z measured from the centre of the layer stack.
inline DipoleElement dipole(const PotentialGrid& g, const std::vector<double>& psi_i, const std::vector<double>& psi_f,
                            int i_index = 0, int f_index = 0) {
  if (psi_i.size() != g.size() || psi_f.size() != g.size())
    throw ContractViolation("dipole: envelopes do not share the grid");
  std::vector<double> f(g.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = psi_f[k] * g.z[k] * psi_i[k];
  return {trapezoid(g, f), f_index, i_index};
}

struct TunnelCoupling {
  double matrix_element = 0.0;  // meV, <a|V_full - V_isolated_c|c>
  double splitting = 0.0;       // meV, gap of the full-structure doublet
  double energy_a = 0.0;        // meV, isolated-well levels
  double energy_c = 0.0;
  std::vector<double> envelope_a;  // isolated-well envelopes on the full grid
  std::vector<double> envelope_c;
  int doublet_lower = 0;  // indices into the full-structure bound spectrum
  int doublet_upper = 0;
};

/// Contiguous run of layers forming one well (a stepped well spans several).
struct LayerSpan {
  std::size_t first = 0;
  std::size_t last = 0;

  LayerSpan() = default;
  LayerSpan(std::size_t layer) : first(layer), last(layer) {}
  LayerSpan(std::size_t first_layer, std::size_t last_layer) : first(first_layer), last(last_layer) {}
};

/// Which layers are the two wells, and which level of each isolated well
/// is taken as |a> and |c>.
struct WellPair {
  LayerSpan well_a;
  LayerSpan well_c;
  int level_a = 0;
  int level_c = 0;
};

/// Copy of the structure where the layers of `well` take the highest alloy
/// fraction found between the two wells, so only the other well remains.
inline StructureSpec flood_well(const StructureSpec& spec, LayerSpan well, LayerSpan other) {
  const std::size_t n = spec.layers.size();
  if (well.first > well.last || other.first > other.last || well.last >= n || other.last >= n)
    throw ConfigError("well layer ranges must be ordered and inside the stack");
  if (!(well.last < other.first || other.last < well.first))
    throw ConfigError("well layer ranges must not overlap");
  const std::size_t lo = std::min(well.last, other.last) + 1;
  const std::size_t hi = std::max(well.first, other.first);
  if (hi <= lo) throw ConfigError("wells must be separated by at least one barrier layer");
  double x_barrier = 0.0;
  for (std::size_t i = lo; i < hi; ++i) x_barrier = std::max(x_barrier, spec.layers[i].alloy_fraction);
  StructureSpec out = spec;
  for (std::size_t i = well.first; i <= well.last; ++i) out.layers[i].alloy_fraction = x_barrier;
  return out;
}

/// Levels of each well with the other one flooded, on a grid shared with
/// the full structure (closed padding pinned to the full structure's value).
struct IsolatedWells {
  StructureSpec full;
  PotentialGrid grid;
  PotentialGrid grid_only_c;
  std::vector<BoundState> levels_a;
  std::vector<BoundState> levels_c;
};

inline IsolatedWells isolate_wells(const StructureSpec& spec, double dz, const MaterialModel& model, LayerSpan well_a,
                                   LayerSpan well_c, const BoundSolverOptions& opts = {}) {
  IsolatedWells w;
  w.full = spec;
  if (!w.full.closed_padding) {
    const PotentialGrid probe = build_grid(w.full, dz, model);
    w.full.closed_padding = std::max(probe.stack_begin - probe.front(), probe.back() - probe.stack_end);
  }
  w.grid = build_grid(w.full, dz, model);
  const PotentialGrid g_a = build_grid(flood_well(w.full, well_c, well_a), dz, model);
  w.grid_only_c = build_grid(flood_well(w.full, well_a, well_c), dz, model);
  if (g_a.size() != w.grid.size() || w.grid_only_c.size() != w.grid.size())
    throw NumericalError("isolated-well grid does not match the full grid");
  w.levels_a = solve_bound(g_a, full_bound_window(g_a), opts);
  w.levels_c = solve_bound(w.grid_only_c, full_bound_window(w.grid_only_c), opts);
  return w;
}

/// Tunnel matrix element between isolated-well states and the matching
/// full-structure doublet.
inline TunnelCoupling tunnel_coupling(const IsolatedWells& iso, const WellPair& wells,
                                      const BoundSolverOptions& opts = {}) {
  const auto& g = iso.grid;
  if (wells.level_a < 0 || static_cast<std::size_t>(wells.level_a) >= iso.levels_a.size())
    throw ConfigError("well a has only " + std::to_string(iso.levels_a.size()) + " bound levels");
  if (wells.level_c < 0 || static_cast<std::size_t>(wells.level_c) >= iso.levels_c.size())
    throw ConfigError("well c has only " + std::to_string(iso.levels_c.size()) + " bound levels");
  const auto& a = iso.levels_a[static_cast<std::size_t>(wells.level_a)];
  const auto& c = iso.levels_c[static_cast<std::size_t>(wells.level_c)];

  std::vector<double> f(g.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = a.envelope[k] * (g.V[k] - iso.grid_only_c.V[k]) * c.envelope[k];

  TunnelCoupling t;
  t.matrix_element = trapezoid(g, f);
  t.energy_a = a.energy;
  t.energy_c = c.energy;
  t.envelope_a = a.envelope;
  t.envelope_c = c.envelope;

  // Doublet: the two full-structure states with the largest weight in span{a, c}.
  const auto states = solve_bound(g, full_bound_window(g), opts);
  if (states.size() < 2) throw NumericalError("full structure has fewer than two bound states");
  std::vector<double> weight(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    const double pa = overlap(g, states[k].envelope, a.envelope);
    const double pc = overlap(g, states[k].envelope, c.envelope);
    weight[k] = pa * pa + pc * pc;
  }
  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return weight[x] > weight[y]; });
  const std::size_t lo = std::min(order[0], order[1]), hi = std::max(order[0], order[1]);
  t.doublet_lower = static_cast<int>(lo);
  t.doublet_upper = static_cast<int>(hi);
  t.splitting = states[hi].energy - states[lo].energy;
  return t;
}

inline TunnelCoupling tunnel_coupling(const StructureSpec& spec, double dz, const MaterialModel& model,
                                      const WellPair& wells, const BoundSolverOptions& opts = {}) {
  return tunnel_coupling(isolate_wells(spec, dz, model, wells.well_a, wells.well_c, opts), wells, opts);
}

struct FanoFactor {
  double value = 0.0;  // meV
  double proportionality_constant = 1.0;
};

/// k * sqrt(width_plus * width_minus).
inline FanoFactor fano_coupling(double width_plus, double width_minus, double k = 1.0) {
  if (!(width_plus > 0.0) || !(width_minus > 0.0)) throw ContractViolation("fano_coupling: widths must be > 0");
  if (!(k >= 0.0)) throw ContractViolation("fano_coupling: proportionality constant must be >= 0");
  return {k * std::sqrt(width_plus * width_minus), k};
}

/// Field amplitude (V/m) of a plane wave of the given intensity (W/m^2) in a
/// medium of refractive index n.
inline double field_amplitude(double intensity_W_m2, double refractive_index) {
  if (!(intensity_W_m2 >= 0.0) || !(refractive_index > 0.0)) throw ContractViolation("field_amplitude: bad input");
  return std::sqrt(2.0 * units::Z0_ohm * intensity_W_m2 / refractive_index);
}

/// Rabi energy d * E in meV for a dipole in e nm.
inline double rabi_energy(double dipole_e_nm, double intensity_W_m2, double refractive_index) {
  // e * nm * V/m = 1e-9 eV = 1e-6 meV per (nm V/m)
  return std::abs(dipole_e_nm) * field_amplitude(intensity_W_m2, refractive_index) * 1e-6;
}

/// Intensity (W/m^2) that produces the given Rabi energy.
inline double intensity_for_rabi(double rabi_meV, double dipole_e_nm, double refractive_index) {
  if (!(std::abs(dipole_e_nm) > 0.0)) throw ContractViolation("intensity_for_rabi: zero dipole");
  const double field = rabi_meV / (std::abs(dipole_e_nm) * 1e-6);
  return field * field * refractive_index / (2.0 * units::Z0_ohm);
}

/// Spontaneous emission rate of a transition, expressed as hbar*A in meV.
inline double radiative_rate(double dipole_e_nm, double transition_meV, double refractive_index) {
  const double omega = std::abs(transition_meV) * units::meV_to_rad_per_s;
  const double d = dipole_e_nm * units::e_C * 1e-9;
  const double a = refractive_index * omega * omega * omega * d * d /
                   (3.0 * units::pi * units::eps0 * units::hbar_J_s * std::pow(units::c_m_per_s, 3));
  return a * units::hbar_meV_s;
}

}  // namespace qwdr
