#pragma once

// Layered GaAs/AlGaAs conduction-band profiles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "units.hpp"

namespace qwdr {

/// Linear alloy model: conduction-band offset = offset_coefficient * x.
struct MaterialModel {
  double offset_coefficient = 1000.0;  // meV per unit alloy fraction
  double effective_mass = 0.067;       // units of m_e

  void validate() const {
    if (!(offset_coefficient > 0.0)) throw ConfigError("offset_coefficient must be > 0");
    if (!(effective_mass > 0.0)) throw ConfigError("effective_mass must be > 0");
  }
};

enum class Boundary { closed, open };

inline const char* to_string(Boundary b) { return b == Boundary::closed ? "closed" : "open"; }

struct Layer {
  double thickness = 0.0;       // nm
  double alloy_fraction = 0.0;  // x in Al_x Ga_(1-x) As
  std::optional<double> doping;          // sheet density, cm^-2 (metadata only)
  std::optional<double> effective_mass;  // per-layer override
};

struct StructureSpec {
  std::vector<Layer> layers;
  Boundary left = Boundary::closed;
  Boundary right = Boundary::closed;
  /// Extra barrier length added outside closed edges; computed when unset.
  std::optional<double> closed_padding;  // nm

  double total_thickness() const {
    double t = 0.0;
    for (const auto& l : layers) t += l.thickness;
    return t;
  }

  void validate() const {
    if (layers.size() < 3) throw ConfigError("structure needs at least 3 layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (!(l.thickness > 0.0))
        throw ConfigError("layer " + std::to_string(i) + ": thickness must be > 0");
      if (!(l.alloy_fraction >= 0.0 && l.alloy_fraction <= 1.0))
        throw ConfigError("layer " + std::to_string(i) + ": alloy_fraction outside [0,1]");
      if (l.effective_mass && !(*l.effective_mass > 0.0))
        throw ConfigError("layer " + std::to_string(i) + ": effective_mass must be > 0");
    }
    if (closed_padding && *closed_padding < 0.0) throw ConfigError("closed_padding must be >= 0");
  }
};

/// Uniformly sampled potential. Sample i represents the cell
/// [z[i] - dz/2, z[i] + dz/2]; V and 1/m are cell averages, so the profile
/// is piecewise constant between cell edges. z = 0 is the centre of the
/// layer stack.
struct PotentialGrid {
  std::vector<double> z;      // nm
  std::vector<double> V;      // meV
  std::vector<double> m_eff;  // m_e
  double dz = 0.0;
  double stack_begin = 0.0;  // nm, first layer's left edge
  double stack_end = 0.0;    // nm, last layer's right edge
  Boundary left = Boundary::closed;
  Boundary right = Boundary::closed;

  std::size_t size() const { return z.size(); }
  double cell_begin(std::size_t i) const { return z[i] - 0.5 * dz; }
  double front() const { return z.front() - 0.5 * dz; }
  double back() const { return z.back() + 0.5 * dz; }
};

/// Conduction-band offset of Al_x Ga_(1-x) As relative to GaAs.
inline double offset_of(double alloy_fraction, const MaterialModel& model) {
  if (!(alloy_fraction >= 0.0 && alloy_fraction <= 1.0))
    throw DomainError("alloy fraction " + std::to_string(alloy_fraction) + " outside [0,1]");
  return model.offset_coefficient * alloy_fraction;
}

/// Alloy fraction that produces the requested offset.
inline double alloy_for_offset(double offset_meV, const MaterialModel& model) {
  const double x = offset_meV / model.offset_coefficient;
  if (!(x >= 0.0 && x <= 1.0))
    throw DomainError("offset " + std::to_string(offset_meV) + " meV not reachable with this material model");
  return x;
}

inline double layer_mass(const Layer& l, const MaterialModel& model) {
  return l.effective_mass.value_or(model.effective_mass);
}

namespace detail {

// Closed edges get enough barrier that a state bound 5% of the edge
// barrier height below its top decays by 1e-8 before the grid ends.
inline double default_closed_padding(double v_edge, double v_min, double mass) {
  const double depth = 0.05 * (v_edge - v_min);
  if (depth <= 0.0) return 0.0;
  const double kappa = std::sqrt(depth * mass / units::hbar2_over_2me);
  return std::min(std::log(1e8) / kappa, 250.0);
}

}  // namespace detail

/// Sample the structure on a uniform grid with spacing dz.
inline PotentialGrid build_grid(const StructureSpec& spec, double dz, const MaterialModel& model) {
  spec.validate();
  model.validate();
  if (!(dz > 0.0)) throw ConfigError("grid spacing must be > 0");
  double thinnest = std::numeric_limits<double>::infinity();
  for (const auto& l : spec.layers) thinnest = std::min(thinnest, l.thickness);
  if (dz > thinnest / 4.0 * (1.0 + 1e-12))
    throw ConfigError("grid spacing " + std::to_string(dz) + " nm exceeds a quarter of the thinnest layer (" +
                      std::to_string(thinnest) + " nm)");

  const std::size_t n_layers = spec.layers.size();
  std::vector<double> v(n_layers), inv_m(n_layers), edges(n_layers + 1);
  const double length = spec.total_thickness();
  edges[0] = -0.5 * length;
  double v_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_layers; ++i) {
    v[i] = offset_of(spec.layers[i].alloy_fraction, model);
    inv_m[i] = 1.0 / layer_mass(spec.layers[i], model);
    edges[i + 1] = edges[i] + spec.layers[i].thickness;
    v_min = std::min(v_min, v[i]);
  }
  edges[n_layers] = 0.5 * length;

  auto pad_for = [&](Boundary b, std::size_t edge_layer) {
    if (b == Boundary::open) return 0.0;
    if (spec.closed_padding) return *spec.closed_padding;
    return detail::default_closed_padding(v[edge_layer], v_min, 1.0 / inv_m[edge_layer]);
  };
  const double pad_left = pad_for(spec.left, 0);
  const double pad_right = pad_for(spec.right, n_layers - 1);

  const double span = length + pad_left + pad_right;
  const auto cells = static_cast<std::size_t>(std::ceil(span / dz - 1e-9));
  const double extra = static_cast<double>(cells) * dz - span;
  const double start = edges[0] - pad_left - 0.5 * extra;

  // Average of the piecewise-constant profile over [a, b]; the outermost
  // layers continue beyond the stack. Slivers from rounding of the layer
  // edges are dropped so a cell inside one layer takes its value exactly.
  auto cell_average = [&](double a, double b, const std::vector<double>& values) {
    double acc = 0.0;
    int pieces = 0;
    double single = 0.0;
    auto add = [&](double len, double value) {
      if (len <= 1e-9 * dz) return;
      acc += len * value;
      single = value;
      ++pieces;
    };
    if (a < edges[0]) add(std::min(b, edges[0]) - a, values.front());
    if (b > edges[n_layers]) add(b - std::max(a, edges[n_layers]), values.back());
    for (std::size_t i = 0; i < n_layers; ++i) {
      const double lo = std::max(a, edges[i]);
      const double hi = std::min(b, edges[i + 1]);
      if (hi > lo) add(hi - lo, values[i]);
    }
    return pieces == 1 ? single : acc / (b - a);
  };

  PotentialGrid g;
  g.dz = dz;
  g.stack_begin = edges[0];
  g.stack_end = edges[n_layers];
  g.left = spec.left;
  g.right = spec.right;
  g.z.resize(cells);
  g.V.resize(cells);
  g.m_eff.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = start + static_cast<double>(i) * dz;
    const double b = a + dz;
    g.z[i] = a + 0.5 * dz;
    g.V[i] = cell_average(a, b, v);
    g.m_eff[i] = 1.0 / cell_average(a, b, inv_m);
  }
  if (g.size() < 2) throw ConfigError("grid has fewer than two points");
  return g;
}

/// Same structure with layer order reversed (boundaries swap sides).
inline StructureSpec reflected(const StructureSpec& spec) {
  StructureSpec r = spec;
  std::reverse(r.layers.begin(), r.layers.end());
  std::swap(r.left, r.right);
  return r;
}

/// Closed counterpart of an open structure: every open outer layer is
/// raised to the highest alloy fraction present in the stack.
inline StructureSpec closed_counterpart(const StructureSpec& spec) {
  StructureSpec c = spec;
  double x_max = 0.0;
  for (const auto& l : spec.layers) x_max = std::max(x_max, l.alloy_fraction);
  if (c.left == Boundary::open) {
    c.layers.front().alloy_fraction = x_max;
    c.left = Boundary::closed;
  }
  if (c.right == Boundary::open) {
    c.layers.back().alloy_fraction = x_max;
    c.right = Boundary::closed;
  }
  return c;
}

}  // namespace qwdr
