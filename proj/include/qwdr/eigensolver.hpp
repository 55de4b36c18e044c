#pragma once

// Envelope-function eigenstates of a PotentialGrid by the transfer-matrix
// method. The grid is piecewise constant, so it is compressed into runs of
// constant (V, m*) and the Schrodinger equation is integrated exactly across
// each run with BenDaniel-Duke matching (psi and psi'/m* continuous). The
// first and last runs act as semi-infinite leads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "error.hpp"
#include "fit.hpp"
#include "heterostructure.hpp"
#include "units.hpp"

namespace qwdr {

struct EnergyWindow {
  double lo = 0.0;  // meV
  double hi = 0.0;  // meV
};

struct BoundState {
  double energy = 0.0;          // meV
  std::vector<double> envelope;  // nm^-1/2, sampled on the grid
  int node_count = 0;           // sign changes of the sampled envelope
  int index = 0;                // position in the full spectrum (oscillation count)
};

struct Resonance {
  double energy = 0.0;  // meV
  double width = 0.0;   // meV, FWHM
  double width_sigma = 0.0;
  bool overlapping = false;  // a neighbour lies within the combined widths
  bool fit_ok = true;        // width_sigma <= 5% of width
  std::vector<double> envelope;  // normalised over the region left of the open lead
};

struct BoundSolverOptions {
  double scan_step = 0.01;    // meV
  double tolerance = 1e-6;    // meV
};

struct ResonanceSolverOptions {
  double scan_step = 0.01;           // meV
  double max_phase_step = 0.25;      // rad between neighbouring samples after refinement
  double min_phase_rise = 0.6 * units::pi;  // within +-3 estimated widths
  double fit_span = 8.0;             // fit window half-width in estimated widths
  int fit_points = 161;
  double max_relative_sigma = 0.05;
};

namespace tm {

struct Run {
  double V = 0.0;
  double inv_mass = 1.0;
  double begin = 0.0;   // nm
  double length = 0.0;  // nm
  std::size_t first = 0, last = 0;  // grid index range [first, last)
};

/// Grid compressed into runs of constant potential and mass.
struct SliceModel {
  std::vector<Run> runs;  // runs.front() and runs.back() are the leads
  double z_left = 0.0;    // end of the left lead
  double z_right = 0.0;   // start of the right lead

  const Run& left_lead() const { return runs.front(); }
  const Run& right_lead() const { return runs.back(); }
};

inline SliceModel slice_model(const PotentialGrid& g) {
  SliceModel m;
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); };
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double inv_m = 1.0 / g.m_eff[i];
    if (!m.runs.empty() && same(m.runs.back().V, g.V[i]) && same(m.runs.back().inv_mass, inv_m)) {
      m.runs.back().last = i + 1;
      m.runs.back().length += g.dz;
      continue;
    }
    m.runs.push_back({g.V[i], inv_m, g.cell_begin(i), g.dz, i, i + 1});
  }
  // Recompute lengths from indices to avoid accumulated rounding.
  for (auto& r : m.runs) {
    r.begin = g.cell_begin(r.first);
    r.length = static_cast<double>(r.last - r.first) * g.dz;
  }
  m.z_left = m.runs.front().begin + m.runs.front().length;
  m.z_right = m.runs.back().begin;
  return m;
}

/// Local wavenumber squared with sign: q2 > 0 oscillatory, q2 < 0 evanescent.
inline double q_squared(double energy, const Run& r) { return (energy - r.V) / (units::hbar2_over_2me * r.inv_mass); }

struct State {
  double psi = 0.0;
  double phi = 0.0;  // psi' / m*
};

struct Step {
  State out;
  int zeros = 0;
  double log_scale = 0.0;  // log of the positive factor removed from `out`
};

/// Integrate across a run of length `len` starting from `in`, counting zeros
/// of psi in (0, len].
inline Step advance(const State& in, double energy, const Run& r, double len) {
  const double m = 1.0 / r.inv_mass;
  const double q2 = q_squared(energy, r);
  const double dpsi = in.phi * m;
  Step s;
  double psi1 = 0.0, dpsi1 = 0.0;
  if (q2 > 0.0) {
    const double k = std::sqrt(q2);
    const double kl = k * len;
    const double c = std::cos(kl), sn = std::sin(kl);
    psi1 = in.psi * c + dpsi / k * sn;
    dpsi1 = -in.psi * k * sn + dpsi * c;
    const double theta0 = std::atan2(in.psi, dpsi / k);
    s.zeros = static_cast<int>(std::floor((theta0 + kl) / units::pi) - std::floor(theta0 / units::pi));
  } else if (q2 < 0.0) {
    // Divided through by cosh(kappa len) to stay finite.
    const double kappa = std::sqrt(-q2);
    const double kl = kappa * len;
    const double th = std::tanh(kl);
    psi1 = in.psi + dpsi / kappa * th;
    dpsi1 = in.psi * kappa * th + dpsi;
    s.log_scale = kl + std::log1p(std::exp(-2.0 * kl)) - std::log(2.0);
    if ((in.psi > 0.0 && psi1 < 0.0) || (in.psi < 0.0 && psi1 > 0.0) || (psi1 == 0.0 && in.psi != 0.0)) s.zeros = 1;
  } else {
    psi1 = in.psi + dpsi * len;
    dpsi1 = dpsi;
    if ((in.psi > 0.0 && psi1 < 0.0) || (in.psi < 0.0 && psi1 > 0.0) || (psi1 == 0.0 && in.psi != 0.0)) s.zeros = 1;
  }
  const double phi1 = dpsi1 * r.inv_mass;
  const double norm = std::hypot(psi1, phi1);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("transfer-matrix propagation degenerated");
  s.out = {psi1 / norm, phi1 / norm};
  s.log_scale += std::log(norm);
  return s;
}

/// psi at distance t into a run, given the state at the run start.
inline double evaluate(const State& in, double energy, const Run& r, double t) {
  const double m = 1.0 / r.inv_mass;
  const double q2 = q_squared(energy, r);
  const double dpsi = in.phi * m;
  if (q2 > 0.0) {
    const double k = std::sqrt(q2);
    return in.psi * std::cos(k * t) + dpsi / k * std::sin(k * t);
  }
  if (q2 < 0.0) {
    const double kappa = std::sqrt(-q2);
    return in.psi * std::cosh(kappa * t) + dpsi / kappa * std::sinh(kappa * t);
  }
  return in.psi + dpsi * t;
}

/// Left-lead solution that decays towards z -> -infinity, at z_left.
inline State left_decaying(double energy, const Run& lead) {
  const double q2 = q_squared(energy, lead);
  if (!(q2 < 0.0)) throw WindowError("energy is not below the left lead potential");
  const double kappa = std::sqrt(-q2);
  const double phi = kappa * lead.inv_mass;
  const double norm = std::hypot(1.0, phi);
  return {1.0 / norm, phi / norm};
}

struct Propagation {
  State at_right;  // state at z_right
  int zeros = 0;   // zeros of psi in (z_left, z_right]
  std::vector<State> run_start;     // state at the start of each interior run (and right lead)
  std::vector<double> run_log_scale;  // cumulative log scale at those points
};

inline Propagation propagate(const SliceModel& m, double energy, bool record) {
  Propagation p;
  State s = left_decaying(energy, m.left_lead());
  double log_scale = 0.0;
  if (record) {
    p.run_start.reserve(m.runs.size());
    p.run_log_scale.reserve(m.runs.size());
    p.run_start.push_back(s);
    p.run_log_scale.push_back(0.0);
  }
  for (std::size_t i = 1; i + 1 < m.runs.size(); ++i) {
    const Step st = advance(s, energy, m.runs[i], m.runs[i].length);
    s = st.out;
    log_scale += st.log_scale;
    p.zeros += st.zeros;
    if (record) {
      p.run_start.push_back(s);
      p.run_log_scale.push_back(log_scale);
    }
  }
  p.at_right = s;
  return p;
}

struct BoundMatch {
  double determinant = 0.0;  // proportional to the growing amplitude in the right lead
  int count_below = 0;       // number of eigenvalues below the energy
};

/// Matching function and oscillation count for energies below both leads.
inline BoundMatch bound_match(const SliceModel& m, double energy) {
  const Run& rl = m.right_lead();
  const double q2 = q_squared(energy, rl);
  if (!(q2 < 0.0)) throw WindowError("energy is not below the right lead potential");
  const double kappa = std::sqrt(-q2);
  const Propagation p = propagate(m, energy, false);
  const double dpsi = p.at_right.phi / rl.inv_mass;
  const double grow = 0.5 * (p.at_right.psi + dpsi / kappa);
  const double decay = 0.5 * (p.at_right.psi - dpsi / kappa);
  BoundMatch b;
  b.determinant = grow;
  b.count_below = p.zeros;
  // One more zero inside the right lead when the growing and decaying parts
  // cancel at some finite distance.
  if (((grow > 0.0 && decay < 0.0) || (grow < 0.0 && decay > 0.0)) && std::abs(decay) > std::abs(grow))
    b.count_below += 1;
  return b;
}

/// Scattering phase in the open right lead, unwrapped by the interior zero
/// count so it is continuous in energy.
inline double scattering_phase(const SliceModel& m, double energy) {
  const Run& rl = m.right_lead();
  const double q2 = q_squared(energy, rl);
  if (!(q2 > 0.0)) throw WindowError("energy is not above the open lead potential");
  const double k = std::sqrt(q2);
  const Propagation p = propagate(m, energy, false);
  const double dpsi = p.at_right.phi / rl.inv_mass;
  double d0 = std::atan2(p.at_right.psi, dpsi / k);
  if (d0 < 0.0) d0 += units::pi;
  if (d0 >= units::pi) d0 -= units::pi;
  return units::pi * p.zeros + d0;
}

/// Sample the left-started solution on every grid point. In the right lead
/// the decaying branch is kept for bound states and the full oscillatory
/// solution for scattering states.
inline std::vector<double> sample(const PotentialGrid& g, const SliceModel& m, double energy, bool bound) {
  const Propagation p = propagate(m, energy, true);
  std::vector<double> psi(g.size(), 0.0);

  // Leading log scale, so that the largest amplitude is of order one.
  double max_log = 0.0;
  for (double l : p.run_log_scale) max_log = std::max(max_log, l);

  const Run& ll = m.left_lead();
  const double kappa_l = std::sqrt(-q_squared(energy, ll));
  const State& s0 = p.run_start.front();
  for (std::size_t i = ll.first; i < ll.last; ++i) {
    const double t = g.z[i] - m.z_left;  // negative
    psi[i] = s0.psi * std::exp(kappa_l * t - max_log);
  }
  for (std::size_t r = 1; r + 1 < m.runs.size(); ++r) {
    const Run& run = m.runs[r];
    const State& s = p.run_start[r - 1];
    const double scale = std::exp(p.run_log_scale[r - 1] - max_log);
    for (std::size_t i = run.first; i < run.last; ++i) psi[i] = scale * evaluate(s, energy, run, g.z[i] - run.begin);
  }
  const Run& rl = m.right_lead();
  const State& sr = p.run_start.back();
  const double scale_r = std::exp(p.run_log_scale.back() - max_log);
  const double q2 = q_squared(energy, rl);
  for (std::size_t i = rl.first; i < rl.last; ++i) {
    const double t = g.z[i] - m.z_right;
    if (bound && q2 < 0.0) {
      psi[i] = scale_r * sr.psi * std::exp(-std::sqrt(-q2) * t);
    } else {
      psi[i] = scale_r * evaluate(sr, energy, rl, t);
    }
  }
  return psi;
}

}  // namespace tm

/// Trapezoidal integral of f over the grid.
inline double trapezoid(const PotentialGrid& g, const std::vector<double>& f) {
  if (f.size() != g.size()) throw ContractViolation("trapezoid: sample count does not match the grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i];
  acc -= 0.5 * (f.front() + f.back());
  return acc * g.dz;
}

inline double overlap(const PotentialGrid& g, const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != g.size() || b.size() != g.size()) throw ContractViolation("overlap: envelopes do not share the grid");
  std::vector<double> f(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) f[i] = a[i] * b[i];
  return trapezoid(g, f);
}

namespace detail {

// Normalise over [begin, end) and make the first significant lobe positive.
inline void normalize_envelope(const PotentialGrid& g, std::vector<double>& psi, std::size_t end) {
  double peak = 0.0;
  for (std::size_t i = 0; i < end; ++i) peak = std::max(peak, std::abs(psi[i]));
  if (!(peak > 0.0)) throw NumericalError("envelope vanished on the grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < end; ++i) acc += psi[i] * psi[i];
  if (end > 0) acc -= 0.5 * (psi[0] * psi[0] + psi[end - 1] * psi[end - 1]);
  double norm = std::sqrt(acc * g.dz);
  for (std::size_t i = 0; i < end; ++i) {
    if (std::abs(psi[i]) > 1e-3 * peak) {
      if (psi[i] < 0.0) norm = -norm;
      break;
    }
  }
  for (double& v : psi) v /= norm;
}

inline int count_sign_changes(const std::vector<double>& psi) {
  double peak = 0.0;
  for (double v : psi) peak = std::max(peak, std::abs(v));
  const double floor = 1e-10 * peak;
  int changes = 0;
  int last_sign = 0;
  for (double v : psi) {
    if (std::abs(v) <= floor) continue;
    const int s = v > 0.0 ? 1 : -1;
    if (last_sign != 0 && s != last_sign) ++changes;
    last_sign = s;
  }
  return changes;
}

}  // namespace detail

/// All bound states with energies inside the window, in ascending order.
inline std::vector<BoundState> solve_bound(const PotentialGrid& grid, EnergyWindow window,
                                           const BoundSolverOptions& opts = {}) {
  if (!(window.hi > window.lo)) throw ConfigError("energy window must have hi > lo");
  if (!(opts.scan_step > 0.0) || !(opts.tolerance > 0.0)) throw ConfigError("scan step and tolerance must be > 0");
  const tm::SliceModel model = tm::slice_model(grid);
  if (model.runs.size() < 3) return {};
  const double edge = std::min(model.left_lead().V, model.right_lead().V);
  if (window.hi >= edge)
    throw WindowError("energy window upper bound " + std::to_string(window.hi) +
                      " meV reaches the lead potential " + std::to_string(edge) + " meV; lower it below the edge");
  double v_min = std::numeric_limits<double>::infinity();
  for (const auto& r : model.runs) v_min = std::min(v_min, r.V);
  window.lo = std::max(window.lo, v_min - 1.0);
  if (!(window.hi > window.lo)) return {};

  auto match = [&](double e) { return tm::bound_match(model, e); };
  const tm::BoundMatch at_lo = match(window.lo), at_hi = match(window.hi);
  // An eigenvalue within the tolerance of either edge cannot be assigned to
  // the window reliably.
  auto straddles = [&](double e) {
    const double a = match(e - opts.tolerance).determinant, b = match(e + opts.tolerance).determinant;
    return a == 0.0 || b == 0.0 || (a > 0.0) != (b > 0.0);
  };
  if (at_lo.determinant == 0.0 || at_hi.determinant == 0.0 || straddles(window.lo) || straddles(window.hi))
    throw WindowError("energy window edge coincides with an eigenvalue; widen the window");

  std::vector<double> energies;
  const double bisect_tol = 1e-3 * opts.tolerance;

  // Refine one eigenvalue in (lo, hi] where the determinant changes sign.
  auto refine = [&](double lo, double hi, double det_lo) {
    for (int it = 0; it < 200 && hi - lo > bisect_tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double d = match(mid).determinant;
      if ((d > 0.0) == (det_lo > 0.0) && d != 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  // Split until each sub-interval holds exactly one eigenvalue.
  auto isolate = [&](auto&& self, double lo, const tm::BoundMatch& mlo, double hi, const tm::BoundMatch& mhi,
                     int depth) -> void {
    const int n = mhi.count_below - mlo.count_below;
    if (n <= 0) return;
    if (n == 1) {
      energies.push_back(refine(lo, hi, mlo.determinant));
      return;
    }
    const double mid = 0.5 * (lo + hi);
    if (depth > 80 || mid <= lo || mid >= hi)
      throw NumericalError("could not separate near-degenerate eigenvalues near " + std::to_string(mid) + " meV");
    const tm::BoundMatch mm = match(mid);
    self(self, lo, mlo, mid, mm, depth + 1);
    self(self, mid, mm, hi, mhi, depth + 1);
  };

  const auto steps = static_cast<std::size_t>(std::ceil((window.hi - window.lo) / opts.scan_step));
  double e_prev = window.lo;
  tm::BoundMatch m_prev = at_lo;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double e = k == steps ? window.hi : window.lo + static_cast<double>(k) * opts.scan_step;
    const tm::BoundMatch m = k == steps ? at_hi : match(e);
    isolate(isolate, e_prev, m_prev, e, m, 0);
    e_prev = e;
    m_prev = m;
  }

  std::vector<BoundState> states;
  states.reserve(energies.size());
  for (double e : energies) {
    BoundState s;
    s.energy = e;
    s.envelope = tm::sample(grid, model, e, true);
    detail::normalize_envelope(grid, s.envelope, grid.size());
    s.node_count = detail::count_sign_changes(s.envelope);
    s.index = match(e - 2.0 * bisect_tol).count_below;
    states.push_back(std::move(s));
  }
  return states;
}

/// Quasi-bound states of a structure whose right lead is open, located as
/// Breit-Wigner jumps of the scattering phase at real energies.
inline std::vector<Resonance> solve_resonances(const PotentialGrid& grid, EnergyWindow window,
                                               const ResonanceSolverOptions& opts = {}) {
  if (grid.right != Boundary::open) throw ConfigError("resonance search needs an open right boundary");
  if (!(window.hi > window.lo)) throw ConfigError("energy window must have hi > lo");
  const tm::SliceModel model = tm::slice_model(grid);
  if (model.runs.size() < 3) return {};
  const double floor = model.right_lead().V;
  const double ceiling = model.left_lead().V;
  if (window.lo <= floor)
    throw WindowError("resonance window must lie above the open lead potential " + std::to_string(floor) + " meV");
  if (window.hi >= ceiling)
    throw WindowError("resonance window must lie below the closed lead potential " + std::to_string(ceiling) + " meV");

  auto phase = [&](double e) { return tm::scattering_phase(model, e); };

  struct Sample {
    double e, d;
  };
  std::vector<Sample> samples;
  auto refine = [&](auto&& self, Sample a, Sample b, int depth) -> void {
    if (std::abs(b.d - a.d) <= opts.max_phase_step || depth > 60 || b.e - a.e < 1e-12 * std::max(1.0, std::abs(a.e))) {
      samples.push_back(b);
      return;
    }
    const double mid = 0.5 * (a.e + b.e);
    const Sample m{mid, phase(mid)};
    self(self, a, m, depth + 1);
    self(self, m, b, depth + 1);
  };
  const auto steps = static_cast<std::size_t>(std::ceil((window.hi - window.lo) / opts.scan_step));
  Sample prev{window.lo, phase(window.lo)};
  samples.push_back(prev);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double e = k == steps ? window.hi : window.lo + static_cast<double>(k) * opts.scan_step;
    const Sample s{e, phase(e)};
    refine(refine, prev, s, 0);
    prev = s;
  }

  // Local maxima of the phase derivative (Wigner time delay).
  std::vector<double> mid_e, slope;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const double de = samples[i + 1].e - samples[i].e;
    if (de <= 0.0) continue;
    mid_e.push_back(0.5 * (samples[i].e + samples[i + 1].e));
    slope.push_back((samples[i + 1].d - samples[i].d) / de);
  }
  struct Candidate {
    double e, width;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < slope.size(); ++i) {
    // Interior maxima only: the window edges are not resonances.
    if (i == 0 || i + 1 == slope.size()) continue;
    if (!(slope[i] > slope[i - 1] && slope[i] >= slope[i + 1]) || !(slope[i] > 0.0)) continue;
    const double w = 2.0 / slope[i];
    if (w > 0.5 * (window.hi - window.lo)) continue;
    const double lo = std::max(mid_e[i] - 3.0 * w, 0.5 * (floor + window.lo));
    const double hi = std::min(mid_e[i] + 3.0 * w, 0.5 * (ceiling + window.hi));
    if (phase(hi) - phase(lo) < opts.min_phase_rise) continue;
    candidates.push_back({mid_e[i], w});
  }

  std::vector<Resonance> out;
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    const Candidate& c = candidates[ci];
    const double span = opts.fit_span * c.width;
    double lo = std::max(c.e - span, floor + 1e-9 * std::max(1.0, std::abs(floor)) + 0.01 * (c.e - floor));
    double hi = std::min(c.e + span, ceiling - 0.01 * (ceiling - c.e));
    // Keep neighbouring phase jumps out of the fit window.
    if (ci > 0) lo = std::max(lo, 0.5 * (candidates[ci - 1].e + c.e));
    if (ci + 1 < candidates.size()) hi = std::min(hi, 0.5 * (c.e + candidates[ci + 1].e));
    std::vector<double> es(static_cast<std::size_t>(opts.fit_points)), ds(es.size());
    for (std::size_t j = 0; j < es.size(); ++j) {
      es[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(es.size() - 1);
      ds[j] = phase(es[j]);
    }
    const fit::BreitWignerFit f = fit::fit_breit_wigner(es, ds, c.e, c.width);
    if (!(f.width > 0.0) || !std::isfinite(f.energy) || f.energy <= lo || f.energy >= hi) continue;
    if (f.width > hi - lo) continue;
    if (std::abs(f.energy - c.e) > 2.0 * std::max(c.width, f.width)) continue;
    auto same = std::find_if(out.begin(), out.end(), [&](const Resonance& r) {
      return std::abs(r.energy - f.energy) < 0.5 * std::min(r.width, f.width);
    });
    if (same != out.end()) {
      if (same->width_sigma / same->width <= f.width_sigma / f.width) continue;
      out.erase(same);
    }
    Resonance r;
    r.energy = f.energy;
    r.width = f.width;
    r.width_sigma = f.width_sigma;
    r.fit_ok = f.width_sigma <= opts.max_relative_sigma * f.width;
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const Resonance& a, const Resonance& b) { return a.energy < b.energy; });
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    if (out[i + 1].energy - out[i].energy < out[i].width + out[i + 1].width) {
      out[i].overlapping = out[i + 1].overlapping = true;
      out[i].fit_ok = out[i + 1].fit_ok = false;
    }
  }

  // Interior: everything left of the open lead.
  const std::size_t interior_end = model.right_lead().first;
  for (auto& r : out) {
    r.envelope = tm::sample(grid, model, r.energy, false);
    detail::normalize_envelope(grid, r.envelope, interior_end);
  }
  return out;
}

/// Default bound-state window: from the potential minimum up to just below
/// the lower lead.
inline EnergyWindow full_bound_window(const PotentialGrid& g, double margin = 1e-3) {
  const tm::SliceModel m = tm::slice_model(g);
  double v_min = std::numeric_limits<double>::infinity();
  for (const auto& r : m.runs) v_min = std::min(v_min, r.V);
  const double edge = std::min(m.left_lead().V, m.right_lead().V);
  return {v_min, edge - margin};
}

}  // namespace qwdr
