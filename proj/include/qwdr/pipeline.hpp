#pragma once

// End-to-end pipeline: structure -> states -> couplings -> dephasing budget
// -> four-level parameters -> spectra, sweeps, oracle comparison, metrics.

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"
#include "couplings.hpp"
#include "dark_resonance.hpp"
#include "dephasing.hpp"
#include "detector_metrics.hpp"
#include "eigensolver.hpp"
#include "error.hpp"
#include "heterostructure.hpp"
#include "liouville_oracle.hpp"
#include "units.hpp"

namespace qwdr {

/// Run fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once; callers write results into slot i, so the merged
/// output does not depend on scheduling.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct RoleLevel {
  double energy = 0.0;
  std::vector<double> envelope;
};

struct PhononRates {
  double acoustic = 0.0;
  double polar = 0.0;
};

/// Everything the structure stages produce.
struct StructureAnalysis {
  bool open = false;
  StructureSpec closed;     // closed counterpart with pinned padding
  PotentialGrid grid;       // grid of the closed counterpart
  std::vector<BoundState> closed_states;
  TunnelCoupling tunnel;
  RoleLevel a, b, c, d;     // isolated-well levels
  double dipole_ab = 0.0, dipole_cb = 0.0, dipole_db = 0.0, dipole_dc = 0.0;  // e nm
  PhononRates phonon_ab, phonon_cb, phonon_db;  // meV
  double in_plane_q = 0.0;  // nm^-1
  // Open structure only.
  PotentialGrid open_grid;
  std::vector<Resonance> resonances;
  int res_minus = -1, res_plus = -1, res_d = -1;  // indices into resonances
};

namespace detail {

inline RoleLevel pick(const std::vector<BoundState>& levels, int index, const char* role, const char* well) {
  if (index < 0 || static_cast<std::size_t>(index) >= levels.size())
    throw ConfigError(fmt::format("role {}: well {} has {} bound levels, level {} requested", role, well,
                                  levels.size(), index));
  const auto& s = levels[static_cast<std::size_t>(index)];
  return {s.energy, s.envelope};
}

inline int nearest_resonance(const std::vector<Resonance>& r, double energy, const std::vector<int>& taken) {
  int best = -1;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (std::find(taken.begin(), taken.end(), static_cast<int>(k)) != taken.end()) continue;
    if (best < 0 || std::abs(r[k].energy - energy) < std::abs(r[static_cast<std::size_t>(best)].energy - energy))
      best = static_cast<int>(k);
  }
  return best;
}

inline EnergyWindow default_resonance_window(const PotentialGrid& g) {
  const tm::SliceModel m = tm::slice_model(g);
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& r : m.runs) top = std::max(top, r.V);
  const double floor = m.right_lead().V;
  return {floor + 0.5, std::min(top, m.left_lead().V) - 0.5};
}

}  // namespace detail

inline StructureAnalysis analyze_structure(const RunConfig& cfg) {
  if (!cfg.has_structure()) throw ConfigError("no structure file in config");
  const double dz = cfg.grid.dz_nm;
  const auto& model = cfg.material;
  StructureAnalysis out;
  out.open = cfg.structure.left == Boundary::open || cfg.structure.right == Boundary::open;
  if (cfg.structure.left == Boundary::open) throw ConfigError("only the right boundary may be open");

  const IsolatedWells iso =
      isolate_wells(closed_counterpart(cfg.structure), dz, model, cfg.roles.well_a, cfg.roles.well_c);
  out.closed = iso.full;
  out.grid = iso.grid;
  out.b = detail::pick(iso.levels_a, cfg.roles.level_b, "b", "a");
  out.a = detail::pick(iso.levels_a, cfg.roles.level_a, "a", "a");
  out.c = detail::pick(iso.levels_c, cfg.roles.level_c, "c", "c");
  out.d = detail::pick(iso.levels_c, cfg.roles.level_d, "d", "c");
  if (!(out.a.energy > out.b.energy)) throw ConfigError("role a must lie above role b");
  if (!(out.c.energy > out.b.energy)) throw ConfigError("role c must lie above role b");
  out.tunnel = tunnel_coupling(iso, {cfg.roles.well_a, cfg.roles.well_c, cfg.roles.level_a, cfg.roles.level_c});
  out.closed_states = solve_bound(out.grid, full_bound_window(out.grid));

  const auto& g = out.grid;
  out.dipole_ab = dipole(g, out.b.envelope, out.a.envelope).value;
  out.dipole_cb = dipole(g, out.b.envelope, out.c.envelope).value;
  out.dipole_db = dipole(g, out.b.envelope, out.d.envelope).value;
  out.dipole_dc = dipole(g, out.c.envelope, out.d.envelope).value;

  const auto& ph = cfg.dephasing.phonons;
  out.in_plane_q = cfg.dephasing.in_plane_q_nm.value_or(thermal_in_plane_q(ph.temperature_K, ph.effective_mass));
  auto rates = [&](const RoleLevel& x) {
    return PhononRates{acoustic_weight(g, x.envelope, out.b.envelope).value * ph.acoustic_prefactor(),
                       polar_optical_weight(g, x.envelope, out.b.envelope, out.in_plane_q).value *
                           ph.polar_prefactor()};
  };
  out.phonon_ab = rates(out.a);
  out.phonon_cb = rates(out.c);
  out.phonon_db = rates(out.d);

  if (out.open) {
    out.open_grid = build_grid(cfg.structure, dz, model);
    out.resonances = solve_resonances(out.open_grid,
                                      cfg.grid.resonance_window.value_or(detail::default_resonance_window(out.open_grid)));
    // Match the closed doublet and the closed state carrying d to resonances.
    const auto& st = out.closed_states;
    const auto n = static_cast<int>(st.size());
    if (out.tunnel.doublet_upper >= n) throw ConfigError("doublet lies outside the bound-state window");
    int d_state = -1;
    double best = -1.0;
    for (int k = 0; k < n; ++k) {
      const double o = std::abs(overlap(g, st[static_cast<std::size_t>(k)].envelope, out.d.envelope));
      if (o > best) {
        best = o;
        d_state = k;
      }
    }
    std::vector<int> taken;
    out.res_minus = detail::nearest_resonance(out.resonances, st[static_cast<std::size_t>(out.tunnel.doublet_lower)].energy, taken);
    taken.push_back(out.res_minus);
    out.res_plus = detail::nearest_resonance(out.resonances, st[static_cast<std::size_t>(out.tunnel.doublet_upper)].energy, taken);
    taken.push_back(out.res_plus);
    if (d_state >= 0) out.res_d = detail::nearest_resonance(out.resonances, st[static_cast<std::size_t>(d_state)].energy, taken);
    if (out.res_minus < 0 || out.res_plus < 0 || out.res_d < 0)
      throw ConfigError(fmt::format("open structure: found {} resonances, need the doublet and d",
                                    out.resonances.size()));
  }
  return out;
}

/// Bound states (and resonances when the right side is open) of the
/// structure exactly as given; needs no role assignment.
struct StructureStates {
  PotentialGrid grid;
  std::vector<BoundState> bound;
  std::vector<Resonance> resonances;
};

inline StructureStates structure_states(const RunConfig& cfg) {
  if (!cfg.has_structure()) throw ConfigError("no structure file in config");
  StructureStates out;
  out.grid = build_grid(cfg.structure, cfg.grid.dz_nm, cfg.material);
  const EnergyWindow full = full_bound_window(out.grid);
  EnergyWindow w = cfg.grid.bound_window.value_or(full);
  w.hi = std::min(w.hi, full.hi);
  if (w.hi > w.lo) out.bound = solve_bound(out.grid, w);
  if (cfg.structure.right == Boundary::open)
    out.resonances =
        solve_resonances(out.grid, cfg.grid.resonance_window.value_or(detail::default_resonance_window(out.grid)));
  return out;
}

/// Four-level parameters together with the budget they came from.
struct EffectiveModel {
  FourLevelParams params;
  DephasingBudget budget;
  double fano = 0.0;           // meV
  double radiative_a = 0.0;    // hbar A, meV
  double radiative_c = 0.0;
  double radiative_d = 0.0;
  double ir_intensity_W_m2 = 0.0;
  DecayPath d_path = DecayPath::d_to_b;
  bool from_structure = false;
};

inline EffectiveModel effective_params(const RunConfig& cfg, const StructureAnalysis& s) {
  const auto& f = cfg.fields;
  const auto& dp = cfg.dephasing;
  const double n = f.refractive_index;
  EffectiveModel m;
  m.from_structure = true;
  m.d_path = dp.d_path;
  auto& p = m.params;

  p.Omega = 0.5 * s.tunnel.splitting;
  p.Delta0 = s.c.energy - s.a.energy;
  p.Delta_IR = f.ir_detuning_meV;
  m.ir_intensity_W_m2 = f.ir_intensity_W_m2();
  p.Omega_IR = rabi_energy(s.dipole_dc, m.ir_intensity_W_m2, n);
  p.alpha = f.probe_power_W ? rabi_energy(s.dipole_ab, *f.probe_power_W / (f.detector_area_um2 * 1e-12), n)
                            : f.probe_rabi_fraction * p.Omega;

  const double e_ab = s.a.energy - s.b.energy;
  const double e_cb = s.c.energy - s.b.energy;
  const double e_db = s.d.energy - s.b.energy;
  const double e_dc = s.d.energy - s.c.energy;
  if (!(e_dc > 0.0)) throw ConfigError("role d must lie above role c");
  m.radiative_a = radiative_rate(s.dipole_ab, e_ab, n);
  m.radiative_c = radiative_rate(s.dipole_cb, e_cb, n);
  m.radiative_d = radiative_rate(s.dipole_db, e_db, n) + radiative_rate(s.dipole_dc, e_dc, n);

  BudgetInputs in;
  in.radiative_ab = 0.5 * m.radiative_a;
  in.radiative_cb = 0.5 * m.radiative_c;
  in.radiative_db = 0.5 * m.radiative_d;
  in.acoustic_ab = s.phonon_ab.acoustic;
  in.acoustic_cb = s.phonon_cb.acoustic;
  in.acoustic_db = s.phonon_db.acoustic;
  in.polar_ab = s.phonon_ab.polar;
  in.polar_cb = s.phonon_cb.polar;
  in.polar_db = s.phonon_db.polar;
  in.roughness = dp.roughness_meV;
  in.roughness_weights = dp.roughness_weights;
  in.phonon_weights = dp.phonon_weights;
  in.laser_linewidth = units::linewidth_GHz_to_meV(f.ir_linewidth_GHz);
  if (s.open) {
    const auto& r = s.resonances;
    m.fano = fano_coupling(r[static_cast<std::size_t>(s.res_plus)].width, r[static_cast<std::size_t>(s.res_minus)].width,
                           dp.fano_constant)
                 .value;
    in.fano = m.fano;
    in.fano_routing = dp.fano_routing;
    if (dp.continuum_tunneling) in.tunneling_db = 0.5 * r[static_cast<std::size_t>(s.res_d)].width;
  }
  m.budget = assemble_budget(in);

  p.gamma_ab = m.budget.gamma_ab();
  p.gamma_cb = m.budget.gamma_cb();
  p.gamma_db = m.budget.gamma_db();
  p.gamma_a_to_b = m.radiative_a + dp.phonon_weights.ab * (s.phonon_ab.acoustic + s.phonon_ab.polar);
  p.ir_linewidth = in.laser_linewidth;
  p.lambda_probe_um = units::wavelength_um(e_ab);
  p.lambda_IR_um = units::wavelength_um(e_dc);
  p.N_density_cm3 = cfg.spectrum.density_cm3;
  p.eta = eta_from_primitives(m.radiative_a, p.N_density_cm3, p.lambda_probe_um);
  p.validate();
  return m;
}

/// Parameters from the `params` block if present, otherwise from the structure.
inline EffectiveModel resolve_model(const RunConfig& cfg) {
  if (cfg.params) {
    EffectiveModel m;
    m.params = *cfg.params;
    m.d_path = cfg.dephasing.d_path;
    return m;
  }
  return effective_params(cfg, analyze_structure(cfg));
}

// ---------------------------------------------------------------------------
// Output helpers

inline std::string hash_line(const RunConfig& cfg) { return fmt::format("# config_hash: {:016x}\n", cfg.hash); }

inline std::string num(double v) { return fmt::format("{:.10e}", v); }

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

inline std::string parity_label(const PotentialGrid& g, const std::vector<double>& psi) {
  // Only meaningful when the grid is symmetric about z = 0.
  if (std::abs(g.front() + g.back()) > 1e-9 * std::max(1.0, std::abs(g.back()))) return "none";
  std::vector<double> mirrored(psi.rbegin(), psi.rend());
  const double s = overlap(g, psi, mirrored) / overlap(g, psi, psi);
  if (s > 0.99) return "even";
  if (s < -0.99) return "odd";
  return "mixed";
}

inline std::string envelope_csv(const RunConfig& cfg, const PotentialGrid& g, const std::vector<double>& psi) {
  std::string out = hash_line(cfg) + "z_nm,psi\n";
  for (std::size_t k = 0; k < g.size(); ++k) out += fmt::format("{},{}\n", num(g.z[k]), num(psi[k]));
  return out;
}

inline std::string states_csv(const RunConfig& cfg, const StructureStates& s) {
  std::string out = hash_line(cfg) + "index,kind,energy_meV,width_meV,parity\n";
  int idx = 0;
  for (const auto& b : s.bound)
    out += fmt::format("{},bound,{},{},{}\n", idx++, num(b.energy), num(0.0), parity_label(s.grid, b.envelope));
  for (const auto& r : s.resonances)
    out += fmt::format("{},resonance,{},{},-\n", idx++, num(r.energy), num(r.width));
  return out;
}

inline std::string model_report(const StructureAnalysis* s, const EffectiveModel& m) {
  const auto& p = m.params;
  std::string out;
  auto line = [&](const std::string& k, double v, const char* unit) {
    out += fmt::format("{:<24} = {} {}\n", k, num(v), unit);
  };
  if (s) {
    line("E_b", s->b.energy, "meV");
    line("E_a", s->a.energy, "meV");
    line("E_c", s->c.energy, "meV");
    line("E_d", s->d.energy, "meV");
    line("tunnel_matrix_element", s->tunnel.matrix_element, "meV");
    line("doublet_splitting", s->tunnel.splitting, "meV");
    line("dipole_ab", s->dipole_ab, "e nm");
    line("dipole_cb", s->dipole_cb, "e nm");
    line("dipole_db", s->dipole_db, "e nm");
    line("dipole_dc", s->dipole_dc, "e nm");
    line("acoustic_rate_ab", s->phonon_ab.acoustic, "meV");
    line("acoustic_rate_cb", s->phonon_cb.acoustic, "meV");
    line("acoustic_rate_db", s->phonon_db.acoustic, "meV");
    line("polar_rate_ab", s->phonon_ab.polar, "meV");
    line("polar_rate_cb", s->phonon_cb.polar, "meV");
    line("polar_rate_db", s->phonon_db.polar, "meV");
    line("in_plane_q", s->in_plane_q, "1/nm");
    if (s->open) {
      line("width_minus", s->resonances[static_cast<std::size_t>(s->res_minus)].width, "meV");
      line("width_plus", s->resonances[static_cast<std::size_t>(s->res_plus)].width, "meV");
      line("width_d", s->resonances[static_cast<std::size_t>(s->res_d)].width, "meV");
      line("fano", m.fano, "meV");
    }
    line("radiative_a", m.radiative_a, "meV");
    line("radiative_c", m.radiative_c, "meV");
    line("radiative_d", m.radiative_d, "meV");
    line("ir_intensity", m.ir_intensity_W_m2, "W/m^2");
    auto budget = [&](const char* name, const CoherenceBudget& b) {
      out += fmt::format("budget_{:<17} = radiative {} acoustic {} polar {} roughness {} laser {} fano {} tunneling {}\n",
                         name, num(b.radiative), num(b.acoustic), num(b.polar_optical), num(b.roughness),
                         num(b.laser_linewidth), num(b.fano), num(b.tunneling));
    };
    budget("ab", m.budget.ab);
    budget("cb", m.budget.cb);
    budget("db", m.budget.db);
    if (s->open) {
      std::string routed;
      if (m.budget.ab.fano > 0.0) routed += " ab";
      if (m.budget.cb.fano > 0.0) routed += " cb";
      if (m.budget.db.fano > 0.0) routed += " db";
      out += fmt::format("note: Fano width added to coherences:{}\n", routed.empty() ? " none" : routed);
    }
  }
  line("Omega", p.Omega, "meV");
  line("alpha", p.alpha, "meV");
  line("Omega_IR", p.Omega_IR, "meV");
  line("Delta0", p.Delta0, "meV");
  line("Delta_IR", p.Delta_IR, "meV");
  line("gamma_ab", p.gamma_ab, "meV");
  line("gamma_cb", p.gamma_cb, "meV");
  line("gamma_db", p.gamma_db, "meV");
  line("gamma_a_to_b", p.gamma_a_to_b, "meV");
  line("ir_linewidth", p.ir_linewidth, "meV");
  line("eta", p.eta, "meV");
  line("lambda_probe", p.lambda_probe_um, "um");
  line("lambda_IR", p.lambda_IR_um, "um");
  return out;
}

// ---------------------------------------------------------------------------
// Spectra

inline std::vector<double> detuning_grid(const SpectrumConfig& s) { return linear_grid(s.lo_meV, s.hi_meV, s.points); }

struct SpectrumCase {
  std::string name;  // ir_off, ir_on, ir_detuned
  FourLevelParams params;
};

inline std::vector<SpectrumCase> spectrum_cases(const RunConfig& cfg, const FourLevelParams& p, bool ir_off, bool ir_on) {
  std::vector<SpectrumCase> cases;
  if (ir_off) {
    FourLevelParams off = p;
    off.Omega_IR = 0.0;
    cases.push_back({"ir_off", off});
  }
  if (ir_on) {
    cases.push_back({"ir_on", p});
    if (cfg.fields.detuned_ir_meV) {
      FourLevelParams det = p;
      det.Delta_IR = *cfg.fields.detuned_ir_meV;
      cases.push_back({"ir_detuned", det});
    }
  }
  return cases;
}

/// Spectrum evaluated on `threads` workers; each grid point is independent.
inline Spectrum parallel_spectrum(const FourLevelParams& p, const std::vector<double>& grid, double od, unsigned threads) {
  if (threads <= 1) return spectrum(p, grid, od);
  const std::size_t chunks = std::min<std::size_t>(threads, grid.size() / 2);
  if (chunks <= 1) return spectrum(p, grid, od);
  // Singular points are rare; evaluate in parallel, then let spectrum()
  // handle the (serial) interpolation only if any point failed.
  std::vector<cplx> chi(grid.size());
  std::vector<char> bad(grid.size(), 0);
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    try {
      chi[k] = susceptibility(p, grid[k]);
    } catch (const SingularParameters&) {
      bad[k] = 1;
    }
  });
  if (std::find(bad.begin(), bad.end(), 1) != bad.end()) return spectrum(p, grid, od);
  Spectrum s;
  s.detuning = grid;
  s.optical_density = od;
  s.chi_reference = bare_peak(p);
  s.chi = std::move(chi);
  s.transmission.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) s.transmission[k] = std::exp(-od * s.chi[k].imag() / s.chi_reference);
  return s;
}

inline std::string spectrum_csv(const RunConfig& cfg, const Spectrum& s) {
  std::string out = hash_line(cfg) + "detuning_meV,re_chi,im_chi,transmission\n";
  for (std::size_t k = 0; k < s.detuning.size(); ++k)
    out += fmt::format("{},{},{},{}\n", num(s.detuning[k]), num(s.chi[k].real()), num(s.chi[k].imag()),
                       num(s.transmission[k]));
  return out;
}

inline std::string singular_log(const RunConfig& cfg, const Spectrum& s) {
  std::string out = hash_line(cfg) + "# grid points replaced by interpolation (vanishing denominator)\n";
  for (std::size_t k : s.singular) out += fmt::format("{},{}\n", k, num(s.detuning[k]));
  return out;
}

// ---------------------------------------------------------------------------
// Narrow line and sweeps

/// Absorption added by the IR field at the narrow-line centre, in units of
/// eta: [Im chi(Omega_IR) - Im chi(0)] / eta. Both geometries share eta's
/// absolute scale, so this compares dips across structures.
inline double dip_contrast(const FourLevelParams& p) {
  FourLevelParams q = p;
  q.Delta = p.Delta0 + p.Delta_IR;
  const double on = susceptibility(q).imag();
  q.Omega_IR = 0.0;
  const double off = susceptibility(q).imag();
  return (on - off) / p.eta;
}

struct SweepRow {
  double value = 0.0;
  double center = 0.0;
  double width = 0.0;
  double contrast = 0.0;
  double transmission_on = 0.0;
  double transmission_off = 0.0;
};

inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> names = {
      "fields.ir_power_W",     "fields.ir_detuning_meV",   "fields.ir_linewidth_GHz", "fields.probe_rabi_fraction",
      "dephasing.roughness_meV", "dephasing.fano_constant", "spectrum.optical_density", "params.Omega",
      "params.alpha",          "params.Omega_IR",          "params.Delta0",           "params.Delta_IR",
      "params.gamma_ab",       "params.gamma_cb",          "params.gamma_db",         "params.gamma_a_to_b",
      "params.ir_linewidth"};
  return names;
}

namespace detail {

inline double* params_field(FourLevelParams& p, const std::string& name) {
  if (name == "params.Omega") return &p.Omega;
  if (name == "params.alpha") return &p.alpha;
  if (name == "params.Omega_IR") return &p.Omega_IR;
  if (name == "params.Delta0") return &p.Delta0;
  if (name == "params.Delta_IR") return &p.Delta_IR;
  if (name == "params.gamma_ab") return &p.gamma_ab;
  if (name == "params.gamma_cb") return &p.gamma_cb;
  if (name == "params.gamma_db") return &p.gamma_db;
  if (name == "params.gamma_a_to_b") return &p.gamma_a_to_b;
  if (name == "params.ir_linewidth") return &p.ir_linewidth;
  return nullptr;
}

inline double* config_field(RunConfig& c, const std::string& name) {
  if (name == "fields.ir_power_W") return &c.fields.ir_power_W;
  if (name == "fields.ir_detuning_meV") return &c.fields.ir_detuning_meV;
  if (name == "fields.ir_linewidth_GHz") return &c.fields.ir_linewidth_GHz;
  if (name == "fields.probe_rabi_fraction") return &c.fields.probe_rabi_fraction;
  if (name == "dephasing.roughness_meV") return &c.dephasing.roughness_meV;
  if (name == "dephasing.fano_constant") return &c.dephasing.fano_constant;
  if (name == "spectrum.optical_density") return &c.spectrum.optical_density;
  return nullptr;
}

}  // namespace detail

/// Evaluate the narrow-line observables for each value of one parameter.
/// Structure stages run once; each value only re-derives the parameters.
inline std::vector<SweepRow> run_sweep(const RunConfig& cfg, unsigned threads) {
  const auto& name = cfg.sweep.parameter;
  if (std::find(sweep_parameters().begin(), sweep_parameters().end(), name) == sweep_parameters().end())
    throw ConfigError("sweep.parameter '" + name + "' is not sweepable");
  if (cfg.sweep.values.empty()) throw ConfigError("sweep.values is empty");
  const bool structure_field = name.rfind("fields.", 0) == 0 || name.rfind("dephasing.", 0) == 0;
  if (structure_field && cfg.params)
    throw ConfigError("sweep over " + name + " needs the structure pipeline, but a params block is set");
  std::optional<StructureAnalysis> analysis;
  if (!cfg.params) analysis = analyze_structure(cfg);

  std::vector<SweepRow> rows(cfg.sweep.values.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    RunConfig c = cfg;
    const double v = cfg.sweep.values[i];
    if (double* f = detail::config_field(c, name)) *f = v;
    FourLevelParams p = analysis ? effective_params(c, *analysis).params : *c.params;
    if (double* f = detail::params_field(p, name)) *f = v;
    p.validate();
    const NarrowLine line = predict_narrow_line(p);
    SweepRow r;
    r.value = v;
    r.center = line.center;
    r.width = line.width;
    r.contrast = dip_contrast(p);
    FourLevelParams q = p;
    q.Delta = line.center;
    const double od = c.spectrum.optical_density;
    r.transmission_on = std::exp(-od * susceptibility(q).imag() / bare_peak(q));
    q.Omega_IR = 0.0;
    r.transmission_off = std::exp(-od * susceptibility(q).imag() / bare_peak(q));
    rows[i] = r;
  });
  return rows;
}

inline std::string sweep_csv(const RunConfig& cfg, const std::vector<SweepRow>& rows) {
  std::string out = hash_line(cfg) + fmt::format("# parameter: {}\n", cfg.sweep.parameter) +
                    "value,narrow_center_meV,narrow_width_meV,dip_contrast,transmission_on,transmission_off\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{}\n", num(r.value), num(r.center), num(r.width), num(r.contrast),
                       num(r.transmission_on), num(r.transmission_off));
  return out;
}

// ---------------------------------------------------------------------------
// Oracle comparison

struct OracleRow {
  double detuning = 0.0;
  double formula = 0.0;
  double oracle = 0.0;
  double rel_err = 0.0;
  bool skipped = false;
};

struct OracleReport {
  std::vector<OracleRow> rows;
  double max_rel_err = 0.0;
  bool weak_probe = true;  // agreement required
  bool pass = true;
  std::vector<std::string> notes;
};

/// Closed-form susceptibility vs. the master-equation steady state over the
/// spectrum window. In the weak-probe regime the oracle is the linear
/// response (derivative in alpha at zero); otherwise it is rho_ba / alpha at
/// the configured probe, and disagreement is informational.
inline OracleReport oracle_check(const RunConfig& cfg, const FourLevelParams& base, DecayPath d_path, unsigned threads) {
  OracleReport rep;
  FourLevelParams p = base;
  p.alpha = cfg.oracle.alpha_over_Omega * p.Omega;
  rep.weak_probe = cfg.oracle.alpha_over_Omega <= cfg.oracle.weak_probe_limit;
  const auto grid = linear_grid(cfg.spectrum.lo_meV, cfg.spectrum.hi_meV, cfg.oracle.points);
  rep.rows.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    OracleRow& r = rep.rows[k];
    r.detuning = grid[k];
    FourLevelParams q = p;
    q.Delta = grid[k];
    try {
      const double f = susceptibility(q).imag();
      const MasterEquationSpec spec = spec_for(q, d_path);
      const double o = rep.weak_probe ? oracle_susceptibility(spec, q.alpha).imag()
                                      : oracle_susceptibility_at_probe(spec).imag();
      r.formula = f;
      r.oracle = o;
      r.rel_err = std::abs(f - o) / std::max(std::abs(f), std::abs(o));
      if (!std::isfinite(r.rel_err)) r.rel_err = f == o ? 0.0 : std::numeric_limits<double>::infinity();
    } catch (const SingularParameters&) {
      r.skipped = true;
    } catch (const OracleDegeneracy&) {
      r.skipped = true;
    }
  });
  for (const auto& r : rep.rows) {
    if (r.skipped) {
      rep.notes.push_back(fmt::format("skipped singular point at detuning {}", num(r.detuning)));
      continue;
    }
    rep.max_rel_err = std::max(rep.max_rel_err, r.rel_err);
  }
  rep.pass = !rep.weak_probe || rep.max_rel_err <= cfg.oracle.tolerance;
  if (!rep.weak_probe)
    rep.notes.push_back("probe outside the weak-probe limit; saturation makes the comparison informational");
  return rep;
}

inline std::string oracle_csv(const RunConfig& cfg, const OracleReport& rep) {
  std::string out = hash_line(cfg) + "detuning,im_chi_formula,im_chi_oracle,rel_err\n";
  for (const auto& r : rep.rows) {
    if (r.skipped) {
      out += fmt::format("{},nan,nan,nan\n", num(r.detuning));
      continue;
    }
    out += fmt::format("{},{},{},{}\n", num(r.detuning), num(r.formula), num(r.oracle), num(r.rel_err));
  }
  return out;
}

}  // namespace qwdr
