// Acceptance run: one line per criterion, exit status 1 if any fails.

#include <qwdr/liouville_oracle.hpp>
#include <qwdr/pipeline.hpp>

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "oracles.hpp"

using namespace qwdr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path config(const char* name) { return fs::path(QWDR_CONFIG_DIR) / name; }

// ---------------------------------------------------------------------------

Outcome dark_state_decoupling() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1e-3, 100.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    FourLevelParams p;
    p.Omega = u(rng);
    p.alpha = u(rng);
    p.Omega_IR = 0.0;
    worst = std::max(worst, hamiltonian_apply(p, dark_state(p)).norm());
  }
  return {worst < 1e-12, fmt::format("max |H|dark>| = {:.2e} over 100 draws", worst)};
}

Outcome eit_transparency() {
  FourLevelParams p;
  p.Omega = 40.0;
  p.alpha = 0.4;
  p.gamma_ab = 5.0;
  p.gamma_cb = 0.0;
  p.gamma_db = 0.04;
  p.Omega_IR = 0.0;
  p.Delta = p.Delta0 = 0.0;
  const double a = std::abs(susceptibility(p));
  return {a < 1e-12, fmt::format("|chi| = {:.2e} at two-photon resonance", a)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int set = 0; set < 20; ++set) {
    MasterEquationSpec s;
    auto& p = s.params;
    p.Omega = 5.0 + 55.0 * u(rng);
    p.alpha = 1e-3 * p.Omega;
    p.Omega_IR = 0.3 * p.Omega * u(rng);
    p.Delta0 = 10.0 * (u(rng) - 0.5);
    p.Delta_IR = 10.0 * (u(rng) - 0.5);
    p.gamma_ab = 0.1 + 9.9 * u(rng);
    p.gamma_cb = 0.01 + 0.99 * u(rng);
    p.gamma_db = 0.01 + 0.99 * u(rng);
    p.eta = 0.5 + u(rng);
    s.decay_a = 2.0 * p.gamma_ab * u(rng);
    s.decay_c = 2.0 * p.gamma_cb * u(rng);
    s.decay_d = 2.0 * p.gamma_db * u(rng);
    s.d_path = u(rng) < 0.5 ? DecayPath::d_to_b : DecayPath::d_to_c;
    for (double d : linear_grid(-2.0 * p.Omega, 2.0 * p.Omega, 200)) {
      p.Delta = d;
      const double formula = susceptibility(p).imag();
      const double oracle = oracle_susceptibility(s, p.alpha).imag();
      worst = std::max(worst, std::abs(oracle - formula) / std::abs(formula));
    }
  }
  return {worst < 1e-3, fmt::format("max relative error {:.2e} over 20 x 200 points, alpha/Omega = 1e-3", worst)};
}

// The centre is pulled towards Delta0 by about Delta_IR Omega_IR^2/Omega^2, so
// the IR detuning is kept within a few linewidths.
Outcome narrow_line_law() {
  bool ok = true;
  std::string detail;
  for (double detuning : {0.0, 0.2}) {
    for (double ratio : {0.01, 0.03, 0.1}) {
      FourLevelParams p;
      p.Omega = 40.0;
      p.alpha = 0.4;
      p.gamma_ab = 5.0;
      p.gamma_a_to_b = 5.0;
      p.gamma_cb = 1e-4;
      p.gamma_db = 0.04;
      p.ir_linewidth = 0.04;
      p.Delta_IR = detuning;
      p.Omega_IR = ratio * p.Omega;
      const NarrowLine n = predict_narrow_line(p);
      const auto grid = linear_grid(n.center - 8.0 * n.width, n.center + 8.0 * n.width, 801);
      std::vector<double> y;
      for (double d : grid) y.push_back(susceptibility(p, d).imag());
      const auto f = fit::fit_lorentzian(grid, y, n.center, n.width);
      const double width_err = f.hwhm / n.width - 1.0;
      const double centre_err = std::abs(f.center - p.Delta_IR) / f.hwhm;
      ok = ok && std::abs(width_err) < 0.2 && centre_err < 0.05;
      detail += fmt::format("{}/{}: {:+.1f}%, {:.1e}; ", detuning, ratio, 100.0 * width_err, centre_err);
    }
  }
  detail = "Delta_IR/ratio: width error, centre offset in linewidths: " + detail.substr(0, detail.size() - 2);
  return {ok, detail};
}

Outcome eigensolver_oracles() {
  using namespace testing;
  double worst = 0.0;
  for (const auto& [width, depth] : {std::pair{10.0, 300.0}, std::pair{5.0, 800.0}, std::pair{3.0, 150.0}}) {
    auto spec = single_well(width, depth);
    spec.closed_padding = 20.0;
    const auto g = build_grid(spec, 0.01, gaas());
    const auto states = solve_bound(g, full_bound_window(g));
    const auto expected = finite_well_oracle(width, depth, 0.067);
    if (states.size() != expected.size()) return {false, "finite well: level count differs from the oracle"};
    for (std::size_t i = 0; i < states.size(); ++i) worst = std::max(worst, std::abs(states[i].energy - expected[i]));
  }

  const double L = 10.0;
  const MaterialModel deep{1.0e7, 0.067};
  auto spec = single_well(L, 1.0e7, 1.0, deep);
  spec.closed_padding = 1.0;
  const auto g = build_grid(spec, 0.01, deep);
  const auto ground = solve_bound(g, {0.0, 200.0});
  const double analytic = units::hbar2_over_2me / 0.067 * std::pow(units::pi / L, 2);
  const double deep_err = ground.empty() ? 1.0 : std::abs(ground[0].energy / analytic - 1.0);

  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> thick(0.6, 6.0), alloy(0.0, 0.5);
  int broken = 0;
  for (int trial = 0; trial < 10; ++trial) {
    StructureSpec s;
    s.layers.push_back({8.0, 0.8, {}, {}});
    std::vector<Layer> half;
    for (int k = 0; k < 1 + trial % 3; ++k) half.push_back({thick(rng), alloy(rng), {}, {}});
    for (const auto& l : half) s.layers.push_back(l);
    s.layers.push_back({thick(rng), alloy(rng), {}, {}});
    for (auto it = half.rbegin(); it != half.rend(); ++it) s.layers.push_back(*it);
    s.layers.push_back({8.0, 0.8, {}, {}});
    const auto grid = build_grid(s, 0.01, gaas());
    const auto states = solve_bound(grid, full_bound_window(grid));
    if (states.empty()) ++broken;
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i].node_count != static_cast<int>(i) || parity_error(states[i].envelope) > 1e-6) ++broken;
  }
  return {worst < 1e-6 && deep_err < 5e-3 && broken == 0,
          fmt::format("finite well max error {:.1e} meV; deep well E1 {:.3f} vs {:.3f} meV; {} invariant violations",
                      worst, ground.empty() ? 0.0 : ground[0].energy, analytic, broken)};
}

Outcome resonance_widths() {
  using namespace testing;
  bool ok = true;
  std::string detail;
  for (const ToyOpen& t : {ToyOpen{5.0, 1.5, 800.0, 0.0}, ToyOpen{4.0, 2.0, 600.0, 100.0}, ToyOpen{6.0, 1.2, 800.0, 200.0}}) {
    auto spec = toy_spec(t);
    spec.closed_padding = 10.0;
    const auto g = build_grid(spec, 0.01, gaas());
    const auto res = solve_resonances(g, {t.floor_meV + 1.0, 0.98 * t.barrier_meV});
    if (res.empty()) return {false, "no resonance found"};
    const auto pole = pole_scan(toy_slabs(t), t.barrier_meV, t.floor_meV, 0.067, {res[0].energy, -0.5 * res[0].width});
    const double rel = std::abs(res[0].width / (-2.0 * pole.imag()) - 1.0);
    ok = ok && rel < 0.1;
    detail += fmt::format("{:.2f} meV wide {:+.2f}%; ", res[0].width, 100.0 * (res[0].width / (-2.0 * pole.imag()) - 1.0));
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome phonon_bounds() {
  const RunConfig cfg = load_run_config(config("open_dephased.yaml"));
  const StructureAnalysis a = analyze_structure(cfg);
  const auto& r = a.phonon_cb;
  return {r.acoustic < 1e-4 && r.polar < 0.1,
          fmt::format("b-c acoustic {:.2e} meV (< 1e-4), polar {:.2e} meV (< 0.1)", r.acoustic, r.polar)};
}

Outcome sensitivity() {
  DetectorInputs in;
  in.lambda_IR_um = 10.0;
  in.lambda_probe_um = 2.0;
  in.Omega = 40.0;
  in.gamma_decoh = 1.0;
  in.measuring_time_s = 1.0;
  double lo = 1e300, hi = 0.0;
  for (double gamma : {1.0, 2.0, 5.0, 10.0}) {
    in.Gamma = gamma;
    const double w = min_power(in).watts;
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  return {lo >= 1e-7 && hi <= 1e-5,
          fmt::format("P_min {:.2e} .. {:.2e} W for Gamma 1..10 meV, target 1e-7 .. 1e-5 W", lo, hi)};
}

Outcome efficiency_factors() {
  DetectorInputs in;
  QwipInputs q;
  double worst_coherence = 1e300;
  for (double gamma : {1.0, 5.0, 10.0}) {
    in.Gamma = gamma;
    worst_coherence = std::min(worst_coherence, efficiency(in).coherence_factor);
  }
  in.Gamma = q.Gamma_QWIP;
  const QwipRatio r = qwip_ratio(in, q);
  const bool ranges = std::abs(r.width_factor - 1.0) < 0.1 && std::abs(r.wavelength_factor - 0.2) < 0.02 &&
                      r.coherence_factor >= 0.002 && r.coherence_factor <= 0.02 && r.decoherence_factor >= 1.0 &&
                      r.decoherence_factor <= 3.0;
  return {worst_coherence > 100.0 && ranges,
          fmt::format("alpha^2/(Gamma gamma) >= {:.0f}; QWIP factors {:.2f}, {:.2f}, {:.4f}, {:.2f}", worst_coherence,
                      r.width_factor, r.wavelength_factor, r.coherence_factor, r.decoherence_factor)};
}

// Autler-Townes peak positions of the IR-off spectrum: real parts of the
// roots of (gamma_ab + i x)(gamma_cb + i(x - Delta0)) + Omega^2 = 0.
std::pair<double, double> autler_townes(const FourLevelParams& p) {
  const cplx i(0.0, 1.0);
  const cplx B = p.Delta0 + i * (p.gamma_ab + p.gamma_cb);
  const cplx C = p.gamma_ab * p.gamma_cb - i * p.gamma_ab * p.Delta0 + p.Omega * p.Omega;
  const cplx r = std::sqrt(B * B + 4.0 * C);
  const double x1 = (0.5 * (B - r)).real(), x2 = (0.5 * (B + r)).real();
  return {std::min(x1, x2), std::max(x1, x2)};
}

// IR-on absorbance -ln T has a local maximum at the narrow-line centre that
// lies between the Autler-Townes peaks, and exceeds the IR-off absorbance.
// Absorbance rather than T keeps shallow dips resolvable in double precision.
bool dip_in_window(const std::string& name, const FourLevelParams& p, double od, std::string& note) {
  const double centre = p.Delta0 + p.Delta_IR;
  auto absorbance = [&](FourLevelParams q, double d) {
    q.Delta = d;
    return od * susceptibility(q).imag() / bare_peak(q);
  };
  FourLevelParams off = p;
  off.Omega_IR = 0.0;
  const auto [left, right] = autler_townes(off);
  const double a_on = absorbance(p, centre), a_off = absorbance(off, centre);
  const double step = std::min(3.0 * predict_narrow_line(p).width, 0.1 * p.Omega);
  const bool local = a_on > absorbance(p, centre - step) && a_on > absorbance(p, centre + step);
  const bool ok = centre > left && centre < right && a_on > a_off && local;
  note += fmt::format("{} dip {:.1e}{}; ", name, a_on - a_off, local ? "" : " (no local minimum)");
  return ok;
}

Outcome spectral_shapes() {
  const RunConfig open_cfg = load_run_config(config("open_ideal.yaml"));
  const RunConfig closed_cfg = load_run_config(config("closed_ideal.yaml"));
  const StructureAnalysis open_a = analyze_structure(open_cfg);
  const StructureAnalysis closed_a = analyze_structure(closed_cfg);
  const FourLevelParams open_p = effective_params(open_cfg, open_a).params;
  const FourLevelParams closed_p = effective_params(closed_cfg, closed_a).params;

  const RunConfig curves_cfg = load_run_config(config("three_curves.yaml"));
  std::string note;
  bool dips = dip_in_window("model", resolve_model(curves_cfg).params, curves_cfg.spectrum.optical_density, note);
  dips = dip_in_window("open", open_p, open_cfg.spectrum.optical_density, note) && dips;
  dips = dip_in_window("closed", closed_p, closed_cfg.spectrum.optical_density, note) && dips;

  // 1 meV of extra dephasing on top of the ideal runs.
  bool reduced = true;
  for (const auto* run : {&open_cfg, &closed_cfg}) {
    RunConfig noisy = *run;
    noisy.dephasing.roughness_meV += 1.0;
    const auto& a = run == &open_cfg ? open_a : closed_a;
    const double ideal = dip_contrast(effective_params(*run, a).params);
    const double dephased = dip_contrast(effective_params(noisy, a).params);
    reduced = reduced && dephased < ideal;
    note += fmt::format("{} contrast {:.3e} -> {:.3e} with +1 meV; ", run == &open_cfg ? "open" : "closed", ideal, dephased);
  }

  // Closed-geometry IR power that matches the open-geometry dip contrast.
  const double target = dip_contrast(open_p);
  auto closed_contrast = [&](double log_power) {
    RunConfig c = closed_cfg;
    c.fields.ir_power_W = std::pow(10.0, log_power);
    return dip_contrast(effective_params(c, closed_a).params);
  };
  double lo = -20.0, hi = 0.0;
  if (!(closed_contrast(lo) < target && closed_contrast(hi) > target))
    return {false, note + "closed contrast does not bracket the open one"};
  for (int i = 0; i < 200 && hi - lo > 1e-10; ++i) {
    const double mid = 0.5 * (lo + hi);
    (closed_contrast(mid) < target ? lo : hi) = mid;
  }
  const double matched = std::pow(10.0, 0.5 * (lo + hi));
  const double ratio = open_cfg.fields.ir_power_W / matched;
  note += fmt::format("equal contrast at {:.2e} W closed vs {:.2e} W open (ratio {:.2e})", matched,
                      open_cfg.fields.ir_power_W, ratio);
  return {dips && reduced && ratio >= 1e3, note};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / fmt::format("qwdr_acceptance_{}", std::chrono::steady_clock::now().time_since_epoch().count());
  fs::remove_all(root);
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"solve --envelopes", "open_ideal.yaml"},
      {"spectrum --ir both", "three_curves.yaml"},
      {"spectrum --ir both", "closed_dephased.yaml"},
      {"sweep", "three_curves.yaml"},
      {"oracle-check", "three_curves.yaml"},
  };
  // Different thread counts on the two runs.
  for (const auto& [dir, threads] : {std::pair{"a", 1}, std::pair{"b", 4}}) {
    fs::create_directories(root / dir);
    for (const auto& [cmd, cfg] : runs) {
      const std::string line = fmt::format("\"{}\" {} --config \"{}\" --out \"{}\" --threads {} > /dev/null", QWDR_CLI_PATH,
                                           cmd, config(cfg.c_str()).string(), (root / dir).string(), threads);
      if (std::system(line.c_str()) != 0) return {false, "CLI failed: " + line};
    }
  }
  int files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    const fs::path other = root / "b" / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
  }
  fs::remove_all(root);
  return {files > 0 && differ == 0, fmt::format("{} CSV files compared, {} differ", files, differ)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "dark-state decoupling", 1.0, dark_state_decoupling},
      {2, "EIT transparency", 1.0, eit_transparency},
      {3, "oracle equivalence", 30.0, oracle_equivalence},
      {4, "narrow-line law", 10.0, narrow_line_law},
      {5, "eigensolver oracles", 20.0, eigensolver_oracles},
      {6, "resonance widths", 30.0, resonance_widths},
      {7, "phonon bounds", 10.0, phonon_bounds},
      {8, "minimum power", 1.0, sensitivity},
      {9, "efficiency factors", 1.0, efficiency_factors},
      {10, "spectral shapes", 60.0, spectral_shapes},
      {11, "determinism", 60.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && dt < c.limit_s;
    if (!pass) ++failed;
    fmt::print("[{}] {:2d} {:<24} {:7.3f} s  {}\n", pass ? "PASS" : "FAIL", c.id, c.name, dt, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria pass\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
