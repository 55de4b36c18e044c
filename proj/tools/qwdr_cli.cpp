// qwdr: command-line driver for the double-dark-resonance pipeline.
//
//   qwdr solve        --config run.yaml --out dir [--envelopes]
//   qwdr spectrum     --config run.yaml --out dir [--ir on|off|both]
//   qwdr detect       --config run.yaml --out dir
//   qwdr sweep        --config run.yaml --out dir
//   qwdr oracle-check --config run.yaml --out dir
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 oracle mismatch.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <qwdr/pipeline.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

namespace fs = std::filesystem;
using namespace qwdr;

namespace {

enum Exit { ok = 0, config_error = 2, numerical_error = 3, oracle_mismatch = 4 };

struct Options {
  std::string config;
  std::string out = ".";
  unsigned threads = 0;
  std::uint64_t seed = 0;  // reserved; the pipeline is deterministic
  std::string ir = "both";
  bool envelopes = false;
};

unsigned worker_count(const Options& o) {
  if (o.threads > 0) return o.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_solve(const Options& o) {
  const RunConfig cfg = load_run_config(o.config);
  const fs::path out(o.out);
  const StructureStates st = structure_states(cfg);
  write_text(out / "states.csv", states_csv(cfg, st));
  if (o.envelopes) {
    for (std::size_t k = 0; k < st.bound.size(); ++k)
      write_text(out / fmt::format("envelope_bound_{:03d}.csv", k), envelope_csv(cfg, st.grid, st.bound[k].envelope));
    for (std::size_t k = 0; k < st.resonances.size(); ++k)
      write_text(out / fmt::format("envelope_resonance_{:03d}.csv", k),
                 envelope_csv(cfg, st.grid, st.resonances[k].envelope));
  }
  fmt::print("{} bound states, {} resonances -> {}\n", st.bound.size(), st.resonances.size(),
             (out / "states.csv").string());
  for (const auto& r : st.resonances)
    if (!r.fit_ok || r.overlapping)
      fmt::print("warning: resonance at {:.3f} meV has a poor single-line fit{}\n", r.energy,
                 r.overlapping ? " (overlaps a neighbour)" : "");

  // The four-level mapping needs two wells; single-well configs stop here.
  if (cfg.params) return ok;
  try {
    const StructureAnalysis a = analyze_structure(cfg);
    const EffectiveModel m = effective_params(cfg, a);
    const std::string report = hash_line(cfg) + model_report(&a, m);
    write_text(out / "model.txt", report);
    fmt::print("{}", report);
  } catch (const ConfigError& e) {
    fmt::print("four-level mapping skipped: {}\n", e.what());
  }
  return ok;
}

int cmd_spectrum(const Options& o) {
  if (o.ir != "on" && o.ir != "off" && o.ir != "both") throw ConfigError("--ir must be on, off or both");
  const RunConfig cfg = load_run_config(o.config);
  const fs::path out(o.out);
  const EffectiveModel m = resolve_model(cfg);
  const auto grid = detuning_grid(cfg.spectrum);
  const bool off = o.ir != "on", on = o.ir != "off";
  for (const auto& c : spectrum_cases(cfg, m.params, off, on)) {
    const Spectrum s = parallel_spectrum(c.params, grid, cfg.spectrum.optical_density, worker_count(o));
    const fs::path file = out / fmt::format("spectrum_{}.csv", c.name);
    write_text(file, spectrum_csv(cfg, s));
    if (!s.singular.empty()) {
      write_text(out / fmt::format("spectrum_{}.singular.log", c.name), singular_log(cfg, s));
      fmt::print("{}: {} singular grid points interpolated\n", c.name, s.singular.size());
    }
    fmt::print("wrote {}\n", file.string());
  }
  if (on && m.params.Omega > 0.0) {
    const NarrowLine line = predict_narrow_line(m.params);
    fmt::print("narrow line: centre {:.6f} meV, half width {:.6e} meV{}\n", line.center, line.width,
               line.weak_ir ? "" : " (IR not weak: Omega_IR >= Omega/5)");
  }
  return ok;
}

int cmd_detect(const Options& o) {
  const RunConfig cfg = load_run_config(o.config);
  const fs::path out(o.out);
  const auto& in = cfg.detector;
  const Efficiency eff = efficiency(in);
  const MinPower pm = min_power(in);
  const QwipRatio qr = qwip_ratio(in, cfg.qwip);

  nlohmann::ordered_json j;
  j["config_hash"] = fmt::format("{:016x}", cfg.hash);
  j["inputs"] = {{"lambda_IR_um", in.lambda_IR_um},
                 {"lambda_probe_um", in.lambda_probe_um},
                 {"gamma_IR_rad_meV", in.gamma_IR_rad},
                 {"gamma_probe_rad_meV", in.gamma_probe_rad},
                 {"alpha_meV", in.alpha},
                 {"Gamma_meV", in.Gamma},
                 {"gamma_decoh_meV", in.gamma_decoh},
                 {"Omega_meV", in.Omega},
                 {"wavelength_exponent", in.wavelength_exponent},
                 {"measuring_time_s", in.measuring_time_s},
                 {"Gamma_QWIP_meV", cfg.qwip.Gamma_QWIP},
                 {"gamma_decoh_QWIP_meV", cfg.qwip.gamma_decoh_QWIP}};
  j["efficiency"] = {{"radiative_factor", eff.radiative_factor},
                     {"coherence_factor", eff.coherence_factor},
                     {"total", eff.total}};
  j["min_power"] = {{"photon_energy_J", pm.photon_energy_J},
                    {"rate_factor_per_s", pm.rate_factor_per_s},
                    {"coherence_factor", pm.coherence_factor},
                    {"wavelength_factor", pm.wavelength_factor},
                    {"watts", pm.watts}};
  j["qwip_ratio"] = {{"width_factor", qr.width_factor},
                     {"wavelength_factor", qr.wavelength_factor},
                     {"coherence_factor", qr.coherence_factor},
                     {"decoherence_factor", qr.decoherence_factor},
                     {"total", qr.total}};

  // Signal at the narrow-line centre for the configured four-level model.
  const EffectiveModel m = resolve_model(cfg);
  FourLevelParams p = m.params;
  p.Delta = p.Delta0 + p.Delta_IR;
  const Signal sig = signal_intensity(p, 1.0, cfg.spectrum.optical_density);
  j["signal"] = {{"probe_detuning_meV", p.Delta},
                 {"slope_per_meV2", sig.slope},
                 {"value", sig.value},
                 {"step_meV2", sig.step},
                 {"relative_truncation", sig.relative_truncation}};

  std::string text = hash_line(cfg);
  auto line = [&](const std::string& k, double v) { text += fmt::format("{:<32} = {}\n", k, num(v)); };
  line("efficiency.radiative_factor", eff.radiative_factor);
  line("efficiency.coherence_factor", eff.coherence_factor);
  line("efficiency.total", eff.total);
  line("min_power.photon_energy_J", pm.photon_energy_J);
  line("min_power.rate_factor_per_s", pm.rate_factor_per_s);
  line("min_power.coherence_factor", pm.coherence_factor);
  line("min_power.wavelength_factor", pm.wavelength_factor);
  line("min_power.watts", pm.watts);
  line("qwip_ratio.width_factor", qr.width_factor);
  line("qwip_ratio.wavelength_factor", qr.wavelength_factor);
  line("qwip_ratio.coherence_factor", qr.coherence_factor);
  line("qwip_ratio.decoherence_factor", qr.decoherence_factor);
  line("qwip_ratio.total", qr.total);
  line("signal.slope_per_meV2", sig.slope);
  line("signal.value", sig.value);
  if (in.wavelength_exponent != 3.0)
    text += fmt::format("note: wavelength exponent {} instead of 3\n", in.wavelength_exponent);

  write_text(out / "detect_report.txt", text);
  write_text(out / "detect_report.json", j.dump(2) + "\n");
  fmt::print("{}", text);
  return ok;
}

int cmd_sweep(const Options& o) {
  const RunConfig cfg = load_run_config(o.config);
  const auto rows = run_sweep(cfg, worker_count(o));
  std::string name = cfg.sweep.parameter;
  std::replace(name.begin(), name.end(), '.', '_');
  const fs::path file = fs::path(o.out) / fmt::format("sweep_{}.csv", name);
  write_text(file, sweep_csv(cfg, rows));
  fmt::print("wrote {} ({} values)\n", file.string(), rows.size());
  return ok;
}

int cmd_oracle(const Options& o) {
  const RunConfig cfg = load_run_config(o.config);
  const EffectiveModel m = resolve_model(cfg);
  const OracleReport rep = oracle_check(cfg, m.params, m.d_path, worker_count(o));
  const fs::path file = fs::path(o.out) / "oracle.csv";
  write_text(file, oracle_csv(cfg, rep));
  for (const auto& n : rep.notes) fmt::print("note: {}\n", n);
  fmt::print("max relative error {:.3e} (tolerance {:.1e}, {} probe): {}\n", rep.max_rel_err, cfg.oracle.tolerance,
             rep.weak_probe ? "weak" : "strong", rep.pass ? (rep.weak_probe ? "pass" : "informational") : "FAIL");
  return rep.pass ? ok : oracle_mismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double-dark-resonance quantum-well detector pipeline"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "run configuration (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--threads", o.threads, "worker threads (0 = hardware concurrency)");
    sub->add_option("--seed", o.seed, "reserved; results do not depend on it");
  };
  auto* solve = app.add_subcommand("solve", "bound states, resonances and the four-level mapping");
  common(solve);
  solve->add_flag("--envelopes", o.envelopes, "also write one envelope CSV per state");
  auto* spectrum = app.add_subcommand("spectrum", "probe susceptibility and transmission");
  common(spectrum);
  spectrum->add_option("--ir", o.ir, "IR field: on, off or both")->capture_default_str();
  auto* detect = app.add_subcommand("detect", "detector efficiency and sensitivity report");
  common(detect);
  auto* sweep = app.add_subcommand("sweep", "narrow-line observables over one parameter");
  common(sweep);
  auto* oracle = app.add_subcommand("oracle-check", "susceptibility vs. master-equation steady state");
  common(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : config_error;
  }

  try {
    if (*solve) return cmd_solve(o);
    if (*spectrum) return cmd_spectrum(o);
    if (*detect) return cmd_detect(o);
    if (*sweep) return cmd_sweep(o);
    if (*oracle) return cmd_oracle(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return numerical_error;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return numerical_error;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return config_error;
  }
  return ok;
}
