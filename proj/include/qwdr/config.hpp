#pragma once

// YAML run configuration and structure files.
//
// A run config names a structure file (path relative to the config) and
// holds one section per pipeline stage. Unknown keys are rejected so typos
// do not silently fall back to defaults.

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "couplings.hpp"
#include "dark_resonance.hpp"
#include "dephasing.hpp"
#include "detector_metrics.hpp"
#include "error.hpp"
#include "heterostructure.hpp"
#include "liouville_oracle.hpp"

namespace qwdr {

/// Which isolated-well levels play the four roles. b and a live in well A,
/// c and d in well C; indices count from the bottom of each isolated well.
struct RoleMap {
  LayerSpan well_a{1};
  LayerSpan well_c{3};
  int level_b = 0;
  int level_a = 1;
  int level_c = 0;
  int level_d = 1;
};

struct GridConfig {
  double dz_nm = 0.01;
  std::optional<EnergyWindow> bound_window;      // default: potential minimum to lowest lead
  std::optional<EnergyWindow> resonance_window;  // default: open floor to highest layer
};

struct FieldConfig {
  double refractive_index = 3.3;
  double detector_area_um2 = 100.0;
  double ir_power_W = 2.5e-3;
  double ir_linewidth_GHz = 10.0;
  double ir_detuning_meV = 0.0;
  std::optional<double> detuned_ir_meV;  // extra IR detuning case for spectra
  std::optional<double> probe_power_W;   // if unset, alpha = probe_rabi_fraction * Omega
  double probe_rabi_fraction = 0.01;

  double ir_intensity_W_m2() const { return ir_power_W / (detector_area_um2 * 1e-12); }
};

struct DephasingConfig {
  double roughness_meV = 1.0;
  MechanismWeights roughness_weights = default_roughness_weights();
  MechanismWeights phonon_weights;
  PhononConstants phonons;
  std::optional<double> in_plane_q_nm;  // default: thermal wavevector
  double fano_constant = 1.0;
  FanoRouting fano_routing;
  bool continuum_tunneling = true;  // half the d resonance width on gamma_db
  DecayPath d_path = DecayPath::d_to_b;
};

struct SpectrumConfig {
  double lo_meV = -60.0;
  double hi_meV = 60.0;
  std::size_t points = 1201;
  double optical_density = 1.0;
  double density_cm3 = 1e17;
};

struct SweepConfig {
  std::string parameter;
  std::vector<double> values;
};

struct OracleConfig {
  std::size_t points = 200;
  double alpha_over_Omega = 1e-3;
  double tolerance = 1e-3;
  double weak_probe_limit = 1e-3;  // alpha/Omega at or below this must agree
};

struct RunConfig {
  std::filesystem::path source;
  std::filesystem::path structure_path;
  StructureSpec structure;
  MaterialModel material;
  RoleMap roles;
  GridConfig grid;
  FieldConfig fields;
  DephasingConfig dephasing;
  SpectrumConfig spectrum;
  DetectorInputs detector;
  QwipInputs qwip;
  std::optional<FourLevelParams> params;  // bypasses the structure stages
  SweepConfig sweep;
  OracleConfig oracle;
  std::uint64_t hash = 0;  // FNV-1a over the config and structure bytes

  bool has_structure() const { return !structure.layers.empty(); }
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Map node reader that remembers which keys were consumed.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_ + ": expected a mapping");
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    seen_.insert(key);
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    T v{};
    get(key, v);
    out = v;
  }

  Section sub(const std::string& key) {
    if (has(key)) seen_.insert(key);
    return Section(has(key) ? node_[key] : YAML::Node(), where(key));
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return has(key) ? node_[key] : YAML::Node();
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError("unknown key " + where(key));
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Boundary parse_boundary(const std::string& s, const std::string& where) {
  if (s == "closed") return Boundary::closed;
  if (s == "open") return Boundary::open;
  throw ConfigError(where + ": boundary must be 'closed' or 'open'");
}

inline std::optional<EnergyWindow> parse_window(Section& sec, const std::string& key) {
  const YAML::Node n = sec.raw(key);
  if (!n || n.IsNull()) return std::nullopt;
  if (n.IsScalar() && n.as<std::string>() == "auto") return std::nullopt;
  if (!n.IsSequence() || n.size() != 2) throw ConfigError(sec.where(key) + ": expected [lo, hi] or auto");
  EnergyWindow w{n[0].as<double>(), n[1].as<double>()};
  if (!(w.hi > w.lo)) throw ConfigError(sec.where(key) + ": hi must exceed lo");
  return w;
}

inline LayerSpan parse_span(Section& sec, const std::string& key, LayerSpan fallback) {
  const YAML::Node n = sec.raw(key);
  if (!n || n.IsNull()) return fallback;
  try {
    if (n.IsScalar()) return LayerSpan(n.as<std::size_t>());
    if (n.IsSequence() && n.size() == 1) return LayerSpan(n[0].as<std::size_t>());
    if (n.IsSequence() && n.size() == 2) return LayerSpan(n[0].as<std::size_t>(), n[1].as<std::size_t>());
  } catch (const YAML::Exception&) {
  }
  throw ConfigError(sec.where(key) + ": expected a layer index or [first, last]");
}

inline void parse_weights(Section sec, MechanismWeights& w) {
  sec.get("ab", w.ab);
  sec.get("cb", w.cb);
  sec.get("db", w.db);
  sec.finish();
}

inline void parse_params(Section sec, FourLevelParams& p) {
  sec.get("Omega", p.Omega);
  sec.get("alpha", p.alpha);
  sec.get("Omega_IR", p.Omega_IR);
  sec.get("Delta0", p.Delta0);
  sec.get("Delta_IR", p.Delta_IR);
  sec.get("gamma_ab", p.gamma_ab);
  sec.get("gamma_cb", p.gamma_cb);
  sec.get("gamma_db", p.gamma_db);
  sec.get("eta", p.eta);
  sec.get("gamma_a_to_b", p.gamma_a_to_b);
  sec.get("ir_linewidth", p.ir_linewidth);
  sec.get("lambda_probe_um", p.lambda_probe_um);
  sec.get("lambda_IR_um", p.lambda_IR_um);
  sec.get("N_density_cm3", p.N_density_cm3);
  sec.finish();
  p.validate();
}

}  // namespace detail

/// Parse a structure file. Layers are listed from left (z < 0) to right.
inline void load_structure(const std::string& text, const std::string& name, StructureSpec& spec,
                           MaterialModel& model) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(name + ": " + e.what());
  }
  detail::Section top(root, "");
  auto mat = top.sub("material");
  mat.get("offset_coefficient", model.offset_coefficient);
  mat.get("effective_mass", model.effective_mass);
  mat.finish();

  auto bounds = top.sub("boundaries");
  std::string left = "closed", right = "closed";
  bounds.get("left", left);
  bounds.get("right", right);
  bounds.finish();
  spec.left = detail::parse_boundary(left, "boundaries.left");
  spec.right = detail::parse_boundary(right, "boundaries.right");
  top.get("closed_padding_nm", spec.closed_padding);

  const YAML::Node layers = top.raw("layers");
  if (!layers || !layers.IsSequence()) throw ConfigError(name + ": 'layers' must be a list");
  spec.layers.clear();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    detail::Section l(layers[i], "layers[" + std::to_string(i) + "]");
    Layer layer;
    if (!l.has("thickness_nm") || !l.has("alloy_fraction"))
      throw ConfigError(l.where("") + " needs thickness_nm and alloy_fraction");
    l.get("thickness_nm", layer.thickness);
    l.get("alloy_fraction", layer.alloy_fraction);
    l.get("doping_cm2", layer.doping);
    l.get("effective_mass", layer.effective_mass);
    l.finish();
    spec.layers.push_back(layer);
  }
  top.finish();
  model.validate();
  spec.validate();
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig cfg;
  cfg.source = path;
  const std::string text = detail::read_file(path);
  cfg.hash = fnv1a(text);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  detail::Section top(root, "");

  std::string structure;
  top.get("structure", structure);
  if (!structure.empty()) {
    cfg.structure_path = path.parent_path() / structure;
    const std::string s_text = detail::read_file(cfg.structure_path);
    cfg.hash = fnv1a(s_text, cfg.hash);
    load_structure(s_text, cfg.structure_path.string(), cfg.structure, cfg.material);
  }

  if (top.has("params")) {
    FourLevelParams p;
    detail::parse_params(top.sub("params"), p);
    cfg.params = p;
  }
  if (!cfg.has_structure() && !cfg.params) throw ConfigError("config needs a 'structure' file or a 'params' block");

  {
    auto r = top.sub("roles");
    cfg.roles.well_a = detail::parse_span(r, "well_a_layers", cfg.roles.well_a);
    cfg.roles.well_c = detail::parse_span(r, "well_c_layers", cfg.roles.well_c);
    r.get("level_b", cfg.roles.level_b);
    r.get("level_a", cfg.roles.level_a);
    r.get("level_c", cfg.roles.level_c);
    r.get("level_d", cfg.roles.level_d);
    r.finish();
  }
  {
    auto g = top.sub("grid");
    g.get("dz_nm", cfg.grid.dz_nm);
    cfg.grid.bound_window = detail::parse_window(g, "bound_window_meV");
    cfg.grid.resonance_window = detail::parse_window(g, "resonance_window_meV");
    g.finish();
    if (!(cfg.grid.dz_nm > 0.0)) throw ConfigError("grid.dz_nm must be > 0");
  }
  {
    auto f = top.sub("fields");
    auto& x = cfg.fields;
    f.get("refractive_index", x.refractive_index);
    f.get("detector_area_um2", x.detector_area_um2);
    f.get("ir_power_W", x.ir_power_W);
    f.get("ir_linewidth_GHz", x.ir_linewidth_GHz);
    f.get("ir_detuning_meV", x.ir_detuning_meV);
    f.get("detuned_ir_meV", x.detuned_ir_meV);
    f.get("probe_power_W", x.probe_power_W);
    f.get("probe_rabi_fraction", x.probe_rabi_fraction);
    f.finish();
    if (!(x.refractive_index > 0.0) || !(x.detector_area_um2 > 0.0) || !(x.ir_power_W >= 0.0) ||
        !(x.ir_linewidth_GHz >= 0.0) || !(x.probe_rabi_fraction >= 0.0) || (x.probe_power_W && *x.probe_power_W < 0.0))
      throw ConfigError("fields: values out of range");
  }
  {
    auto d = top.sub("dephasing");
    auto& x = cfg.dephasing;
    d.get("roughness_meV", x.roughness_meV);
    detail::parse_weights(d.sub("roughness_weights"), x.roughness_weights);
    detail::parse_weights(d.sub("phonon_weights"), x.phonon_weights);
    auto ph = d.sub("phonons");
    ph.get("deformation_potential_eV", x.phonons.deformation_potential_eV);
    ph.get("density_kg_m3", x.phonons.density_kg_m3);
    ph.get("sound_velocity_m_s", x.phonons.sound_velocity_m_s);
    ph.get("temperature_K", x.phonons.temperature_K);
    ph.get("lo_phonon_meV", x.phonons.lo_phonon_meV);
    ph.get("eps_inf", x.phonons.eps_inf);
    ph.get("eps_static", x.phonons.eps_static);
    ph.get("effective_mass", x.phonons.effective_mass);
    ph.get("in_plane_q_nm", x.in_plane_q_nm);
    ph.finish();
    x.phonons.validate();
    auto fano = d.sub("fano");
    fano.get("constant", x.fano_constant);
    fano.get("ab", x.fano_routing.ab);
    fano.get("cb", x.fano_routing.cb);
    fano.get("db", x.fano_routing.db);
    fano.finish();
    d.get("continuum_tunneling", x.continuum_tunneling);
    std::string path_name = "b";
    d.get("d_decays_to", path_name);
    if (path_name == "b") {
      x.d_path = DecayPath::d_to_b;
    } else if (path_name == "c") {
      x.d_path = DecayPath::d_to_c;
    } else {
      throw ConfigError("dephasing.d_decays_to must be 'b' or 'c'");
    }
    d.finish();
    if (!(x.roughness_meV >= 0.0) || !(x.fano_constant >= 0.0)) throw ConfigError("dephasing: negative value");
    if (x.in_plane_q_nm && !(*x.in_plane_q_nm > 0.0)) throw ConfigError("dephasing.phonons.in_plane_q_nm must be > 0");
  }
  {
    auto s = top.sub("spectrum");
    auto& x = cfg.spectrum;
    s.get("lo_meV", x.lo_meV);
    s.get("hi_meV", x.hi_meV);
    s.get("points", x.points);
    s.get("optical_density", x.optical_density);
    s.get("density_cm3", x.density_cm3);
    s.finish();
    if (x.points < 2 || !(x.hi_meV > x.lo_meV)) throw ConfigError("spectrum: need points >= 2 and hi > lo");
    if (!(x.optical_density >= 0.0) || !(x.density_cm3 >= 0.0)) throw ConfigError("spectrum: negative value");
  }
  {
    auto d = top.sub("detector");
    auto& x = cfg.detector;
    d.get("lambda_IR_um", x.lambda_IR_um);
    d.get("lambda_probe_um", x.lambda_probe_um);
    d.get("gamma_IR_rad", x.gamma_IR_rad);
    d.get("gamma_probe_rad", x.gamma_probe_rad);
    d.get("alpha", x.alpha);
    d.get("Gamma", x.Gamma);
    d.get("gamma_decoh", x.gamma_decoh);
    d.get("Omega", x.Omega);
    d.get("wavelength_exponent", x.wavelength_exponent);
    d.get("measuring_time_s", x.measuring_time_s);
    d.get("Gamma_QWIP", cfg.qwip.Gamma_QWIP);
    d.get("gamma_decoh_QWIP", cfg.qwip.gamma_decoh_QWIP);
    d.finish();
    x.validate();
  }
  {
    auto s = top.sub("sweep");
    s.get("parameter", cfg.sweep.parameter);
    const YAML::Node v = s.raw("values");
    if (v && !v.IsNull()) {
      if (!v.IsSequence()) throw ConfigError("sweep.values must be a list");
      for (const auto& e : v) cfg.sweep.values.push_back(e.as<double>());
    }
    s.finish();
  }
  {
    auto o = top.sub("oracle");
    o.get("points", cfg.oracle.points);
    o.get("alpha_over_Omega", cfg.oracle.alpha_over_Omega);
    o.get("tolerance", cfg.oracle.tolerance);
    o.get("weak_probe_limit", cfg.oracle.weak_probe_limit);
    o.finish();
    if (cfg.oracle.points < 2 || !(cfg.oracle.alpha_over_Omega > 0.0) || !(cfg.oracle.tolerance > 0.0))
      throw ConfigError("oracle: need points >= 2, alpha_over_Omega > 0, tolerance > 0");
  }
  top.finish();
  return cfg;
}

}  // namespace qwdr
