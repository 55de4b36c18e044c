#pragma once

// Brute-force steady state of the four-level Lindblad master equation,
// used to check the closed-form susceptibility.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "dark_resonance.hpp"
#include "error.hpp"

namespace qwdr {

enum class DecayPath { d_to_b, d_to_c };

struct MasterEquationSpec {
  FourLevelParams params;
  // Population decay rates (meV) of the upper levels.
  double decay_a = 0.0;  // a -> b
  double decay_c = 0.0;  // c -> b
  double decay_d = 0.0;  // d -> b or d -> c
  DecayPath d_path = DecayPath::d_to_b;
  /// Constant added to every diagonal element of H (rotating-frame gauge).
  double frame_offset = 0.0;
};

/// Pure dephasing of level x so that the x-b coherence decays at gamma_xb:
/// kappa_x = gamma_xb - decay_x / 2 (level b is not dephased).
struct PureDephasing {
  double a = 0.0, c = 0.0, d = 0.0;
};

inline PureDephasing pure_dephasing(const MasterEquationSpec& s) {
  const auto& p = s.params;
  for (double r : {s.decay_a, s.decay_c, s.decay_d})
    if (!(r >= 0.0)) throw ContractViolation("population decay rates must be >= 0");
  PureDephasing k{p.gamma_ab - 0.5 * s.decay_a, p.gamma_cb - 0.5 * s.decay_c, p.gamma_db - 0.5 * s.decay_d};
  if (k.a < 0.0 || k.c < 0.0 || k.d < 0.0)
    throw ContractViolation("coherence decay smaller than half the population decay; generator would not be CP");
  return k;
}

/// Rotating-frame Hamiltonian including detunings.
inline Eigen::Matrix4cd frame_hamiltonian(const MasterEquationSpec& s) {
  const auto& p = s.params;
  Eigen::Matrix4cd h = hamiltonian(p);
  h(level_a, level_a) += -p.Delta;
  h(level_c, level_c) += -(p.Delta - p.Delta0);
  h(level_d, level_d) += -(p.Delta - p.Delta0 - p.Delta_IR);
  for (int k = 0; k < 4; ++k) h(k, k) += s.frame_offset;
  return h;
}

using Liouvillian = Eigen::Matrix<cplx, 16, 16>;

/// Generator acting on row-major vec(rho): vec(A rho B) = (A kron B^T) vec(rho).
inline Liouvillian liouvillian(const MasterEquationSpec& s) {
  const PureDephasing k = pure_dephasing(s);
  const Eigen::Matrix4cd h = frame_hamiltonian(s);
  const Eigen::Matrix4cd id = Eigen::Matrix4cd::Identity();
  auto kron = [](const Eigen::Matrix4cd& a, const Eigen::Matrix4cd& b) {
    Liouvillian out;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out.block<4, 4>(4 * i, 4 * j) = a(i, j) * b;
    return out;
  };
  const cplx i(0.0, 1.0);
  Liouvillian l = -i * kron(h, id) + i * kron(id, h.transpose());
  auto dissipator = [&](const Eigen::Matrix4cd& op) {
    const Eigen::Matrix4cd n = op.adjoint() * op;
    l += kron(op, op.conjugate()) - 0.5 * kron(n, id) - 0.5 * kron(id, n.transpose());
  };
  auto jump = [](int to, int from, double rate) {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(to, from) = std::sqrt(rate);
    return m;
  };
  if (s.decay_a > 0.0) dissipator(jump(level_b, level_a, s.decay_a));
  if (s.decay_c > 0.0) dissipator(jump(level_b, level_c, s.decay_c));
  if (s.decay_d > 0.0) dissipator(jump(s.d_path == DecayPath::d_to_b ? level_b : level_c, level_d, s.decay_d));
  const double dephase[4] = {k.a, 0.0, k.c, k.d};
  for (int x = 0; x < 4; ++x) {
    if (dephase[x] <= 0.0) continue;
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(x, x) = std::sqrt(2.0 * dephase[x]);
    dissipator(m);
  }
  return l;
}

struct SteadyState {
  Eigen::Matrix4cd rho;
  double null_gap = 0.0;  // second-smallest singular value over the largest
};

/// Unique unit-trace null vector of the generator.
/// The uniqueness check (an SVD of the generator) can be skipped when the
/// caller has already checked a nearby parameter point.
inline SteadyState steady_state(const MasterEquationSpec& s, bool check_unique = true, double uniqueness_tol = 1e-12) {
  s.params.validate();
  const Liouvillian l = liouvillian(s);
  SteadyState out;
  if (check_unique) {
    Eigen::JacobiSVD<Liouvillian> svd(l);
    const auto& sv = svd.singularValues();
    out.null_gap = sv[14] / sv[0];
    if (!(out.null_gap > uniqueness_tol)) throw OracleDegeneracy("steady state is not unique");
  }

  // Replace the rho_bb row by the trace condition.
  Liouvillian a = l;
  Eigen::Matrix<cplx, 16, 1> rhs = Eigen::Matrix<cplx, 16, 1>::Zero();
  const int row = 4 * level_b + level_b;
  a.row(row).setZero();
  for (int k = 0; k < 4; ++k) a(row, 4 * k + k) = 1.0;
  rhs[row] = 1.0;
  const Eigen::Matrix<cplx, 16, 1> v = a.fullPivLu().solve(rhs);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out.rho(r, c) = v[4 * r + c];
  return out;
}

struct Populations {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  double excitation() const { return 1.0 - b; }
};

inline Populations population_check(const Eigen::Matrix4cd& rho) {
  return {rho(level_a, level_a).real(), rho(level_b, level_b).real(), rho(level_c, level_c).real(),
          rho(level_d, level_d).real()};
}

/// Linear-response susceptibility eta * d(rho_ba)/d(alpha) at alpha = 0,
/// from central differences at +-h, +-h/2, +-h/4 combined by two rounds of
/// Richardson extrapolation; h defaults to 1e-3 Omega.
inline cplx oracle_susceptibility(MasterEquationSpec s, double h = 0.0) {
  if (!(h > 0.0)) h = 1e-3 * s.params.Omega;
  bool first = true;
  auto rho_ba = [&](double alpha) {
    s.params.alpha = alpha;
    const cplx v = steady_state(s, first).rho(level_b, level_a);
    first = false;
    return v;
  };
  auto central = [&](double step) { return (rho_ba(step) - rho_ba(-step)) / (2.0 * step); };
  const cplx d1 = central(h), d2 = central(0.5 * h), d4 = central(0.25 * h);
  const cplx r1 = (4.0 * d2 - d1) / 3.0, r2 = (4.0 * d4 - d2) / 3.0;
  return s.params.eta * (16.0 * r2 - r1) / 15.0;
}

/// eta * rho_ba / alpha at the probe strength stored in the spec; differs
/// from the linear response once the probe saturates the transition.
inline cplx oracle_susceptibility_at_probe(const MasterEquationSpec& s) {
  if (!(s.params.alpha != 0.0)) throw ContractViolation("probe Rabi energy must be non-zero");
  return s.params.eta * steady_state(s).rho(level_b, level_a) / s.params.alpha;
}

/// Master-equation spec whose coherence decays reproduce the gamma's of p,
/// with a -> b population decay gamma_a_to_b (capped at 2 gamma_ab).
inline MasterEquationSpec spec_for(const FourLevelParams& p, DecayPath d_path = DecayPath::d_to_b) {
  MasterEquationSpec s;
  s.params = p;
  s.decay_a = std::min(p.gamma_a_to_b, 2.0 * p.gamma_ab);
  s.d_path = d_path;
  return s;
}

}  // namespace qwdr
