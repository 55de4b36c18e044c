#pragma once

// Nonlinear least squares helpers (Levenberg-Marquardt from Eigen's
// unsupported module) for Lorentzian and Breit-Wigner line shapes.

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"
#include "units.hpp"

namespace qwdr::fit {

using Residual = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LeastSquaresResult {
  Eigen::VectorXd params;
  Eigen::VectorXd sigma;  // one-standard-deviation parameter uncertainties
  double rms = 0.0;
  int status = 0;
};

namespace detail {

struct ResidualFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  Residual fn;
  int n_inputs = 0;
  int n_values = 0;

  int inputs() const { return n_inputs; }
  int values() const { return n_values; }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    fn(x, out);
    return 0;
  }
};

}  // namespace detail

/// Minimise the sum of squared residuals. Parameters should be scaled to
/// order one; the Jacobian is taken by forward differences.
inline LeastSquaresResult least_squares(Residual fn, Eigen::VectorXd x0, int n_values) {
  detail::ResidualFunctor functor{std::move(fn), static_cast<int>(x0.size()), n_values};
  Eigen::NumericalDiff<detail::ResidualFunctor> diff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::ResidualFunctor>, double> lm(diff);
  lm.parameters.maxfev = 4000;
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  LeastSquaresResult r;
  r.status = static_cast<int>(lm.minimize(x0));
  r.params = x0;

  Eigen::VectorXd res(n_values);
  functor(x0, res);
  const double ssr = res.squaredNorm();
  r.rms = std::sqrt(ssr / n_values);
  Eigen::MatrixXd jac(n_values, x0.size());
  diff.df(x0, jac);
  const int dof = std::max(1, n_values - static_cast<int>(x0.size()));
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  r.sigma = Eigen::VectorXd::Constant(x0.size(), std::numeric_limits<double>::infinity());
  if (lu.isInvertible()) {
    const Eigen::MatrixXd cov = lu.inverse() * (ssr / dof);
    for (int i = 0; i < x0.size(); ++i) r.sigma[i] = std::sqrt(std::max(0.0, cov(i, i)));
  }
  return r;
}

struct LorentzianFit {
  double center = 0.0;
  double hwhm = 0.0;
  double amplitude = 0.0;  // peak height above baseline
  double baseline = 0.0;
  double hwhm_sigma = 0.0;
  double rms = 0.0;
};

/// Fit y = A w^2 / ((x - c)^2 + w^2) + b.
inline LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y, double center_guess,
                                    double hwhm_guess) {
  if (x.size() != y.size() || x.size() < 5) throw ContractViolation("fit_lorentzian: need >= 5 paired samples");
  if (!(hwhm_guess > 0.0)) throw ContractViolation("fit_lorentzian: hwhm guess must be > 0");
  double y_max = 0.0;
  for (double v : y) y_max = std::max(y_max, std::abs(v));
  const double y_scale = y_max > 0.0 ? y_max : 1.0;
  const double x0 = center_guess, w0 = hwhm_guess;

  // u = (c - x0)/w0, p = log(w/w0), a = A/y_scale, b = baseline/y_scale
  auto model = [&](const Eigen::VectorXd& q, double xi) {
    const double c = x0 + q[0] * w0;
    const double w = w0 * std::exp(q[1]);
    const double d = (xi - c) / w;
    return q[2] / (1.0 + d * d) + q[3];
  };
  Residual res = [&](const Eigen::VectorXd& q, Eigen::VectorXd& out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[static_cast<Eigen::Index>(i)] = model(q, x[i]) - y[i] / y_scale;
  };
  std::size_t nearest = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (std::abs(x[i] - x0) < std::abs(x[nearest] - x0)) nearest = i;
  const double base_guess = 0.5 * (y.front() + y.back()) / y_scale;
  Eigen::VectorXd q0(4);
  q0 << 0.0, 0.0, y[nearest] / y_scale - base_guess, base_guess;
  const auto r = least_squares(res, q0, static_cast<int>(x.size()));
  LorentzianFit f;
  f.center = x0 + r.params[0] * w0;
  f.hwhm = w0 * std::exp(r.params[1]);
  f.amplitude = r.params[2] * y_scale;
  f.baseline = r.params[3] * y_scale;
  f.hwhm_sigma = f.hwhm * r.sigma[1];
  f.rms = r.rms * y_scale;
  return f;
}

struct BreitWignerFit {
  double energy = 0.0;
  double width = 0.0;  // full width at half maximum of d(delta)/dE
  double width_sigma = 0.0;
  double rms = 0.0;  // rad
};

/// Fit a scattering phase delta(E) = c0 + c1 (E - Er) + pi/2 + atan(2 (E - Er) / width).
inline BreitWignerFit fit_breit_wigner(std::span<const double> energy, std::span<const double> phase,
                                       double energy_guess, double width_guess) {
  if (energy.size() != phase.size() || energy.size() < 6)
    throw ContractViolation("fit_breit_wigner: need >= 6 paired samples");
  if (!(width_guess > 0.0)) throw ContractViolation("fit_breit_wigner: width guess must be > 0");
  const double e0 = energy_guess, g0 = width_guess;
  // Reference the phase to its value at the guess so c0 is order one.
  double phase_ref = phase[phase.size() / 2];
  auto model = [&](const Eigen::VectorXd& q, double e) {
    const double er = e0 + q[0] * g0;
    const double w = g0 * std::exp(q[1]);
    return q[2] + q[3] * (e - er) / g0 + 0.5 * units::pi + std::atan(2.0 * (e - er) / w);
  };
  Residual res = [&](const Eigen::VectorXd& q, Eigen::VectorXd& out) {
    for (std::size_t i = 0; i < energy.size(); ++i)
      out[static_cast<Eigen::Index>(i)] = model(q, energy[i]) - (phase[i] - phase_ref);
  };
  Eigen::VectorXd q0(4);
  q0 << 0.0, 0.0, -0.5 * units::pi, 0.0;
  const auto r = least_squares(res, q0, static_cast<int>(energy.size()));
  BreitWignerFit f;
  f.energy = e0 + r.params[0] * g0;
  f.width = g0 * std::exp(r.params[1]);
  f.width_sigma = f.width * r.sigma[1];
  f.rms = r.rms;
  return f;
}

}  // namespace qwdr::fit
