#include <catch_amalgamated.hpp>

#include <qwdr/dark_resonance.hpp>
#include <qwdr/fit.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace qwdr;
using Catch::Approx;

namespace {

FourLevelParams resonant() {
  FourLevelParams p;
  p.Omega = 40.0;
  p.alpha = 0.4;
  p.gamma_ab = 5.0;
  p.gamma_a_to_b = 5.0;
  p.gamma_cb = 1e-4;
  p.gamma_db = 0.04;
  p.ir_linewidth = 0.04;
  return p;
}

}  // namespace

TEST_CASE("Hamiltonian matrix elements", "[dark_resonance]") {
  FourLevelParams p;
  p.Omega = 3.0;
  p.alpha = 0.5;
  p.Omega_IR = 0.2;
  Eigen::Vector4cd a = Eigen::Vector4cd::Zero();
  a[level_a] = 1.0;
  const auto ha = hamiltonian_apply(p, a);
  CHECK(ha[level_c] == cplx(3.0));
  CHECK(ha[level_b] == cplx(0.5));
  CHECK(ha[level_a] == cplx(0.0));
  CHECK(ha[level_d] == cplx(0.0));
  Eigen::Vector4cd b = Eigen::Vector4cd::Zero();
  b[level_b] = 1.0;
  p.alpha = 0.0;
  CHECK(hamiltonian_apply(p, b).norm() == 0.0);
  // Matrix and direct application agree and H is Hermitian.
  p.alpha = 0.7;
  const Eigen::Vector4cd v(cplx(0.1, 0.2), cplx(-0.3, 0.0), cplx(0.5, -0.1), cplx(0.0, 0.4));
  CHECK((hamiltonian(p) * v - hamiltonian_apply(p, v)).norm() < 1e-15);
  CHECK((hamiltonian(p) - hamiltonian(p).adjoint()).norm() == 0.0);
}

TEST_CASE("dark state is decoupled from the fields", "[dark_resonance]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(1e-3, 100.0);
  for (int k = 0; k < 100; ++k) {
    FourLevelParams p;
    p.Omega = u(rng);
    p.alpha = u(rng);
    p.Omega_IR = 0.0;
    const auto dark = dark_state(p);
    CHECK(dark.norm() == Approx(1.0).epsilon(1e-14));
    CHECK(hamiltonian_apply(p, dark).norm() < 1e-12);
  }
}

TEST_CASE("EIT transparency on two-photon resonance", "[dark_resonance]") {
  FourLevelParams p = resonant();
  p.gamma_cb = 0.0;
  p.Omega_IR = 0.0;
  p.Delta = p.Delta0 = 0.0;
  CHECK(std::abs(susceptibility(p)) < 1e-12);
}

TEST_CASE("no fields reduces to the two-level Lorentzian", "[dark_resonance]") {
  FourLevelParams p = resonant();
  p.Omega = 0.0;
  p.Omega_IR = 0.0;
  p.eta = 2.5;
  for (double d : linear_grid(-20.0, 20.0, 41)) {
    const cplx expected = cplx(0.0, 1.0) * p.eta / cplx(p.gamma_ab, d);
    CHECK(std::abs(susceptibility(p, d) - expected) < 1e-12);
  }
}

TEST_CASE("revived line on resonance matches the algebraic limit", "[dark_resonance]") {
  FourLevelParams p = resonant();
  p.gamma_cb = 0.0;
  p.Omega_IR = 0.5;
  const double expected = p.eta * p.Omega_IR * p.Omega_IR /
                          (p.gamma_ab * p.Omega_IR * p.Omega_IR + p.Omega * p.Omega * p.gamma_db);
  CHECK(susceptibility(p, 0.0).imag() == Approx(expected).epsilon(1e-12));
}

TEST_CASE("Autler-Townes peaks sit near +-Omega", "[dark_resonance]") {
  FourLevelParams p = resonant();
  p.gamma_ab = 0.05;
  p.gamma_cb = 0.0;
  p.gamma_db = 0.0;
  const auto grid = linear_grid(0.1, 80.0, 40001);
  double best = 0.0, at = 0.0;
  for (double d : grid) {
    const double v = susceptibility(p, d).imag();
    if (v > best) best = v, at = d;
  }
  CHECK(at == Approx(p.Omega).epsilon(0.01));
  // Mirror image at -Omega.
  CHECK(susceptibility(p, -at).imag() == Approx(best).epsilon(1e-12));
}

TEST_CASE("conjugation symmetry and absorption sign", "[dark_resonance]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    FourLevelParams p;
    p.Omega = 1.0 + 60.0 * u(rng);
    p.Omega_IR = 5.0 * u(rng);
    p.Delta0 = 10.0 * (u(rng) - 0.5);
    p.Delta_IR = 10.0 * (u(rng) - 0.5);
    p.gamma_ab = 0.01 + 5.0 * u(rng);
    p.gamma_cb = 1.0 * u(rng);
    p.gamma_db = 1.0 * u(rng);
    FourLevelParams m = p;
    m.Delta0 = -p.Delta0;
    m.Delta_IR = -p.Delta_IR;
    for (double d : linear_grid(-100.0, 100.0, 401)) {
      const cplx x = susceptibility(p, d);
      CHECK(std::abs(susceptibility(m, -d) + std::conj(x)) < 1e-12 * std::max(1.0, std::abs(x)));
      CHECK(x.imag() >= 0.0);
    }
  }
}

TEST_CASE("singular denominator is an error", "[dark_resonance]") {
  FourLevelParams p;
  p.gamma_ab = p.gamma_cb = p.gamma_db = 0.0;
  p.Omega_IR = 0.0;
  p.Delta = 0.0;
  CHECK_THROWS_AS(susceptibility(p), SingularParameters);
}

TEST_CASE("narrow-line prediction", "[dark_resonance]") {
  FourLevelParams p = resonant();
  p.Omega_IR = 0.0;
  CHECK(predict_narrow_line(p).width == Approx(p.ir_linewidth));
  p.Omega_IR = 4.0;
  p.Delta_IR = 2.0;
  const auto n = predict_narrow_line(p);
  CHECK(n.center == Approx(2.0));
  CHECK(n.width == Approx(5.0 * 0.01 + 0.04));
  CHECK(n.weak_ir);
  p.Omega_IR = 10.0;
  CHECK_FALSE(predict_narrow_line(p).weak_ir);
}

TEST_CASE("fitted narrow line follows the width law", "[dark_resonance]") {
  for (double ratio : {0.01, 0.03, 0.1}) {
    FourLevelParams p = resonant();
    p.Omega_IR = ratio * p.Omega;
    const auto n = predict_narrow_line(p);
    const auto grid = linear_grid(n.center - 8.0 * n.width, n.center + 8.0 * n.width, 801);
    std::vector<double> y;
    for (double d : grid) y.push_back(susceptibility(p, d).imag());
    const auto f = fit::fit_lorentzian(grid, y, n.center, n.width);
    INFO("ratio " << ratio << " predicted " << n.width << " fitted " << f.hwhm);
    CHECK(f.hwhm == Approx(n.width).epsilon(0.2));
    CHECK(std::abs(f.center - n.center) < 0.05 * n.width);
  }
}

TEST_CASE("spectrum transmission and normalisation", "[dark_resonance]") {
  FourLevelParams p = resonant();
  const auto grid = linear_grid(-100.0, 100.0, 2001);
  auto bare = p;
  bare.Omega = 0.0;
  const auto s = spectrum(bare, grid, 1.0);
  CHECK(s.transmission[1000] == Approx(std::exp(-1.0)).epsilon(1e-12));
  for (double t : s.transmission) CHECK((t > 0.0 && t <= 1.0));

  // IR off vs weak IR: identical away from the transparency window.
  p.Omega_IR = 2.0;
  auto off = p;
  off.Omega_IR = 0.0;
  const auto on_s = spectrum(p, grid), off_s = spectrum(off, grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (std::abs(grid[k]) > 5.0) CHECK(std::abs(on_s.transmission[k] - off_s.transmission[k]) < 1e-2);
  CHECK(on_s.transmission[1000] < off_s.transmission[1000] - 0.1);

  // Symmetric when Delta0 = Delta_IR = 0 and gamma_cb = gamma_db.
  p.gamma_cb = p.gamma_db;
  const auto sym = spectrum(p, grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK(sym.transmission[k] == Approx(sym.transmission[grid.size() - 1 - k]).epsilon(1e-12));

  CHECK_THROWS_AS(spectrum(p, {1.0, 0.0}), ContractViolation);
}

TEST_CASE("singular grid points are interpolated and flagged", "[dark_resonance]") {
  FourLevelParams p;
  p.gamma_ab = 1.0;
  p.gamma_cb = p.gamma_db = 0.0;
  p.Omega_IR = 0.0;
  // gamma_cb = gamma_db = 0 with no IR: the denominator vanishes at D = 0.
  const auto grid = linear_grid(-1.0, 1.0, 5);
  const auto s = spectrum(p, grid);
  REQUIRE(s.singular.size() == 1);
  CHECK(s.singular[0] == 2);
  CHECK(std::isfinite(s.transmission[2]));
}

TEST_CASE("eta from primitives", "[dark_resonance]") {
  // 3 * 1 meV * 1e17 cm^-3 * (2.5e-4 cm)^3 / (8 pi^2)
  CHECK(eta_from_primitives(1.0, 1e17, 2.5) == Approx(3.0 * 1e17 * 1.5625e-11 / (8.0 * units::pi * units::pi)));
}
