#include <catch_amalgamated.hpp>

#include <random>

#include "tbglab/eikonal_weights.hpp"
#include "tbglab/symbol_brackets.hpp"

using namespace tbglab;

namespace {

// phi_x1 + phi_y1 + i phi_y2 - i c y1^2, written out by hand for the model symbol.
CSeries model_pde_residual(const CSeries& phi, double c) {
  const int d = phi.max_degree();
  CSeries r = phi.derivative(X1) + phi.derivative(Y1) + I * phi.derivative(Y2) - (I * c) * phase_var(Y1, d).pow(2);
  return r.truncated(d - 1);
}

CSeries restrict_x1_zero(const CSeries& phi) {
  CSeries r(4, phi.max_degree());
  for (const auto& [k, v] : phi.terms())
    if (key_exponent(k, X1) == 0) r.add_key(k, v);
  return r;
}

// sup over real y of -Im phi(x, y) by compass search from a coarse grid; slow but independent of Newton.
double brute_weight(const CSeries& phi, const std::array<cplx, 2>& x, double box) {
  auto f = [&](double a, double b) { return -phi.eval({x[0], x[1], a, b}).imag(); };
  double best = -1e300, ya = 0, yb = 0;
  for (int i = -20; i <= 20; ++i)
    for (int j = -20; j <= 20; ++j) {
      double a = box * i / 20, b = box * j / 20, v = f(a, b);
      if (v > best) best = v, ya = a, yb = b;
    }
  for (double step = box / 20; step > 1e-12; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (auto [da, db] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
        double v = f(ya + da * step, yb + db * step);
        if (v > best) best = v, ya += da * step, yb += db * step, moved = true;
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("closed-form model phase solves the model problem") {
  for (double c : {0.7, -1.3}) {
    auto phi = exact_model_phase(c, 8);
    CHECK(model_pde_residual(phi, c).max_abs_coeff() < 1e-15);
    CHECK(series_distance(restrict_x1_zero(phi), model_initial_phase(8)) < 1e-15);
  }
}

TEST_CASE("series solver reproduces the model phase") {
  for (double c : {0.7, 1.0, -2.0}) {
    auto phi = solve_eikonal_series(model_normal_form(c, 8), model_initial_phase(8), 8);
    CHECK(series_distance(phi.truncated(6), exact_model_phase(c, 6)) < 1e-12);
    CHECK(series_distance(phi, exact_model_phase(c, 8)) < 1e-12);
    CHECK(model_pde_residual(phi, c).max_abs_coeff() < 1e-12);
  }
}

TEST_CASE("perturbed phase: residual, Hessians and degree stability") {
  const double c = 0.7;
  for (double mu : {0.0, 1e-3, 0.05}) {
    auto rs = rescale_symbol(model_normal_form(c, 10) + default_remainder(10), mu);
    auto phi10 = solve_eikonal_series(rs.q_mu, model_initial_phase(10), 10);
    auto rs8 = rescale_symbol(model_normal_form(c, 8) + default_remainder(8), mu);
    auto phi8 = solve_eikonal_series(rs8.q_mu, model_initial_phase(8), 8);
    CHECK(eikonal_residual(rs.q_mu, phi10).max_abs_coeff() < 1e-12);
    // Higher working degree leaves the low-order part untouched.
    CHECK(series_distance(phi10.truncated(6), phi8.truncated(6)) == 0.0);
    auto h = hessian_blocks(phi8);
    Eigen::Matrix2cd yy, xy;
    yy << 2.0 * I, 0, 0, I;
    xy << -2.0 * I, 1, 0, -I;
    CHECK((h.phi_yy - yy).norm() == 0.0);
    CHECK((h.phi_xy - xy).norm() == 0.0);
  }
}

TEST_CASE("rescaling rejects degenerate symbols") {
  auto q = model_normal_form(0.7, 6);
  CHECK_THROWS_AS(rescale_symbol(model_normal_form(0.0, 6), 0.1), Error);
  CHECK_THROWS_AS(rescale_symbol(q + phase_var(SY1, 6) * phase_var(SY2, 6), 0.1), Error);
  CHECK_THROWS_AS(rescale_symbol(q, 1.0), Error);
  CHECK_NOTHROW(rescale_symbol(q + default_remainder(6), 0.5));
  CHECK_THROWS_AS(solve_eikonal_series(q, phase_var(X1, 6).pow(2), 6), Error);
}

TEST_CASE("weight critical points: Newton against brute-force maximization") {
  auto rs = rescale_symbol(model_normal_form(0.7, 8) + default_remainder(8), 0.05);
  auto phi = solve_eikonal_series(rs.q_mu, model_initial_phase(8), 8);
  WeightFunction W(phi);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.07, 0.07);
  for (int s = 0; s < 6; ++s) {
    std::array<cplx, 2> x{cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
    auto w = W(x);
    CHECK(w.newton_residual < 1e-12);
    CHECK(w.max_hessian_eig < 0);
    CHECK(std::abs(w.phi_value - brute_weight(phi, x, 0.3)) < 1e-10);
  }
  CHECK_THROWS_AS(W({cplx(0.2, 0.1), 0.0}), Error);
}

TEST_CASE("weight Taylor envelope stays bounded as the scale shrinks") {
  const double c = 0.7;
  for (double mu : {0.0, 1e-3}) {
    auto rs = rescale_symbol(model_normal_form(c, 8) + default_remainder(8), mu);
    WeightFunction W(solve_eikonal_series(rs.q_mu, model_initial_phase(8), 8));
    auto rows = weight_taylor_envelope(W, c, mu, {0.08, 0.02, 0.005, 0.001}, 24);
    for (const auto& r : rows) {
      INFO("mu = " << mu << " scale = " << r.scale);
      CHECK(r.max_ratio < 1.0);
    }
  }
}

TEST_CASE("mu scaling of phase and weight") {
  std::vector<std::array<cplx, 2>> smp = {{cplx(0.002, 0.001), cplx(-0.001, 0.003)}, {cplx(-0.003, 0), cplx(0.001, -0.002)}};
  for (double mu : {0.05, 0.02}) {
    auto r = mu_scaling_check(0.7, default_remainder(8), mu, 8, smp);
    CHECK(r.coeff_mismatch < 1e-12);
    CHECK(r.weight_mismatch < 1e-10 * mu * mu * mu);
  }
}

TEST_CASE("model weight is the closed form at mu = 0 with c = 0") {
  // Without the cubic, Phi is exactly the quadratic part of the Taylor formula.
  WeightFunction W(exact_model_phase(0.0, 6));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int s = 0; s < 10; ++s) {
    std::array<cplx, 2> x{cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
    CHECK(std::abs(W(x).phi_value - weight_taylor3(0.0, x)) < 1e-13);
  }
}

TEST_CASE("Lagrangian negativity equals the closed form") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int s = 0; s < 20; ++s) {
    Eigen::Matrix2cd M, Pxx;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) M(i, j) = cplx(g(rng), g(rng)), Pxx(i, j) = cplx(g(rng), g(rng));
    Pxx = (Pxx + Pxx.transpose()).eval();
    Eigen::Matrix2cd H = M * M.adjoint() + Eigen::Matrix2cd::Identity() * 0.1;
    Eigen::Vector2cd xi(cplx(g(rng), g(rng)), cplx(g(rng), g(rng)));
    double v = lagrangian_negativity(Pxx, H, xi);
    CHECK(std::abs(v - lagrangian_negativity_closed(H, xi)) < 1e-10 * std::max(1.0, std::abs(v)));
    CHECK(v < 0);
  }
  Eigen::Matrix2cd bad;
  bad << 1, 2, 0, 1;
  CHECK_THROWS_AS(lagrangian_negativity(bad, bad, Eigen::Vector2cd(1, 0)), Error);
}

TEST_CASE("corner pipeline reproduces the listed coefficients") {
  auto r = corner_pipeline(7);
  CHECK(r.max_mismatch() < 1e-10);
  CHECK(r.order_violations.empty());
  CHECK(r.eikonal_residual < 1e-12);
  CHECK(r.critical_residual_w < 1e-12);
  CHECK(r.critical_residual_z1 < 1e-12);
  CHECK(r.checks.size() >= 8);
  // The numerical critical point agrees with the series solution near the origin.
  for (std::array<cplx, 2> z : {std::array<cplx, 2>{cplx(0.01, 0.02), cplx(-0.02, 0.01)},
                                std::array<cplx, 2>{cplx(-0.015, 0.0), cplx(0.005, -0.01)}}) {
    std::vector<cplx> p = {z[0], z[1], std::conj(z[0]), std::conj(z[1])};
    auto w = corner_weight(r.phi, z);
    CHECK(std::abs(w.phi_value - r.Phi.eval(p).real()) < 1e-10);
    CHECK(std::abs(w.w_crit - r.w_of_z.eval(p)) < 1e-8);
  }
  CHECK_THROWS_AS(corner_pipeline(5), Error);
}

TEST_CASE("corner normal form") {
  auto t = corner_taylor();
  // A = 8 |a| and B = 4 b from the closed-form corner coefficients.
  CHECK(std::abs(t.A - 32 * std::pow(pi, 3) / 3) < 1e-9 * t.A);
  CHECK(std::abs(t.B - 32 * std::pow(pi, 4) / 9) < 1e-9 * t.B);
  auto nf = corner_normal_form_check(t.A, t.B);
  CHECK(std::abs(nf.alpha - 3 / pi) < 1e-12);
  CHECK(std::abs(nf.jacobian - 1) < 1e-14);
  CHECK(nf.max_rel_mismatch < 1e-9);
  CHECK(std::abs(nf.h_rescale - 4 * std::pow(t.B, 3) / std::pow(t.A, 4)) < 1e-15);
  CHECK_THROWS_AS(corner_normal_form_check(-1, 1), Error);
}
