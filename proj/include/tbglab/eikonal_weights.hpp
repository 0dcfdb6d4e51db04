#pragma once

#include <Eigen/Dense>

#include <array>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "tbglab/series.hpp"
#include "tbglab/symbol_brackets.hpp"

namespace tbglab {

// Phase variables (x1, x2, y1, y2); symbol variables (y1, y2, eta1, eta2).
enum PhaseVar { X1 = 0, X2 = 1, Y1 = 2, Y2 = 3 };
enum SymbolVar { SY1 = 0, SY2 = 1, ETA1 = 2, ETA2 = 3 };

inline CSeries phase_var(int var, int degree) { return CSeries::variable(4, degree, var); }
inline CSeries phase_const(cplx v, int degree) { return CSeries::constant(4, degree, v); }

// eta1 + i eta2 + i c y1^2
inline CSeries model_normal_form(double c, int degree) {
  CSeries q = phase_var(ETA1, degree) + I * phase_var(ETA2, degree);
  q += (I * c) * phase_var(SY1, degree).pow(2);
  return q;
}

// (i/2)(x2 - y2)^2 + i y1^2, scaled by `scale`.
inline CSeries model_initial_phase(int degree, double scale = 1.0) {
  CSeries d = phase_var(X2, degree) - phase_var(Y2, degree);
  return (scale * 0.5 * I) * d.pow(2) + (scale * I) * phase_var(Y1, degree).pow(2);
}

// (i/2)(x2 - y2 + i x1)^2 + i (y1 - x1)^2 + (ic/3)(y1^3 - (y1 - x1)^3)
inline CSeries exact_model_phase(double c, int degree) {
  CSeries a = phase_var(X2, degree) - phase_var(Y2, degree) + I * phase_var(X1, degree);
  CSeries b = phase_var(Y1, degree) - phase_var(X1, degree);
  return (0.5 * I) * a.pow(2) + I * b.pow(2) + (I * c / 3.0) * (phase_var(Y1, degree).pow(3) - b.pow(3));
}

inline CSeries eikonal_rhs(const CSeries& q, const CSeries& phi) {
  const int d = phi.max_degree();
  std::vector<CSeries> subs = {phase_var(Y1, d), phase_var(Y2, d), -phi.derivative(Y1), -phi.derivative(Y2)};
  return q.compose(subs);
}

// Formal solution of phi_{x1} = q(y, -phi_y) with phi(0, x2, y) = init, fixed one x1-order per pass.
inline CSeries solve_eikonal_series(const CSeries& q, const CSeries& init, int degree) {
  require(q.nvars() == 4 && init.nvars() == 4, "solve_eikonal_series: expected four variables");
  require(degree >= 2, "solve_eikonal_series: degree must be at least 2");
  for (const auto& [k, v] : init.terms())
    if (key_exponent(k, X1) != 0) fail(ErrorKind::Precondition, "solve_eikonal_series: initial phase depends on x1");
  if (q.max_degree() < degree - 1)
    fail(ErrorKind::Numeric, "solve_eikonal_series: symbol truncated at degree " + std::to_string(q.max_degree()) +
                                 " cannot determine the phase through degree " + std::to_string(degree));
  CSeries base = init.with_max_degree(degree);
  CSeries phi = base;
  for (int pass = 0; pass <= degree; ++pass) {
    CSeries next = base + eikonal_rhs(q, phi).antiderivative(X1);
    if (series_distance(next, phi) == 0.0) break;
    phi = next;
  }
  return phi;
}

// phi_{x1} - q(y, -phi_y) through degree - 1.
inline CSeries eikonal_residual(const CSeries& q, const CSeries& phi) {
  return (phi.derivative(X1) - eikonal_rhs(q, phi)).truncated(phi.max_degree() - 1);
}

struct RescaledSymbol {
  CSeries normal_form;  // eta1 + i eta2 + i c y1^2
  CSeries remainder;    // r_mu, so that q_mu = normal_form + mu r_mu
  CSeries q_mu;
  double c = 0;
  double mu = 0;
  double h_scale = 0;   // h~ = h_scale * h
  int remainder_min_degree = 0;
};

// mu^{-2} q(mu y, mu^2 eta): weights 1 on y and 2 on eta.
inline RescaledSymbol rescale_symbol(const CSeries& q_full, double mu) {
  require(q_full.nvars() == 4, "rescale_symbol: expected a symbol in (y1, y2, eta1, eta2)");
  require(mu >= 0.0 && mu < 1.0, "rescale_symbol: mu must lie in [0, 1)");
  const int d = q_full.max_degree();
  RescaledSymbol r;
  r.mu = mu;
  r.h_scale = mu > 0 ? 1.0 / (mu * mu * mu) : std::numeric_limits<double>::infinity();
  const cplx cy = q_full.coeff({2, 0, 0, 0});
  if (std::abs(cy.real()) > 1e-14 * std::max(1.0, std::abs(cy)))
    fail(ErrorKind::Precondition, "rescale_symbol: y1^2 coefficient must be i c with c real");
  r.c = cy.imag();
  if (r.c == 0.0) fail(ErrorKind::Precondition, "rescale_symbol: c = g'_{y1}(0) must be nonzero");
  if (q_full.coeff({0, 0, 1, 0}) != cplx(1.0) || q_full.coeff({0, 0, 0, 1}) != I)
    fail(ErrorKind::Precondition, "rescale_symbol: linear part must be eta1 + i eta2");
  r.normal_form = model_normal_form(r.c, d);
  r.remainder = CSeries(4, d);
  r.remainder_min_degree = 1 << 20;
  for (const auto& [k, v] : q_full.terms()) {
    Exponents e = unpack_exponents(k);
    const int w = e[SY1] + e[SY2] + 2 * (e[ETA1] + e[ETA2]);
    const bool normal = (e == CSeries::exps({0, 0, 1, 0})) || (e == CSeries::exps({0, 0, 0, 1})) ||
                        (e == CSeries::exps({2, 0, 0, 0}));
    if (normal) continue;
    if (w <= 2)
      fail(ErrorKind::Precondition, "rescale_symbol: term " + q_full.term_name(k) +
                                        " has weighted degree <= 2 and is not part of the normal form");
    r.remainder.add_key(k, v * std::pow(mu, w - 3));
    r.remainder_min_degree = std::min(r.remainder_min_degree, key_degree(k));
  }
  r.q_mu = r.normal_form + mu * r.remainder;
  return r;
}

// Default original-coordinate remainder: weighted-homogeneous of weight 3, so r_mu is mu-independent.
inline CSeries default_remainder(int degree) {
  CSeries y1 = phase_var(SY1, degree), y2 = phase_var(SY2, degree), e2 = phase_var(ETA2, degree);
  return I * y1 * e2 + I * y1 * y2.pow(2) + y1.pow(2) * y2;
}

struct HessianBlocks {
  Eigen::Matrix2cd phi_yy, phi_xy;
};

inline HessianBlocks hessian_blocks(const CSeries& phi) {
  HessianBlocks h;
  auto second = [&](int a, int b) {
    Exponents e{};
    e[a] += 1;
    e[b] += 1;
    cplx v = phi.coeff(e);
    return a == b ? 2.0 * v : v;
  };
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      h.phi_yy(i, j) = second(Y1 + i, Y1 + j);
      h.phi_xy(i, j) = second(X1 + i, Y1 + j);
    }
  return h;
}

struct WeightSample {
  std::array<cplx, 2> x{};
  std::array<double, 2> y_crit{};
  cplx w_crit = 0;  // corner chart only
  double phi_value = 0;
  double newton_residual = 0;
  int iterations = 0;
  double max_hessian_eig = 0;  // largest eigenvalue of the y-Hessian of -Im phi
};

// Phi(x) = -Im phi(x, y(x)) with y(x) real solving Im phi_y(x, y) = 0.
class WeightFunction {
 public:
  explicit WeightFunction(const CSeries& phi, double trust_radius = 0.2, double newton_tol = 1e-12, int max_iter = 50)
      : phi_(phi), trust_(trust_radius), tol_(newton_tol), max_iter_(max_iter) {
    dy_[0] = phi.derivative(Y1);
    dy_[1] = phi.derivative(Y2);
    dyy_[0] = dy_[0].derivative(Y1);
    dyy_[1] = dy_[0].derivative(Y2);
    dyy_[2] = dy_[1].derivative(Y2);
  }

  WeightSample operator()(const std::array<cplx, 2>& x) const {
    if (std::hypot(std::abs(x[0]), std::abs(x[1])) > trust_ + 1e-15)
      fail(ErrorKind::Precondition, "weight_phi: |x| exceeds the trust radius");
    WeightSample s;
    s.x = x;
    Eigen::Vector2d y(x[0].real(), x[1].real() - x[0].imag());
    Eigen::Vector2d g;
    Eigen::Matrix2d J;
    auto point = [&](const Eigen::Vector2d& yy) { return std::vector<cplx>{x[0], x[1], yy[0], yy[1]}; };
    int it = 0;
    for (; it < max_iter_; ++it) {
      auto p = point(y);
      g << dy_[0].eval(p).imag(), dy_[1].eval(p).imag();
      if (g.norm() < tol_) break;
      J << dyy_[0].eval(p).imag(), dyy_[1].eval(p).imag(), dyy_[1].eval(p).imag(), dyy_[2].eval(p).imag();
      y -= J.fullPivLu().solve(g);
      if (!y.allFinite() || y.norm() > 10.0 * std::max(trust_, 1e-3))
        fail(ErrorKind::Numeric, "weight_phi: Newton diverged, last iterate y = (" + std::to_string(y[0]) + ", " +
                                     std::to_string(y[1]) + ")");
    }
    auto p = point(y);
    g << dy_[0].eval(p).imag(), dy_[1].eval(p).imag();
    if (g.norm() >= tol_)
      fail(ErrorKind::Numeric, "weight_phi: Newton did not converge, residual " + std::to_string(g.norm()));
    J << dyy_[0].eval(p).imag(), dyy_[1].eval(p).imag(), dyy_[1].eval(p).imag(), dyy_[2].eval(p).imag();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(-J);
    s.y_crit = {y[0], y[1]};
    s.phi_value = -phi_.eval(p).imag();
    s.newton_residual = g.norm();
    s.iterations = it;
    s.max_hessian_eig = es.eigenvalues().maxCoeff();
    return s;
  }

  double trust_radius() const { return trust_; }

 private:
  CSeries phi_;
  std::array<CSeries, 2> dy_;
  std::array<CSeries, 3> dyy_;
  double trust_, tol_;
  int max_iter_;
};

inline WeightSample weight_phi(const CSeries& phi, const std::array<cplx, 2>& x, double newton_tol = 1e-12) {
  return WeightFunction(phi, 0.2, newton_tol)(x);
}

// (1/2)(Im x2 + Re x1)^2 + (Im x1)^2 - (c/3)(Re x1)^3
inline double weight_taylor3(double c, const std::array<cplx, 2>& x) {
  double a = x[1].imag() + x[0].real();
  return 0.5 * a * a + x[0].imag() * x[0].imag() - c / 3.0 * std::pow(x[0].real(), 3);
}

struct EnvelopeRow {
  double scale;
  double max_ratio;  // |Phi - taylor3| / (|x1|^4 + mu |x|^3)
  double max_abs_residual;
};

inline std::vector<EnvelopeRow> weight_taylor_envelope(const WeightFunction& W, double c, double mu,
                                                       const std::vector<double>& scales, int ndirs,
                                                       unsigned seed = 7u) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<std::array<cplx, 2>> dirs;
  for (int i = 0; i < ndirs; ++i) {
    std::array<cplx, 2> d{cplx(nd(rng), nd(rng)), cplx(nd(rng), nd(rng))};
    double n = std::hypot(std::abs(d[0]), std::abs(d[1]));
    dirs.push_back({d[0] / n, d[1] / n});
  }
  std::vector<EnvelopeRow> rows;
  for (double s : scales) {
    EnvelopeRow r{s, 0, 0};
    for (const auto& d : dirs) {
      std::array<cplx, 2> x{s * d[0], s * d[1]};
      double res = std::abs(W(x).phi_value - weight_taylor3(c, x));
      double env = std::pow(std::abs(x[0]), 4) + mu * s * s * s;
      r.max_abs_residual = std::max(r.max_abs_residual, res);
      r.max_ratio = std::max(r.max_ratio, res / env);
    }
    rows.push_back(r);
  }
  return rows;
}

struct ScalingReport {
  double coeff_mismatch = 0;  // max |phi_orig - mu^{3-d} phi_rescaled| over coefficients
  double weight_mismatch = 0; // max |Phi_mu(x) - mu^3 Phi_1(x/mu)| over samples
};

// phi_mu(x, y) = mu^3 phi_1(x/mu, y/mu): runs the original-coordinate and rescaled problems.
inline ScalingReport mu_scaling_check(double c, const CSeries& remainder, double mu, int degree,
                                      const std::vector<std::array<cplx, 2>>& samples) {
  CSeries Q = model_normal_form(c, degree) + remainder.with_max_degree(degree);
  RescaledSymbol rs = rescale_symbol(Q, mu);
  CSeries phi1 = solve_eikonal_series(rs.q_mu, model_initial_phase(degree), degree);
  CSeries phimu = solve_eikonal_series(Q, model_initial_phase(degree, mu), degree);
  ScalingReport rep;
  CSeries scaled(4, degree);
  for (const auto& [k, v] : phi1.terms()) scaled.add_key(k, v * std::pow(mu, 3 - key_degree(k)));
  rep.coeff_mismatch = series_distance(scaled, phimu);
  WeightFunction W1(phi1), Wmu(phimu, 0.2 * mu);
  for (const auto& x : samples) {
    double a = Wmu(x).phi_value;
    double b = mu * mu * mu * W1({x[0] / mu, x[1] / mu}).phi_value;
    rep.weight_mismatch = std::max(rep.weight_mismatch, std::abs(a - b));
  }
  return rep;
}

// (1/i) sigma((0, xi), iota_Phi(0, xi)) from the explicit anti-linear involution.
inline double lagrangian_negativity(const Eigen::Matrix2cd& Phi_xx, const Eigen::Matrix2cd& Phi_xxbar,
                                    const Eigen::Vector2cd& xi) {
  if ((Phi_xxbar - Phi_xxbar.adjoint()).norm() > 1e-12 * std::max(1.0, Phi_xxbar.norm()))
    fail(ErrorKind::Precondition, "lagrangian_negativity: Phi''_{x xbar} is not hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(Phi_xxbar);
  if (es.eigenvalues().minCoeff() <= 0)
    fail(ErrorKind::Precondition, "lagrangian_negativity: Phi''_{x xbar} is not positive definite");
  // Phi''_{xbar x} is the transpose of Phi''_{x xbar}.
  Eigen::Matrix2cd inv = Phi_xxbar.transpose().inverse();
  Eigen::Vector2cd xb = xi.conjugate();
  Eigen::Vector2cd X = -0.5 * I * (inv * xb);
  Eigen::Vector2cd Xi = -Phi_xx * (inv * xb);
  // sigma((x, xi), (y, eta)) = xi . y - eta . x
  Eigen::Vector2cd zero = Eigen::Vector2cd::Zero();
  cplx sigma = xi.transpose() * X;
  sigma -= cplx(Xi.transpose() * zero);
  return (sigma / I).real();
}

inline double lagrangian_negativity_closed(const Eigen::Matrix2cd& Phi_xxbar, const Eigen::Vector2cd& xi) {
  // -(1/2) <A^{-1} xi, xi> with <w, z> = sum w_j conj(z_j)
  Eigen::Vector2cd a = Phi_xxbar.inverse() * xi;
  return -0.5 * (a.transpose() * xi.conjugate()).value().real();
}

// ---------------------------------------------------------------------------------------------
// Corner pipeline. Phase variables (z1, z2, w, v) with v standing for conj(w); real-analytic charts
// use (z1, z2, c1, c2) with c = conj(z).

enum CornerVar { CZ1 = 0, CZ2 = 1, CW = 2, CV = 3 };
enum RealVar { RZ1 = 0, RZ2 = 1, RC1 = 2, RC2 = 3 };
inline const std::vector<int> real_chart_conj = {RC1, RC2, RZ1, RZ2};

struct CoefficientCheck {
  std::string name;
  cplx expected, actual;
};

struct CornerResult {
  CSeries phi;         // (z1, z2, w, v)
  CSeries w_of_z;      // (z1, z2, c1, c2)
  CSeries Phi;         // (z1, z2, c1, c2)
  CSeries z1_of_z2;    // (z2, c2) stored in slots (z1, z2, c1, c2) with only z2, c2 used
  CSeries w_on_curve;  // same chart
  CSeries Psi;         // same chart
  std::vector<CoefficientCheck> checks;
  double eikonal_residual = 0;
  double critical_residual_w = 0;
  double critical_residual_z1 = 0;
  std::vector<std::string> order_violations;  // phi terms outside the stated error classes

  double max_mismatch() const {
    double m = 0;
    for (const auto& c : checks) m = std::max(m, std::abs(c.expected - c.actual));
    return m;
  }
};

// (d_v phi)^2 + v - w^2 in the symbol chart (y1 = w, y2 = v, eta = -d_y phi).
inline CSeries corner_symbol(int degree) {
  return phase_var(ETA2, degree).pow(2) + phase_var(SY2, degree) - phase_var(SY1, degree).pow(2);
}

inline CornerResult corner_pipeline(int degree = 7, double tol = 1e-10) {
  require(degree >= 6, "corner_pipeline: degree must be at least 6");
  CornerResult r;
  const int D = degree;
  // i w v + w z2
  CSeries init = I * phase_var(CW, D) * phase_var(CV, D) + phase_var(CW, D) * phase_var(CZ2, D);
  CSeries q = corner_symbol(D);
  r.phi = solve_eikonal_series(q, init, D);
  r.eikonal_residual = eikonal_residual(q, r.phi).max_abs_coeff();

  // Critical point in w: F = phi_w(z, w, v) - conj(phi_v)(c, v, w) = 0, 6 variables (z1, z2, c1, c2, w, v).
  CSeries Fw = r.phi.derivative(CW).embed(6, {0, 1, 4, 5});
  CSeries Fv = r.phi.derivative(CV).conj().embed(6, {2, 3, 5, 4});
  CSeries F = Fw - Fv;
  auto var6 = [&](int i) { return CSeries::variable(6, D, i); };
  CSeries lin = 2.0 * I * var6(5) + var6(1) - var6(2);
  for (const auto& [k, v] : F.terms())
    if (key_degree(k) <= 1 && std::abs(v - lin.coeff(unpack_exponents(k))) > 1e-14)
      fail(ErrorKind::Numeric, "corner_pipeline: unexpected linear term " + F.term_name(k) + " in the w-critical equation");
  for (const auto& [k, v] : lin.terms())
    if (std::abs(F.coeff(unpack_exponents(k)) - v) > 1e-14)
      fail(ErrorKind::Numeric, "corner_pipeline: missing linear term " + lin.term_name(k) + " in the w-critical equation");
  CSeries G = F - lin;
  auto rv = [&](int i) { return CSeries::variable(4, D, i); };
  CSeries W(4, D), V(4, D);
  for (int pass = 0; pass <= D; ++pass) {
    CSeries Gs = G.compose({rv(RZ1), rv(RZ2), rv(RC1), rv(RC2), W, V});
    CSeries Vn = (rv(RZ2) - rv(RC1) + Gs) * (-1.0 / (2.0 * I));
    CSeries Wn = Vn.conj_permuted(real_chart_conj);
    bool same = series_distance(Vn, V) == 0.0;
    V = Vn;
    W = Wn;
    if (same) break;
  }
  r.w_of_z = W;
  r.critical_residual_w = F.compose({rv(RZ1), rv(RZ2), rv(RC1), rv(RC2), W, V}).max_abs_coeff();

  // Phi = -Im phi(z, w(z), conj w(z)).
  CSeries phi_z = r.phi.compose({rv(RZ1), rv(RZ2), W, V});
  CSeries phib_c = r.phi.conj().compose({rv(RC1), rv(RC2), V, W});
  r.Phi = (phi_z - phib_c) * (-1.0 / (2.0 * I));

  // Critical curve in z1: d_{z1} Phi = d_{c1} Phi = 0 solved for (z1, c1) in terms of (z2, c2).
  CSeries E1 = r.Phi.derivative(RZ1), E2 = r.Phi.derivative(RC1);
  Eigen::Matrix2cd M;
  M << E1.coeff({1, 0, 0, 0}), E1.coeff({0, 0, 1, 0}), E2.coeff({1, 0, 0, 0}), E2.coeff({0, 0, 1, 0});
  if (std::abs(M.determinant()) < 1e-12) fail(ErrorKind::Numeric, "corner_pipeline: degenerate z1-critical equation");
  Eigen::Matrix2cd Minv = M.inverse();
  CSeries N1 = E1 - M(0, 0) * rv(RZ1) - M(0, 1) * rv(RC1);
  CSeries N2 = E2 - M(1, 0) * rv(RZ1) - M(1, 1) * rv(RC1);
  CSeries Z1(4, D), C1(4, D);
  for (int pass = 0; pass <= D; ++pass) {
    std::vector<CSeries> subs = {Z1, rv(RZ2), C1, rv(RC2)};
    CSeries n1 = N1.compose(subs), n2 = N2.compose(subs);
    CSeries Z1n = -(Minv(0, 0) * n1 + Minv(0, 1) * n2);
    CSeries C1n = -(Minv(1, 0) * n1 + Minv(1, 1) * n2);
    bool same = series_distance(Z1n, Z1) == 0.0 && series_distance(C1n, C1) == 0.0;
    Z1 = Z1n;
    C1 = C1n;
    if (same) break;
  }
  r.z1_of_z2 = Z1;
  std::vector<CSeries> curve = {Z1, rv(RZ2), C1, rv(RC2)};
  r.critical_residual_z1 = E1.compose(curve).max_abs_coeff();
  r.w_on_curve = W.compose(curve);
  r.Psi = r.Phi.compose(curve);

  // Listed coefficients.
  auto add = [&](const std::string& name, cplx expected, cplx actual) { r.checks.push_back({name, expected, actual}); };
  const CSeries& P = r.phi;
  add("phi[w v]", I, P.coeff({0, 0, 1, 1}));
  add("phi[z2 w]", 1.0, P.coeff({0, 1, 1, 0}));
  add("phi[z1 v]", 1.0, P.coeff({1, 0, 0, 1}));
  add("phi[z1 w^2]", -2.0, P.coeff({1, 0, 2, 0}));
  add("phi[z1^2 w]", I, P.coeff({2, 0, 1, 0}));
  add("phi[z1^3]", 1.0 / 3.0, P.coeff({3, 0, 0, 0}));
  add("w[z1]", 0.5 * I, W.coeff({1, 0, 0, 0}));
  add("w[c2]", -0.5 * I, W.coeff({0, 0, 0, 1}));
  // z1(z2) = c2 + i z2^2 + 2 c2^2 z2 + O(|z2|^4): every coefficient through degree 3.
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; a + b <= 3; ++b) {
      cplx e = 0;
      if (a == 0 && b == 1) e = 1.0;
      if (a == 2 && b == 0) e = I;
      if (a == 1 && b == 2) e = 2.0;
      add("z1[z2^" + std::to_string(a) + " c2^" + std::to_string(b) + "]", e, Z1.coeff({0, a, 0, b}));
      cplx ew = (a == 2 && b == 0) ? cplx(-1.0) : cplx(0.0);
      add("w_curve[z2^" + std::to_string(a) + " c2^" + std::to_string(b) + "]", ew, r.w_on_curve.coeff({0, a, 0, b}));
    }
  // Psi = (1/3) Im z2^3 + |z2|^2 Im z2^3 + O(|z2|^6): every coefficient through degree 5.
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; a + b <= 5; ++b) {
      cplx e = 0;
      if (a == 3 && b == 0) e = 1.0 / (6.0 * I);
      if (a == 0 && b == 3) e = -1.0 / (6.0 * I);
      if (a == 4 && b == 1) e = 1.0 / (2.0 * I);
      if (a == 1 && b == 4) e = -1.0 / (2.0 * I);
      add("Psi[z2^" + std::to_string(a) + " c2^" + std::to_string(b) + "]", e, r.Psi.coeff({0, a, 0, b}));
    }
  // Remaining phi terms must lie in O(|z1 w^3| + |z1^3 w^2| + |z1^5 w| + |z1|^7).
  const std::vector<Exponents> listed = {CSeries::exps({0, 0, 1, 1}), CSeries::exps({0, 1, 1, 0}),
                                         CSeries::exps({1, 0, 0, 1}), CSeries::exps({1, 0, 2, 0}),
                                         CSeries::exps({2, 0, 1, 0}), CSeries::exps({3, 0, 0, 0})};
  for (const auto& [k, v] : P.terms()) {
    Exponents e = unpack_exponents(k);
    if (std::find(listed.begin(), listed.end(), e) != listed.end()) continue;
    if (std::abs(v) < 1e-14) continue;
    const int a = e[CZ1], m = e[CW] + e[CV];
    const bool ok = e[CZ2] == 0 && a >= 1 && (m >= 3 || (a >= 3 && m >= 2) || (a >= 5 && m >= 1) || a >= 7);
    if (!ok) r.order_violations.push_back(P.term_name(k));
  }
  if (r.max_mismatch() > tol) {
    for (const auto& c : r.checks)
      if (std::abs(c.expected - c.actual) > tol)
        fail(ErrorKind::Numeric, "corner_pipeline: coefficient " + c.name + " mismatch " +
                                     std::to_string(std::abs(c.expected - c.actual)));
  }
  return r;
}

// Numerical corner weight at a point: Newton for the complex critical point w of -Im phi(z, w, conj w).
inline WeightSample corner_weight(const CSeries& phi, const std::array<cplx, 2>& z, double tol = 1e-13,
                                  int max_iter = 50) {
  CSeries pw = phi.derivative(CW), pv = phi.derivative(CV);
  CSeries pww = pw.derivative(CW), pwv = pw.derivative(CV), pvv = pv.derivative(CV);
  cplx w = 0.5 * I * (z[0] - std::conj(z[1]));
  WeightSample s;
  s.x = z;
  auto F = [&](cplx ww) {
    std::vector<cplx> p = {z[0], z[1], ww, std::conj(ww)};
    return pw.eval(p) - std::conj(pv.eval(p));
  };
  int it = 0;
  for (; it < max_iter; ++it) {
    std::vector<cplx> p = {z[0], z[1], w, std::conj(w)};
    cplx f = F(w);
    if (std::abs(f) < tol) break;
    cplx Fw = pww.eval(p) - std::conj(pvv.eval(p));
    cplx Fwb = pwv.eval(p) - std::conj(pwv.eval(p));
    // f + Fw d + Fwb conj(d) = 0 as a real 2x2 system.
    Eigen::Matrix2d J;
    const cplx c0 = Fw + Fwb, c1 = I * (Fw - Fwb);
    J << c0.real(), c1.real(), c0.imag(), c1.imag();
    Eigen::Vector2d d = J.fullPivLu().solve(Eigen::Vector2d(-f.real(), -f.imag()));
    w += cplx(d[0], d[1]);
    if (!std::isfinite(w.real()) || std::abs(w) > 1.0)
      fail(ErrorKind::Numeric, "corner_weight: Newton diverged at w = " + std::to_string(w.real()) + "+" +
                                   std::to_string(w.imag()) + "i");
  }
  s.newton_residual = std::abs(F(w));
  if (s.newton_residual >= tol) fail(ErrorKind::Numeric, "corner_weight: Newton did not converge");
  s.w_crit = w;
  s.iterations = it;
  s.phi_value = -phi.eval({z[0], z[1], w, std::conj(w)}).imag();
  return s;
}

// ---------------------------------------------------------------------------------------------
// Corner normal form: z = -i alpha w, zeta = i alpha^{-1} zeta1 applied to q(z_S + z, zeta).

struct NormalFormTerm {
  std::string name;
  cplx expected, actual;
};

struct NormalFormReport {
  double A = 0, B = 0, alpha = 0, jacobian = 0, h_rescale = 0;
  std::vector<NormalFormTerm> terms;  // coefficients of -A^2 B^{-1}(4 B^3 A^{-4} zb1^2 + wb - w^2)
  double max_rel_mismatch = 0;
  double normalized_wbar = 0;  // coefficient of conj(w) after dividing by -A^2/B
};

inline NormalFormReport corner_normal_form_check(double A, double B, const PotentialParams& P = {}, double tol = 1e-9) {
  if (!(A > 0 && B > 0)) fail(ErrorKind::Precondition, "corner_normal_form_check: A and B must be positive");
  NormalFormReport r;
  r.A = A;
  r.B = B;
  r.alpha = A / B;
  const double al = r.alpha;
  r.jacobian = ((-I * al) * (I / al)).real();
  r.h_rescale = 4.0 * B * B * B / (A * A * A * A);
  VJet v = derivatives_V(zS, P);
  // q(z_S + z, zeta) = 4 zetabar^2 - V(z_S + z); Taylor of V through degree 2 in (z, zbar).
  const cplx zw = -I * al, zbw = I * al;  // z = zw w, zbar = zbw wbar
  const double pre = -A * A / B;
  auto push = [&](const std::string& n, cplx e, cplx a) { r.terms.push_back({n, e, a}); };
  push("1", 0.0, -v.V);
  push("w", 0.0, -v.Vz * zw);
  push("wbar", pre, -v.Vzb * zbw);
  push("w^2", -pre, -0.5 * v.Vzz * zw * zw);
  push("w wbar", 0.0, -v.Vzzb * zw * zbw);
  push("wbar^2", 0.0, -0.5 * v.Vzbzb * zbw * zbw);
  push("zeta1bar^2", pre * r.h_rescale, 4.0 * std::pow(std::conj(I / al), 2));
  const double scale = std::abs(pre);
  for (const auto& t : r.terms) r.max_rel_mismatch = std::max(r.max_rel_mismatch, std::abs(t.expected - t.actual) / scale);
  r.normalized_wbar = (r.terms[2].actual / pre).real();
  if (r.max_rel_mismatch > tol)
    for (const auto& t : r.terms)
      if (std::abs(t.expected - t.actual) / scale > tol)
        fail(ErrorKind::Numeric, "corner_normal_form_check: term " + t.name + " mismatch");
  return r;
}

}  // namespace tbglab
