#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tbglab/core.hpp"
#include "tbglab/eikonal_weights.hpp"

namespace tbglab {

using Obstacle = std::function<double(double, double)>;

// Cartesian n x n grid over [-R, R]^2 masked to the closed disc. A node is interior when it and its
// four neighbours lie in the disc; the remaining disc nodes are boundary nodes, pinned to the obstacle.
class DiscGrid {
 public:
  enum Node : std::uint8_t { Outside = 0, Boundary = 1, Interior = 2 };

  static DiscGrid make(double radius, int n) {
    if (!(radius > 0)) fail(ErrorKind::Config, "DiscGrid: radius must be positive");
    if (n < 5 || n % 2 == 0) fail(ErrorKind::Config, "DiscGrid: n must be odd and at least 5");
    DiscGrid g;
    g.radius_ = radius;
    g.n_ = n;
    g.h_ = 2 * radius / (n - 1);
    g.kind_.assign(std::size_t(n) * n, Outside);
    auto inside = [&](int i, int j) {
      if (i < 0 || j < 0 || i >= n || j >= n) return false;
      double x = g.x(i), y = g.y(j);
      return x * x + y * y <= radius * radius * (1 + 1e-12);
    };
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (!inside(i, j)) continue;
        bool interior = inside(i - 1, j) && inside(i + 1, j) && inside(i, j - 1) && inside(i, j + 1);
        g.kind_[g.index(i, j)] = interior ? Interior : Boundary;
        (interior ? g.interior_ : g.boundary_).push_back(g.index(i, j));
      }
    return g;
  }

  double radius() const { return radius_; }
  int n() const { return n_; }
  double h() const { return h_; }
  // Centred so that mirrored nodes have exactly opposite coordinates.
  double x(int i) const { return (i - n_ / 2) * h_; }
  double y(int j) const { return (j - n_ / 2) * h_; }
  std::size_t index(int i, int j) const { return std::size_t(j) * n_ + i; }
  int col(std::size_t p) const { return int(p % n_); }
  int row(std::size_t p) const { return int(p / n_); }
  std::size_t center() const { return index(n_ / 2, n_ / 2); }
  Node kind(std::size_t p) const { return Node(kind_[p]); }
  bool in_disc(std::size_t p) const { return kind_[p] != Outside; }
  const std::vector<std::size_t>& interior() const { return interior_; }
  const std::vector<std::size_t>& boundary() const { return boundary_; }

  std::vector<double> sample(const Obstacle& f) const {
    std::vector<double> v(kind_.size(), 0.0);
    for (std::size_t p = 0; p < v.size(); ++p)
      if (in_disc(p)) v[p] = f(x(col(p)), y(row(p)));
    return v;
  }

 private:
  double radius_ = 1, h_ = 0;
  int n_ = 0;
  std::vector<std::uint8_t> kind_;
  std::vector<std::size_t> interior_, boundary_;
};

struct MinorantOptions {
  enum class Method { Monotone, PSOR };
  Method method = Method::PSOR;
  double tol = 1e-10;               // max per-sweep update
  long max_iter = 2000000;
  double omega = 0;                 // 0 selects the optimal SOR factor of the square
  bool warm_start = true;           // coarse-to-fine, PSOR only
  double subharmonic_slack = 1e-12;
  double obstacle_slack = 1e-14;
};

struct MinorantState {
  DiscGrid grid;
  std::vector<double> obstacle, u;
  long iterations = 0;
  double last_update = 0;
  double complementarity = 0;       // max |u - min(obstacle, mean)| over interior
  double max_obstacle_violation = 0;
  double max_subharmonic_violation = 0;
  long maximality_failures = 0;     // interior nodes that could be raised by tol
  bool monotone = true;             // every update was nonincreasing (Monotone method)

  double u0() const { return u[grid.center()]; }
  double obstacle0() const { return obstacle[grid.center()]; }
};

namespace detail {

inline double neighbour_mean(const std::vector<double>& u, std::size_t p, int n) {
  return 0.25 * (u[p - 1] + u[p + 1] + u[p - n] + u[p + n]);
}

inline void audit(MinorantState& s, double raise) {
  const int n = s.grid.n();
  s.complementarity = s.max_obstacle_violation = s.max_subharmonic_violation = 0;
  s.maximality_failures = 0;
  for (std::size_t p = 0; p < s.u.size(); ++p)
    if (s.grid.in_disc(p)) s.max_obstacle_violation = std::max(s.max_obstacle_violation, s.u[p] - s.obstacle[p]);
  for (std::size_t p : s.grid.interior()) {
    const double m = neighbour_mean(s.u, p, n);
    s.max_subharmonic_violation = std::max(s.max_subharmonic_violation, s.u[p] - m);
    s.complementarity = std::max(s.complementarity, std::abs(s.u[p] - std::min(s.obstacle[p], m)));
    if (s.u[p] + raise <= s.obstacle[p] && s.u[p] + raise <= m + 1e-12) ++s.maximality_failures;
  }
}

// Bilinear interpolation of a coarse solution (spacing 2h) at fine node p.
inline double prolong(const DiscGrid& cg, const std::vector<double>& cu, const DiscGrid& fg, std::size_t p,
                      double fallback) {
  const int i = fg.col(p), j = fg.row(p);
  const int i0 = i / 2, j0 = j / 2, i1 = (i + 1) / 2, j1 = (j + 1) / 2;
  double s = 0;
  for (int a : {i0, i1})
    for (int b : {j0, j1}) {
      std::size_t q = cg.index(a, b);
      if (!cg.in_disc(q)) return fallback;
      s += cu[q];
    }
  return 0.25 * s;
}

}  // namespace detail

inline MinorantState largest_minorant(const Obstacle& f, const DiscGrid& grid, const MinorantOptions& opt = {}) {
  if (!(opt.tol > 0)) fail(ErrorKind::Config, "largest_minorant: tol must be positive");
  MinorantState s;
  s.grid = grid;
  s.obstacle = grid.sample(f);
  s.u = s.obstacle;
  const int n = grid.n();
  const bool psor = opt.method == MinorantOptions::Method::PSOR;

  if (psor && opt.warm_start && (n - 1) % 4 == 0 && (n - 1) / 2 + 1 >= 21) {
    DiscGrid cg = DiscGrid::make(grid.radius(), (n - 1) / 2 + 1);
    MinorantOptions copt = opt;
    copt.tol = std::max(opt.tol, 1e-9);
    copt.subharmonic_slack = std::max(opt.subharmonic_slack, 1e-9);
    MinorantState cs = largest_minorant(f, cg, copt);
    for (std::size_t p : grid.interior())
      s.u[p] = std::min(s.obstacle[p], detail::prolong(cg, cs.u, grid, p, s.obstacle[p]));
  }

  double omega = 1.0;
  if (psor) omega = opt.omega > 0 ? opt.omega : 2.0 / (1.0 + std::sin(pi * grid.h() / (2 * grid.radius())));
  if (!(omega > 0 && omega < 2)) fail(ErrorKind::Config, "largest_minorant: omega must lie in (0, 2)");

  // Red-black ordering keeps each half-sweep order independent.
  std::vector<std::size_t> order;
  order.reserve(grid.interior().size());
  for (int colour = 0; colour < 2; ++colour)
    for (std::size_t p : grid.interior())
      if ((grid.col(p) + grid.row(p)) % 2 == colour) order.push_back(p);

  const double target_violation = 0.1 * opt.subharmonic_slack;
  for (long it = 1;; ++it) {
    double maxup = 0;
    for (std::size_t p : order) {
      const double m = detail::neighbour_mean(s.u, p, n);
      const double nu = std::min(s.obstacle[p], s.u[p] + omega * (m - s.u[p]));
      const double d = nu - s.u[p];
      if (d > 0) s.monotone = false;
      maxup = std::max(maxup, std::abs(d));
      s.u[p] = nu;
    }
    s.iterations = it;
    s.last_update = maxup;
    if (maxup < opt.tol) {
      double viol = 0;
      for (std::size_t p : grid.interior()) viol = std::max(viol, s.u[p] - detail::neighbour_mean(s.u, p, n));
      if (viol <= target_violation) break;
    }
    if (it >= opt.max_iter) {
      detail::audit(s, opt.tol);
      fail(ErrorKind::Numeric, "largest_minorant: no convergence after " + std::to_string(it) +
                                   " sweeps, last update " + std::to_string(maxup) + ", residual " +
                                   std::to_string(s.complementarity));
    }
  }
  detail::audit(s, opt.tol);
  return s;
}

// Mean of grid values over nodes with |zeta| <= r.
inline double disc_average(const DiscGrid& g, const std::vector<double>& v, double r) {
  double s = 0;
  long c = 0;
  for (std::size_t p = 0; p < v.size(); ++p) {
    if (!g.in_disc(p)) continue;
    double x = g.x(g.col(p)), y = g.y(g.row(p));
    if (x * x + y * y <= r * r * (1 + 1e-12)) {
      s += v[p];
      ++c;
    }
  }
  return c ? s / c : 0.0;
}

// (1/3) c (Im zeta)^3
inline Obstacle cubic_obstacle(double c) {
  return [c](double, double y) { return c * y * y * y / 3.0; };
}
// |zeta|^2 Im(zeta^3) + harmonic * (1/3) Im(zeta^3)
inline Obstacle appendix_obstacle(double harmonic = 0.0) {
  return [harmonic](double x, double y) {
    const double im3 = 3 * x * x * y - y * y * y;
    return (x * x + y * y) * im3 + harmonic * im3 / 3.0;
  };
}
inline Obstacle harmonic_obstacle() {
  return [](double x, double y) { return (3 * x * x * y - y * y * y) / 3.0; };
}

struct ScalingRow {
  double delta;
  int n;
  double u0, ratio;  // ratio = u0 / delta^degree
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  double spread = 0;  // (max - min) / |mean| of the ratios
};

// Homogeneous obstacle of the given degree on D(0, delta * base_radius) at fixed spacing.
inline ScalingTable scaling_check(const Obstacle& f, int degree, double base_radius, int n_unit,
                                  const std::vector<double>& deltas, const MinorantOptions& opt = {}) {
  ScalingTable t;
  double lo = 1e300, hi = -1e300, mean = 0;
  for (double d : deltas) {
    const double cells = d * (n_unit - 1);
    const int nd = int(std::lround(cells)) + 1;
    if (std::abs(cells - std::round(cells)) > 1e-9 || nd % 2 == 0 || nd < 5)
      fail(ErrorKind::Config, "scaling_check: delta " + std::to_string(d) + " does not give an odd grid at fixed spacing");
    auto s = largest_minorant(f, DiscGrid::make(d * base_radius, nd), opt);
    ScalingRow r{d, nd, s.u0(), s.u0() / std::pow(d, degree)};
    t.rows.push_back(r);
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
    mean += r.ratio / deltas.size();
  }
  t.spread = (hi - lo) / std::abs(mean);
  return t;
}

struct TwoGrid {
  int n_coarse, n_fine;
  double u0_coarse, u0_fine, rel_diff, extrapolated;
  long iterations_fine;
};

// Solves at n and 2n - 1; extrapolation assumes first-order error from the stair-step boundary.
inline TwoGrid two_grid(const Obstacle& f, double radius, int n_coarse, const MinorantOptions& opt = {}) {
  TwoGrid t;
  t.n_coarse = n_coarse;
  t.n_fine = 2 * n_coarse - 1;
  auto c = largest_minorant(f, DiscGrid::make(radius, t.n_coarse), opt);
  auto fi = largest_minorant(f, DiscGrid::make(radius, t.n_fine), opt);
  t.u0_coarse = c.u0();
  t.u0_fine = fi.u0();
  t.rel_diff = std::abs(t.u0_fine - t.u0_coarse) / std::abs(t.u0_fine);
  t.extrapolated = 2 * t.u0_fine - t.u0_coarse;
  t.iterations_fine = fi.iterations;
  return t;
}

// Psi(x2) = inf over |x1| < radius of the weight Phi(x1, x2), x2 = x + i y.
class InfWeightObstacle {
 public:
  InfWeightObstacle(const WeightFunction& W, double radius, int radial = 6, int angular = 16)
      : W_(W), radius_(radius), radial_(radial), angular_(angular) {
    if (std::sqrt(2.0) * radius > W.trust_radius())
      fail(ErrorKind::Config, "kash_check: disc of radius " + std::to_string(radius) + " leaves the weight trust region");
  }

  double operator()(double x, double y) const {
    const cplx x2(x, y);
    auto phi = [&](cplx x1) {
      if (std::abs(x1) >= radius_) x1 *= radius_ * (1 - 1e-12) / std::abs(x1);
      return W_({x1, x2}).phi_value;
    };
    cplx best = std::clamp(-y, -radius_ * 0.999, radius_ * 0.999);
    double fb = phi(best);
    for (int a = 1; a <= radial_; ++a)
      for (int b = 0; b < angular_; ++b) {
        cplx x1 = std::polar(radius_ * a / (radial_ + 0.5), 2 * pi * b / angular_);
        double v = phi(x1);
        if (v < fb) fb = v, best = x1;
      }
    // Compass search from the best sample.
    double step = radius_ / (radial_ + 0.5);
    const cplx dirs[4] = {1.0, I, -1.0, -I};
    while (step > 1e-9 * radius_) {
      bool moved = false;
      for (cplx d : dirs) {
        cplx c = best + step * d;
        if (std::abs(c) >= radius_) continue;
        double v = phi(c);
        if (v < fb) {
          fb = v;
          best = c;
          moved = true;
          break;
        }
      }
      if (!moved) step *= 0.5;
    }
    return fb;
  }

 private:
  WeightFunction W_;
  double radius_;
  int radial_, angular_;
};

struct KashResult {
  double minorant_at_0 = 0;
  double obstacle_at_0 = 0;
  bool negative = false;
  double margin = 0;  // -minorant_at_0
  MinorantState state;
};

inline KashResult kash_check(const Obstacle& psi, const DiscGrid& grid, const MinorantOptions& opt = {}) {
  KashResult k;
  k.state = largest_minorant(psi, grid, opt);
  k.minorant_at_0 = k.state.u0();
  k.obstacle_at_0 = k.state.obstacle0();
  k.margin = -k.minorant_at_0;
  k.negative = k.minorant_at_0 < 0;
  return k;
}

// Model weight with c and mu, Psi_delta on D(0, 2 delta r0).
inline KashResult kash_check_model(double c, double mu, double delta, double r0, int n, unsigned threads = 1,
                                   int degree = 8, const MinorantOptions& opt = {}) {
  CSeries Q = model_normal_form(c, degree) + default_remainder(degree);
  RescaledSymbol rs = rescale_symbol(Q, mu);
  CSeries phi = solve_eikonal_series(rs.q_mu, model_initial_phase(degree), degree);
  WeightFunction W(phi);
  const double radius = 2 * delta * r0;
  InfWeightObstacle psi(W, radius);
  DiscGrid g = DiscGrid::make(radius, n);
  // Sample once: the weight evaluation dominates and the obstacle is reused by every sweep.
  std::vector<double> vals(std::size_t(n) * n, 0.0);
  parallel_for(vals.size(), threads, [&](std::size_t p) {
    if (g.in_disc(p)) vals[p] = psi(g.x(g.col(p)), g.y(g.row(p)));
  });
  Obstacle table = [g, vals](double x, double y) {
    const int i = int(std::lround((x + g.radius()) / g.h())), j = int(std::lround((y + g.radius()) / g.h()));
    return vals[g.index(i, j)];
  };
  MinorantOptions o = opt;
  o.warm_start = false;  // the tabulated obstacle lives on this grid only
  return kash_check(table, g, o);
}

}  // namespace tbglab
