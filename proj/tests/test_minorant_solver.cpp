#include <catch_amalgamated.hpp>

#include <random>

#include "tbglab/minorant_solver.hpp"

using namespace tbglab;

namespace {

// Smooth random obstacle: a few low Fourier modes.
Obstacle random_obstacle(unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::array<double, 6> a;
  for (auto& v : a) v = g(rng);
  return [a](double x, double y) {
    return a[0] * std::sin(2 * x) + a[1] * std::cos(3 * y) + a[2] * x * y + a[3] * std::sin(x + 2 * y) + a[4] * y +
           a[5] * x * x;
  };
}

double max_abs_diff(const MinorantState& a, const MinorantState& b, double shift = 0) {
  double m = 0;
  for (std::size_t p = 0; p < a.u.size(); ++p)
    if (a.grid.in_disc(p)) m = std::max(m, std::abs(a.u[p] + shift - b.u[p]));
  return m;
}

}  // namespace

TEST_CASE("disc grid geometry") {
  auto g = DiscGrid::make(1.0, 41);
  CHECK(g.h() == Catch::Approx(0.05));
  for (auto p : g.boundary()) {
    double r = std::hypot(g.x(g.col(p)), g.y(g.row(p)));
    CHECK(r <= 1.0 + 1e-12);
    CHECK(r >= 1.0 - std::sqrt(2.0) * g.h());
  }
  for (auto p : g.interior()) CHECK(std::hypot(g.x(g.col(p)), g.y(g.row(p))) < 1.0);
  CHECK(g.kind(g.center()) == DiscGrid::Interior);
  CHECK_THROWS_AS(DiscGrid::make(1.0, 40), Error);
  CHECK_THROWS_AS(DiscGrid::make(-1.0, 41), Error);
}

TEST_CASE("subharmonic and harmonic obstacles are their own minorants") {
  auto g = DiscGrid::make(1.0, 41);
  for (const Obstacle& f : {harmonic_obstacle(), Obstacle([](double x, double y) { return x * x + y * y; }),
                            Obstacle([](double, double) { return 0.0; })}) {
    auto s = largest_minorant(f, g);
    double m = 0;
    for (std::size_t p = 0; p < s.u.size(); ++p)
      if (g.in_disc(p)) m = std::max(m, std::abs(s.u[p] - s.obstacle[p]));
    CHECK(m < 1e-12);
  }
}

TEST_CASE("superharmonic obstacle flattens to its boundary level") {
  // The continuous minorant of -|z|^2 is the harmonic extension of -R^2, the constant -R^2.
  for (int n : {41, 81}) {
    auto s = largest_minorant([](double x, double y) { return -(x * x + y * y); }, DiscGrid::make(1.0, n));
    CHECK(std::abs(s.u0() + 1.0) < 3 * s.grid.h());
  }
}

TEST_CASE("solver invariants: feasibility, subharmonicity and maximality") {
  for (unsigned seed : {1u, 2u, 3u}) {
    auto s = largest_minorant(random_obstacle(seed), DiscGrid::make(1.0, 61));
    CHECK(s.max_obstacle_violation <= 1e-14);
    CHECK(s.max_subharmonic_violation <= 1e-12);
    CHECK(s.maximality_failures == 0);
    CHECK(s.complementarity < 1e-9);
  }
}

TEST_CASE("monotone sweeps are nonincreasing and agree with PSOR") {
  auto g = DiscGrid::make(1.0, 41);
  MinorantOptions mono;
  mono.method = MinorantOptions::Method::Monotone;
  auto a = largest_minorant(cubic_obstacle(1.0), g, mono);
  auto b = largest_minorant(cubic_obstacle(1.0), g);
  CHECK(a.monotone);
  CHECK(a.last_update < 1e-10);
  CHECK(max_abs_diff(a, b) < 1e-8);
}

TEST_CASE("comparison principle on random pairs") {
  auto g = DiscGrid::make(1.0, 41);
  for (unsigned seed : {11u, 12u, 13u}) {
    auto f1 = random_obstacle(seed);
    auto bump = random_obstacle(seed + 100);
    Obstacle f2 = [&](double x, double y) { return f1(x, y) + std::abs(bump(x, y)); };
    auto s1 = largest_minorant(f1, g), s2 = largest_minorant(f2, g);
    for (std::size_t p = 0; p < s1.u.size(); ++p)
      if (g.in_disc(p)) CHECK(s1.u[p] <= s2.u[p] + 1e-9);
  }
}

TEST_CASE("additive constants pass through") {
  auto g = DiscGrid::make(1.0, 41);
  auto f = random_obstacle(21);
  auto a = largest_minorant(f, g);
  auto b = largest_minorant([&](double x, double y) { return f(x, y) + 2.5; }, g);
  CHECK(max_abs_diff(a, b, 2.5) < 1e-9);
}

TEST_CASE("cubic obstacle: strict negativity, submean value and grid convergence") {
  auto s = largest_minorant(cubic_obstacle(1.0), DiscGrid::make(1.0, 101));
  CHECK(s.u0() < 0);
  CHECK(s.obstacle0() == 0.0);
  CHECK(std::abs(disc_average(s.grid, s.obstacle, 0.5)) < 1e-12);
  CHECK(s.u0() < disc_average(s.grid, s.obstacle, 0.5));
  auto t = two_grid(cubic_obstacle(1.0), 1.0, 101);
  CHECK(t.rel_diff < 0.05);
  CHECK(t.u0_fine < 0);
}

TEST_CASE("cubic minorant scales as delta cubed") {
  auto t = scaling_check(cubic_obstacle(1.0), 3, 1.0, 321, {1.0, 0.5, 0.25});
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[2].n == 81);
  CHECK(t.spread < 0.05);
  CHECK_THROWS_AS(scaling_check(cubic_obstacle(1.0), 3, 1.0, 161, {0.33}), Error);
}

TEST_CASE("appendix obstacle has a negative minorant at the origin") {
  auto t = two_grid(appendix_obstacle(1.0), 1.0, 81);
  CHECK(t.u0_coarse < 0);
  CHECK(t.u0_fine < 0);
  CHECK(t.rel_diff < 0.05);
  // The harmonic part does not change the minorant up to adding it back.
  auto g = DiscGrid::make(1.0, 41);
  auto a = largest_minorant(appendix_obstacle(0.0), g), b = largest_minorant(appendix_obstacle(1.0), g);
  for (std::size_t p = 0; p < a.u.size(); ++p)
    if (g.in_disc(p)) CHECK(std::abs(a.u[p] + harmonic_obstacle()(g.x(g.col(p)), g.y(g.row(p))) - b.u[p]) < 1e-9);
}

TEST_CASE("iteration cap is reported") {
  MinorantOptions opt;
  opt.max_iter = 3;
  opt.warm_start = false;
  CHECK_THROWS_AS(largest_minorant(cubic_obstacle(1.0), DiscGrid::make(1.0, 41), opt), Error);
}

TEST_CASE("kash check on the eikonal weight") {
  auto k = kash_check_model(0.7, 1e-3, 0.1, 0.5, 41);
  CHECK(k.negative);
  CHECK(k.minorant_at_0 < 0);
  CHECK(k.margin > 0);
  CHECK(k.state.max_obstacle_violation <= 1e-14);
}
