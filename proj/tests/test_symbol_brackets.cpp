#include <catch_amalgamated.hpp>

#include <random>

#include "tbglab/symbol_brackets.hpp"

using namespace tbglab;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

// Real phase point (x1, x2, xi1, xi2) with zeta = (xi1 - i xi2)/2.
cplx eval_real(const TrigPolySymbol& s, const std::array<double, 4>& r) {
  return s.eval(PhasePoint::from_real(r).z, PhasePoint::from_real(r).zeta);
}

// sum_j d_xi_j a d_x_j b - d_xi_j b d_x_j a by central differences.
cplx fd_bracket(const TrigPolySymbol& a, const TrigPolySymbol& b, std::array<double, 4> r, double h = 1e-5) {
  auto d = [&](const TrigPolySymbol& s, int i) {
    auto p = r, m = r;
    p[i] += h;
    m[i] -= h;
    return (eval_real(s, p) - eval_real(s, m)) / (2 * h);
  };
  return d(a, 2) * d(b, 0) - d(b, 2) * d(a, 0) + d(a, 3) * d(b, 1) - d(b, 3) * d(a, 1);
}

TrigPolySymbol random_symbol(std::mt19937_64& rng, int terms) {
  std::uniform_int_distribution<int> mode(-1, 1), deg(0, 2);
  std::normal_distribution<double> g;
  TrigPolySymbol s;
  for (int t = 0; t < terms; ++t) s.add_term({mode(rng), mode(rng), deg(rng), deg(rng)}, cplx(g(rng), g(rng)));
  return s;
}

PhasePoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
}

double edge_c(double t) { return std::cos(2 * pi * t * sqrt3 / 3); }

}  // namespace

TEST_CASE("q at reference points") {
  const PotentialParams P1{1.0};
  const auto q = build_q(P1);
  CHECK(std::abs(q.eval(zS, 0.0)) < 1e-12);
  for (double t : {0.1, 0.3, 0.7}) {
    cplx v = q.eval(cplx(0, t), 0.0);
    CHECK(std::abs(v + potential_V(cplx(0, t), P1)) < 1e-12);
    CHECK(std::abs(v.imag()) < 1e-12);
  }
  CHECK(std::abs(q.eval(0.0, 1.0) - 4.0) < 1e-12);
  std::mt19937_64 rng(1);
  for (int s = 0; s < 50; ++s) {
    auto p = random_point(rng);
    cplx expect = 4.0 * std::conj(p.zeta) * std::conj(p.zeta) - potential_V(p.z, P1);
    CHECK(rel(q.eval(p.z, p.zeta), expect) < 1e-12);
  }
}

TEST_CASE("conjugate symbol evaluates to the complex conjugate at real points") {
  std::mt19937_64 rng(2);
  auto s = random_symbol(rng, 8);
  for (int k = 0; k < 30; ++k) {
    auto p = random_point(rng);
    CHECK(rel(s.conjugate().eval(p.z, p.zeta), std::conj(s.eval(p.z, p.zeta))) < 1e-12);
  }
}

TEST_CASE("bracket agrees across charts and with finite differences") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_symbol(rng, 6), b = random_symbol(rng, 6);
    auto pb = poisson_bracket(a, b);
    auto pr = poisson_bracket_real(a, b);
    for (int k = 0; k < 5; ++k) {
      auto p = random_point(rng);
      CHECK(rel(pb.eval(p.z, p.zeta), pr.eval(p.z, p.zeta)) < 1e-10);
      CHECK(rel(pb.eval(p.z, p.zeta), fd_bracket(a, b, p.to_real())) < 1e-6);
    }
  }
}

TEST_CASE("canonical pair and antisymmetry") {
  // {zeta, e} = d_z e for e = exp(i<z, p>).
  auto e = TrigPolySymbol::term(1.0, 1, 0, 0, 0);
  auto pb = poisson_bracket(TrigPolySymbol::zeta(), e);
  cplx z(0.3, -0.2);
  CHECK(rel(pb.eval(z, 0.0), 0.5 * I * std::conj(TrigPolySymbol::frequency(1, 0)) * e.eval(z, 0.0)) < 1e-14);
  auto q = build_q();
  CHECK(poisson_bracket(q, q).max_abs_coeff() == 0.0);
  std::mt19937_64 rng(4);
  auto a = random_symbol(rng, 5), b = random_symbol(rng, 5);
  CHECK((poisson_bracket(a, b) + poisson_bracket(b, a)).max_abs_coeff() < 1e-12);
}

TEST_CASE("Jacobi identity on random triples") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_symbol(rng, 4), b = random_symbol(rng, 4), c = random_symbol(rng, 4);
    auto j = poisson_bracket(a, poisson_bracket(b, c)) + poisson_bracket(b, poisson_bracket(c, a)) +
             poisson_bracket(c, poisson_bracket(a, b));
    double scale = 0;
    for (auto* s : {&a, &b, &c}) scale = std::max(scale, s->max_abs_coeff());
    CHECK(j.max_abs_coeff() / std::pow(scale, 3) < 1e-9);
  }
}

TEST_CASE("rotation equivariance of q and of the first bracket") {
  for (double lam : {1.0, lambda_physical}) {
    BracketEngine eng(PotentialParams{lam});
    std::mt19937_64 rng(6);
    for (int s = 0; s < 50; ++s) {
      auto p = random_point(rng);
      auto r = rotate_R(p);
      CHECK(rel(eng.q().eval(r.z, r.zeta), omega * omega * eng.q().eval(p.z, p.zeta)) < 1e-10);
      CHECK(rel(eng.first().eval(r.z, r.zeta), eng.first().eval(p.z, p.zeta)) < 1e-10);
    }
  }
}

TEST_CASE("fiber points lie on the characteristic set") {
  const PotentialParams P{lambda_physical};
  auto q = build_q(P);
  for (cplx z : {cplx(0.1, 0.2), cplx(0.0, 0.7), cplx(-0.4, 0.05)}) {
    auto f = char_fiber(z, P);
    REQUIRE(f.size() == 2);
    for (const auto& p : f) CHECK(std::abs(q.eval(p.z, p.zeta)) < 1e-10 * std::max(1.0, std::abs(potential_V(z, P))));
    CHECK(std::abs(f[0].zeta + f[1].zeta) < 1e-14);
  }
  CHECK(char_fiber(zS, P).size() == 1);
}

TEST_CASE("first bracket matches the closed form at generic points") {
  BracketEngine eng(PotentialParams{1.0});
  for (cplx z : {cplx(0.13, 0.31), cplx(-0.2, 0.45), cplx(0.37, -0.11)}) {
    auto r = eng.bracket_on_char(z);
    CHECK(r.path_mismatch() < 1e-10);
    CHECK(r.classification == PointClass::Pseudomode);
  }
}

TEST_CASE("edge: first bracket vanishes and the triple bracket has the cubic profile") {
  BracketEngine eng(PotentialParams{1.0});
  const double norm = 8 * Kmag * Kmag;
  for (int i = 1; i <= 20; ++i) {
    const double t = 1 / sqrt3 + (sqrt3 / 2 - 1 / sqrt3) * i / 20.0;
    auto r = eng.bracket_on_char(cplx(0, t));
    REQUIRE(r.fiber.size() == 2);
    CHECK(r.max_abs_first() < 1e-9);
    CHECK(r.path_mismatch() < 1e-10);
    CHECK(r.classification == PointClass::HexagonEdge);
    const double c = edge_c(t);
    // Oracle: V(it) real negative and its jet reduce the closed form to -9 (c - 1)^2 (2c + 1).
    const double expect = -9 * (c - 1) * (c - 1) * (2 * c + 1);
    for (auto tr : r.triple) {
      CHECK(std::abs(tr.real() / norm - expect) <= 1e-9 * std::abs(expect));
      CHECK(std::abs(tr.imag()) <= 1e-9 * std::abs(tr.real()));
      CHECK(tr.real() > 0);
    }
    CHECK(rel(r.triple_edge_form, r.triple[0]) < 1e-10);
  }
}

TEST_CASE("positivity on the rotated edges for both signs") {
  BracketEngine eng(PotentialParams{1.0});
  for (int sg : {1, -1})
    for (int k = 0; k < 3; ++k)
      for (int i = 1; i <= 10; ++i) {
        const double t = 1 / sqrt3 + (sqrt3 / 2 - 1 / sqrt3) * i / 10.0;
        // +-(z_S + omega^k (it - z_S)) sweeps the three edges leaving +-z_S.
        const cplx z = double(sg) * (zS + omega_pow(k) * (cplx(0, t) - zS));
        auto r = eng.bracket_on_char(z);
        REQUIRE(r.fiber.size() == 2);
        CHECK(r.max_abs_first() < 1e-9);
        // R* multiplies q by omega^2 and qbar by omega, so the triple bracket picks up omega^5 = omega^2.
        for (auto tr : r.triple) {
          const cplx w = omega_pow(k) * tr;
          CHECK(w.real() > 0);
          CHECK(std::abs(w.imag()) < 1e-8 * std::abs(w));
        }
      }
}

TEST_CASE("triple bracket transforms under a nonvanishing multiplier") {
  BracketEngine eng(PotentialParams{1.0});
  std::mt19937_64 rng(8);
  auto rho = eng.bracket_on_char(cplx(0, 0.7)).fiber[0];
  for (int trial = 0; trial < 5; ++trial) {
    auto a = random_symbol(rng, 5) + TrigPolySymbol::constant(3.0);
    const cplx av = a.eval(rho.z, rho.zeta);
    REQUIRE(std::abs(av) > 1e-3);
    auto aq = a * eng.q();
    auto lhs = poisson_bracket(aq, poisson_bracket(aq, aq.conjugate())).eval(rho.z, rho.zeta);
    auto rhs = std::norm(av) * av * eng.triple().eval(rho.z, rho.zeta);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::abs(rhs));
  }
}

TEST_CASE("corner: short brackets vanish and the fourth one is fixed") {
  BracketEngine eng(PotentialParams{lambda_physical});
  for (int sg : {1, -1}) {
    PhasePoint pt{double(sg) * zS, 0.0};
    for (int len = 0; len < 4; ++len)
      for (int mask = 0; mask < (1 << len); ++mask) {
        std::vector<bool> w(len);
        for (int i = 0; i < len; ++i) w[i] = (mask >> i) & 1;
        CHECK(std::abs(eng.iterated_bracket(w, pt)) / std::pow(pi, 2 + 2 * len) < 1e-6);
      }
  }
  const cplx h4 = eng.iterated_bracket({false, false, false, false}, {zS, 0.0}) / std::pow(8.0, 5);
  const double expect = 128 * std::pow(pi, 10) / 27;
  CHECK(std::abs(h4 - expect) < 1e-6 * expect);
  // Every coefficient of p is quadratic in lambda, and H_p^4 pbar is cubic in them.
  BracketEngine one(PotentialParams{1.0});
  const cplx h1 = one.iterated_bracket({false, false, false, false}, {zS, 0.0}) / std::pow(8.0, 5);
  CHECK(std::abs(h1 * std::pow(lambda_physical, 6) - h4) < 1e-9 * expect);
  CHECK_THROWS_AS(eng.iterated_bracket(std::vector<bool>(6, false), {zS, 0.0}), Error);
}

TEST_CASE("corner: dq is a multiple of dzbar") {
  auto q = build_q(PotentialParams{lambda_physical});
  const double mag = 32.0 / 3.0 * std::pow(pi, 3);
  for (int sg : {1, -1}) {
    const cplx z = double(sg) * zS;
    CHECK(std::abs(q.d_zbar().eval(z, 0.0) - double(sg) * mag * I) < 1e-8 * mag);
    CHECK(std::abs(q.d_z().eval(z, 0.0)) < 1e-8 * mag);
    CHECK(std::abs(q.d_zeta().eval(z, 0.0)) < 1e-8 * mag);
    CHECK(std::abs(q.d_zetabar().eval(z, 0.0)) < 1e-8 * mag);
  }
}

TEST_CASE("corner Taylor data") {
  auto c = corner_taylor();
  CHECK(std::abs(c.a - cplx(0, -4.0 / 3 * std::pow(pi, 3))) < 1e-9 * std::pow(pi, 3));
  CHECK(std::abs(c.b - 8.0 / 9 * std::pow(pi, 4)) < 1e-9 * std::pow(pi, 4));
  CHECK(c.A > 0);
  CHECK(c.B > 0);
}

TEST_CASE("classification") {
  BracketEngine eng(PotentialParams{1.0});
  CHECK(eng.bracket_on_char(zS).classification == PointClass::Corner);
  CHECK(eng.bracket_on_char(cplx(0, 0.7)).classification == PointClass::HexagonEdge);
  CHECK(eng.bracket_on_char(cplx(0.2, 0.1)).classification == PointClass::Pseudomode);
  CHECK(eng.classify_point({cplx(0.2, 0.1), 5.0}) == PointClass::OffCharacteristic);
  CHECK(std::string(class_name(PointClass::HexagonEdge)) == "edge");
}

TEST_CASE("edge scan is thread-count independent") {
  auto a = edge_scan(0.02, 1.1, 37, PotentialParams{1.0}, 1);
  auto b = edge_scan(0.02, 1.1, 37, PotentialParams{1.0}, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].triple_raw == b[i].triple_raw);
    CHECK(a[i].cls == b[i].cls);
  }
  CHECK_THROWS_AS(edge_scan(0, 1, 1), Error);
}
