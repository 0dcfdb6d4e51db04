#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "tbglab/lattice_potential.hpp"

namespace tbglab {

// Finite sum  sum c * exp(i <z, p>) * zeta^a * zetabar^b  with p = K (m + n omega).
class TrigPolySymbol {
 public:
  // (m, n, a, b)
  using Key = std::array<int, 4>;

  TrigPolySymbol() = default;

  static TrigPolySymbol constant(cplx c) { return term(c, 0, 0, 0, 0); }
  static TrigPolySymbol term(cplx c, int m, int n, int a, int b) {
    TrigPolySymbol s;
    s.add_term({m, n, a, b}, c);
    return s;
  }
  static TrigPolySymbol zeta() { return term(1.0, 0, 0, 1, 0); }
  static TrigPolySymbol zetabar() { return term(1.0, 0, 0, 0, 1); }

  static cplx frequency(int m, int n) { return Kmag * (double(m) + double(n) * omega); }

  const std::map<Key, cplx>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  void add_term(const Key& k, cplx c) {
    if (c == cplx(0.0)) return;
    auto [it, inserted] = terms_.emplace(k, c);
    if (!inserted) {
      it->second += c;
      if (it->second == cplx(0.0)) terms_.erase(it);
    }
  }

  TrigPolySymbol operator+(const TrigPolySymbol& o) const {
    TrigPolySymbol r = *this;
    for (const auto& [k, c] : o.terms_) r.add_term(k, c);
    return r;
  }
  TrigPolySymbol operator-(const TrigPolySymbol& o) const { return *this + o * cplx(-1.0); }
  TrigPolySymbol operator*(cplx s) const {
    TrigPolySymbol r;
    if (s == cplx(0.0)) return r;
    for (const auto& [k, c] : terms_) r.terms_.emplace(k, c * s);
    return r;
  }
  TrigPolySymbol operator*(const TrigPolySymbol& o) const {
    TrigPolySymbol r;
    for (const auto& [k1, c1] : terms_)
      for (const auto& [k2, c2] : o.terms_)
        r.add_term({k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2], k1[3] + k2[3]}, c1 * c2);
    return r;
  }

  TrigPolySymbol d_z() const {
    TrigPolySymbol r;
    for (const auto& [k, c] : terms_) r.add_term(k, c * 0.5 * I * std::conj(frequency(k[0], k[1])));
    return r;
  }
  TrigPolySymbol d_zbar() const {
    TrigPolySymbol r;
    for (const auto& [k, c] : terms_) r.add_term(k, c * 0.5 * I * frequency(k[0], k[1]));
    return r;
  }
  TrigPolySymbol d_zeta() const {
    TrigPolySymbol r;
    for (const auto& [k, c] : terms_)
      if (k[2] > 0) r.add_term({k[0], k[1], k[2] - 1, k[3]}, c * double(k[2]));
    return r;
  }
  TrigPolySymbol d_zetabar() const {
    TrigPolySymbol r;
    for (const auto& [k, c] : terms_)
      if (k[3] > 0) r.add_term({k[0], k[1], k[2], k[3] - 1}, c * double(k[3]));
    return r;
  }
  // Real-variable chart: x1 = Re z, x2 = Im z, zeta = (xi1 - i xi2)/2.
  TrigPolySymbol d_x1() const { return d_z() + d_zbar(); }
  TrigPolySymbol d_x2() const { return (d_z() - d_zbar()) * I; }
  TrigPolySymbol d_xi1() const { return (d_zeta() + d_zetabar()) * 0.5; }
  TrigPolySymbol d_xi2() const { return (d_zetabar() - d_zeta()) * (0.5 * I); }

  // The symbol whose values at real phase points are the complex conjugates.
  TrigPolySymbol conjugate() const {
    TrigPolySymbol r;
    for (const auto& [k, c] : terms_) r.add_term({-k[0], -k[1], k[3], k[2]}, std::conj(c));
    return r;
  }

  // Evaluates with independent zeta and zetabar (holomorphic extension in the fiber variables).
  cplx eval(cplx z, cplx zeta, cplx zetabar) const {
    cplx s = 0;
    for (const auto& [k, c] : terms_)
      s += c * std::exp(I * rdot(z, frequency(k[0], k[1]))) * ipow(zeta, k[2]) * ipow(zetabar, k[3]);
    return s;
  }
  cplx eval(cplx z, cplx zeta) const { return eval(z, zeta, std::conj(zeta)); }

  double max_abs_coeff() const {
    double m = 0;
    for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

 private:
  static cplx ipow(cplx x, int e) {
    cplx r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
  }
  std::map<Key, cplx> terms_;
};

inline TrigPolySymbol poisson_bracket(const TrigPolySymbol& a, const TrigPolySymbol& b) {
  return a.d_zeta() * b.d_z() - b.d_zeta() * a.d_z() + a.d_zetabar() * b.d_zbar() - b.d_zetabar() * a.d_zbar();
}

// sum_j d_xi_j a d_x_j b - d_xi_j b d_x_j a, computed through the real chart.
inline TrigPolySymbol poisson_bracket_real(const TrigPolySymbol& a, const TrigPolySymbol& b) {
  return a.d_xi1() * b.d_x1() - b.d_xi1() * a.d_x1() + a.d_xi2() * b.d_x2() - b.d_xi2() * a.d_x2();
}

inline TrigPolySymbol symbol_U(const PotentialParams& P = {}, bool reflected = false) {
  static const int mm[3] = {1, 0, -1}, nn[3] = {0, 1, -1};
  TrigPolySymbol u;
  const double s = reflected ? -1.0 : 1.0;
  for (int l = 0; l < 3; ++l) u = u + TrigPolySymbol::term(P.lambda * I * omega_pow(l), int(s) * mm[l], int(s) * nn[l], 0, 0);
  return u;
}

inline TrigPolySymbol symbol_V(const PotentialParams& P = {}) { return symbol_U(P) * symbol_U(P, true); }

// q = 4 zetabar^2 - V(z).
inline TrigPolySymbol build_q(const PotentialParams& P = {}) {
  return TrigPolySymbol::term(4.0, 0, 0, 0, 2) - symbol_V(P);
}

struct PhasePoint {
  cplx z;
  cplx zeta;

  std::array<double, 4> to_real() const { return {z.real(), z.imag(), 2.0 * zeta.real(), -2.0 * zeta.imag()}; }
  static PhasePoint from_real(const std::array<double, 4>& r) {
    return {cplx(r[0], r[1]), cplx(0.5 * r[2], -0.5 * r[3])};
  }
};

// (z_S + z, zeta) -> (z_S + omega z, conj(omega) zeta).
inline PhasePoint rotate_R(const PhasePoint& p) { return {zS + omega * (p.z - zS), std::conj(omega) * p.zeta}; }

enum class PointClass { OffCharacteristic, Pseudomode, HexagonEdge, Corner };

inline const char* class_name(PointClass c) {
  switch (c) {
    case PointClass::OffCharacteristic: return "off_characteristic";
    case PointClass::Pseudomode: return "pseudomode";
    case PointClass::HexagonEdge: return "edge";
    case PointClass::Corner: return "corner";
  }
  return "?";
}

struct ClassThresholds {
  double corner_V = 1e-9;
  double first = 1e-8;
  double triple = 1e-6;
  double on_char = 1e-10;
};

// Roots of 4 zetabar^2 = V(z). fiber[0] has 2 zetabar = -sqrt(V), fiber[1] has 2 zetabar = +sqrt(V).
inline std::vector<PhasePoint> char_fiber(cplx z, const PotentialParams& P = {}, double degenerate = 1e-9) {
  cplx V = potential_V(z, P);
  if (std::abs(V) < degenerate) return {{z, 0.0}};
  cplx r = std::sqrt(V);
  return {{z, std::conj(-0.5 * r)}, {z, std::conj(0.5 * r)}};
}

struct BracketReport {
  cplx z;
  std::vector<PhasePoint> fiber;
  std::vector<cplx> first;         // {q, qbar} from the symbolic path
  std::vector<cplx> first_closed;  // 8 i s Im(conj(sqrt V) d_zV), 2 zetabar = s sqrt(V)
  std::vector<cplx> triple;        // {q, {q, qbar}} from the symbolic path
  std::vector<cplx> triple_closed; // 64(|zeta|^2 Vzzb - zetabar^2 conj Vzz) + 8(Vz^2 - Vzb conj Vz)
  cplx triple_edge_form = 0;       // -16 V (Vzzb + conj Vzz) + 8(Vz^2 - Vzb conj Vz), valid where V < 0
  cplx V = 0;
  PointClass classification = PointClass::Pseudomode;

  double max_abs_first() const {
    double m = 0;
    for (auto f : first) m = std::max(m, std::abs(f));
    return m;
  }
  double path_mismatch() const {
    double m = 0;
    for (std::size_t i = 0; i < first.size(); ++i) {
      double s1 = std::max({1.0, std::abs(first[i]), std::abs(first_closed[i])});
      double s3 = std::max({1.0, std::abs(triple[i]), std::abs(triple_closed[i])});
      m = std::max(m, std::abs(first[i] - first_closed[i]) / s1);
      m = std::max(m, std::abs(triple[i] - triple_closed[i]) / s3);
    }
    return m;
  }
};

// Holds q, conj(q) and their bracket tower for one coupling; symbols are built once.
class BracketEngine {
 public:
  explicit BracketEngine(const PotentialParams& P = {}) : P_(P) {
    q_ = build_q(P);
    qb_ = q_.conjugate();
    first_ = poisson_bracket(q_, qb_);
    triple_ = poisson_bracket(q_, first_);
  }

  const PotentialParams& params() const { return P_; }
  const TrigPolySymbol& q() const { return q_; }
  const TrigPolySymbol& qbar() const { return qb_; }
  const TrigPolySymbol& first() const { return first_; }
  const TrigPolySymbol& triple() const { return triple_; }

  BracketReport bracket_on_char(cplx z, const ClassThresholds& th = {}) const {
    BracketReport r;
    r.z = z;
    VJet v = derivatives_V(z, P_);
    r.V = v.V;
    r.fiber = char_fiber(z, P_, th.corner_V);
    cplx sq = std::sqrt(v.V);
    for (std::size_t i = 0; i < r.fiber.size(); ++i) {
      const auto& pt = r.fiber[i];
      r.first.push_back(first_.eval(pt.z, pt.zeta));
      r.triple.push_back(triple_.eval(pt.z, pt.zeta));
      double s = r.fiber.size() == 1 ? 0.0 : (i == 0 ? -1.0 : 1.0);
      r.first_closed.push_back(8.0 * I * s * (std::conj(sq) * v.Vz).imag());
      cplx zb = std::conj(pt.zeta);
      r.triple_closed.push_back(64.0 * (std::norm(pt.zeta) * v.Vzzb - zb * zb * std::conj(v.Vzz)) +
                                8.0 * (v.Vz * v.Vz - v.Vzb * std::conj(v.Vz)));
    }
    r.triple_edge_form = -16.0 * v.V * (v.Vzzb + std::conj(v.Vzz)) + 8.0 * (v.Vz * v.Vz - v.Vzb * std::conj(v.Vz));
    double tmax = 0;
    for (auto t : r.triple) tmax = std::max(tmax, std::abs(t));
    if (std::abs(v.V) < th.corner_V)
      r.classification = PointClass::Corner;
    else if (r.max_abs_first() < th.first && tmax > th.triple)
      r.classification = PointClass::HexagonEdge;
    else
      r.classification = PointClass::Pseudomode;
    return r;
  }

  PointClass classify_point(const PhasePoint& p, const ClassThresholds& th = {}) const {
    if (std::abs(q_.eval(p.z, p.zeta)) > th.on_char * std::max(1.0, std::abs(potential_V(p.z, P_))))
      return PointClass::OffCharacteristic;
    return bracket_on_char(p.z, th).classification;
  }

  // word[i] = false for q, true for qbar; returns H_{w_1} ... H_{w_p} qbar as a symbol.
  TrigPolySymbol iterated_symbol(const std::vector<bool>& word) const {
    require(word.size() <= 5, "iterated_bracket: word length must be at most 5");
    TrigPolySymbol s = qb_;
    for (auto it = word.rbegin(); it != word.rend(); ++it) s = poisson_bracket(*it ? qb_ : q_, s);
    return s;
  }
  cplx iterated_bracket(const std::vector<bool>& word, const PhasePoint& pt) const {
    return iterated_symbol(word).eval(pt.z, pt.zeta);
  }

 private:
  PotentialParams P_;
  TrigPolySymbol q_, qb_, first_, triple_;
};

struct CornerTaylor {
  cplx a, b;
  double A, B;
};

// p = q(z_S + z, zeta)/8 = zetabar^2/2 - a zbar - b z^2/2 + O(|z|^3).
inline CornerTaylor corner_taylor(const PotentialParams& P = {}) {
  VJet v = derivatives_V(zS, P);
  CornerTaylor c;
  c.a = v.Vzb / 8.0;
  c.b = v.Vzz / 8.0;
  cplx A = 8.0 * I * c.a;
  c.A = A.real();
  c.B = (4.0 * c.b).real();
  const cplx a0(0.0, -4.0 / 3.0 * std::pow(pi, 3));
  const double b0 = 8.0 / 9.0 * std::pow(pi, 4);
  const double scale = std::pow(P.lambda / lambda_physical, 2);
  if (std::abs(c.a - scale * a0) > 1e-8 * std::abs(a0) * scale || std::abs(c.b - scale * b0) > 1e-8 * b0 * scale ||
      std::abs(A.imag()) > 1e-8 * std::abs(A) || std::abs(v.Vz) > 1e-8 * std::abs(a0) || !(c.A > 0 && c.B > 0))
    fail(ErrorKind::Numeric, "corner_taylor: extracted coefficients disagree with the closed forms");
  return c;
}

struct EdgeRow {
  double t;
  double abs_first_plus;
  double abs_first_minus;
  double triple_raw;
  double triple_rescaled;
  PointClass cls;
};

// Scans z = i t; triple_rescaled = Re{q,{q,qbar}} / (8 K^2 lambda^4).
inline std::vector<EdgeRow> edge_scan(double t0, double t1, int n, const PotentialParams& P = {},
                                      unsigned threads = 1) {
  require(n >= 2, "edge_scan: need at least two samples");
  BracketEngine eng(P);
  std::vector<EdgeRow> rows(n);
  const double norm = 8.0 * Kmag * Kmag * std::pow(P.lambda, 4);
  parallel_for(std::size_t(n), threads, [&](std::size_t i) {
    double t = t0 + (t1 - t0) * double(i) / double(n - 1);
    auto rep = eng.bracket_on_char(cplx(0.0, t));
    EdgeRow r;
    r.t = t;
    r.abs_first_plus = std::abs(rep.first[0]);
    r.abs_first_minus = std::abs(rep.first.size() > 1 ? rep.first[1] : rep.first[0]);
    r.triple_raw = rep.triple[0].real();
    r.triple_rescaled = r.triple_raw / norm;
    r.cls = rep.classification;
    rows[i] = r;
  });
  return rows;
}

}  // namespace tbglab
