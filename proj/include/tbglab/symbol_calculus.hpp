#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "tbglab/gaussian_rational.hpp"
#include "tbglab/series.hpp"

namespace tbglab {

inline constexpr int default_hmax = 10;
inline constexpr int default_degree_cap = 12;

// sum_k h^k a_k(z), k = 0..hmax, with polynomial coefficients. Variables are z = (z1, z') for the
// ledger and transport operations and (x_1..x_d, xi_1..xi_d) for the composition law.
template <class T>
struct FormalSymbol {
  using S = Series<T>;
  int nvars = 2;
  int hmax = default_hmax;
  std::vector<S> a;

  FormalSymbol() = default;
  FormalSymbol(int nv, int hm, int cap = default_degree_cap, typename S::Mode mode = S::Mode::Exact)
      : nvars(nv), hmax(hm), a(std::size_t(hm) + 1, S(nv, cap, mode)) {
    require(hm >= 0, "FormalSymbol: hmax must be nonnegative");
  }

  int degree_cap() const { return a[0].max_degree(); }
  S zero() const { return S(nvars, degree_cap(), a[0].mode()); }
  S one() const { return S::constant(nvars, degree_cap(), CoeffTraits<T>::from_long(1), a[0].mode()); }
  S var(int i) const { return S::variable(nvars, degree_cap(), i, a[0].mode()); }

  bool is_zero() const {
    return std::all_of(a.begin(), a.end(), [](const S& s) { return s.is_zero(); });
  }

  FormalSymbol& operator+=(const FormalSymbol& o) {
    for (int k = 0; k <= hmax; ++k) a[k] += o.a[k];
    return *this;
  }
  FormalSymbol& operator-=(const FormalSymbol& o) {
    for (int k = 0; k <= hmax; ++k) a[k] -= o.a[k];
    return *this;
  }
  friend FormalSymbol operator+(FormalSymbol x, const FormalSymbol& y) { return x += y; }
  friend FormalSymbol operator-(FormalSymbol x, const FormalSymbol& y) { return x -= y; }
  friend FormalSymbol operator*(const T& s, FormalSymbol x) {
    for (auto& c : x.a) c *= s;
    return x;
  }

  // Largest coefficient magnitude over all h-orders.
  double max_abs_coeff() const {
    double m = 0;
    for (const auto& c : a) m = std::max(m, c.max_abs_coeff());
    return m;
  }

  FormalSymbol<cplx> to_complex() const {
    FormalSymbol<cplx> r(nvars, hmax, degree_cap(), CSeries::Mode::Truncate);
    for (int k = 0; k <= hmax; ++k)
      for (const auto& [key, v] : a[k].terms()) r.a[k].add_key(key, CoeffTraits<T>::to_cplx(v));
    return r;
  }
};

using ExactSymbol = FormalSymbol<GaussianRational>;
using ComplexSymbol = FormalSymbol<cplx>;

// ---------------------------------------------------------------------------------------------
// Growth ledger f(a,k): sup over sampled t in [0, r] of M(r - t) t^k / k^k, with M(rho) the maximum of
// |a_k| on {|z1| + |z'| = rho}, which bounds the sup over Omega_t by the maximum principle.

struct LedgerOptions {
  double r = 1.0;
  int samples = 256;     // boundary samples per slice
  int t_samples = 64;
  int polish_steps = 200;
  unsigned seed = 11u;
};

namespace detail {

struct BoundaryPoint {
  double s;                  // |z1| = s rho
  std::vector<cplx> dir;     // unit-modulus z1 phase, then unit vector in C^{n-1}
};

inline std::vector<cplx> boundary_coords(const BoundaryPoint& b, int nvars) {
  std::vector<cplx> z(nvars);
  z[0] = b.s * b.dir[0];
  for (int i = 1; i < nvars; ++i) z[i] = (1 - b.s) * b.dir[i];
  return z;
}

inline void normalize(BoundaryPoint& b, int nvars) {
  b.s = std::clamp(b.s, 0.0, 1.0);
  b.dir[0] /= std::abs(b.dir[0]);
  double nn = 0;
  for (int i = 1; i < nvars; ++i) nn += std::norm(b.dir[i]);
  nn = std::sqrt(nn);
  for (int i = 1; i < nvars; ++i) b.dir[i] /= nn;
}

// Homogeneous parts evaluated at unit-boundary points: value at radius rho is sum_d rho^d P_d.
struct BoundaryTable {
  int max_deg = 0;
  std::vector<BoundaryPoint> pts;
  std::vector<std::vector<cplx>> parts;  // parts[j][d]

  double modulus(std::size_t j, double rho) const {
    cplx v = 0, p = 1;
    for (int d = 0; d <= max_deg; ++d, p *= rho) v += p * parts[j][d];
    return std::abs(v);
  }
};

template <class T>
BoundaryTable boundary_table(const Series<T>& f, const std::vector<BoundaryPoint>& pts) {
  BoundaryTable t;
  t.pts = pts;
  t.max_deg = f.is_zero() ? 0 : f.degree();
  t.parts.assign(pts.size(), std::vector<cplx>(t.max_deg + 1, 0.0));
  std::vector<std::uint64_t> keys;
  std::vector<cplx> vals;
  for (const auto& [k, v] : f.terms()) {
    keys.push_back(k);
    vals.push_back(CoeffTraits<T>::to_cplx(v));
  }
  for (std::size_t j = 0; j < pts.size(); ++j) {
    auto z = boundary_coords(pts[j], f.nvars());
    for (std::size_t m = 0; m < keys.size(); ++m) {
      cplx term = vals[m];
      for (int i = 0; i < f.nvars(); ++i)
        for (int e = key_exponent(keys[m], i); e > 0; --e) term *= z[i];
      t.parts[j][key_degree(keys[m])] += term;
    }
  }
  return t;
}

template <class T>
double modulus_at(const Series<T>& f, const BoundaryPoint& b, double rho) {
  auto z = boundary_coords(b, f.nvars());
  for (auto& c : z) c *= rho;
  return std::abs(f.eval(z));
}

}  // namespace detail

inline std::vector<detail::BoundaryPoint> boundary_samples(int nvars, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N;
  std::vector<detail::BoundaryPoint> pts;
  for (int j = 0; j < count; ++j) {
    detail::BoundaryPoint b;
    // Stratified in s so both endpoints of the l1 boundary are represented.
    b.s = count > 1 ? double(j % 17) / 16.0 : 0.5;
    if (nvars == 1) b.s = 1.0;
    b.dir.resize(nvars);
    b.dir[0] = std::polar(1.0, 2 * pi * U(rng));
    for (int i = 1; i < nvars; ++i) b.dir[i] = cplx(N(rng), N(rng));
    if (nvars > 1) detail::normalize(b, nvars);
    pts.push_back(b);
  }
  return pts;
}

template <class T>
double ledger_entry(const Series<T>& ak, int k, const LedgerOptions& opt = {}) {
  if (ak.is_zero()) return 0.0;
  const int nv = ak.nvars();
  auto pts = boundary_samples(nv, opt.samples, opt.seed);
  auto table = detail::boundary_table(ak, pts);
  const double kk = k == 0 ? 1.0 : std::pow(double(k), k);
  auto weight = [&](double t) { return k == 0 ? 1.0 : std::pow(t, k) / kk; };
  double best = -1, best_t = 0;
  std::size_t best_j = 0;
  for (int it = 0; it <= opt.t_samples; ++it) {
    const double t = k == 0 ? 0.0 : opt.r * it / opt.t_samples;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      double v = table.modulus(j, opt.r - t) * weight(t);
      if (v > best) best = v, best_t = t, best_j = j;
    }
    if (k == 0) break;
  }
  // Local hill climb in (t, boundary point) from the best sample.
  std::mt19937_64 rng(opt.seed + 1);
  std::normal_distribution<double> N;
  detail::BoundaryPoint bp = pts[best_j];
  double step = 0.25, tstep = k == 0 ? 0.0 : opt.r / opt.t_samples;
  for (int s = 0; s < opt.polish_steps && step > 1e-9; ++s) {
    detail::BoundaryPoint c = bp;
    if (nv > 1) c.s += step * 0.25 * N(rng);
    c.dir[0] *= std::polar(1.0, step * N(rng));
    for (int i = 1; i < nv; ++i) c.dir[i] += step * cplx(N(rng), N(rng));
    if (nv > 1) detail::normalize(c, nv);
    double t = std::clamp(best_t + tstep * N(rng), 0.0, opt.r);
    double v = detail::modulus_at(ak, c, opt.r - t) * weight(t);
    if (v > best) {
      best = v;
      bp = c;
      best_t = t;
    } else {
      step *= 0.97;
      tstep *= 0.97;
    }
  }
  return best;
}

template <class T>
std::vector<double> ledger(const FormalSymbol<T>& a, const LedgerOptions& opt = {}) {
  std::vector<double> f(a.hmax + 1);
  for (int k = 0; k <= a.hmax; ++k) f[k] = ledger_entry(a.a[k], k, opt);
  return f;
}

struct RhoNorm {
  double value = 0;  // sum_{k <= hmax} f(a,k) rho^k
  double tail = 0;   // bound on the omitted orders from C_est, infinite when C_est rho >= 1
  double c_est = 0;
};

// C with f(a,k) <= C^{k+1} for every recorded k.
inline double ledger_constant(const std::vector<double>& f) {
  double c = 0;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (f[k] > 0) c = std::max(c, std::pow(f[k], 1.0 / double(k + 1)));
  return c;
}

inline RhoNorm rho_norm_from_ledger(const std::vector<double>& f, double rho) {
  if (!(rho > 0)) fail(ErrorKind::Precondition, "rho_norm: rho must be positive");
  RhoNorm r;
  double p = 1;
  for (double v : f) {
    r.value += v * p;
    p *= rho;
  }
  r.c_est = ledger_constant(f);
  const int K = int(f.size()) - 1;
  const double q = r.c_est * rho;
  r.tail = q < 1 ? std::pow(r.c_est, K + 2) * std::pow(rho, K + 1) / (1 - q) : std::numeric_limits<double>::infinity();
  return r;
}

template <class T>
RhoNorm rho_norm(const FormalSymbol<T>& a, double rho, const LedgerOptions& opt = {}) {
  return rho_norm_from_ledger(ledger(a, opt), rho);
}

// ---------------------------------------------------------------------------------------------
// (h d_{z1})^{-1}: b_k = int_0^{z1} a_{k+1}.

template <class T>
FormalSymbol<T> h_antiderivative(const FormalSymbol<T>& a) {
  if (!a.a[0].is_zero() || (a.hmax >= 1 && !a.a[1].is_zero()))
    fail(ErrorKind::Precondition, "h_antiderivative: a_0 and a_1 must vanish");
  FormalSymbol<T> b = a;
  for (auto& c : b.a) c = a.zero();
  for (int k = 1; k < a.hmax; ++k) b.a[k] = a.a[k + 1].antiderivative(0);
  return b;
}

struct AntiderivativeBound {
  double lhs = 0, rhs = 0;       // ||b||_rho and (2e/rho) ||a||_rho
  int termwise_violations = 0;   // k with f(b,k) > 2e f(a,k+1)
  bool holds() const { return lhs <= rhs && termwise_violations == 0; }
};

inline AntiderivativeBound antiderivative_bound(const std::vector<double>& fa, const std::vector<double>& fb, double rho) {
  AntiderivativeBound r;
  r.lhs = rho_norm_from_ledger(fb, rho).value;
  r.rhs = 2 * std::exp(1.0) / rho * rho_norm_from_ledger(fa, rho).value;
  for (std::size_t k = 1; k + 1 < fa.size(); ++k)
    if (fb[k] > 2 * std::exp(1.0) * fa[k + 1]) ++r.termwise_violations;
  return r;
}

// ---------------------------------------------------------------------------------------------
// Second-order holomorphic operators sum_beta c_beta(z) d_z^beta, |beta| <= 2, polynomial c_beta.

template <class T>
struct DiffOp {
  struct Term {
    Exponents beta{};
    Series<T> coeff;
  };
  std::vector<Term> terms;

  static DiffOp zero() { return {}; }
  DiffOp& add(const Exponents& beta, const Series<T>& c) {
    int order = 0;
    for (int e : beta) order += e;
    require(order <= 2, "DiffOp: order above two");
    terms.push_back({beta, c});
    return *this;
  }
  bool empty() const { return terms.empty(); }

  Series<T> apply(const Series<T>& u) const {
    Series<T> r(u.nvars(), u.max_degree(), u.mode());
    for (const auto& t : terms) {
      Series<T> d = u;
      for (int i = 0; i < u.nvars(); ++i)
        for (int e = 0; e < t.beta[i]; ++e) d = d.derivative(i);
      r += t.coeff * d;
    }
    return r;
  }
};

template <class T>
using OpMatrix = std::vector<std::vector<DiffOp<T>>>;
template <class T>
using SymbolVector = std::vector<FormalSymbol<T>>;

// (L a)_j = sum_k (h d_{z1})^{-1} h^2 C_jk a_k, so (L a)_{j,m} = int_0^{z1} sum_k C_jk a_{k,m-1}.
template <class T>
SymbolVector<T> apply_L(const OpMatrix<T>& C, const SymbolVector<T>& a) {
  const std::size_t n = a.size();
  require(C.size() == n, "apply_L: operator matrix does not match the vector length");
  SymbolVector<T> r = a;
  for (std::size_t j = 0; j < n; ++j) {
    require(C[j].size() == n, "apply_L: operator matrix is not square");
    for (auto& c : r[j].a) c = a[j].zero();
    for (int m = 1; m <= a[j].hmax; ++m) {
      Series<T> s = a[j].zero();
      for (std::size_t k = 0; k < n; ++k)
        if (!C[j][k].empty()) s += C[j][k].apply(a[k].a[m - 1]);
      r[j].a[m] = s.antiderivative(0);
    }
  }
  return r;
}

template <class T>
SymbolVector<T> d1_inverse(const SymbolVector<T>& v) {
  SymbolVector<T> r = v;
  for (auto& s : r)
    for (auto& c : s.a) c = c.antiderivative(0);
  return r;
}

struct TransportReport {
  double contraction = 0;  // ||L a||_rho / ||a||_rho
  double rho = 0;
  double residual_max = 0; // largest coefficient of (1 + L) a - d^{-1} v over all orders
};

template <class T>
struct TransportSolution {
  SymbolVector<T> a;
  TransportReport report;
};

template <class T>
double vector_norm(const SymbolVector<T>& a, double rho, const LedgerOptions& opt) {
  double s = 0;
  for (const auto& x : a) s += rho_norm(x, rho, opt).value;
  return s;
}

// (1 + L) a = d_{z1}^{-1} v by the Neumann series; L raises the h-order, so it terminates at hmax.
template <class T>
TransportSolution<T> transport_neumann_solve(const OpMatrix<T>& C, const SymbolVector<T>& v, double rho,
                                             const LedgerOptions& opt = {}) {
  if (!(rho > 0)) fail(ErrorKind::Precondition, "transport_neumann_solve: rho must be positive");
  TransportSolution<T> sol;
  const SymbolVector<T> g = d1_inverse(v);
  SymbolVector<T> a = g;
  const int hmax = g.empty() ? 0 : g[0].hmax;
  for (int m = 1; m <= hmax; ++m) {
    SymbolVector<T> La = apply_L(C, a);
    for (std::size_t j = 0; j < a.size(); ++j) a[j].a[m] = g[j].a[m] - La[j].a[m];
  }
  SymbolVector<T> La = apply_L(C, a);
  double res = 0;
  for (std::size_t j = 0; j < a.size(); ++j) res = std::max(res, (a[j] + La[j] - g[j]).max_abs_coeff());
  sol.report.residual_max = res;
  sol.report.rho = rho;
  const double na = vector_norm(a, rho, opt);
  sol.report.contraction = na > 0 ? vector_norm(La, rho, opt) / na : 0.0;
  if (sol.report.contraction >= 1)
    fail(ErrorKind::Numeric, "transport_neumann_solve: measured contraction " + std::to_string(sol.report.contraction) +
                                 " >= 1 at rho = " + std::to_string(rho) + "; use a smaller rho or r");
  sol.a = std::move(a);
  return sol;
}

// ---------------------------------------------------------------------------------------------
// a # b = sum_alpha (1/alpha!) d_xi^alpha a (h D_x)^alpha b with variables (x_1..x_d, xi_1..xi_d).

template <class T>
T imaginary_unit();
template <>
inline cplx imaginary_unit<cplx>() {
  return I;
}
template <>
inline GaussianRational imaginary_unit<GaussianRational>() {
  return GaussianRational::i();
}

// Orders of a # b; only = -1 computes all of them, otherwise just h^only.
template <class T>
FormalSymbol<T> bdmk_compose(const FormalSymbol<T>& a, const FormalSymbol<T>& b, int only = -1) {
  require(a.nvars == b.nvars && a.nvars % 2 == 0, "bdmk_compose: symbols must share an even variable count");
  require(a.hmax == b.hmax, "bdmk_compose: truncation orders differ");
  const int d = a.nvars / 2, H = a.hmax;
  const T mi = T{} - imaginary_unit<T>();
  FormalSymbol<T> r = a;
  for (auto& c : r.a) c = a.zero();
  // Multi-indices alpha with |alpha| <= H, enumerated recursively.
  std::vector<int> alpha(d, 0);
  auto visit = [&](auto&& self, int pos, int order) -> void {
    if (pos == d) {
      T coef = CoeffTraits<T>::from_long(1);
      long fact = 1;
      for (int i = 0; i < d; ++i)
        for (int e = 1; e <= alpha[i]; ++e) fact *= e;
      for (int j = 0; j < order; ++j) coef *= mi;
      coef /= CoeffTraits<T>::from_long(fact);
      for (int j = 0; j + order <= H; ++j) {
        Series<T> da = a.a[j];
        for (int i = 0; i < d; ++i)
          for (int e = 0; e < alpha[i]; ++e) da = da.derivative(d + i);
        if (da.is_zero()) continue;
        for (int l = 0; j + l + order <= H; ++l) {
          if (only >= 0 && j + l + order != only) continue;
          Series<T> db = b.a[l];
          for (int i = 0; i < d; ++i)
            for (int e = 0; e < alpha[i]; ++e) db = db.derivative(i);
          if (db.is_zero()) continue;
          r.a[j + l + order] += coef * (da * db);
        }
      }
      return;
    }
    for (int e = 0; order + e <= H; ++e) {
      alpha[pos] = e;
      self(self, pos + 1, order + e);
    }
    alpha[pos] = 0;
  };
  visit(visit, 0, 0);
  return r;
}

template <class T>
FormalSymbol<T> unit_symbol(const FormalSymbol<T>& like) {
  FormalSymbol<T> u = like;
  for (auto& c : u.a) c = like.zero();
  u.a[0] = like.one();
  return u;
}

// Power series reciprocal of a polynomial with nonzero constant term, truncated at its degree cap.
template <class T>
Series<T> series_reciprocal(const Series<T>& p) {
  const T c = p.constant_term();
  if (CoeffTraits<T>::is_zero(c)) fail(ErrorKind::Precondition, "series_reciprocal: zero constant term");
  T inv = CoeffTraits<T>::from_long(1);
  inv /= c;
  Series<T> u = (p - Series<T>::constant(p.nvars(), p.max_degree(), c, p.mode())) * inv;
  Series<T> term = Series<T>::constant(p.nvars(), p.max_degree(), CoeffTraits<T>::from_long(1), p.mode());
  Series<T> sum = term;
  for (int j = 1; j <= p.max_degree(); ++j) {
    term = term * u;
    term = -term;
    if (term.is_zero()) break;
    sum += term;
  }
  return sum * inv;
}

struct InverseReport {
  double right_residual = 0;  // max coefficient of a # b - 1 through hmax, valid degrees
  double left_residual = 0;   // same for b # a
  int valid_degree = 0;
};

template <class T>
struct InverseResult {
  FormalSymbol<T> b;
  InverseReport report;
};

// Truncate the valid part: with working degree D, order m of a # b is exact through degree D - m.
template <class T>
double valid_residual(const FormalSymbol<T>& r, int valid) {
  double m = 0;
  for (int k = 0; k <= r.hmax; ++k) m = std::max(m, r.a[k].truncated(valid).max_abs_coeff());
  return m;
}

// Solves a # b = 1 order by order. a_0 must be nonzero on the sampled polydisc of radius r.
template <class T>
InverseResult<T> bdmk_invert(const FormalSymbol<T>& a, double r = 1.0, int samples = 256) {
  const int H = a.hmax;
  // Ellipticity: a_0 nonvanishing on the closed polydisc (distinguished boundary and interior rings).
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double amin = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    std::vector<cplx> z(a.nvars);
    const double rad = r * std::sqrt(double(s % 8 + 1) / 8.0);
    for (auto& c : z) c = std::polar(rad, 2 * pi * U(rng));
    amin = std::min(amin, std::abs(a.a[0].eval(z)));
  }
  amin = std::min(amin, std::abs(a.a[0].eval(std::vector<cplx>(a.nvars, 0.0))));
  if (!(amin > 1e-12)) fail(ErrorKind::Precondition, "bdmk_invert: a_0 vanishes on the polydisc (ellipticity fails)");

  // Work at degree cap + hmax so every order is exact through the cap.
  const int cap = a.degree_cap();
  const int D = cap + H;
  auto to_truncate = [&](const Series<T>& s) {
    Series<T> t(s.nvars(), D, Series<T>::Mode::Truncate);
    for (const auto& [k, v] : s.terms()) t.add_key(k, v);
    return t;
  };
  FormalSymbol<T> A(a.nvars, H, D, Series<T>::Mode::Truncate);
  for (int k = 0; k <= H; ++k) A.a[k] = to_truncate(a.a[k]);
  const Series<T> inv0 = series_reciprocal(A.a[0]);
  FormalSymbol<T> B(a.nvars, H, D, Series<T>::Mode::Truncate);
  B.a[0] = inv0;
  for (int m = 1; m <= H; ++m) {
    // Order m of A # B with B_m = 0, then B_m = -inv0 * that.
    FormalSymbol<T> partial = bdmk_compose(A, B, m);
    B.a[m] = -(inv0 * partial.a[m]);
  }
  InverseResult<T> res;
  res.b = B;
  FormalSymbol<T> one = unit_symbol(A);
  res.report.valid_degree = cap;
  res.report.right_residual = valid_residual(bdmk_compose(A, B) - one, cap);
  res.report.left_residual = valid_residual(bdmk_compose(B, A) - one, cap);
  return res;
}

// ---------------------------------------------------------------------------------------------
// Realization: sum_{k <= floor(1/(e C h))} a_k h^k.

inline int realization_index(double c_est, double h) {
  if (!(c_est > 0) || !(h > 0)) fail(ErrorKind::Precondition, "realization: C_est and h must be positive");
  return int(std::floor(1.0 / (std::exp(1.0) * c_est * h)));
}

template <class T>
CSeries realization(const FormalSymbol<T>& a, double c_est, double h) {
  const int K = std::min(realization_index(c_est, h), a.hmax);
  CSeries r(a.nvars, a.degree_cap());
  double p = 1;
  for (int k = 0; k <= K; ++k, p *= h)
    for (const auto& [key, v] : a.a[k].terms()) r.add_key(key, CoeffTraits<T>::to_cplx(v) * p);
  return r;
}

struct RealizationFit {
  std::vector<double> hs, diffs;
  double exponent = 0;  // c in |a_1 - a_2| ~ exp(-c/h)
};

// Realizations at two ledger constants C1 < C2 (nested domains), compared at a point.
template <class T>
RealizationFit realization_decay_fit(const FormalSymbol<T>& a, double c1, double c2, const std::vector<double>& hs,
                               const std::vector<cplx>& point) {
  RealizationFit f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (double h : hs) {
    double d = std::abs(realization(a, c1, h).eval(point) - realization(a, c2, h).eval(point));
    f.hs.push_back(h);
    f.diffs.push_back(d);
    if (d <= 0) continue;
    const double x = 1.0 / h, y = std::log(d);
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++n;
  }
  if (n < 2) fail(ErrorKind::Numeric, "realization_decay_fit: fewer than two nonzero differences");
  f.exponent = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  return f;
}

// ---------------------------------------------------------------------------------------------

// Random exact symbol: a_k for k in [kmin, kmax] with small rational coefficients.
inline ExactSymbol random_exact_symbol(int nvars, int hmax, int kmin, int kmax, int degree, unsigned seed,
                                       int cap = default_degree_cap) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> num(-4, 4), den(1, 3), pick(0, 2);
  ExactSymbol a(nvars, hmax, cap);
  for (int k = kmin; k <= std::min(kmax, hmax); ++k) {
    std::vector<int> e(nvars, 0);
    auto visit = [&](auto&& self, int pos, int left) -> void {
      if (pos == nvars) {
        if (pick(rng) == 0) return;
        Exponents ex{};
        for (int i = 0; i < nvars; ++i) ex[i] = e[i];
        a.a[k].add_term(ex, GaussianRational(mpq_class(num(rng), den(rng)), mpq_class(num(rng), den(rng))));
        return;
      }
      for (int v = 0; v <= left; ++v) {
        e[pos] = v;
        self(self, pos + 1, left - v);
      }
      e[pos] = 0;
    };
    visit(visit, 0, degree);
  }
  return a;
}

}  // namespace tbglab
