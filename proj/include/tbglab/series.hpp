#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tbglab/core.hpp"
#include "tbglab/gaussian_rational.hpp"

namespace tbglab {

template <class T>
struct CoeffTraits;

template <>
struct CoeffTraits<cplx> {
  static bool is_zero(const cplx& v) { return v == cplx(0.0); }
  static cplx conj(const cplx& v) { return std::conj(v); }
  static cplx to_cplx(const cplx& v) { return v; }
  static cplx from_long(long v) { return cplx(double(v)); }
  static double magnitude(const cplx& v) { return std::abs(v); }
};

template <>
struct CoeffTraits<GaussianRational> {
  static bool is_zero(const GaussianRational& v) { return v.is_zero(); }
  static GaussianRational conj(const GaussianRational& v) { return v.conj(); }
  static cplx to_cplx(const GaussianRational& v) { return v.to_cplx(); }
  static GaussianRational from_long(long v) { return GaussianRational(v); }
  static double magnitude(const GaussianRational& v) { return std::abs(v.to_cplx()); }
};

inline constexpr int max_series_vars = 8;
using Exponents = std::array<int, max_series_vars>;

// Exponents packed one byte per variable.
inline std::uint64_t pack_exponents(const Exponents& e) {
  std::uint64_t k = 0;
  for (int i = max_series_vars - 1; i >= 0; --i) {
    if (e[i] < 0 || e[i] > 255) fail(ErrorKind::Precondition, "series: exponent out of range");
    k = (k << 8) | std::uint64_t(e[i]);
  }
  return k;
}
inline Exponents unpack_exponents(std::uint64_t k) {
  Exponents e{};
  for (int i = 0; i < max_series_vars; ++i, k >>= 8) e[i] = int(k & 0xff);
  return e;
}
inline int key_degree(std::uint64_t k) {
  int d = 0;
  for (int i = 0; i < max_series_vars; ++i, k >>= 8) d += int(k & 0xff);
  return d;
}
inline int key_exponent(std::uint64_t k, int var) { return int((k >> (8 * var)) & 0xff); }

// Multivariate polynomial in `nvars` variables, either a truncated power series (terms above
// max_degree are dropped) or an exact polynomial (exceeding max_degree is an error).
template <class T>
class Series {
 public:
  enum class Mode { Truncate, Exact };
  using Traits = CoeffTraits<T>;

  Series() = default;
  Series(int nvars, int max_degree, Mode mode = Mode::Truncate) : nvars_(nvars), maxdeg_(max_degree), mode_(mode) {
    require(nvars >= 1 && nvars <= max_series_vars, "Series: variable count must be in [1, 8]");
    require(max_degree >= 0, "Series: max_degree must be nonnegative");
  }

  static Series constant(int nvars, int max_degree, const T& v, Mode mode = Mode::Truncate) {
    Series s(nvars, max_degree, mode);
    s.add_term(Exponents{}, v);
    return s;
  }
  static Series variable(int nvars, int max_degree, int var, Mode mode = Mode::Truncate) {
    require(var >= 0 && var < nvars, "Series: variable index out of range");
    Series s(nvars, max_degree, mode);
    Exponents e{};
    e[var] = 1;
    s.add_term(e, Traits::from_long(1));
    return s;
  }
  static Series monomial(int nvars, int max_degree, const Exponents& e, const T& v, Mode mode = Mode::Truncate) {
    Series s(nvars, max_degree, mode);
    s.add_term(e, v);
    return s;
  }

  int nvars() const { return nvars_; }
  int max_degree() const { return maxdeg_; }
  Mode mode() const { return mode_; }
  const std::map<std::uint64_t, T>& terms() const { return c_; }
  std::size_t size() const { return c_.size(); }
  bool is_zero() const { return c_.empty(); }

  T coeff(const Exponents& e) const {
    auto it = c_.find(pack_exponents(e));
    return it == c_.end() ? T{} : it->second;
  }
  T coeff(std::initializer_list<int> e) const { return coeff(exps(e)); }

  static Exponents exps(std::initializer_list<int> e) {
    Exponents x{};
    int i = 0;
    for (int v : e) x[i++] = v;
    return x;
  }

  void add_term(const Exponents& e, const T& v) { add_key(pack_exponents(e), v); }

  void add_key(std::uint64_t k, const T& v) {
    if (Traits::is_zero(v)) return;
    if (key_degree(k) > maxdeg_) {
      if (mode_ == Mode::Exact)
        fail(ErrorKind::Numeric, "Series: degree cap " + std::to_string(maxdeg_) + " exceeded by term " + term_name(k));
      return;
    }
    auto [it, inserted] = c_.try_emplace(k, v);
    if (!inserted) {
      it->second += v;
      if (Traits::is_zero(it->second)) c_.erase(it);
    }
  }

  int min_degree() const {
    int d = 1 << 20;
    for (const auto& [k, v] : c_) d = std::min(d, key_degree(k));
    return d;
  }
  int degree() const {
    int d = -1;
    for (const auto& [k, v] : c_) d = std::max(d, key_degree(k));
    return d;
  }
  T constant_term() const {
    auto it = c_.find(0);
    return it == c_.end() ? T{} : it->second;
  }

  Series homogeneous_part(int d) const {
    Series s(nvars_, maxdeg_, mode_);
    for (const auto& [k, v] : c_)
      if (key_degree(k) == d) s.c_.emplace(k, v);
    return s;
  }
  Series truncated(int d) const {
    Series s(nvars_, std::min(d, maxdeg_), mode_);
    for (const auto& [k, v] : c_)
      if (key_degree(k) <= d) s.c_.emplace(k, v);
    return s;
  }
  Series with_max_degree(int d) const {
    Series s(nvars_, d, mode_);
    for (const auto& [k, v] : c_) s.add_key(k, v);
    return s;
  }

  Series& operator+=(const Series& o) {
    check_compatible(o);
    for (const auto& [k, v] : o.c_) add_key(k, v);
    return *this;
  }
  Series& operator-=(const Series& o) {
    check_compatible(o);
    for (const auto& [k, v] : o.c_) add_key(k, -v);
    return *this;
  }
  Series& operator*=(const T& s) {
    if (Traits::is_zero(s)) {
      c_.clear();
      return *this;
    }
    for (auto& [k, v] : c_) v *= s;
    return *this;
  }
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator*(Series a, const T& s) { return a *= s; }
  friend Series operator*(const T& s, Series a) { return a *= s; }
  Series operator-() const {
    Series r = *this;
    for (auto& [k, v] : r.c_) v = -v;
    return r;
  }

  friend Series operator*(const Series& a, const Series& b) {
    a.check_compatible(b);
    Series r(a.nvars_, std::min(a.maxdeg_, b.maxdeg_), a.mode_);
    if (a.c_.empty() || b.c_.empty()) return r;
    std::vector<std::pair<std::uint64_t, int>> bk;
    bk.reserve(b.c_.size());
    for (const auto& [k, v] : b.c_) bk.emplace_back(k, key_degree(k));
    for (const auto& [ka, va] : a.c_) {
      const int da = key_degree(ka);
      auto itb = b.c_.begin();
      for (std::size_t j = 0; j < bk.size(); ++j, ++itb) {
        if (da + bk[j].second > r.maxdeg_) {
          if (r.mode_ == Mode::Exact)
            fail(ErrorKind::Numeric, "Series: degree cap " + std::to_string(r.maxdeg_) + " exceeded by product term " +
                                         a.term_name(ka + bk[j].first));
          continue;
        }
        // Packed exponents add bytewise without carry while every exponent stays below 256.
        r.add_key(ka + bk[j].first, va * itb->second);
      }
    }
    return r;
  }

  Series pow(int n) const {
    require(n >= 0, "Series::pow: negative exponent");
    Series r = constant(nvars_, maxdeg_, Traits::from_long(1), mode_);
    for (int i = 0; i < n; ++i) r = r * *this;
    return r;
  }

  Series derivative(int var) const {
    require(var >= 0 && var < nvars_, "Series::derivative: variable index out of range");
    Series r(nvars_, maxdeg_, mode_);
    for (const auto& [k, v] : c_) {
      int e = key_exponent(k, var);
      if (e == 0) continue;
      r.c_.emplace(k - (std::uint64_t(1) << (8 * var)), v * Traits::from_long(e));
    }
    return r;
  }

  // Integral from 0 in one variable.
  Series antiderivative(int var) const {
    require(var >= 0 && var < nvars_, "Series::antiderivative: variable index out of range");
    Series r(nvars_, maxdeg_, mode_);
    for (const auto& [k, v] : c_) {
      int e = key_exponent(k, var);
      T nv = v;
      nv /= Traits::from_long(e + 1);
      r.add_key(k + (std::uint64_t(1) << (8 * var)), nv);
    }
    return r;
  }

  // Coefficientwise conjugation followed by a variable permutation: variable i becomes perm[i].
  Series conj_permuted(const std::vector<int>& perm) const {
    Series r(nvars_, maxdeg_, mode_);
    for (const auto& [k, v] : c_) {
      Exponents e = unpack_exponents(k), f{};
      for (int i = 0; i < nvars_; ++i) f[perm[i]] += e[i];
      r.add_term(f, Traits::conj(v));
    }
    return r;
  }
  Series conj() const {
    Series r = *this;
    for (auto& [k, v] : r.c_) v = Traits::conj(v);
    return r;
  }

  // Substitutes variable i by subs[i]; all subs share a variable count and degree.
  // Truncated series may only be composed with substitutions that have no constant term.
  Series compose(const std::vector<Series>& subs) const {
    require(int(subs.size()) == nvars_, "Series::compose: need one substitution per variable");
    const int nv = subs[0].nvars_;
    int md = subs[0].maxdeg_;
    for (const auto& s : subs) {
      require(s.nvars_ == nv, "Series::compose: substitutions must share a variable count");
      md = std::min(md, s.maxdeg_);
    }
    std::vector<bool> has_const(nvars_), is_monomial(nvars_);
    for (int i = 0; i < nvars_; ++i) {
      has_const[i] = !Traits::is_zero(subs[i].constant_term());
      is_monomial[i] = subs[i].size() == 1 && !has_const[i];
    }
    if (mode_ == Mode::Truncate)
      for (const auto& [k, v] : c_)
        for (int i = 0; i < nvars_; ++i)
          if (key_exponent(k, i) > 0 && has_const[i])
            fail(ErrorKind::Numeric, "Series::compose: substitution for variable " + std::to_string(i) +
                                         " has a constant term; dropped terms beyond " + term_name(k) +
                                         " would leak into lower degrees");
    Series r(nv, md, subs[0].mode_);
    std::vector<std::vector<Series>> powers(nvars_);
    auto power = [&](int i, int e) -> const Series& {
      auto& p = powers[i];
      if (p.empty()) p.push_back(constant(nv, md, Traits::from_long(1), r.mode_));
      while (int(p.size()) <= e) p.push_back(p.back() * subs[i].with_max_degree(md));
      return p[e];
    };
    std::map<std::uint64_t, Series> general_cache;
    for (const auto& [k, v] : c_) {
      std::uint64_t gk = 0;
      Series mono = constant(nv, md, v, r.mode_);
      for (int i = 0; i < nvars_; ++i) {
        int e = key_exponent(k, i);
        if (e == 0) continue;
        if (is_monomial[i])
          mono = mono * power(i, e);
        else
          gk |= std::uint64_t(e) << (8 * i);
      }
      if (gk == 0) {
        r += mono;
        continue;
      }
      auto it = general_cache.find(gk);
      if (it == general_cache.end()) {
        Series g = constant(nv, md, Traits::from_long(1), r.mode_);
        for (int i = 0; i < nvars_; ++i) {
          int e = key_exponent(gk, i);
          if (e > 0) g = g * power(i, e);
        }
        it = general_cache.emplace(gk, std::move(g)).first;
      }
      r += mono * it->second;
    }
    return r;
  }

  // Re-embeds into a larger variable set: variable i goes to slot map[i].
  Series embed(int nvars, const std::vector<int>& map) const {
    Series r(nvars, maxdeg_, mode_);
    for (const auto& [k, v] : c_) {
      Exponents e = unpack_exponents(k), f{};
      for (int i = 0; i < nvars_; ++i) f[map[i]] += e[i];
      r.add_term(f, v);
    }
    return r;
  }

  cplx eval(const std::vector<cplx>& x) const {
    require(int(x.size()) >= nvars_, "Series::eval: point has too few coordinates");
    cplx s = 0;
    std::vector<std::vector<cplx>> pw(nvars_);
    for (const auto& [k, v] : c_) {
      cplx t = Traits::to_cplx(v);
      for (int i = 0; i < nvars_; ++i) {
        int e = key_exponent(k, i);
        if (e == 0) continue;
        auto& p = pw[i];
        if (p.empty()) p.push_back(1.0);
        while (int(p.size()) <= e) p.push_back(p.back() * x[i]);
        t *= p[e];
      }
      s += t;
    }
    return s;
  }

  double max_abs_coeff() const {
    double m = 0;
    for (const auto& [k, v] : c_) m = std::max(m, Traits::magnitude(v));
    return m;
  }

  std::string term_name(std::uint64_t k) const {
    std::ostringstream os;
    Exponents e = unpack_exponents(k);
    os << "(";
    for (int i = 0; i < nvars_; ++i) os << (i ? "," : "") << e[i];
    os << ")";
    return os.str();
  }

 private:
  void check_compatible(const Series& o) const {
    if (o.nvars_ != nvars_) fail(ErrorKind::Precondition, "Series: variable count mismatch");
  }

  int nvars_ = 1;
  int maxdeg_ = 0;
  Mode mode_ = Mode::Truncate;
  std::map<std::uint64_t, T> c_;
};

using CSeries = Series<cplx>;

// Largest coefficient difference between two complex series.
inline double series_distance(const CSeries& a, const CSeries& b) { return (a - b).max_abs_coeff(); }

}  // namespace tbglab
