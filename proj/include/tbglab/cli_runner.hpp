#pragma once

#include <Eigen/Core>
#include <gmp.h>

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tbglab/core.hpp"
#include "tbglab/eikonal_weights.hpp"
#include "tbglab/lattice_potential.hpp"
#include "tbglab/minorant_solver.hpp"
#include "tbglab/spectral_solver.hpp"
#include "tbglab/symbol_brackets.hpp"
#include "tbglab/symbol_calculus.hpp"

namespace tbglab::cli {

inline constexpr const char* tool_version = "tbglab 1.0.0";

enum ExitCode { Pass = 0, NumericFailure = 2, ConfigError = 3 };

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Precondition: return ConfigError;
    case ErrorKind::Numeric:
    case ErrorKind::Io: return NumericFailure;
  }
  return NumericFailure;
}

// ---------------------------------------------------------------------------------------------
// Configuration: typed keys with defaults and ranges, one schema per subcommand.

struct KeySpec {
  enum class Type { Int, Real, Text, RealList };
  std::string name;
  Type type;
  std::string def;
  double lo = -1e300, hi = 1e300;
  std::vector<std::string> choices = {};
};

using Schema = std::vector<KeySpec>;

inline const std::map<std::string, Schema>& schemas() {
  using T = KeySpec::Type;
  static const std::map<std::string, Schema> s = {
      {"symmetry-check", {{"samples", T::Int, "200", 1, 1e6}, {"seed", T::Int, "20240611", 0, 4e9},
                          {"tol", T::Real, "1e-10", 0, 1}, {"lambda", T::Real, "-4.18879020478639098", -1e3, 1e3}}},
      {"bracket-scan", {{"t0", T::Real, "0.02", 0, 10}, {"t1", T::Real, "1.1", 0, 10}, {"points", T::Int, "109", 2, 1e6},
                        {"lambda", T::Real, "1", -1e3, 1e3}, {"tol", T::Real, "1e-9", 0, 1}}},
      {"corner-brackets", {{"lambda", T::Real, "-4.18879020478639098", -1e3, 1e3}, {"tol", T::Real, "1e-6", 0, 1}}},
      {"magic-angles", {{"cutoff", T::Int, "30", 4, 200}, {"alpha-max", T::Real, "12", 0.1, 100},
                        {"k-re", T::Real, "0.6", -100, 100}, {"k-im", T::Real, "0.4", -100, 100},
                        {"shift-step", T::Real, "0.5", 0.01, 10}, {"tol", T::Real, "1e-6", 0, 1}}},
      {"protected-state", {{"alpha", T::Real, "11.345", 0, 100}, {"cutoff", T::Int, "30", 4, 200},
                           {"grid", T::Int, "256", 8, 4096}}},
      {"decay-fit", {{"alphas", T::RealList, "5,7,9,11,13"}, {"cutoff", T::Int, "30", 4, 200},
                     {"grid", T::Int, "256", 8, 4096}, {"hex-margin", T::Real, "0.05", 1e-4, 0.5}}},
      {"eikonal-check", {{"c", T::Real, "1", -100, 100}, {"mu", T::Real, "0.05", 0, 0.99}, {"degree", T::Int, "8", 4, 12},
                         {"points", T::Int, "5", 2, 21}, {"radius", T::Real, "0.1", 1e-6, 0.2}, {"tol", T::Real, "1e-12", 0, 1}}},
      {"corner-eikonal", {{"degree", T::Int, "7", 6, 10}, {"tol", T::Real, "1e-10", 0, 1}}},
      {"minorant", {{"case", T::Text, "cubic", 0, 0, {"cubic", "appendix", "harmonic", "zero", "kash"}},
                    {"grid", T::Int, "401", 5, 4001}, {"delta", T::Real, "1", 1e-6, 10}, {"c", T::Real, "1", -100, 100},
                    {"mu", T::Real, "0.001", 0, 0.99}, {"r0", T::Real, "0.5", 1e-6, 10}, {"tol", T::Real, "1e-10", 1e-16, 1}}},
      {"calculus-props", {{"symbols", T::Int, "50", 1, 10000}, {"hmax", T::Int, "10", 2, 16}, {"seed", T::Int, "1", 0, 4e9},
                          {"tol", T::Real, "1e-12", 0, 1}}},
  };
  return s;
}

inline const std::vector<std::string> common_keys = {"threads"};

class RunConfig {
 public:
  RunConfig(std::string subcommand) : sub_(std::move(subcommand)) {
    auto it = schemas().find(sub_);
    if (it == schemas().end()) fail(ErrorKind::Config, "unknown subcommand '" + sub_ + "'");
    schema_ = &it->second;
    for (const auto& k : *schema_) values_[k.name] = k.def;
    values_["threads"] = "1";
  }

  const std::string& subcommand() const { return sub_; }

  // key = value lines; '#' starts a comment.
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Config, "cannot read config file " + path);
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      auto trim = [](std::string s) {
        const char* ws = " \t\r";
        s.erase(0, s.find_first_not_of(ws));
        auto e = s.find_last_not_of(ws);
        return e == std::string::npos ? std::string() : s.substr(0, e + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) fail(ErrorKind::Config, path + ":" + std::to_string(ln) + ": expected key = value");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  void set(const std::string& key, const std::string& value) {
    const KeySpec* spec = find(key);
    if (!spec && std::find(common_keys.begin(), common_keys.end(), key) == common_keys.end())
      fail(ErrorKind::Config, "unknown key '" + key + "' for subcommand " + sub_);
    if (key == "threads") {
      long t = parse_int(key, value);
      if (t < 1 || t > 256) fail(ErrorKind::Config, "threads must lie in [1, 256]");
    } else {
      validate(*spec, value);
    }
    values_[key] = value;
  }

  bool has(const std::string& key) const { return find(key) != nullptr; }
  long integer(const std::string& key) const { return parse_int(key, get(key)); }
  double real(const std::string& key) const { return parse_real(key, get(key)); }
  const std::string& text(const std::string& key) const { return get(key); }
  std::vector<double> reals(const std::string& key) const {
    std::vector<double> r;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) r.push_back(parse_real(key, item));
    return r;
  }
  unsigned threads() const { return unsigned(integer("threads")); }

  std::string echo() const {
    std::ostringstream os;
    os << "subcommand = " << sub_ << "\n";
    for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
    return os.str();
  }

 private:
  const KeySpec* find(const std::string& key) const {
    for (const auto& k : *schema_)
      if (k.name == key) return &k;
    return nullptr;
  }
  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) fail(ErrorKind::Config, "missing key '" + key + "'");
    return it->second;
  }
  static long parse_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      long r = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      fail(ErrorKind::Config, "key '" + key + "' expects an integer, got '" + v + "'");
    }
  }
  static double parse_real(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      double r = std::stod(v, &pos);
      if (pos != v.size() || !std::isfinite(r)) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      fail(ErrorKind::Config, "key '" + key + "' expects a real number, got '" + v + "'");
    }
  }
  static void range(const KeySpec& s, double x) {
    if (x < s.lo || x > s.hi)
      fail(ErrorKind::Config, "key '" + s.name + "' out of range [" + std::to_string(s.lo) + ", " + std::to_string(s.hi) + "]");
  }
  static void validate(const KeySpec& s, const std::string& v) {
    using T = KeySpec::Type;
    switch (s.type) {
      case T::Int: range(s, double(parse_int(s.name, v))); break;
      case T::Real: range(s, parse_real(s.name, v)); break;
      case T::Text:
        if (!s.choices.empty() && std::find(s.choices.begin(), s.choices.end(), v) == s.choices.end())
          fail(ErrorKind::Config, "key '" + s.name + "' has invalid value '" + v + "'");
        break;
      case T::RealList: {
        std::stringstream ss(v);
        std::string item;
        int n = 0;
        while (std::getline(ss, item, ',')) parse_real(s.name, item), ++n;
        if (n == 0) fail(ErrorKind::Config, "key '" + s.name + "' needs at least one value");
        break;
      }
    }
  }

  std::string sub_;
  const Schema* schema_ = nullptr;
  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------------------------
// Output helpers.

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Output {
 public:
  explicit Output(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) fail(ErrorKind::Io, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }
  const std::filesystem::path& dir() const { return dir_; }

  std::ofstream open(const std::string& name, bool binary = false) const {
    std::ofstream f(dir_ / name, binary ? std::ios::binary : std::ios::out);
    if (!f) fail(ErrorKind::Io, "cannot write " + (dir_ / name).string());
    return f;
  }
  void write(const std::string& name, const std::string& content) const {
    auto f = open(name);
    f << content;
    if (!f) fail(ErrorKind::Io, "write failed for " + name);
  }

 private:
  std::filesystem::path dir_;
};

inline std::string versions_text() {
  std::ostringstream os;
  os << tool_version << "\n";
  os << "eigen " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION << "\n";
  os << "gmp " << gmp_version << "\n";
#if defined(__clang__)
  os << "compiler clang " << __clang_major__ << "." << __clang_minor__ << "\n";
#elif defined(__GNUC__)
  os << "compiler gcc " << __GNUC__ << "." << __GNUC_MINOR__ << "\n";
#endif
  os << "cxx " << __cplusplus << "\n";
  return os.str();
}

// Binary grid: "TBGGRID1", uint32 rows, cols, fields, then for each node (row-major) and each field the
// real and imaginary parts as little-endian IEEE-754 doubles.
inline void write_binary_grid(std::ostream& os, int rows, int cols, const std::vector<const std::vector<cplx>*>& fields) {
  auto put32 = [&](std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 4);
  };
  auto put64 = [&](double d) {
    std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 8);
  };
  os.write("TBGGRID1", 8);
  put32(std::uint32_t(rows));
  put32(std::uint32_t(cols));
  put32(std::uint32_t(fields.size()));
  for (std::size_t p = 0; p < std::size_t(rows) * cols; ++p)
    for (const auto* f : fields) {
      put64((*f)[p].real());
      put64((*f)[p].imag());
    }
}

// ---------------------------------------------------------------------------------------------
// Subcommands. Each returns an exit code and writes its artifacts; `log` receives the summary.

struct Context {
  const RunConfig& cfg;
  const Output& out;
  std::ostream& log;
};

inline int cmd_symmetry(const Context& c) {
  PotentialParams P{c.cfg.real("lambda")};
  auto rep = verify_symmetries(int(c.cfg.integer("samples")), P, unsigned(c.cfg.integer("seed")));
  const double tol = c.cfg.real("tol");
  std::ostringstream csv;
  csv << "identity,max_residual,pass\n";
  bool ok = true;
  for (const auto& e : rep.entries) {
    bool p = e.residual < tol;
    ok = ok && p;
    csv << e.name << "," << num(e.residual) << "," << (p ? "pass" : "fail") << "\n";
  }
  c.out.write("symmetry.csv", csv.str());
  c.log << "symmetry-check " << (ok ? "pass" : "fail") << " identities=" << rep.entries.size() << "\n";
  return ok ? Pass : NumericFailure;
}

inline bool on_edge(double t) { return t > 1.0 / sqrt3 && t <= sqrt3 / 2.0; }

inline int cmd_bracket_scan(const Context& c) {
  PotentialParams P{c.cfg.real("lambda")};
  auto rows = edge_scan(c.cfg.real("t0"), c.cfg.real("t1"), int(c.cfg.integer("points")), P, c.cfg.threads());
  const double tol = c.cfg.real("tol");
  std::ostringstream csv;
  csv << "t,abs_first_plus,abs_first_minus,triple_rescaled,class\n";
  bool ok = true;
  int edge_rows = 0;
  for (const auto& r : rows) {
    bool e = on_edge(r.t);
    if (e) {
      ++edge_rows;
      ok = ok && r.abs_first_plus < tol && r.abs_first_minus < tol;
    }
    csv << num(r.t) << "," << num(r.abs_first_plus) << "," << num(r.abs_first_minus) << "," << num(r.triple_rescaled) << ","
        << class_name(r.cls) << "\n";
  }
  c.out.write("brackets.csv", csv.str());
  c.log << "bracket-scan " << (ok ? "pass" : "fail") << " rows=" << rows.size() << " edge_rows=" << edge_rows << "\n";
  return ok ? Pass : NumericFailure;
}

struct CornerBracketRow {
  int sign;
  std::string word;
  cplx value;
  double normalized;
};

inline std::vector<CornerBracketRow> corner_bracket_rows(const PotentialParams& P) {
  BracketEngine eng(P);
  std::vector<CornerBracketRow> rows;
  for (int sg : {1, -1}) {
    PhasePoint pt{double(sg) * zS, 0.0};
    for (int len = 0; len <= 4; ++len)
      for (int mask = 0; mask < (1 << len); ++mask) {
        std::vector<bool> w(len);
        std::string name;
        for (int i = 0; i < len; ++i) {
          w[i] = (mask >> i) & 1;
          name += w[i] ? "Q" : "q";
        }
        cplx v = eng.iterated_bracket(w, pt);
        rows.push_back({sg, name.empty() ? "-" : name, v, std::abs(v) / std::pow(pi, 2 + 2 * len)});
      }
  }
  return rows;
}

inline int cmd_corner_brackets(const Context& c) {
  PotentialParams P{c.cfg.real("lambda")};
  const double tol = c.cfg.real("tol");
  auto rows = corner_bracket_rows(P);
  std::ostringstream csv;
  csv << "corner,word,re,im,abs_over_pi_power\n";
  bool ok = true;
  cplx h4 = 0;
  for (const auto& r : rows) {
    csv << (r.sign > 0 ? "+zS" : "-zS") << "," << r.word << "," << num(r.value.real()) << "," << num(r.value.imag()) << ","
        << num(r.normalized) << "\n";
    const int len = r.word == "-" ? 0 : int(r.word.size());
    if (len < 4) ok = ok && r.normalized < tol;
    if (r.sign > 0 && r.word == "qqqq") h4 = r.value / std::pow(8.0, 5);
  }
  c.out.write("corner_brackets.csv", csv.str());
  const double expected = 128.0 * std::pow(pi, 10) / 27.0;
  const double rel = std::abs(h4 - expected) / expected;
  ok = ok && rel < 1e-6;
  c.log << "corner-brackets " << (ok ? "pass" : "fail") << " Hp4pbar=" << num(h4.real()) << "+" << num(h4.imag())
        << "i expected=" << num(expected) << " rel=" << num(rel) << "\n";
  return ok ? Pass : NumericFailure;
}

inline int cmd_magic(const Context& c) {
  auto basis = PlaneWaveBasis::make(int(c.cfg.integer("cutoff")));
  MagicOptions opt;
  opt.threads = c.cfg.threads();
  opt.shift_step = c.cfg.real("shift-step");
  opt.kernel_tol = c.cfg.real("tol");
  cplx k(c.cfg.real("k-re"), c.cfg.real("k-im"));
  auto found = find_magic(k, basis, c.cfg.real("alpha-max"), opt);
  std::ostringstream csv;
  csv << "index,alpha,residual,spacing\n";
  double spacing_sum = 0;
  for (std::size_t i = 0; i < found.size(); ++i) {
    double sp = i ? found[i].alpha - found[i - 1].alpha : 0.0;
    spacing_sum += sp;
    csv << i + 1 << "," << num(found[i].alpha) << "," << num(found[i].residual) << "," << (i ? num(sp) : "") << "\n";
  }
  c.out.write("magic.csv", csv.str());
  const double mean = found.size() > 1 ? spacing_sum / double(found.size() - 1) : 0.0;
  c.log << "magic-angles count=" << found.size() << " mean_spacing=" << num(mean) << "\n";
  return Pass;
}

inline int cmd_protected(const Context& c) {
  auto basis = PlaneWaveBasis::make(int(c.cfg.integer("cutoff")));
  const int n = int(c.cfg.integer("grid"));
  double res = 0;
  auto f = protected_state_block0(c.cfg.real("alpha"), basis, n, &res);
  std::ostringstream csv, lg;
  csv << "x1,x2,re_u1,im_u1,re_u2,im_u2,abs_u\n";
  lg << "x1,x2,log10_abs_over_sup\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const std::size_t idx = std::size_t(i) * n + j;
      const cplx z = f.point(i, j);
      csv << num(z.real()) << "," << num(z.imag()) << "," << num(f.u1[idx].real()) << "," << num(f.u1[idx].imag()) << ","
          << num(f.u2[idx].real()) << "," << num(f.u2[idx].imag()) << "," << num(f.abs_u(idx)) << "\n";
      lg << num(z.real()) << "," << num(z.imag()) << "," << num(std::log10(f.abs_u(idx) / f.sup_norm)) << "\n";
    }
  c.out.write("state_grid.csv", csv.str());
  c.out.write("state_logmag.csv", lg.str());
  auto bin = c.out.open("state_grid.bin", true);
  write_binary_grid(bin, n, n, {&f.u1, &f.u2});
  c.log << "protected-state alpha=" << num(c.cfg.real("alpha")) << " residual=" << num(res) << " sup=" << num(f.sup_norm)
        << "\n";
  return Pass;
}

inline int cmd_decay(const Context& c) {
  auto basis = PlaneWaveBasis::make(int(c.cfg.integer("cutoff")));
  auto fit = decay_fit(c.cfg.reals("alphas"), basis, int(c.cfg.integer("grid")), c.cfg.real("hex-margin"), c.cfg.threads());
  std::ostringstream csv;
  csv << "alpha,max_ratio_hex,log_max_ratio\n";
  for (const auto& r : fit.rows) csv << num(r.alpha) << "," << num(r.max_ratio) << "," << num(r.log_max_ratio) << "\n";
  c.out.write("decay.csv", csv.str());
  c.log << "decay-fit slope=" << num(fit.slope) << " intercept=" << num(fit.intercept) << "\n";
  return Pass;
}

inline std::string multi_index(std::uint64_t key, int nvars) {
  std::string s;
  for (int i = 0; i < nvars; ++i) s += (i ? "." : "") + std::to_string(key_exponent(key, i));
  return s;
}

inline void write_coeffs(const Output& out, const std::string& name, const CSeries& s) {
  std::ostringstream csv;
  csv << "multi_index,re,im\n";
  for (const auto& [k, v] : s.terms()) csv << multi_index(k, s.nvars()) << "," << num(v.real()) << "," << num(v.imag()) << "\n";
  out.write(name, csv.str());
}

inline int cmd_eikonal(const Context& c) {
  const double cc = c.cfg.real("c"), mu = c.cfg.real("mu"), tol = c.cfg.real("tol");
  const int D = int(c.cfg.integer("degree"));
  bool ok = true;
  std::ostringstream rep;
  // Model problem (mu = 0) against the closed-form phase.
  CSeries phi0 = solve_eikonal_series(model_normal_form(cc, D), model_initial_phase(D), D);
  const double model_err = series_distance(phi0, exact_model_phase(cc, D));
  ok = ok && model_err < tol;
  rep << "model_phase_mismatch=" << num(model_err) << "\n";
  // Perturbed problem.
  CSeries Q = model_normal_form(cc, D) + default_remainder(D);
  RescaledSymbol rs = rescale_symbol(Q, mu);
  CSeries phi = solve_eikonal_series(rs.q_mu, model_initial_phase(D), D);
  const double eik_res = eikonal_residual(rs.q_mu, phi).max_abs_coeff();
  ok = ok && eik_res < tol;
  rep << "eikonal_residual=" << num(eik_res) << "\n";
  auto H = hessian_blocks(phi);
  Eigen::Matrix2cd yy, xy;
  yy << 2.0 * I, 0, 0, I;
  xy << -2.0 * I, 1, 0, -I;
  const double herr = std::max((H.phi_yy - yy).norm(), (H.phi_xy - xy).norm());
  ok = ok && herr < tol;
  rep << "hessian_mismatch=" << num(herr) << "\n";
  WeightFunction W(phi);
  auto env = weight_taylor_envelope(W, cc, mu, {0.08, 0.04, 0.02, 0.01}, 16);
  for (const auto& e : env) rep << "envelope scale=" << num(e.scale) << " ratio=" << num(e.max_ratio) << "\n";
  write_coeffs(c.out, "phi_coeffs.csv", phi);
  // Weight on a product grid of the four real coordinates.
  const int m = int(c.cfg.integer("points"));
  const double R = c.cfg.real("radius") / std::sqrt(2.0);
  std::ostringstream wg;
  wg << "re_x1,im_x1,re_x2,im_x2,phi\n";
  auto coord = [&](int i) { return m == 1 ? 0.0 : -R + 2 * R * i / (m - 1); };
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int d = 0; d < m; ++d)
        for (int e = 0; e < m; ++e) {
          std::array<cplx, 2> x{cplx(coord(a), coord(b)), cplx(coord(d), coord(e))};
          auto s = W(x);
          wg << num(x[0].real()) << "," << num(x[0].imag()) << "," << num(x[1].real()) << "," << num(x[1].imag()) << ","
             << num(s.phi_value) << "\n";
        }
  c.out.write("weight_grid.csv", wg.str());
  c.out.write("eikonal_report.txt", rep.str());
  c.log << "eikonal-check " << (ok ? "pass" : "fail") << " model_mismatch=" << num(model_err) << " hessian_mismatch=" << num(herr)
        << "\n";
  return ok ? Pass : NumericFailure;
}

inline int cmd_corner_eikonal(const Context& c) {
  const double tol = c.cfg.real("tol");
  auto r = corner_pipeline(int(c.cfg.integer("degree")), std::numeric_limits<double>::infinity());
  std::ostringstream csv;
  csv << "coefficient,expected_re,expected_im,actual_re,actual_im,abs_error\n";
  for (const auto& k : r.checks)
    csv << k.name << "," << num(k.expected.real()) << "," << num(k.expected.imag()) << "," << num(k.actual.real()) << ","
        << num(k.actual.imag()) << "," << num(std::abs(k.expected - k.actual)) << "\n";
  c.out.write("corner_coeffs.csv", csv.str());
  write_coeffs(c.out, "phi_coeffs.csv", r.phi);
  const bool ok = r.max_mismatch() < tol && r.order_violations.empty();
  c.log << "corner-eikonal " << (ok ? "pass" : "fail") << " max_mismatch=" << num(r.max_mismatch())
        << " order_violations=" << r.order_violations.size() << "\n";
  return ok ? Pass : NumericFailure;
}

inline int cmd_minorant(const Context& c) {
  const std::string cs = c.cfg.text("case");
  const int n = int(c.cfg.integer("grid"));
  const double delta = c.cfg.real("delta"), r0 = c.cfg.real("r0"), cc = c.cfg.real("c");
  MinorantOptions opt;
  opt.tol = c.cfg.real("tol");
  MinorantState s;
  if (cs == "kash") {
    s = kash_check_model(cc, c.cfg.real("mu"), delta, r0, n, c.cfg.threads(), 8, opt).state;
  } else {
    Obstacle f;
    double radius = 2 * delta * r0;
    if (cs == "cubic") f = cubic_obstacle(cc);
    if (cs == "appendix") f = appendix_obstacle(1.0), radius = delta;
    if (cs == "harmonic") f = harmonic_obstacle();
    if (cs == "zero") f = [](double, double) { return 0.0; };
    s = largest_minorant(f, DiscGrid::make(radius, n), opt);
  }
  auto csv = c.out.open("minorant.csv");
  csv << "i,j,x,y,obstacle,u\n";
  const auto& g = s.grid;
  for (std::size_t p = 0; p < s.u.size(); ++p)
    if (g.in_disc(p))
      csv << g.col(p) << "," << g.row(p) << "," << num(g.x(g.col(p))) << "," << num(g.y(g.row(p))) << "," << num(s.obstacle[p])
          << "," << num(s.u[p]) << "\n";
  std::ostringstream summary;
  summary << "u0=" << num(s.u0()) << " iters=" << s.iterations << " residual=" << num(s.complementarity) << "\n";
  c.out.write("summary.txt", summary.str());
  c.log << summary.str();
  return Pass;
}

struct PropertyRow {
  std::string name;
  double value;
  bool pass;
};

inline std::vector<PropertyRow> calculus_properties(int symbols, int hmax, unsigned seed, double tol) {
  std::vector<PropertyRow> rows;
  // Antiderivative bound over three rho values.
  int violations = 0;
  double worst = 0;
  for (int s = 0; s < symbols; ++s) {
    auto a = random_exact_symbol(2, hmax, 2, std::min(8, hmax), 3, seed * 1000u + unsigned(s));
    auto fa = ledger(a), fb = ledger(h_antiderivative(a));
    for (double rho : {0.05, 0.1, 0.2}) {
      auto b = antiderivative_bound(fa, fb, rho);
      violations += b.holds() ? 0 : 1;
      worst = std::max(worst, b.lhs / b.rhs);
    }
  }
  rows.push_back({"antiderivative_bound_violations", double(violations), violations == 0});
  rows.push_back({"antiderivative_bound_worst_ratio", worst, worst <= 1});
  // Neumann transport with C = d_1^2 + (1/2) z2 d_2 on a random right-hand side.
  {
    auto v = random_exact_symbol(2, hmax, 0, hmax, 2, seed + 7u, hmax + 8);
    OpMatrix<GaussianRational> C(1, std::vector<DiffOp<GaussianRational>>(1));
    C[0][0].add(CSeries::exps({2, 0}), v.one()).add(CSeries::exps({0, 1}), v.var(1) * GaussianRational::ratio(1, 2));
    auto sol = transport_neumann_solve(C, SymbolVector<GaussianRational>{v}, 0.05);
    rows.push_back({"neumann_residual", sol.report.residual_max, sol.report.residual_max == 0.0});
    rows.push_back({"neumann_contraction", sol.report.contraction, sol.report.contraction < 1});
  }
  // Two-sided inverse of 1 + h x and of a random elliptic symbol.
  {
    ExactSymbol a(2, hmax, 4);
    a.a[0] = a.one();
    a.a[1] = a.var(0);
    auto r = bdmk_invert(a);
    const double res = std::max(r.report.right_residual, r.report.left_residual);
    rows.push_back({"inverse_residual_geometric", res, res < tol});
    auto g = random_exact_symbol(2, hmax, 0, 2, 1, seed + 11u, 3);
    g.a[0] += g.one() * GaussianRational(6);
    auto rg = bdmk_invert(g);
    const double resg = std::max(rg.report.right_residual, rg.report.left_residual);
    rows.push_back({"inverse_residual_random", resg, resg < tol});
  }
  // Commutator leading order against the Poisson bracket, and associativity.
  {
    double worst_c = 0, worst_a = 0;
    for (int s = 0; s < 20; ++s) {
      auto a = random_exact_symbol(2, hmax, 0, 0, 3, seed * 31u + unsigned(s), 12);
      auto b = random_exact_symbol(2, hmax, 0, 0, 3, seed * 37u + unsigned(s), 12);
      auto comm = bdmk_compose(a, b) - bdmk_compose(b, a);
      // {a, b} = a_xi b_x - a_x b_xi
      auto pb = a.a[0].derivative(1) * b.a[0].derivative(0) - a.a[0].derivative(0) * b.a[0].derivative(1);
      auto diff = comm.a[1] - pb * (GaussianRational(0) - GaussianRational::i());
      worst_c = std::max(worst_c, diff.max_abs_coeff());
      if (s < 5) {
        auto c3 = random_exact_symbol(2, hmax, 0, 2, 2, seed * 41u + unsigned(s), 12);
        auto a2 = random_exact_symbol(2, hmax, 0, 2, 2, seed * 43u + unsigned(s), 12);
        auto b2 = random_exact_symbol(2, hmax, 0, 2, 2, seed * 47u + unsigned(s), 12);
        worst_a = std::max(worst_a, (bdmk_compose(bdmk_compose(a2, b2), c3) - bdmk_compose(a2, bdmk_compose(b2, c3))).max_abs_coeff());
      }
    }
    rows.push_back({"commutator_leading_mismatch", worst_c, worst_c < 1e-10});
    rows.push_back({"associativity_mismatch", worst_a, worst_a == 0.0});
  }
  return rows;
}

inline int cmd_calculus(const Context& c) {
  auto rows = calculus_properties(int(c.cfg.integer("symbols")), int(c.cfg.integer("hmax")), unsigned(c.cfg.integer("seed")),
                                  c.cfg.real("tol"));
  std::ostringstream csv;
  csv << "property,value,pass\n";
  bool ok = true;
  for (const auto& r : rows) {
    ok = ok && r.pass;
    csv << r.name << "," << num(r.value) << "," << (r.pass ? "pass" : "fail") << "\n";
  }
  c.out.write("calculus.csv", csv.str());
  c.log << "calculus-props " << (ok ? "pass" : "fail") << " properties=" << rows.size() << "\n";
  return ok ? Pass : NumericFailure;
}

// ---------------------------------------------------------------------------------------------

inline std::filesystem::path default_output_dir(const std::string& sub) {
  const char* env = std::getenv("TBGLAB_OUT");
  std::filesystem::path root = env && *env ? env : "tbglab_out";
  return root / sub;
}

struct Invocation {
  std::string subcommand;
  std::optional<std::string> config_file;
  std::optional<std::string> out;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied after the config file
};

// Runs one subcommand; errors become a machine-readable line on `err` and the matching exit code.
inline int run(const Invocation& inv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  try {
    RunConfig cfg(inv.subcommand);
    if (inv.config_file) cfg.load_file(*inv.config_file);
    for (const auto& [k, v] : inv.overrides) cfg.set(k, v);
    Output out(inv.out ? std::filesystem::path(*inv.out) : default_output_dir(inv.subcommand));
    out.write("config.echo", cfg.echo());
    out.write("versions.txt", versions_text());
    Context ctx{cfg, out, log};
    const std::string& s = inv.subcommand;
    if (s == "symmetry-check") return cmd_symmetry(ctx);
    if (s == "bracket-scan") return cmd_bracket_scan(ctx);
    if (s == "corner-brackets") return cmd_corner_brackets(ctx);
    if (s == "magic-angles") return cmd_magic(ctx);
    if (s == "protected-state") return cmd_protected(ctx);
    if (s == "decay-fit") return cmd_decay(ctx);
    if (s == "eikonal-check") return cmd_eikonal(ctx);
    if (s == "corner-eikonal") return cmd_corner_eikonal(ctx);
    if (s == "minorant") return cmd_minorant(ctx);
    if (s == "calculus-props") return cmd_calculus(ctx);
    fail(ErrorKind::Config, "unknown subcommand '" + s + "'");
  } catch (const Error& e) {
    std::string msg = e.what();
    for (auto& ch : msg)
      if (ch == '"' || ch == '\n') ch = '\'';
    err << "error kind=" << kind_name(e.kind()) << " subcommand=" << inv.subcommand << " message=\"" << msg << "\"\n";
    return exit_code_for(e.kind());
  }
}

inline std::vector<std::string> subcommands() {
  std::vector<std::string> r;
  for (const auto& [k, v] : schemas()) r.push_back(k);
  return r;
}

}  // namespace tbglab::cli
