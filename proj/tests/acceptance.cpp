// Acceptance run: one PASS/FAIL line per criterion, with the measured quantities underneath.
//
// Criteria 3, 7 and 8 are known to fail as literally stated; the reasons are recorded in the
// decisions ledger and repeated in the detail lines. They still print FAIL. The exit status is
// nonzero only when some other criterion fails, so a regression anywhere else breaks ctest.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>

#include "tbglab/cli_runner.hpp"

using namespace tbglab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  // Records a sub-check and folds it into the verdict.
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  // Diagnostic that does not affect the verdict.
  void note(const std::string& what) { details.push_back("note " + what); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::set<int> known_deviations = {3, 7, 8};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<void(Outcome&)> body;
};

// ---------------------------------------------------------------------------------------------

void symmetry(Outcome& o) {
  auto rep = verify_symmetries(200, PotentialParams{lambda_physical});
  for (const auto& e : rep.entries) o.check(e.residual < 1e-10, fmt("%-28s residual %.2e < 1e-10", e.name.c_str(), e.residual));
}

void factorization(Outcome& o) {
  auto basis = PlaneWaveBasis::make(8);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ua(0.1, 3.0), uk(-1.5, 1.5);
  for (int s = 0; s < 5; ++s) {
    const double a = ua(rng);
    const cplx k(uk(rng), uk(rng));
    CMat lhs(product_DmD(a, k, basis)), rhs(assemble_Pk(a, k, basis).entries);
    const double r = (lhs - rhs).norm() / std::max(lhs.norm(), rhs.norm());
    o.check(r < 1e-8, fmt("alpha %.4f k (%.3f, %.3f): relative Frobenius %.2e < 1e-8", a, k.real(), k.imag(), r));
  }
}

void edge_brackets(Outcome& o) {
  BracketEngine eng(PotentialParams{1.0});
  const double norm = 8 * Kmag * Kmag;
  double first = 0, lit = 0, corrected = 0;
  for (int i = 1; i <= 20; ++i) {
    const double t = 1 / sqrt3 + (sqrt3 / 2 - 1 / sqrt3) * i / 20.0;
    auto r = eng.bracket_on_char(cplx(0, t));
    const double c = std::cos(2 * pi * t * sqrt3 / 3);
    const double stated = (c - 1) * (c - 1) * (2 * c + 1) * (2 * c - 9);
    const double derived = -9 * (c - 1) * (c - 1) * (2 * c + 1);
    first = std::max(first, r.max_abs_first());
    for (auto tr : r.triple) {
      lit = std::max(lit, std::abs(tr - norm * stated) / (norm * std::abs(stated)));
      corrected = std::max(corrected, std::abs(tr - norm * derived) / (norm * std::abs(derived)));
    }
  }
  o.check(first < 1e-9, fmt("max |{q, qbar}| on 20 edge points, both fiber points: %.2e < 1e-9", first));
  o.check(lit < 1e-9, fmt("triple vs 8K^2 (c-1)^2(2c+1)(2c-9): max relative error %.2e < 1e-9", lit));
  o.note(fmt("triple vs 8K^2 * (-9)(c-1)^2(2c+1), the form the potential's jet actually gives: max relative error %.2e",
             corrected));
  // Edge k is the image of edge 0 under R^k, and R* multiplies the triple bracket by omega^2.
  double lit_min = 1e300, cor_min = 1e300, cor_imag = 0;
  for (int sg : {1, -1})
    for (int k = 0; k < 3; ++k)
      for (int i = 1; i <= 20; ++i) {
        const double t = 1 / sqrt3 + (sqrt3 / 2 - 1 / sqrt3) * i / 20.0;
        auto r = eng.bracket_on_char(double(sg) * (zS + omega_pow(k) * (cplx(0, t) - zS)));
        for (auto tr : r.triple) {
          const cplx l = omega_pow(2 * k) * tr, w = omega_pow(k) * tr;
          lit_min = std::min(lit_min, l.real() - std::abs(l.imag()));
          cor_min = std::min(cor_min, w.real());
          cor_imag = std::max(cor_imag, std::abs(w.imag()) / std::abs(w));
        }
      }
  o.check(lit_min > 0, fmt("omega^{2k} triple > 0 on the 6 edge families: min(Re - |Im|) = %.3e", lit_min));
  o.note(fmt("omega^k triple on the same points: min Re %.3e, max |Im|/|.| %.1e", cor_min, cor_imag));
}

void corner_brackets(Outcome& o) {
  BracketEngine eng(PotentialParams{lambda_physical});
  double worst = 0;
  for (int sg : {1, -1}) {
    PhasePoint pt{double(sg) * zS, 0.0};
    for (int len = 0; len < 4; ++len)
      for (int mask = 0; mask < (1 << len); ++mask) {
        std::vector<bool> w(len);
        for (int i = 0; i < len; ++i) w[i] = (mask >> i) & 1;
        worst = std::max(worst, std::abs(eng.iterated_bracket(w, pt)) / std::pow(pi, 2 + 2 * len));
      }
  }
  o.check(worst < 1e-6, fmt("iterated brackets of length < 4 at +-z_S over pi^(2+2len): max %.2e < 1e-6", worst));
  const cplx h4 = eng.iterated_bracket({false, false, false, false}, {zS, 0.0}) / std::pow(8.0, 5);
  const double expect = 128 * std::pow(pi, 10) / 27;
  const double rel = std::abs(h4 - expect) / expect;
  o.check(rel < 1e-6, fmt("H_p^4 pbar(z_S, 0) = %.12g vs 128 pi^10/27 = %.12g: relative %.2e < 1e-6", h4.real(), expect, rel));
  auto q = build_q(PotentialParams{lambda_physical});
  const double mag = 32.0 / 3.0 * std::pow(pi, 3);
  for (int sg : {1, -1}) {
    const cplx z = double(sg) * zS;
    const double err = std::max({std::abs(q.d_zbar().eval(z, 0.0) - double(sg) * mag * I), std::abs(q.d_z().eval(z, 0.0)),
                                 std::abs(q.d_zeta().eval(z, 0.0)), std::abs(q.d_zetabar().eval(z, 0.0))});
    o.check(err < 1e-8, fmt("dq(%cz_S, 0) vs %c(32/3) pi^3 i dzbar: max abs error %.2e < 1e-8", sg > 0 ? '+' : '-',
                            sg > 0 ? '+' : '-', err));
  }
}

void eikonal(Outcome& o) {
  for (double c : {1.0, 0.7}) {
    auto phi = solve_eikonal_series(model_normal_form(c, 8), model_initial_phase(8), 8);
    const double d = series_distance(phi.truncated(6), exact_model_phase(c, 6));
    o.check(d < 1e-12, fmt("c = %.1f: model phase vs closed form through degree 6: %.2e < 1e-12", c, d));
  }
  Eigen::Matrix2cd yy, xy;
  yy << 2.0 * I, 0, 0, I;
  xy << -2.0 * I, 1, 0, -I;
  for (double mu : {0.0, 1e-3}) {
    auto rs = rescale_symbol(model_normal_form(1.0, 8) + default_remainder(8), mu);
    auto phi = solve_eikonal_series(rs.q_mu, model_initial_phase(8), 8);
    WeightFunction W(phi);
    auto h = hessian_blocks(phi);
    const double hm = std::max((h.phi_yy - yy).norm(), (h.phi_xy - xy).norm());
    o.check(hm == 0.0, fmt("mu = %g: Hessian blocks equal the closed forms exactly (mismatch %.1e)", mu, hm));
    for (const auto& r : weight_taylor_envelope(W, 1.0, mu, {0.08, 0.02, 0.005, 0.001}, 24))
      o.check(r.max_ratio < 1.0, fmt("mu = %g scale %.3f: |Phi - three-term Taylor| / (|x1|^4 + mu|x|^3) = %.3f < 1", mu,
                                     r.scale, r.max_ratio));
  }
  auto cr = corner_pipeline(7);
  o.check(cr.max_mismatch() < 1e-10,
          fmt("corner pipeline: %zu listed coefficients of phi, z1(z2), w, Psi: max mismatch %.2e < 1e-10", cr.checks.size(),
              cr.max_mismatch()));
  o.check(cr.order_violations.empty(), fmt("corner phase error classes respected (%zu violations)", cr.order_violations.size()));
}

void minorant(Outcome& o) {
  auto t0 = Clock::now();
  auto tg = two_grid(cubic_obstacle(1.0), 1.0, 201);
  o.check(tg.u0_fine < 0 && tg.u0_coarse < 0,
          fmt("cubic: U(0) = %.6e at n = %d, %.6e at n = %d (both < 0)", tg.u0_coarse, tg.n_coarse, tg.u0_fine, tg.n_fine));
  o.check(tg.rel_diff < 0.05, fmt("cubic: two-grid relative difference %.4f < 0.05 (extrapolated %.6e)", tg.rel_diff,
                                  tg.extrapolated));
  auto sc = scaling_check(cubic_obstacle(1.0), 3, 1.0, 401, {1.0, 0.5, 0.25});
  for (const auto& r : sc.rows) o.note(fmt("delta %.2f n %d U(0) %.6e U(0)/delta^3 %.6e", r.delta, r.n, r.u0, r.ratio));
  o.check(sc.spread < 0.05, fmt("cubic: U_delta(0)/delta^3 spread %.4f < 0.05 over delta in {1, 0.5, 0.25}", sc.spread));
  auto ap = two_grid(appendix_obstacle(0.0), 1.0, 201);
  o.check(ap.u0_coarse < 0 && ap.u0_fine < 0 && ap.rel_diff < 0.05,
          fmt("appendix obstacle: u(0) = %.6e -> %.6e under refinement (relative change %.4f < 0.05)", ap.u0_coarse,
              ap.u0_fine, ap.rel_diff));
  auto k = kash_check_model(1.0, 1e-3, 0.1, 0.5, 41);
  o.check(k.negative && k.minorant_at_0 < 0,
          fmt("eikonal weight (c = 1, mu = 1e-3, delta = 0.1): minorant at 0 = %.3e < 0", k.minorant_at_0));
  o.note(fmt("minorant block runtime %.1f s", std::chrono::duration<double>(Clock::now() - t0).count()));
}

void spectral(Outcome& o) {
  const cplx k = farthest_quasimomentum();
  auto b12 = PlaneWaveBasis::make(12), b14 = PlaneWaveBasis::make(14);
  auto m12 = find_magic(k, b12, 10.0), m14 = find_magic(k, b14, 10.0);
  std::vector<double> good;
  for (const auto& m : m12) {
    const bool ok = m.residual < 1e-6 && m.validated;
    o.note(fmt("N = 12: alpha %.6f residual at both k %.1e, second-k value %.6f%s", m.alpha, m.residual, m.alpha_second_k,
               ok ? "" : " (rejected)"));
    if (ok) good.push_back(m.alpha);
  }
  o.check(good.size() >= 5, fmt("N = 12 finds %zu validated magic alpha below 10 (need >= 5)", good.size()));
  if (good.size() >= 2) {
    const double spacing = (good.back() - good.front()) / double(good.size() - 1);
    o.check(spacing >= 1.45 && spacing <= 1.58, fmt("mean spacing %.4f in [1.45, 1.58]", spacing));
  } else {
    o.check(false, "mean spacing needs at least two values");
  }
  double drift = 0;
  for (std::size_t i = 0; i < std::min(m12.size(), m14.size()); ++i) drift = std::max(drift, std::abs(m12[i].alpha - m14[i].alpha));
  o.check(drift < 1e-4, fmt("N = 12 -> 14 drift of the %zu common values: %.2e < 1e-4", std::min(m12.size(), m14.size()), drift));
  o.note(fmt("N = 14 finds %zu values below 10; the cutoff truncates the higher ones", m14.size()));
  for (double a : {3.0, 5.0, 8.0}) {
    ProtectedOptions opt;
    opt.grid = 16;
    auto r = protected_states(a, b12, opt);
    o.check(r.states.size() == 2 && !r.near_magic, fmt("alpha %.0f: protected kernel dimension %zu (need 2)", a, r.states.size()));
  }
  // The same search at a cutoff that resolves the range, for reference.
  auto m30 = find_magic(k, PlaneWaveBasis::make(30), 10.0);
  std::string list;
  for (const auto& m : m30) list += fmt(" %.4f", m.alpha);
  if (m30.size() >= 2)
    o.note(fmt("N = 30:%s (mean spacing %.4f)", list.c_str(), (m30.back().alpha - m30.front().alpha) / double(m30.size() - 1)));
}

void decay(Outcome& o) {
  auto basis = PlaneWaveBasis::make(30);
  auto fit = decay_fit({5, 7, 9, 11, 13}, basis, 256, 0.05);
  for (const auto& r : fit.rows) o.note(fmt("alpha %4.1f max ratio over the 0.05 hexagon neighbourhood %.3e", r.alpha, r.max_ratio));
  double res = 0;
  auto f = protected_state_block0(11.345, basis, 256, &res);
  auto d = decay_profile(f, 0.05);
  o.check(d.max_ratio <= 1e-2, fmt("alpha 11.345, N = 30: max ratio %.3e <= 1e-2", d.max_ratio));
  o.check(fit.slope <= -0.2, fmt("slope of log(max ratio) vs alpha %.4f <= -0.2", fit.slope));
  o.check(d.global_min_ratio <= 1e-4, fmt("alpha 11.345: interior minimum of |u|/sup %.3e <= 1e-4", d.global_min_ratio));
  o.note(fmt("kernel residual %.1e", res));
}

void calculus(Outcome& o) {
  for (const auto& r : cli::calculus_properties(50, 10, 1, 1e-12)) o.check(r.pass, fmt("%-34s %.3e", r.name.c_str(), r.value));
}

void determinism(Outcome& o) {
  const std::map<std::string, std::vector<std::pair<std::string, std::string>>> configs = {
      {"symmetry-check", {}},
      {"bracket-scan", {}},
      {"corner-brackets", {}},
      {"magic-angles", {{"cutoff", "12"}, {"alpha-max", "4"}}},
      {"protected-state", {{"alpha", "3"}, {"cutoff", "12"}, {"grid", "64"}}},
      {"decay-fit", {{"alphas", "3,4"}, {"cutoff", "12"}, {"grid", "64"}}},
      {"eikonal-check", {}},
      {"corner-eikonal", {}},
      {"minorant", {{"grid", "101"}}},
      {"calculus-props", {{"symbols", "5"}}},
  };
  const fs::path root = fs::temp_directory_path() / ("tbglab_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  auto slurp_dir = [](const fs::path& d) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::directory_iterator(d)) {
      std::ifstream in(e.path(), std::ios::binary);
      m[e.path().filename().string()] = {std::istreambuf_iterator<char>(in), {}};
    }
    return m;
  };
  for (const auto& sub : cli::subcommands()) {
    auto it = configs.find(sub);
    if (it == configs.end()) {
      o.check(false, sub + ": no acceptance configuration");
      continue;
    }
    std::ostringstream log, err;
    const fs::path a = root / (sub + "_a"), b = root / (sub + "_b");
    const int ra = cli::run({sub, std::nullopt, a.string(), it->second}, log, err);
    const int rb = cli::run({sub, std::nullopt, b.string(), it->second}, log, err);
    const auto fa = slurp_dir(a), fb = slurp_dir(b);
    std::size_t bytes = 0;
    for (const auto& [n, s] : fa) bytes += s.size();
    o.check(ra == cli::Pass && rb == cli::Pass && fa == fb,
            fmt("%-16s exit %d/%d, %zu files, %zu bytes, identical: %s", sub.c_str(), ra, rb, fa.size(), bytes, fa == fb ? "yes" : "no"));
  }
  fs::remove_all(root);
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "symmetry suite", 1, symmetry},
      {2, "factorization at N = 8", 30, factorization},
      {3, "edge brackets", 5, edge_brackets},
      {4, "corner brackets", 10, corner_brackets},
      {5, "eikonal phase and weight", 30, eikonal},
      {6, "subharmonic minorant", 300, minorant},
      {7, "magic couplings at N = 12", 600, spectral},
      {8, "protected-state decay", 900, decay},
      {9, "symbol calculus", 60, calculus},
      {10, "determinism", 0, determinism},
  };
  int passed = 0, unexpected = 0;
  std::vector<std::string> summary;
  for (const auto& c : criteria) {
    Outcome o;
    auto t0 = Clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (c.limit_s > 0) o.check(secs < c.limit_s, fmt("runtime %.2f s < %.0f s", secs, c.limit_s));
    const bool known = known_deviations.count(c.id) > 0;
    std::string verdict = o.pass ? "PASS" : "FAIL";
    if (!o.pass && known) verdict += " (known deviation)";
    if (!o.pass && !known) ++unexpected;
    passed += o.pass ? 1 : 0;
    std::string line = fmt("criterion %2d: %s  %s  [%.1f s]", c.id, verdict.c_str(), c.name, secs);
    std::printf("%s\n", line.c_str());
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    summary.push_back(line);
  }
  std::printf("\nsummary: %d of %zu criteria pass\n", passed, criteria.size());
  for (const auto& s : summary) std::printf("  %s\n", s.c_str());
  if (unexpected) std::printf("%d criteria failed outside the known deviations\n", unexpected);
  return unexpected ? 1 : 0;
}
