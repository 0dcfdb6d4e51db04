#pragma once

#include <algorithm>
#include <array>
#include <random>
#include <string>
#include <vector>

#include "tbglab/core.hpp"

namespace tbglab {

// Lambda = omega Z + Z, Gamma = 3 Lambda, Lambda^* = dual_scale * Lambda.
struct LatticeSpec {
  cplx omega = tbglab::omega;
  double K = Kmag;
  std::array<cplx, 2> lambda_basis{tbglab::omega, cplx{1.0, 0.0}};
  int gamma_factor = 3;
  cplx dual_scale{0.0, 4.0 * pi / sqrt3};

  cplx lambda_point(long a, long b) const { return double(a) * lambda_basis[0] + double(b) * lambda_basis[1]; }
  cplx gamma_point(long a, long b) const { return double(gamma_factor) * lambda_point(a, b); }
  // Gamma^* = Lambda^* / 3.
  cplx gamma_dual_point(long a, long b) const { return dual_scale / double(gamma_factor) * lambda_point(a, b); }
};

struct LatticeCheck {
  double omega_cube = 0;      // |omega^3 - 1|
  double omega_sum = 0;       // |1 + omega + omega^2|
  double lambda_pairing = 0;  // distance of <gamma, K> to (2pi/3)Z over sampled gamma in Lambda
  double gamma_pairing = 0;   // distance of <gamma, K> to 2pi Z over sampled gamma in Gamma
  double stacking = 0;        // distance of omega z_S - z_S to Lambda
};

inline double dist_to_multiple(double x, double period) {
  double r = std::remainder(x, period);
  return std::abs(r);
}

// Distance from z to the nearest point of Lambda.
inline double dist_to_lambda(cplx z) {
  // z = a omega + b with a = Im z / Im omega.
  double a = z.imag() / omega.imag();
  double b = z.real() - a * omega.real();
  double best = 1e300;
  for (long da = -1; da <= 1; ++da)
    for (long db = -1; db <= 1; ++db) {
      cplx g = double(std::lround(a) + da) * omega + double(std::lround(b) + db);
      best = std::min(best, std::abs(z - g));
    }
  return best;
}

inline LatticeCheck check_lattice(const LatticeSpec& L = {}) {
  LatticeCheck c;
  c.omega_cube = std::abs(L.omega * L.omega * L.omega - 1.0);
  c.omega_sum = std::abs(1.0 + L.omega + L.omega * L.omega);
  for (long a = -4; a <= 4; ++a)
    for (long b = -4; b <= 4; ++b) {
      c.lambda_pairing = std::max(c.lambda_pairing, dist_to_multiple(rdot(L.lambda_point(a, b), L.K), 2 * pi / 3));
      c.gamma_pairing = std::max(c.gamma_pairing, dist_to_multiple(rdot(L.gamma_point(a, b), L.K), 2 * pi));
    }
  c.stacking = dist_to_lambda(L.omega * zS - zS);
  return c;
}

struct PotentialParams {
  double lambda = lambda_physical;
};

// One Fourier term c * exp(i <z, p>).
struct FourierTerm {
  cplx coeff;
  cplx p;
};

// U(z) = lambda i sum_l omega^l exp(i <z, omega^l K>).
inline std::array<FourierTerm, 3> potential_modes(const PotentialParams& P = {}) {
  std::array<FourierTerm, 3> t;
  for (int l = 0; l < 3; ++l) t[l] = {P.lambda * I * omega_pow(l), omega_pow(l) * Kmag};
  return t;
}

inline cplx potential_U(cplx z, const PotentialParams& P = {}) {
  cplx s = 0;
  for (int l = 0; l < 3; ++l) s += omega_pow(l) * std::exp(I * rdot(z, omega_pow(l) * Kmag));
  return P.lambda * I * s;
}

inline cplx potential_V(cplx z, const PotentialParams& P = {}) { return potential_U(z, P) * potential_U(-z, P); }

struct UJet {
  cplx U, Uz, Uzb, Uzz, Uzzb, Uzbzb;
};

// Closed-form jet; Uzb and Uzz go through U(conj z), Uz through the unweighted exponential sum.
inline UJet derivatives_U(cplx z, const PotentialParams& P = {}) {
  cplx e = 0;
  for (int l = 0; l < 3; ++l) e += std::exp(I * rdot(z, omega_pow(l) * Kmag));
  cplx ez = 0;
  for (int l = 0; l < 3; ++l) ez += std::exp(I * rdot(std::conj(z), omega_pow(l) * Kmag));
  UJet j;
  j.U = potential_U(z, P);
  j.Uz = -0.5 * Kmag * P.lambda * e;
  cplx Ubar = potential_U(std::conj(z), P);
  j.Uzb = 0.5 * I * Kmag * Ubar;
  j.Uzz = -0.25 * Kmag * Kmag * Ubar;
  j.Uzzb = -0.25 * Kmag * Kmag * j.U;
  j.Uzbzb = 0.5 * I * Kmag * (-0.5 * Kmag * P.lambda * ez);
  return j;
}

// Term-by-term differentiation d_z^a d_zb^b of the Fourier sum; independent of the closed forms above.
inline cplx fourier_derivative_U(cplx z, int a, int b, const PotentialParams& P = {}) {
  cplx s = 0;
  for (const auto& t : potential_modes(P)) {
    cplx f = std::pow(0.5 * I * std::conj(t.p), a) * std::pow(0.5 * I * t.p, b);
    s += t.coeff * f * std::exp(I * rdot(z, t.p));
  }
  return s;
}

struct VJet {
  cplx V, Vz, Vzb, Vzz, Vzzb, Vzbzb;
};

// Jet of V(z) = U(z) U(-z) by the product rule.
inline VJet derivatives_V(cplx z, const PotentialParams& P = {}) {
  UJet u = derivatives_U(z, P);
  UJet m = derivatives_U(-z, P);
  // W(z) = U(-z).
  cplx W = m.U, Wz = -m.Uz, Wzb = -m.Uzb, Wzz = m.Uzz, Wzzb = m.Uzzb, Wzbzb = m.Uzbzb;
  VJet v;
  v.V = u.U * W;
  v.Vz = u.Uz * W + u.U * Wz;
  v.Vzb = u.Uzb * W + u.U * Wzb;
  v.Vzz = u.Uzz * W + 2.0 * u.Uz * Wz + u.U * Wzz;
  v.Vzzb = u.Uzzb * W + u.Uz * Wzb + u.Uzb * Wz + u.U * Wzzb;
  v.Vzbzb = u.Uzbzb * W + 2.0 * u.Uzb * Wzb + u.U * Wzbzb;
  return v;
}

struct SymmetryReport {
  struct Entry {
    std::string name;
    double residual;
  };
  std::vector<Entry> entries;
  double tol = 1e-10;

  double max_residual() const {
    double m = 0;
    for (const auto& e : entries) m = std::max(m, e.residual);
    return m;
  }
  bool ok() const { return max_residual() < tol; }
  std::vector<std::string> failing() const {
    std::vector<std::string> f;
    for (const auto& e : entries)
      if (!(e.residual < tol)) f.push_back(e.name);
    return f;
  }
};

// Samples z uniformly in the box |Re z|, |Im z| <= 3 and records the worst residual per identity.
inline SymmetryReport verify_symmetries(int n_samples, const PotentialParams& P = {}, unsigned seed = 20240611u) {
  require(n_samples > 0, "verify_symmetries: n_samples must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-3.0, 3.0);
  const LatticeSpec L;
  std::vector<std::pair<std::string, std::function<double(cplx, double)>>> ids = {
      {"translation_omega",
       [&](cplx z, double) { return std::abs(potential_U(z + omega, P) - std::exp(I * rdot(omega, Kmag)) * potential_U(z, P)); }},
      {"translation_one",
       [&](cplx z, double) { return std::abs(potential_U(z + 1.0, P) - std::exp(I * rdot(1.0, Kmag)) * potential_U(z, P)); }},
      {"gamma_periodic",
       [&](cplx z, double) { return std::abs(potential_U(z + L.gamma_point(1, -1), P) - potential_U(z, P)); }},
      {"rotation_U", [&](cplx z, double) { return std::abs(potential_U(omega * z, P) - omega * potential_U(z, P)); }},
      {"reality_U",
       [&](cplx z, double) { return std::abs(std::conj(potential_U(std::conj(z), P)) + potential_U(-z, P)); }},
      {"reality_V",
       [&](cplx z, double) { return std::abs(std::conj(potential_V(std::conj(z), P)) - potential_V(z, P)); }},
      {"even_V", [&](cplx z, double) { return std::abs(potential_V(-z, P) - potential_V(z, P)); }},
      {"reality_dU",
       [&](cplx z, double) {
         return std::abs(std::conj(derivatives_U(std::conj(z), P).Uz) - derivatives_U(-z, P).Uz);
       }},
      {"reality_dV",
       [&](cplx z, double) {
         return std::abs(std::conj(derivatives_V(std::conj(z), P).Vz) + derivatives_V(-z, P).Vz);
       }},
      {"ddU_zbar",
       [&](cplx z, double) {
         return std::abs(derivatives_U(z, P).Uzb - 0.5 * I * Kmag * potential_U(std::conj(z), P));
       }},
      {"ddU_zz",
       [&](cplx z, double) {
         return std::abs(derivatives_U(z, P).Uzz + 0.25 * Kmag * Kmag * potential_U(std::conj(z), P));
       }},
      {"im_axis_ReVz", [&](cplx, double t) { return std::abs(derivatives_V(cplx(0, t), P).Vz.real()); }},
      {"im_axis_ImV", [&](cplx, double t) { return std::abs(potential_V(cplx(0, t), P).imag()); }},
      {"im_axis_U",
       [&](cplx, double t) {
         return std::abs(potential_U(cplx(0, t), P) -
                         I * P.lambda * (1.0 + 2.0 * std::cos(2 * pi * (t * sqrt3 + 1.0) / 3.0)));
       }},
  };
  SymmetryReport rep;
  for (const auto& [name, f] : ids) {
    std::mt19937_64 local(rng());
    double worst = 0;
    for (int i = 0; i < n_samples; ++i) {
      cplx z(box(local), box(local));
      double t = box(local);
      worst = std::max(worst, f(z, t));
    }
    rep.entries.push_back({name, worst});
  }
  return rep;
}

}  // namespace tbglab
