#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "tbglab/lattice_potential.hpp"

namespace tbglab {

using SpMat = Eigen::SparseMatrix<cplx>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Generator of Gamma^*: every mode is g (m + n omega).
inline const cplx gamma_dual_gen = cplx(0.0, 4.0 * pi / (3.0 * sqrt3));

inline cplx dual_mode(int m, int n) { return gamma_dual_gen * (double(m) + double(n) * omega); }

// Integer Gamma^* coordinates of omega^l K.
inline constexpr std::array<std::array<int, 2>, 3> potential_shift = {{{-1, -2}, {2, 1}, {-1, 1}}};

// Every potential shift changes (m - n) mod 3 by one, so the operator splits into three blocks:
// block c holds component-1 modes with (m - n) = c and component-2 modes with (m - n) = c - 1 (mod 3).
inline int mode_class(int m, int n) { return (((m - n) % 3) + 3) % 3; }

struct Slot {
  int comp;  // 0 or 1
  int m, n;
};

class PlaneWaveBasis {
 public:
  // The radius is chosen so each of the three blocks has dimension close to 2 (2N+1)^2.
  static PlaneWaveBasis make(int N) {
    require(N >= 4, "PlaneWaveBasis: cutoff N must be at least 4");
    PlaneWaveBasis b;
    b.N_ = N;
    const double cell = std::norm(gamma_dual_gen) * sqrt3 / 2.0;
    b.radius_ = (2.0 * N + 1.0) * std::sqrt(3.0 * cell / pi);
    if (b.radius_ < 2.0 * Kmag) fail(ErrorKind::Precondition, "PlaneWaveBasis: cutoff too small to contain the potential shifts");
    const int M = int(b.radius_ / std::abs(gamma_dual_gen) * 1.25) + 2;
    for (int m = -M; m <= M; ++m)
      for (int n = -M; n <= M; ++n)
        if (std::abs(dual_mode(m, n)) <= b.radius_ + 1e-9) b.modes_.push_back({m, n});
    std::sort(b.modes_.begin(), b.modes_.end());
    for (std::size_t i = 0; i < b.modes_.size(); ++i) b.index_[b.modes_[i]] = int(i);
    return b;
  }

  int cutoff() const { return N_; }
  double radius() const { return radius_; }
  std::size_t size() const { return modes_.size(); }
  const std::vector<std::array<int, 2>>& modes() const { return modes_; }
  cplx p(std::size_t i) const { return dual_mode(modes_[i][0], modes_[i][1]); }
  int find(int m, int n) const {
    auto it = index_.find({m, n});
    return it == index_.end() ? -1 : it->second;
  }

  // Full spinor ordering: component 0 modes first, then component 1.
  std::vector<Slot> all_slots() const {
    std::vector<Slot> s;
    for (int c = 0; c < 2; ++c)
      for (const auto& md : modes_) s.push_back({c, md[0], md[1]});
    return s;
  }
  std::vector<Slot> block_slots(int block) const {
    std::vector<Slot> s;
    for (int c = 0; c < 2; ++c)
      for (const auto& md : modes_)
        if (mode_class(md[0], md[1]) == ((block - c) % 3 + 3) % 3) s.push_back({c, md[0], md[1]});
    return s;
  }
  // Position of a slot in the full ordering.
  int full_index(const Slot& s) const {
    int i = find(s.m, s.n);
    return i < 0 ? -1 : s.comp * int(modes_.size()) + i;
  }

  // All modes within one potential shell of the basis; used as the intermediate space of products.
  PlaneWaveBasis extended(int shells) const {
    PlaneWaveBasis b = *this;
    for (int s = 0; s < shells; ++s) {
      auto cur = b.modes_;
      for (const auto& md : cur)
        for (const auto& sh : potential_shift)
          for (int sg : {-1, 1}) {
            std::array<int, 2> q{md[0] + sg * sh[0], md[1] + sg * sh[1]};
            if (!b.index_.count(q)) {
              b.index_[q] = 0;
              b.modes_.push_back(q);
            }
          }
    }
    std::sort(b.modes_.begin(), b.modes_.end());
    for (std::size_t i = 0; i < b.modes_.size(); ++i) b.index_[b.modes_[i]] = int(i);
    return b;
  }

 private:
  int N_ = 0;
  double radius_ = 0;
  std::vector<std::array<int, 2>> modes_;
  std::map<std::array<int, 2>, int> index_;
};

// Multiplication by sum c exp(i <z, g(m + n omega)>).
struct ModeTerm {
  cplx coeff;
  int m, n;
};

// 2x2 block operator: diag_j(p) on the diagonal blocks plus multiplication operators mult[i][j].
struct BlockOperator {
  std::array<std::function<cplx(cplx)>, 2> diag;
  std::array<std::array<std::vector<ModeTerm>, 2>, 2> mult;
};

inline std::vector<ModeTerm> potential_terms(const PotentialParams& P, double scale, bool reflected) {
  std::vector<ModeTerm> t;
  for (int l = 0; l < 3; ++l) {
    int s = reflected ? -1 : 1;
    t.push_back({scale * P.lambda * I * omega_pow(l), s * potential_shift[l][0], s * potential_shift[l][1]});
  }
  return t;
}

// Nearest point of Gamma^* to k and the remainder.
inline std::pair<cplx, cplx> reduce_quasimomentum(cplx k) {
  // k = g (a + b omega) with real a, b.
  cplx r = k / gamma_dual_gen;
  double b = r.imag() / omega.imag();
  double a = r.real() - b * omega.real();
  cplx best = 0;
  double bd = 1e300;
  for (int da = -1; da <= 1; ++da)
    for (int db = -1; db <= 1; ++db) {
      cplx g = dual_mode(int(std::lround(a)) + da, int(std::lround(b)) + db);
      if (std::abs(k - g) < bd) bd = std::abs(k - g), best = g;
    }
  return {best, k - best};
}

inline double dist_to_gamma_dual(cplx k) { return std::abs(reduce_quasimomentum(k).second); }

// D(alpha) + k. The quasi-momentum is reduced mod Gamma^* first, so the truncated operator is
// exactly Gamma^*-periodic in k.
inline BlockOperator op_D(double alpha, cplx k, const PotentialParams& P = {}) {
  cplx k0 = reduce_quasimomentum(k).second;
  BlockOperator op;
  op.diag = {[k0](cplx p) { return p + k0; }, [k0](cplx p) { return p + k0; }};
  op.mult[0][1] = potential_terms(P, alpha, false);
  op.mult[1][0] = potential_terms(P, alpha, true);
  return op;
}

// D(alpha)^* + conj(k), built from conj(U) rather than by transposition.
inline BlockOperator op_D_adjoint(double alpha, cplx k, const PotentialParams& P = {}) {
  cplx k0 = reduce_quasimomentum(k).second;
  BlockOperator op;
  op.diag = {[k0](cplx p) { return std::conj(p + k0); }, [k0](cplx p) { return std::conj(p + k0); }};
  // conj(U(-z)) has modes +omega^l K, conj(U(z)) has modes -omega^l K.
  for (auto t : potential_terms(P, alpha, false)) op.mult[0][1].push_back({std::conj(t.coeff), t.m, t.n});
  for (auto t : potential_terms(P, alpha, true)) op.mult[1][0].push_back({std::conj(t.coeff), t.m, t.n});
  return op;
}

// P_k(alpha) = Q_k (x) I + alpha R_k with Q_k = (2D_zbar)^2 - alpha^2 U(z)U(-z) and
// alpha R_k = [[4k D_zbar + k^2, alpha 2D_zbar U], [-alpha (2D_zbar U)(-z), 4k D_zbar + k^2]].
inline BlockOperator op_P(double alpha, cplx k, const PotentialParams& P = {}) {
  cplx k0 = reduce_quasimomentum(k).second;
  BlockOperator op;
  auto d = [k0](cplx p) { return p * p + 2.0 * k0 * p + k0 * k0; };
  op.diag = {d, d};
  auto u = potential_terms(P, 1.0, false);
  auto ur = potential_terms(P, 1.0, true);
  std::map<std::array<int, 2>, cplx> v;
  for (auto a : u)
    for (auto b : ur) v[{a.m + b.m, a.n + b.n}] += a.coeff * b.coeff;
  for (auto& [mn, c] : v)
    if (std::abs(c) > 0) {
      op.mult[0][0].push_back({-alpha * alpha * c, mn[0], mn[1]});
      op.mult[1][1].push_back({-alpha * alpha * c, mn[0], mn[1]});
    }
  // 2D_zbar acts on exp(i<z,p>) as multiplication by p.
  for (auto a : u) op.mult[0][1].push_back({alpha * a.coeff * dual_mode(a.m, a.n), a.m, a.n});
  for (auto a : u) op.mult[1][0].push_back({-alpha * a.coeff * dual_mode(a.m, a.n), -a.m, -a.n});
  return op;
}

inline SpMat assemble(const BlockOperator& op, const PlaneWaveBasis& rows_b, const std::vector<Slot>& rows,
                      const PlaneWaveBasis& cols_b, const std::vector<Slot>& cols) {
  std::map<std::array<int, 3>, int> col_index;
  for (std::size_t j = 0; j < cols.size(); ++j) col_index[{cols[j].comp, cols[j].m, cols[j].n}] = int(j);
  (void)rows_b;
  (void)cols_b;
  std::vector<Eigen::Triplet<cplx>> trip;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Slot& r = rows[i];
    auto it = col_index.find({r.comp, r.m, r.n});
    if (it != col_index.end()) trip.emplace_back(int(i), it->second, op.diag[r.comp](dual_mode(r.m, r.n)));
    for (int c = 0; c < 2; ++c)
      for (const auto& t : op.mult[r.comp][c]) {
        auto jt = col_index.find({c, r.m - t.m, r.n - t.n});
        if (jt != col_index.end()) trip.emplace_back(int(i), jt->second, t.coeff);
      }
  }
  SpMat A(Eigen::Index(rows.size()), Eigen::Index(cols.size()));
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

struct BlochMatrix {
  double alpha = 0;
  cplx k = 0;
  std::shared_ptr<const PlaneWaveBasis> basis;
  SpMat entries;
  CMat dense() const { return CMat(entries); }
};

inline BlochMatrix assemble_D(double alpha, cplx k, const PlaneWaveBasis& basis, const PotentialParams& P = {}) {
  auto slots = basis.all_slots();
  return {alpha, k, std::make_shared<PlaneWaveBasis>(basis), assemble(op_D(alpha, k, P), basis, slots, basis, slots)};
}

inline BlochMatrix assemble_Pk(double alpha, cplx k, const PlaneWaveBasis& basis, const PotentialParams& P = {}) {
  auto slots = basis.all_slots();
  return {alpha, k, std::make_shared<PlaneWaveBasis>(basis), assemble(op_P(alpha, k, P), basis, slots, basis, slots)};
}

// (D(-alpha)+k)(D(alpha)+k) restricted to the basis, formed through the one-shell extension so that
// no intermediate mode is dropped.
inline SpMat product_DmD(double alpha, cplx k, const PlaneWaveBasis& basis, const PotentialParams& P = {}) {
  auto ext = basis.extended(1);
  auto rows = basis.all_slots();
  auto mid = ext.all_slots();
  SpMat right = assemble(op_D(alpha, k, P), ext, mid, basis, rows);
  SpMat left = assemble(op_D(-alpha, k, P), basis, rows, ext, mid);
  SpMat prod = left * right;
  prod.makeCompressed();
  return prod;
}

// ---------------------------------------------------------------------------------------------
// Factorized block solver.

class BlockSolver {
 public:
  BlockSolver(const SpMat& A) : A_(A) {
    lu_.analyzePattern(A_);
    lu_.factorize(A_);
    if (lu_.info() != Eigen::Success) {
      // Exactly singular pivot: regularize at roundoff level so inverse iteration still works.
      SpMat B = A_;
      double s = 0;
      for (int k = 0; k < B.outerSize(); ++k)
        for (SpMat::InnerIterator it(B, k); it; ++it) s = std::max(s, std::abs(it.value()));
      SpMat Id(B.rows(), B.cols());
      Id.setIdentity();
      B = B + Id * cplx(1e-14 * std::max(s, 1.0));
      lu_.analyzePattern(B);
      lu_.factorize(B);
      if (lu_.info() != Eigen::Success) fail(ErrorKind::Numeric, "BlockSolver: sparse LU failed");
    }
  }
  CVec solve(const CVec& b) const { return lu_.solve(b); }
  CVec solve_adjoint(const CVec& b) const { return lu_.adjoint().solve(b); }
  const SpMat& matrix() const { return A_; }

 private:
  SpMat A_;
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
};

inline CVec seeded_vector(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(d(rng), d(rng));
  return v.normalized();
}

struct SingularPair {
  std::vector<double> values;  // ascending
  std::vector<CVec> vectors;   // right singular vectors
};

// Smallest `count` singular values by subspace iteration on (A^* A + tau^2)^{-1}, applied through the
// augmented matrix [[I, A], [A^*, -tau^2 I]]. The shift keeps a kernel from swamping the other directions.
inline SingularPair smallest_singular(const SpMat& A, int count, double tau = 1e-4, int max_iter = 400,
                                      double tol = 1e-12) {
  const Eigen::Index m = A.rows(), n = A.cols();
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Eigen::Index i = 0; i < m; ++i) trip.emplace_back(int(i), int(i), 1.0);
  for (Eigen::Index j = 0; j < n; ++j) trip.emplace_back(int(m + j), int(m + j), -tau * tau);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) {
      trip.emplace_back(int(it.row()), int(m + it.col()), it.value());
      trip.emplace_back(int(m + it.col()), int(it.row()), std::conj(it.value()));
    }
  SpMat Aug(m + n, m + n);
  Aug.setFromTriplets(trip.begin(), trip.end());
  Aug.makeCompressed();
  BlockSolver S(Aug);
  const int block = count + 2;
  CMat X(n, block);
  for (int j = 0; j < block; ++j) X.col(j) = seeded_vector(n, 977u + 31u * unsigned(j));
  std::vector<double> prev(block, -1.0);
  CMat Y(n, block);
  CVec rhs = CVec::Zero(m + n);
  Eigen::VectorXd mu;
  for (int it = 0; it < max_iter; ++it) {
    for (int j = 0; j < block; ++j) {
      rhs.head(m).setZero();
      rhs.tail(n) = -X.col(j);
      Y.col(j) = S.solve(rhs).tail(n);
    }
    Eigen::HouseholderQR<CMat> qr(Y);
    CMat Q = qr.householderQ() * CMat::Identity(n, block);
    CMat AQ = A * Q;
    Eigen::SelfAdjointEigenSolver<CMat> es(AQ.adjoint() * AQ);
    X = Q * es.eigenvectors();
    mu = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    double change = 0;
    for (int j = 0; j < count; ++j) change = std::max(change, std::abs(mu[j] - prev[j]) / std::max(mu[j], tau));
    for (int j = 0; j < block; ++j) prev[j] = mu[j];
    if (it > 2 && change < tol) break;
  }
  SingularPair r;
  for (int j = 0; j < count; ++j) {
    // The true residual is more reliable than the Ritz value near zero.
    r.values.push_back((A * X.col(j)).norm() / X.col(j).norm());
    r.vectors.push_back(X.col(j) / X.col(j).norm());
  }
  return r;
}

inline std::vector<double> block_min_singular(double alpha, cplx k, const PlaneWaveBasis& basis,
                                              const PotentialParams& P = {}) {
  std::vector<double> s;
  for (int c = 0; c < 3; ++c) {
    auto slots = basis.block_slots(c);
    SpMat A = assemble(op_D(alpha, k, P), basis, slots, basis, slots);
    s.push_back(smallest_singular(A, 1).values[0]);
  }
  return s;
}

// Smallest singular value of the assembled D(alpha)+k; the minimum over the three decoupled blocks.
inline double min_singular(double alpha, cplx k, const PlaneWaveBasis& basis, const PotentialParams& P = {}) {
  auto s = block_min_singular(alpha, k, basis, P);
  return *std::min_element(s.begin(), s.end());
}

// ---------------------------------------------------------------------------------------------
// Magic coupling search.

struct MagicOptions {
  double alpha_min = 0.05;
  double shift_step = 0.5;
  int krylov = 40;
  double imag_tol = 1e-6;
  double ritz_tol = 1e-8;
  double kernel_tol = 1e-6;
  double k_agree_tol = 1e-4;
  double cluster_tol = 1e-3;
  double min_k_distance = 0.25;
  std::optional<cplx> second_k;
  unsigned threads = 1;
};

struct MagicAlpha {
  double alpha;
  double residual;       // max of min-singular values at the two quasi-momenta
  double alpha_second_k; // refined value at the second quasi-momentum
  bool validated;
};

// Point of the Gamma^* cell farthest from the lattice: a vertex of the dual Voronoi cell.
inline cplx farthest_quasimomentum() { return gamma_dual_gen * (2.0 + omega) / 3.0; }

inline cplx default_second_quasimomentum() { return 0.45 * gamma_dual_gen + 0.2 * gamma_dual_gen * omega; }

// Ritz values of (D_0 + sigma T)^{-1} T nearest to the shift, mapped back to alpha = sigma - 1/theta.
inline std::vector<cplx> bs_candidates_near(const SpMat& D0, const SpMat& T, double sigma, int m, double ritz_tol) {
  SpMat S = D0 + T * cplx(sigma);
  BlockSolver solver(S);
  const Eigen::Index n = D0.rows();
  m = int(std::min<Eigen::Index>(m, n - 1));
  CMat V(n, m + 1);
  CMat H = CMat::Zero(m + 1, m);
  V.col(0) = seeded_vector(n, 4099u);
  int built = m;
  for (int j = 0; j < m; ++j) {
    CVec w = solver.solve(T * V.col(j));
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        cplx h = V.col(i).dot(w);
        H(i, j) += h;
        w -= h * V.col(i);
      }
    double nw = w.norm();
    H(j + 1, j) = nw;
    if (nw < 1e-14) {
      built = j + 1;
      break;
    }
    V.col(j + 1) = w / nw;
  }
  Eigen::ComplexEigenSolver<CMat> es(H.topLeftCorner(built, built));
  std::vector<cplx> out;
  for (int i = 0; i < built; ++i) {
    cplx theta = es.eigenvalues()[i];
    if (std::abs(theta) < 1e-12) continue;
    double res = std::abs(H(built, built - 1)) * std::abs(es.eigenvectors()(built - 1, i));
    if (built < m || res < ritz_tol * std::abs(theta)) out.push_back(sigma - 1.0 / theta);
  }
  return out;
}

// Polishes a real candidate by shift-invert power iteration at the candidate itself.
inline cplx refine_bs(const SpMat& D0, const SpMat& T, cplx alpha, int steps = 3) {
  for (int s = 0; s < steps; ++s) {
    SpMat S = D0 + T * cplx(alpha.real());
    BlockSolver solver(S);
    CVec v = seeded_vector(D0.rows(), 7u);
    cplx theta = 0;
    for (int it = 0; it < 60; ++it) {
      CVec w = solver.solve(T * v);
      cplx th = v.dot(w);
      v = w.normalized();
      if (it > 3 && std::abs(th - theta) < 1e-13 * std::abs(th)) {
        theta = th;
        break;
      }
      theta = th;
    }
    alpha = alpha.real() - 1.0 / theta;
  }
  return alpha;
}

struct BlockPencil {
  SpMat D0, T;
};

// D(alpha)+k = D0 + alpha T on block 0.
inline BlockPencil block_pencil(cplx k, const PlaneWaveBasis& basis, const PotentialParams& P = {}, int block = 0) {
  auto slots = basis.block_slots(block);
  BlockPencil bp;
  bp.D0 = assemble(op_D(0.0, k, P), basis, slots, basis, slots);
  SpMat D1 = assemble(op_D(1.0, k, P), basis, slots, basis, slots);
  bp.T = D1 - bp.D0;
  bp.T.prune(cplx(0.0));
  return bp;
}

// All blocks are unitarily equivalent up to a Gamma^*-shift of k, so the search runs on block 0.
inline std::vector<MagicAlpha> find_magic(cplx k, const PlaneWaveBasis& basis, double alpha_max,
                                          const MagicOptions& opt = {}, const PotentialParams& P = {}) {
  if (dist_to_gamma_dual(k) < opt.min_k_distance)
    fail(ErrorKind::Precondition, "find_magic: k too close to Gamma^* (resolvent ill-conditioned)");
  cplx k2 = opt.second_k.value_or(default_second_quasimomentum());
  if (dist_to_gamma_dual(k2) < opt.min_k_distance)
    fail(ErrorKind::Precondition, "find_magic: second k too close to Gamma^*");
  BlockPencil bp = block_pencil(k, basis, P);
  std::vector<double> shifts;
  for (double s = opt.alpha_min + 0.5 * opt.shift_step; s < alpha_max + opt.shift_step; s += opt.shift_step)
    shifts.push_back(s);
  std::vector<std::vector<cplx>> per_shift(shifts.size());
  parallel_for(shifts.size(), opt.threads, [&](std::size_t i) {
    for (cplx a : bs_candidates_near(bp.D0, bp.T, shifts[i], opt.krylov, opt.ritz_tol))
      if (std::abs(a - shifts[i]) <= 0.6 * opt.shift_step) per_shift[i].push_back(a);
  });
  std::vector<double> real_cands;
  for (const auto& v : per_shift)
    for (cplx a : v)
      if (std::abs(a.imag()) < opt.imag_tol * std::max(1.0, std::abs(a)) && a.real() > opt.alpha_min &&
          a.real() <= alpha_max)
        real_cands.push_back(a.real());
  std::sort(real_cands.begin(), real_cands.end());
  std::vector<double> uniq;
  for (double a : real_cands)
    if (uniq.empty() || a - uniq.back() > 1e-6) uniq.push_back(a);

  BlockPencil bp2 = block_pencil(k2, basis, P);
  std::vector<MagicAlpha> out(uniq.size());
  parallel_for(uniq.size(), opt.threads, [&](std::size_t i) {
    cplx a1 = refine_bs(bp.D0, bp.T, uniq[i]);
    cplx a2 = refine_bs(bp2.D0, bp2.T, a1.real());
    double r1 = smallest_singular(SpMat(bp.D0 + bp.T * cplx(a1.real())), 1).values[0];
    double r2 = smallest_singular(SpMat(bp2.D0 + bp2.T * cplx(a2.real())), 1).values[0];
    MagicAlpha m;
    m.alpha = a1.real();
    m.alpha_second_k = a2.real();
    m.residual = std::max(r1, r2);
    m.validated = r1 < opt.kernel_tol && r2 < opt.kernel_tol && std::abs(a1.real() - a2.real()) < opt.k_agree_tol &&
                  std::abs(a1.imag()) < opt.imag_tol * std::max(1.0, a1.real());
    out[i] = m;
  });
  // Values near the resolution limit split into tight clusters; keep the best-resolved member.
  std::vector<MagicAlpha> validated;
  for (const auto& m : out) {
    if (!m.validated) continue;
    if (!validated.empty() && m.alpha - validated.back().alpha < opt.cluster_tol) {
      if (m.residual < validated.back().residual) validated.back() = m;
      continue;
    }
    validated.push_back(m);
  }
  return validated;
}

// ---------------------------------------------------------------------------------------------
// Eigenstates on the torus.

struct EigenstateField {
  std::shared_ptr<const PlaneWaveBasis> basis;
  CVec coeffs;  // full spinor ordering
  int n = 0;    // grid is n x n over z = s omega + t, s, t in [0, 1)
  std::vector<cplx> u1, u2;  // row-major, index i * n + j for (s_i, t_j)
  double sup_norm = 0;
  double l2_norm = 0;  // sqrt(sum |c|^2) = normalized L^2 norm over the torus

  cplx point(int i, int j) const { return double(i) / n * omega + double(j) / n; }
  double abs_u(std::size_t idx) const { return std::sqrt(std::norm(u1[idx]) + std::norm(u2[idx])); }
};

// Samples both components on the Lambda fundamental domain. With z = s omega + t and
// p = g (m + n omega), <z, p> = (2 pi / 3)(s m - t n), so the sum factorizes.
inline void sample_field(EigenstateField& f, int n) {
  require(n >= 8, "sample_field: grid must have at least 8 points per side");
  f.n = n;
  const auto& B = *f.basis;
  const std::size_t nm = B.size();
  int mmin = 0, mmax = 0;
  for (const auto& md : B.modes()) mmin = std::min(mmin, md[0]), mmax = std::max(mmax, md[0]);
  const int span = mmax - mmin + 1;
  for (int comp = 0; comp < 2; ++comp) {
    // G[m][t] = sum_n c_{mn} exp(-2 pi i t n / 3)
    std::vector<cplx> G(std::size_t(span) * n, 0.0);
    for (std::size_t q = 0; q < nm; ++q) {
      cplx c = f.coeffs[Eigen::Index(comp * nm + q)];
      if (c == cplx(0.0)) continue;
      int m = B.modes()[q][0], nn = B.modes()[q][1];
      for (int j = 0; j < n; ++j)
        G[std::size_t(m - mmin) * n + j] += c * std::exp(cplx(0.0, -2.0 * pi * double(j) / n * nn / 3.0));
    }
    auto& out = comp == 0 ? f.u1 : f.u2;
    out.assign(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int m = mmin; m <= mmax; ++m) {
        cplx e = std::exp(cplx(0.0, 2.0 * pi * double(i) / n * m / 3.0));
        const cplx* g = &G[std::size_t(m - mmin) * n];
        cplx* o = &out[std::size_t(i) * n];
        for (int j = 0; j < n; ++j) o[j] += e * g[j];
      }
  }
  f.sup_norm = 0;
  for (std::size_t idx = 0; idx < f.u1.size(); ++idx) f.sup_norm = std::max(f.sup_norm, f.abs_u(idx));
  f.l2_norm = f.coeffs.norm();
}

inline EigenstateField make_field(const PlaneWaveBasis& basis, const CVec& coeffs, int n) {
  EigenstateField f;
  f.basis = std::make_shared<PlaneWaveBasis>(basis);
  f.coeffs = coeffs;
  sample_field(f, n);
  return f;
}

struct ProtectedResult {
  std::vector<EigenstateField> states;
  std::vector<double> block_singular;  // two smallest singular values per block, block-major
  std::vector<double> residuals;       // ||D(alpha) u|| / ||u|| per state
  bool near_magic = false;
};

struct ProtectedOptions {
  double kernel_tol = 1e-7;
  int grid = 256;
  bool strict = false;  // throw when the kernel dimension is not 2
  unsigned threads = 1;
};

// Numeric kernel of D(alpha) at k = 0, block by block.
inline ProtectedResult protected_states(double alpha, const PlaneWaveBasis& basis, const ProtectedOptions& opt = {},
                                        const PotentialParams& P = {}) {
  ProtectedResult r;
  const auto full = basis.all_slots();
  std::vector<SingularPair> sp(3);
  std::vector<std::vector<Slot>> slots(3);
  parallel_for(3, opt.threads, [&](std::size_t c) {
    slots[c] = basis.block_slots(int(c));
    SpMat A = assemble(op_D(alpha, 0.0, P), basis, slots[c], basis, slots[c]);
    sp[c] = smallest_singular(A, 2);
  });
  SpMat Dfull = assemble(op_D(alpha, 0.0, P), basis, full, basis, full);
  for (int c = 0; c < 3; ++c) {
    for (int j = 0; j < 2; ++j) {
      r.block_singular.push_back(sp[c].values[j]);
      if (sp[c].values[j] < opt.kernel_tol) {
        CVec u = CVec::Zero(Eigen::Index(full.size()));
        for (std::size_t q = 0; q < slots[c].size(); ++q) u[basis.full_index(slots[c][q])] = sp[c].vectors[j][Eigen::Index(q)];
        // Fix the global phase by the largest coefficient.
        Eigen::Index imax;
        u.cwiseAbs().maxCoeff(&imax);
        u *= std::abs(u[imax]) / u[imax];
        r.residuals.push_back((Dfull * u).norm() / u.norm());
        r.states.push_back(make_field(basis, u, opt.grid));
      }
    }
  }
  r.near_magic = r.states.size() != 2;
  if (r.near_magic && opt.strict)
    fail(ErrorKind::Numeric, "protected_states: kernel dimension " + std::to_string(r.states.size()) +
                                 " differs from 2; alpha is near a magic value");
  return r;
}

// The forced kernel vector of a single block via the bordered system [A b; c^* 0].
inline CVec block_kernel_vector(const SpMat& A) {
  const Eigen::Index n = A.rows();
  CVec b = seeded_vector(n, 11u), c = seeded_vector(n, 13u);
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) trip.emplace_back(int(it.row()), int(it.col()), it.value());
  for (Eigen::Index i = 0; i < n; ++i) {
    trip.emplace_back(int(i), int(n), b[i]);
    trip.emplace_back(int(n), int(i), std::conj(c[i]));
  }
  SpMat Bm(n + 1, n + 1);
  Bm.setFromTriplets(trip.begin(), trip.end());
  Bm.makeCompressed();
  BlockSolver S(Bm);
  CVec rhs = CVec::Zero(n + 1);
  rhs[n] = 1.0;
  CVec x = S.solve(rhs);
  return x.head(n).normalized();
}

// The protected state carried by block 0 (the block containing the constant component-1 mode).
inline EigenstateField protected_state_block0(double alpha, const PlaneWaveBasis& basis, int grid,
                                              double* residual = nullptr, const PotentialParams& P = {}) {
  auto slots = basis.block_slots(0);
  SpMat A = assemble(op_D(alpha, 0.0, P), basis, slots, basis, slots);
  CVec v = block_kernel_vector(A);
  if (residual) *residual = (A * v).norm();
  CVec u = CVec::Zero(Eigen::Index(2 * basis.size()));
  for (std::size_t q = 0; q < slots.size(); ++q) u[basis.full_index(slots[q])] = v[Eigen::Index(q)];
  Eigen::Index imax;
  u.cwiseAbs().maxCoeff(&imax);
  u *= std::abs(u[imax]) / u[imax];
  return make_field(basis, u, grid);
}

// ---------------------------------------------------------------------------------------------
// Decay near the hexagon.

inline double dist_point_segment(cplx z, cplx a, cplx b) {
  cplx d = b - a;
  double t = std::clamp(rdot(z - a, d) / std::norm(d), 0.0, 1.0);
  return std::abs(z - (a + t * d));
}

// Distance to H = union over signs and k of +-(1 + omega^k [0, 1/2]) i/sqrt3 + Lambda.
inline double dist_to_hexagon(cplx z) {
  double best = 1e300;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b) {
      cplx g = double(a) * omega + double(b);
      for (int sg : {-1, 1})
        for (int k = 0; k < 3; ++k) {
          cplx p0 = double(sg) * zS + g;
          cplx p1 = double(sg) * (zS + 0.5 * omega_pow(k) * zS) + g;
          best = std::min(best, dist_point_segment(z, p0, p1));
        }
    }
  return best;
}

inline double dist_to_corners(cplx z) {
  double best = 1e300;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      for (int sg : {-1, 1}) best = std::min(best, std::abs(z - (double(sg) * zS + double(a) * omega + double(b))));
  return best;
}

struct DecayProfile {
  double max_ratio = 0;  // max |u| / sup |u| over the hexagon neighbourhood
  double min_ratio = 1;  // min over the same neighbourhood
  double global_min_ratio = 1;
  std::size_t count = 0;
  std::vector<double> ratio;   // |u| / sup, full grid
  std::vector<char> in_region; // neighbourhood mask
};

inline DecayProfile decay_profile(const EigenstateField& f, double hex_margin, bool exclude_corners = true) {
  require(f.n > 0 && f.sup_norm > 0, "decay_profile: state must be sampled and nonzero");
  if (1.0 / f.n > 0.5 * hex_margin) fail(ErrorKind::Precondition, "decay_profile: grid too coarse to resolve hex_margin");
  DecayProfile d;
  d.ratio.resize(f.u1.size());
  d.in_region.assign(f.u1.size(), 0);
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j) {
      std::size_t idx = std::size_t(i) * f.n + j;
      double r = f.abs_u(idx) / f.sup_norm;
      d.ratio[idx] = r;
      d.global_min_ratio = std::min(d.global_min_ratio, r);
      cplx z = f.point(i, j);
      if (dist_to_hexagon(z) > hex_margin) continue;
      if (exclude_corners && dist_to_corners(z) < hex_margin) continue;
      d.in_region[idx] = 1;
      ++d.count;
      d.max_ratio = std::max(d.max_ratio, r);
      d.min_ratio = std::min(d.min_ratio, r);
    }
  if (d.count == 0) fail(ErrorKind::Precondition, "decay_profile: no grid point in the hexagon neighbourhood");
  return d;
}

struct DecayRow {
  double alpha, max_ratio, log_max_ratio, min_ratio;
};

struct DecayFit {
  std::vector<DecayRow> rows;
  double slope = 0, intercept = 0;
};

inline DecayFit decay_fit(const std::vector<double>& alphas, const PlaneWaveBasis& basis, int grid, double hex_margin,
                          unsigned threads = 1, const PotentialParams& P = {}) {
  DecayFit fit;
  fit.rows.resize(alphas.size());
  parallel_for(alphas.size(), threads, [&](std::size_t i) {
    auto f = protected_state_block0(alphas[i], basis, grid, nullptr, P);
    auto d = decay_profile(f, hex_margin);
    fit.rows[i] = {alphas[i], d.max_ratio, std::log(d.max_ratio), d.min_ratio};
  });
  const double n = double(alphas.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : fit.rows) sx += r.alpha, sy += r.log_max_ratio, sxx += r.alpha * r.alpha, sxy += r.alpha * r.log_max_ratio;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

}  // namespace tbglab
