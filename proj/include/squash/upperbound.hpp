#pragma once

#include "squash/bound.hpp"
#include "squash/common.hpp"
#include "squash/qstate.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace squash {

/// Parameterizes an isometry V: reference -> D (x) E through the exponential
/// of a skew-Hermitian matrix; (d_D d_E)^2 real parameters. V is exactly
/// isometric by construction for any parameter vector.
struct ExtensionAnsatz {
  int d_D = 1, d_E = 1;
  RealVector params;  // size (d_D * d_E)^2
  std::uint64_t rng_seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t restart_seed(std::uint64_t seed, int restart) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(restart) + 1));
}

// Skew-Hermitian H from n^2 real parameters: strict lower triangle of the
// real antisymmetric part, then lower-with-diagonal of the imaginary
// symmetric part.
inline Matrix skew_hermitian(const RealVector& params, int n) {
  if (params.size() != static_cast<Eigen::Index>(n) * n)
    throw std::invalid_argument("ansatz: parameter count must be (d_D d_E)^2");
  Matrix h = Matrix::Zero(n, n);
  int idx = 0;
  for (int c = 0; c < n; ++c)
    for (int r = c + 1; r < n; ++r) {
      h(r, c) += Complex(params[idx], 0.0);
      h(c, r) -= Complex(params[idx], 0.0);
      ++idx;
    }
  for (int c = 0; c < n; ++c)
    for (int r = c; r < n; ++r) {
      h(r, c) += Complex(0.0, params[idx]);
      if (r != c) h(c, r) += Complex(0.0, params[idx]);
      ++idx;
    }
  return h;
}

}  // namespace detail

/// First rank(rho) columns of exp(H(params)); exactly isometric.
inline Matrix build_isometry(const ExtensionAnsatz& ansatz, int rank) {
  const int n = ansatz.d_D * ansatz.d_E;
  if (n < rank) throw std::invalid_argument("ansatz: d_D * d_E must be >= rank(rho_AB)");
  Matrix h = detail::skew_hermitian(ansatz.params, n);
  // exp(H) for skew-Hermitian H via the Hermitian matrix iH.
  Eigen::SelfAdjointEigenSolver<Matrix> es(Complex(0.0, 1.0) * h);
  Vector phases(n);
  for (int i = 0; i < n; ++i) {
    double lam = es.eigenvalues()(i);
    phases(i) = Complex(std::cos(lam), -std::sin(lam));  // e^{-i lam}
  }
  Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  return u.leftCols(rank);
}

namespace detail {

struct UpperBoundContext {
  int d_A, d_B, d_D, d_E, rank;
  Vector purification;  // on (AB) (x) reference
};

inline UpperBoundContext make_context(const DensityMatrix& rho_AB, int d_D, int d_E) {
  if (rho_AB.num_subsystems() != 2)
    throw std::invalid_argument("upper_bound: state must be bipartite");
  UpperBoundContext ctx;
  ctx.d_A = rho_AB.dim(0);
  ctx.d_B = rho_AB.dim(1);
  ctx.d_D = d_D;
  ctx.d_E = d_E;
  Purification pur = canonical_purification(rho_AB);
  ctx.purification = std::move(pur.state);
  ctx.rank = pur.ref_dim;
  if (d_D < 1 || d_E < 1 || d_D * d_E < ctx.rank)
    throw std::invalid_argument("upper_bound: d_D * d_E must cover rank(rho_AB)");
  return ctx;
}

inline double entropy_floored(const Eigen::SelfAdjointEigenSolver<Matrix>& es) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    double lam = es.eigenvalues()(i);
    if (lam > 1e-12) h -= lam * std::log2(lam);
  }
  return h;
}

// 1/2 (H(A|D) + H(A|E)) of the pure state (I_AB (x) V)|purification>.
inline double objective_of_isometry(const UpperBoundContext& ctx, const Matrix& v) {
  const int da = ctx.d_A, db = ctx.d_B, dd = ctx.d_D, de = ctx.d_E, r = ctx.rank;
  const int n = dd * de;

  // psi[a, b, d, e] = sum_j purification[(a b), j] V[(d e), j]
  std::vector<Complex> psi(static_cast<std::size_t>(da) * db * n);
  for (int s = 0; s < da * db; ++s)
    for (int t = 0; t < n; ++t) {
      Complex acc = 0.0;
      for (int j = 0; j < r; ++j) acc += ctx.purification(s * r + j) * v(t, j);
      psi[static_cast<std::size_t>(s) * n + t] = acc;
    }
  auto at = [&](int a, int b, int d, int e) -> Complex {
    return psi[((static_cast<std::size_t>(a) * db + b) * dd + d) * de + e];
  };

  Matrix rho_ad = Matrix::Zero(da * dd, da * dd);
  for (int a = 0; a < da; ++a)
    for (int d = 0; d < dd; ++d)
      for (int a2 = 0; a2 < da; ++a2)
        for (int d2 = 0; d2 < dd; ++d2) {
          Complex acc = 0.0;
          for (int b = 0; b < db; ++b)
            for (int e = 0; e < de; ++e) acc += at(a, b, d, e) * std::conj(at(a2, b, d2, e));
          rho_ad(a * dd + d, a2 * dd + d2) = acc;
        }
  Matrix rho_ae = Matrix::Zero(da * de, da * de);
  for (int a = 0; a < da; ++a)
    for (int e = 0; e < de; ++e)
      for (int a2 = 0; a2 < da; ++a2)
        for (int e2 = 0; e2 < de; ++e2) {
          Complex acc = 0.0;
          for (int b = 0; b < db; ++b)
            for (int d = 0; d < dd; ++d) acc += at(a, b, d, e) * std::conj(at(a2, b, d, e2));
          rho_ae(a * de + e, a2 * de + e2) = acc;
        }

  Matrix rho_d = Matrix::Zero(dd, dd);
  for (int d = 0; d < dd; ++d)
    for (int d2 = 0; d2 < dd; ++d2) {
      Complex acc = 0.0;
      for (int a = 0; a < da; ++a) acc += rho_ad(a * dd + d, a * dd + d2);
      rho_d(d, d2) = acc;
    }
  Matrix rho_e = Matrix::Zero(de, de);
  for (int e = 0; e < de; ++e)
    for (int e2 = 0; e2 < de; ++e2) {
      Complex acc = 0.0;
      for (int a = 0; a < da; ++a) acc += rho_ae(a * de + e, a * de + e2);
      rho_e(e, e2) = acc;
    }

  Eigen::SelfAdjointEigenSolver<Matrix> es_ad(rho_ad), es_d(rho_d), es_ae(rho_ae), es_e(rho_e);
  double h_a_d = entropy_floored(es_ad) - entropy_floored(es_d);
  double h_a_e = entropy_floored(es_ae) - entropy_floored(es_e);
  return 0.5 * (h_a_d + h_a_e);
}

// Quasi-Newton (L-BFGS, memory 8) with central-difference gradients and
// backtracking line search.
template <typename F>
double lbfgs_minimize(F&& f, RealVector& x, int max_iters) {
  const double fd_step = 1e-5;
  const int mem = 8;
  const Eigen::Index n = x.size();

  auto gradient = [&](const RealVector& p) {
    RealVector g(n);
    RealVector probe = p;
    for (Eigen::Index i = 0; i < n; ++i) {
      double orig = probe[i];
      probe[i] = orig + fd_step;
      double fp = f(probe);
      probe[i] = orig - fd_step;
      double fm = f(probe);
      probe[i] = orig;
      g[i] = (fp - fm) / (2.0 * fd_step);
    }
    return g;
  };

  double fx = f(x);
  RealVector g = gradient(x);
  std::vector<RealVector> s_hist, y_hist;
  std::vector<double> rho_hist;

  for (int it = 0; it < max_iters; ++it) {
    if (g.cwiseAbs().maxCoeff() < 1e-7) break;

    // Two-loop recursion.
    RealVector d = -g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(d);
      d -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      d *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      double beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }

    double slope = g.dot(d);
    if (slope >= 0.0) {  // not a descent direction; restart from steepest descent
      d = -g;
      slope = g.dot(d);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double t = 1.0, f_new = 0.0;
    RealVector x_new;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + t * d;
      f_new = f(x_new);
      if (f_new <= fx + 1e-4 * t * slope) {
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;

    RealVector g_new = gradient(x_new);
    RealVector s = x_new - x, y = g_new - g;
    double sy = s.dot(y);
    if (sy > 1e-12) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > mem) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
    }
    double improvement = fx - f_new;
    x = std::move(x_new);
    fx = f_new;
    g = std::move(g_new);
    if (improvement < 1e-12) break;
  }
  return fx;
}

}  // namespace detail

/// 1/2 (H(A|D) + H(A|E)) of the extension built from the ansatz; any value
/// of this objective is a valid upper bound on E_sq.
inline double objective(const DensityMatrix& rho_AB, const ExtensionAnsatz& ansatz) {
  auto ctx = detail::make_context(rho_AB, ansatz.d_D, ansatz.d_E);
  Matrix v = build_isometry(ansatz, ctx.rank);
  return detail::objective_of_isometry(ctx, v);
}

struct UpperBoundReport {
  BoundResult result;
  ExtensionAnsatz best;
  std::vector<double> restart_values;  // best value after each restart (non-increasing)
};

/// Multi-start local minimization of the extension objective. Deterministic
/// for fixed (state, dims, restarts, max_iters, seed); restart-r parameters
/// are seeded by hash(seed, r).
inline UpperBoundReport upper_bound_detailed(const DensityMatrix& rho_AB, int d_D, int d_E,
                                             int restarts = 20, int max_iters = 500,
                                             std::uint64_t seed = 1) {
  const auto t_start = std::chrono::steady_clock::now();
  auto ctx = detail::make_context(rho_AB, d_D, d_E);
  const int n = d_D * d_E;

  UpperBoundReport report;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(detail::restart_seed(seed, r));
    std::normal_distribution<double> gauss(0.0, 1.0);
    RealVector params(n * n);
    for (Eigen::Index i = 0; i < params.size(); ++i) params[i] = gauss(rng);

    auto f = [&](const RealVector& p) {
      ExtensionAnsatz a{d_D, d_E, p, 0};
      return detail::objective_of_isometry(ctx, build_isometry(a, ctx.rank));
    };
    double val = detail::lbfgs_minimize(f, params, max_iters);
    if (val < best) {
      best = val;
      report.best = ExtensionAnsatz{d_D, d_E, params, detail::restart_seed(seed, r)};
    }
    report.restart_values.push_back(best);
  }

  BoundResult& out = report.result;
  out.value = best;
  out.value_clamped = std::max(0.0, best);
  out.kind = BoundKind::upper_heuristic;
  out.d_D = d_D;
  out.d_E = d_E;
  out.restarts = restarts;
  out.solver_status = SolveStatus::optimal;
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

inline BoundResult upper_bound(const DensityMatrix& rho_AB, int d_D, int d_E, int restarts = 20,
                               int max_iters = 500, std::uint64_t seed = 1) {
  return upper_bound_detailed(rho_AB, d_D, d_E, restarts, max_iters, seed).result;
}

}  // namespace squash
