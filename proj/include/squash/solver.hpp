#pragma once

#include "squash/common.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace squash {

enum class SolveStatus { optimal, near_optimal, infeasible, unbounded, numerical_trouble };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::near_optimal: return "near_optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    default: return "numerical_trouble";
  }
}

enum class SolverBackend { embedded, external };

struct SolverOptions {
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  int max_iters = 50000;
  SolverBackend backend = SolverBackend::embedded;
  std::string external_path;   // falls back to $SQUASH_SDP_SOLVER when empty
  double time_limit = 3600.0;  // seconds

  void check() const {
    if (abs_tol <= 0 || rel_tol <= 0)
      throw std::invalid_argument("SolverOptions: tolerances must be positive");
    if (time_limit <= 0) throw std::invalid_argument("SolverOptions: time_limit must be positive");
  }
};

struct SolveInfo {
  double primal = 0.0;
  double dual = 0.0;
  SolveStatus status = SolveStatus::numerical_trouble;
  int iterations = 0;
  double wall_time = 0.0;
};

/// Standard-form SDP over one real symmetric PSD block:
///   min <C, X>  s.t.  <A_i, X> = b_i,  X >= 0.
///
/// Cell ids are Eigen column-major linear indices (cell = row + col*side).
///
/// Instances produced by `realify` carry the constraints as a signed
/// partition of the matrix cells (every cell equals +-1 times one scalar
/// variable, some variables pinned). The partition drives the fast affine
/// projection in the embedded solver and the SDPA export; an explicit
/// constraint list can be materialized from it, and hand-built instances may
/// supply such a list directly.
struct SDPInstance {
  struct Cls {
    std::vector<std::pair<std::int64_t, std::int8_t>> members;  // (cell, sign)
    bool pinned = false;
    double pin = 0.0;
  };
  struct Constraint {
    std::vector<std::pair<std::int64_t, double>> entries;  // symmetric matrix, both triangles
    double rhs = 0.0;
  };

  int side = 0;
  int complex_side = 0;  // > 0 when the instance realifies complex Hermitian structure

  // Objective <C, X> = sum of coeff * X_cell over entries (C symmetric,
  // both triangles listed).
  std::vector<std::pair<std::int64_t, double>> objective;

  // Partition representation (primary when nonempty).
  std::vector<Cls> classes;
  std::vector<double> q;  // per-class objective: value(x) = sum_j q_j x_j

  // Explicit constraints (used by the solver when `classes` is empty).
  std::vector<Constraint> constraints;

  struct Meta {
    int m = 0, k = 0, d_A = 0, d_B = 0;
    std::string state_hash;
  } meta;

  std::int64_t transpose_of(std::int64_t cell) const {
    std::int64_t r = cell % side, c = cell / side;
    return c + r * static_cast<std::int64_t>(side);
  }

  /// Materialize the partition as equality constraints: one pin per pinned
  /// class and pairwise ties within each class. Intended for small
  /// instances and tests.
  std::vector<Constraint> equality_constraints() const {
    std::vector<Constraint> out;
    auto sym_entries = [&](std::int64_t cell, double coeff) {
      std::vector<std::pair<std::int64_t, double>> e{{cell, coeff}};
      std::int64_t t = transpose_of(cell);
      if (t != cell) e.emplace_back(t, coeff);
      return e;
    };
    for (const auto& cls : classes) {
      // Distinct unordered cell pairs of this class, with their signs.
      std::vector<std::pair<std::int64_t, std::int8_t>> reps;
      for (auto [cell, sign] : cls.members) {
        std::int64_t rep = std::min(cell, transpose_of(cell));
        bool seen = false;
        for (auto& [rc, rs] : reps)
          if (rc == rep) seen = true;
        if (!seen) reps.emplace_back(rep, sign);
      }
      if (cls.pinned) {
        Constraint c;
        c.entries = sym_entries(reps[0].first, 1.0);
        double scale = (reps[0].first == transpose_of(reps[0].first)) ? 1.0 : 2.0;
        c.rhs = scale * reps[0].second * cls.pin;
        out.push_back(std::move(c));
      }
      for (std::size_t i = 1; i < reps.size(); ++i) {
        // s0 x = X_c0, si x = X_ci  =>  si * X_c0 - s0 * X_ci = 0.
        Constraint c;
        for (auto [cell, coeff] : sym_entries(reps[0].first, static_cast<double>(reps[i].second)))
          c.entries.emplace_back(cell, coeff);
        for (auto [cell, coeff] : sym_entries(reps[i].first, -static_cast<double>(reps[0].second)))
          c.entries.emplace_back(cell, coeff);
        c.rhs = 0.0;
        out.push_back(std::move(c));
      }
    }
    return out;
  }
};

namespace detail {

template <typename Scalar>
struct admm_traits;

template <>
struct admm_traits<double> {
  using MatrixT = RealMatrix;
  static double flip(double v, std::int8_t flag) { return flag ? -v : v; }  // flag = negative sign
  static double value_term(double q, double x) { return q * x; }
  static constexpr double grad_scale = 1.0;
  static double constrain(double x, bool) { return x; }
};

template <>
struct admm_traits<Complex> {
  using MatrixT = Matrix;
  static Complex flip(Complex v, std::int8_t flag) { return flag ? std::conj(v) : v; }  // flag = conjugate slot
  static double value_term(Complex q, Complex x) { return 2.0 * std::real(std::conj(q) * x); }
  static constexpr double grad_scale = 2.0;
  static Complex constrain(Complex x, bool real_valued) {
    return real_valued ? Complex(x.real(), 0.0) : x;
  }
};

/// Signed-partition SDP in variable space: min value(x) s.t. M(x) >= 0 with
/// pinned variables fixed. Cell c of M(x) equals sign * x (real) or x /
/// conj(x) (complex; flag marks the conjugate slot). Classes must cover
/// every matrix cell exactly once.
template <typename Scalar>
struct PartitionSdp {
  struct Cls {
    std::vector<std::pair<std::int64_t, std::int8_t>> members;
    bool pinned = false;
    bool real_valued = false;  // complex engine: self-paired class, x is real
    Scalar pin = Scalar(0);
  };

  int n = 0;
  std::vector<Cls> classes;
  std::vector<Scalar> q;  // value(x) = sum_j q_j x_j (real) or sum_j 2 Re(conj(q_j) x_j)

  double objective_value(const std::vector<Scalar>& x) const {
    double v = 0.0;
    for (std::size_t j = 0; j < classes.size(); ++j)
      v += admm_traits<Scalar>::value_term(q[j], x[j]);
    return v;
  }
};

/// First-order solver on the signed-partition form, run as an augmented
/// Lagrangian on the dual (boundary-point style): the dual slack S is split
/// between the affine set {class sums of S = objective coefficients} and the
/// PSD cone, both of which project in closed form; the multiplier of the
/// conic constraint recovers the primal moment matrix.
template <typename Scalar>
class AdmmSolver {
  using Traits = admm_traits<Scalar>;
  using MatrixT = typename Traits::MatrixT;

 public:
  AdmmSolver(const PartitionSdp<Scalar>& p, const SolverOptions& opts) : p_(p), opts_(opts) {}

  int complex_side = 0;  // enables the half-size projection for realified instances
  std::vector<Scalar>* x_out = nullptr;  // final recovered moment vector (diagnostics)

  SolveInfo run() {
    const auto t_start = std::chrono::steady_clock::now();
    const int n = p_.n;
    const std::size_t nc = p_.classes.size();

    // Pinned-part matrix B = M(pins) and the dual constant sum_p <q_p, v_p>.
    std::vector<Scalar> pins(nc, Scalar(0));
    double const0 = 0.0;
    for (std::size_t j = 0; j < nc; ++j)
      if (p_.classes[j].pinned) {
        pins[j] = p_.classes[j].pin;
        const0 += Traits::value_term(p_.q[j], p_.classes[j].pin);
      }
    MatrixT b_mat = MatrixT::Zero(n, n);
    scatter(pins, b_mat);

    MatrixT s = MatrixT::Zero(n, n);
    project_affine(s);
    MatrixT t = s;
    psd_project(t);
    MatrixT w = MatrixT::Zero(n, n);

    double sigma = std::max(1e-3, b_mat.norm());
    if (const char* env = std::getenv("SQUASH_SIGMA0")) sigma = std::atof(env);
    const double relax = 1.6;
    SolveInfo info;
    double primal = 0.0, dual = 0.0, rp = 0.0, rd = 0.0, r_pin = 0.0;
    std::vector<Scalar> x(nc, Scalar(0));
    std::vector<double> dual_hist;
    int it;
    for (it = 1; it <= opts_.max_iters; ++it) {
      s = t - w - b_mat / sigma;
      project_affine(s);

      MatrixT v = relax * s + (1.0 - relax) * t + w;
      MatrixT t_prev = std::move(t);
      t = v;
      psd_project(t);
      w = v - t;

      rp = (s - t).norm();
      rd = sigma * (t - t_prev).norm();

      if (it % 25 == 0 || it == opts_.max_iters) {
        // Primal recovery from the conic multiplier X = -sigma W.
        recover_x(w, sigma, x);
        primal = p_.objective_value(x);
        dual = const0 - inner(b_mat, s);
        dual_hist.push_back(dual);
        r_pin = 0.0;
        for (std::size_t j = 0; j < nc; ++j)
          if (p_.classes[j].pinned)
            r_pin += static_cast<double>(p_.classes[j].members.size()) *
                     std::norm(x[j] - p_.classes[j].pin);
        r_pin = std::sqrt(r_pin);

        double ns = std::max(s.norm(), t.norm());
        double eps_p = opts_.abs_tol * n + opts_.rel_tol * ns;
        double eps_pin = opts_.abs_tol * n + opts_.rel_tol * (1.0 + sigma * w.norm());
        double eps_g =
            opts_.abs_tol + opts_.rel_tol * std::max({std::abs(primal), std::abs(dual), 1.0});
        static const bool trace = std::getenv("SQUASH_SOLVER_TRACE") != nullptr;
        if (trace && it % 500 == 0)
          std::fprintf(stderr,
                       "  it %6d  rpsd %.3e (%.1e)  rpin %.3e (%.1e)  rd %.3e  p %.8f d %.8f "
                       "sigma %.1e\n",
                       it, rp, eps_p, r_pin, eps_pin, rd, primal, dual, sigma);
        if (rp <= eps_p && r_pin <= eps_pin && std::abs(primal - dual) <= 10.0 * eps_g) {
          info.status = SolveStatus::optimal;
          break;
        }
        // The primal optimum of these relaxations need not be attained (the
        // multiplier then drifts along a recession direction); once the dual
        // value has stopped moving at the requested precision and the slack
        // is nearly conic, further iterations buy nothing.
        if (dual_hist.size() >= 41) {
          double drift = std::abs(dual - dual_hist[dual_hist.size() - 41]);
          if (drift <= opts_.abs_tol + opts_.rel_tol * std::max(1.0, std::abs(dual)) &&
              rp <= 1e3 * eps_p) {
            info.status = SolveStatus::near_optimal;
            break;
          }
        }
        if (std::abs(dual) > 1e13) {
          info.status = SolveStatus::unbounded;
          break;
        }
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        if (elapsed > opts_.time_limit) break;
      }

      if (it % 50 == 0) {
        // Residual balancing; W rescales so the recovered primal X = -sigma W
        // is unchanged.
        if (rp > 10.0 * rd && sigma < 1e8) {
          sigma *= 2.0;
          w *= 0.5;
        } else if (rd > 10.0 * rp && sigma > 1e-8) {
          sigma *= 0.5;
          w *= 2.0;
        }
      }
    }

    recover_x(w, sigma, x);
    primal = p_.objective_value(x);
    dual = const0 - inner(b_mat, s);
    if (x_out) *x_out = x;
    info.primal = primal;
    info.dual = dual;
    info.iterations = std::min(it, opts_.max_iters);
    info.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (info.status == SolveStatus::numerical_trouble) {
      // Loop ended on iterations or time; grade what we have.
      double ns = std::max(1.0, std::max(s.norm(), t.norm()));
      bool reduced = rp <= 1e3 * (opts_.abs_tol * p_.n + opts_.rel_tol * ns);
      if (reduced && dual_hist.size() >= 2) {
        double drift = std::abs(dual_hist.back() - dual_hist[dual_hist.size() - 2]);
        reduced = drift <= 1e3 * (opts_.abs_tol + opts_.rel_tol * std::max(1.0, std::abs(dual)));
      }
      info.status = reduced ? SolveStatus::near_optimal : SolveStatus::numerical_trouble;
    }
    return info;
  }

 private:
  void scatter(const std::vector<Scalar>& x, MatrixT& m) const {
    for (std::size_t j = 0; j < p_.classes.size(); ++j)
      for (auto [cell, flag] : p_.classes[j].members)
        m.data()[cell] = Traits::flip(x[j], flag);
  }

  // Class averages of the recovered primal matrix X = -sigma W.
  void recover_x(const MatrixT& w, double sigma, std::vector<Scalar>& x) const {
    for (std::size_t j = 0; j < p_.classes.size(); ++j) {
      Scalar acc = Scalar(0);
      for (auto [cell, flag] : p_.classes[j].members)
        acc += Traits::flip(-sigma * w.data()[cell], flag);
      x[j] = Traits::constrain(acc / static_cast<double>(p_.classes[j].members.size()),
                               p_.classes[j].real_valued);
    }
  }

  static double inner(const MatrixT& a, const MatrixT& b) {
    if constexpr (std::is_same_v<Scalar, Complex>)
      return a.cwiseProduct(b.conjugate()).sum().real();
    else
      return a.cwiseProduct(b).sum();
  }

  // Projection onto {S : class sums of S = q_j for free classes}. For a
  // complex class the constraint is sum over direct slots = q_j; the
  // correction keeps S Hermitian. Self-paired classes constrain the real
  // part only.
  void project_affine(MatrixT& s) const {
    for (std::size_t j = 0; j < p_.classes.size(); ++j) {
      const auto& cls = p_.classes[j];
      if (cls.pinned) continue;
      if constexpr (std::is_same_v<Scalar, Complex>) {
        if (cls.real_valued) {
          double acc = 0.0;
          for (auto [cell, flag] : cls.members) acc += s.data()[cell].real();
          double eps = (2.0 * p_.q[j].real() - acc) / static_cast<double>(cls.members.size());
          for (auto [cell, flag] : cls.members) s.data()[cell] += eps;
        } else {
          Complex acc(0.0, 0.0);
          int n_direct = 0;
          for (auto [cell, flag] : cls.members)
            if (!flag) {
              acc += s.data()[cell];
              ++n_direct;
            }
          Complex eps = (p_.q[j] - acc) / static_cast<double>(n_direct);
          for (auto [cell, flag] : cls.members)
            s.data()[cell] += flag ? std::conj(eps) : eps;
        }
      } else {
        double acc = 0.0;
        for (auto [cell, flag] : cls.members) acc += Traits::flip(s.data()[cell], flag);
        double eps = (p_.q[j] - acc) / static_cast<double>(cls.members.size());
        for (auto [cell, flag] : cls.members) s.data()[cell] += Traits::flip(eps, flag);
      }
    }
  }

  void psd_project(MatrixT& w) const {
    if constexpr (std::is_same_v<Scalar, double>) {
      if (complex_side > 0 && 2 * complex_side == p_.n) {
        project_realified(w);
        return;
      }
    }
    w = (w + w.adjoint()).eval() * 0.5;
    Eigen::SelfAdjointEigenSolver<MatrixT> es(w);
    clamp_reconstruct(es, w);
  }

  template <typename M>
  static void clamp_reconstruct(const Eigen::SelfAdjointEigenSolver<M>& es, M& out) {
    const auto& ev = es.eigenvalues();
    Eigen::Index n = ev.size(), first_pos = n;
    for (Eigen::Index i = 0; i < n; ++i)
      if (ev(i) > 0) {
        first_pos = i;
        break;
      }
    Eigen::Index npos = n - first_pos, nneg = first_pos;
    if (npos == 0) {
      out.setZero();
      return;
    }
    if (npos <= nneg) {
      auto v = es.eigenvectors().rightCols(npos);
      out.noalias() = v * ev.tail(npos).asDiagonal() * v.adjoint();
    } else if (nneg > 0) {
      auto v = es.eigenvectors().leftCols(nneg);
      out.noalias() -= v * ev.head(nneg).asDiagonal() * v.adjoint();
    }
  }

  // Realified structure [[A, -B], [B, A]] <-> Hermitian A + iB: project in
  // the complex half-size space and re-embed.
  void project_realified(RealMatrix& w) const {
    const int n = complex_side;
    Matrix h(n, n);
    h.real() = 0.5 * (w.topLeftCorner(n, n) + w.bottomRightCorner(n, n));
    h.imag() = 0.5 * (w.bottomLeftCorner(n, n) - w.topRightCorner(n, n));
    h = (h + h.adjoint()).eval() * 0.5;
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    clamp_reconstruct(es, h);
    w.topLeftCorner(n, n) = h.real();
    w.bottomRightCorner(n, n) = h.real();
    w.bottomLeftCorner(n, n) = h.imag();
    w.topRightCorner(n, n) = -h.imag();
  }

  const PartitionSdp<Scalar>& p_;
  SolverOptions opts_;
};

/// Embedded solve over an explicit equality-constraint list (small,
/// hand-built instances): same ADMM loop, with the affine projection done
/// through a least-squares factorization of the constraint matrix.
inline SolveInfo solve_generic(const SDPInstance& inst, const SolverOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  const int n = inst.side;
  const std::size_t p = inst.constraints.size();
  const std::int64_t nn = static_cast<std::int64_t>(n) * n;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, nn);
  RealVector b(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (auto [cell, coeff] : inst.constraints[i].entries) a(i, cell) += coeff;
    b(i) = inst.constraints[i].rhs;
  }
  RealVector g = RealVector::Zero(nn);
  for (auto [cell, coeff] : inst.objective) g(cell) += coeff;

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_t(a.transpose());
  {
    RealVector x0 = cod.solve(b);
    if ((a * x0 - b).norm() > 1e-9 * (1.0 + b.norm())) {
      SolveInfo info;
      info.status = SolveStatus::infeasible;
      info.wall_time =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      return info;
    }
  }
  auto proj_affine = [&](const RealVector& v) {
    return (v - cod.solve((a * v - b).eval())).eval();
  };

  RealMatrix z(n, n), u = RealMatrix::Zero(n, n), mx(n, n);
  {
    RealVector x0 = proj_affine(RealVector::Zero(nn));
    z = Eigen::Map<RealMatrix>(x0.data(), n, n);
    z = (z + z.transpose()).eval() * 0.5;
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(z);
    z = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
        es.eigenvectors().transpose();
  }

  double sigma = 1.0;
  const double relax = 1.6;
  SolveInfo info;
  double primal = 0.0, dual = 0.0, rp = 0.0;
  int it;
  for (it = 1; it <= opts.max_iters; ++it) {
    RealVector target(nn);
    Eigen::Map<RealMatrix>(target.data(), n, n) = z - u;
    RealVector xvec = proj_affine(target - g / sigma);
    mx = Eigen::Map<RealMatrix>(xvec.data(), n, n);
    mx = (mx + mx.transpose()).eval() * 0.5;

    RealMatrix w = relax * mx + (1.0 - relax) * z + u;
    RealMatrix z_prev = z;
    w = (w + w.transpose()).eval() * 0.5;
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(w);
    z = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
        es.eigenvectors().transpose();
    u = w - z;

    rp = (mx - z).norm();
    double rd = sigma * (z - z_prev).norm();
    if (it % 25 == 0 || it == opts.max_iters) {
      primal = g.dot(Eigen::Map<const RealVector>(mx.data(), nn));
      RealMatrix s = -sigma * u;
      RealVector y = cod_t.solve((g - Eigen::Map<const RealVector>(s.data(), nn)).eval());
      dual = b.dot(y);
      double nx = std::max(mx.norm(), z.norm());
      double eps_p = opts.abs_tol * n + opts.rel_tol * nx;
      double eps_d = opts.abs_tol * std::sqrt(static_cast<double>(p) + 1.0) +
                     opts.rel_tol * sigma * u.norm();
      double eps_g =
          opts.abs_tol + opts.rel_tol * std::max({std::abs(primal), std::abs(dual), 1.0});
      if (rp <= eps_p && rd <= eps_d && std::abs(primal - dual) <= 10.0 * eps_g) {
        info.status = SolveStatus::optimal;
        break;
      }
      double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      if (elapsed > opts.time_limit) break;
    }
    if (it % 50 == 0) {
      if (rp > 10.0 * rd && sigma < 1e6) {
        sigma *= 2.0;
        u *= 0.5;
      } else if (rd > 10.0 * rp && sigma > 1e-6) {
        sigma *= 0.5;
        u *= 2.0;
      }
    }
  }
  info.primal = primal;
  info.dual = dual;
  info.iterations = std::min(it, opts.max_iters);
  info.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  if (info.status != SolveStatus::optimal) {
    info.status = (rp <= 1e3 * (opts.abs_tol * n + opts.rel_tol * (1.0 + z.norm())))
                      ? SolveStatus::near_optimal
                      : SolveStatus::numerical_trouble;
  }
  return info;
}

inline PartitionSdp<double> to_partition(const SDPInstance& inst) {
  PartitionSdp<double> p;
  p.n = inst.side;
  p.classes.reserve(inst.classes.size());
  for (const auto& cls : inst.classes) {
    typename PartitionSdp<double>::Cls c;
    c.members.reserve(cls.members.size());
    // Instance signs are +-1; the engine flag marks "negate".
    for (auto [cell, sign] : cls.members)
      c.members.emplace_back(cell, static_cast<std::int8_t>(sign < 0 ? 1 : 0));
    c.pinned = cls.pinned;
    c.pin = cls.pin;
    p.classes.push_back(std::move(c));
  }
  p.q = inst.q;
  return p;
}

}  // namespace detail

/// Run the embedded first-order solver on a standard-form instance.
inline SolveInfo solve_embedded(const SDPInstance& inst, const SolverOptions& opts) {
  opts.check();
  if (!inst.classes.empty()) {
    auto part = detail::to_partition(inst);
    detail::AdmmSolver<double> solver(part, opts);
    solver.complex_side = inst.complex_side;
    return solver.run();
  }
  if (inst.constraints.empty())
    throw std::invalid_argument("solve: instance has neither partition nor constraints");
  return detail::solve_generic(inst, opts);
}

// ---------------------------------------------------------------------------
// SDPA sparse interchange (.dat-s) and the file-based external backend.
// ---------------------------------------------------------------------------

namespace sdpa {

/// Write the instance in SDPA sparse format as the variable-space LMI
///   min c^T x  s.t.  sum_j x_j F_j - F_0 >= 0,
/// one variable per free class, pinned classes folded into F_0. The
/// objective constant contributed by pinned classes has no slot in the
/// format; it is recorded in the comment header as OFFSET, and the solved
/// optimum plus OFFSET equals the instance optimum. Numbers carry 17
/// significant digits.
inline void write_dat_s(const SDPInstance& inst, std::ostream& os) {
  if (inst.classes.empty())
    throw std::invalid_argument("write_dat_s: instance lacks the partition representation");
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };

  std::vector<int> free_idx;
  double offset = 0.0;
  for (std::size_t j = 0; j < inst.classes.size(); ++j) {
    if (inst.classes[j].pinned)
      offset += inst.q[j] * inst.classes[j].pin;
    else
      free_idx.push_back(static_cast<int>(j));
  }

  os << "*SQUASH sdp export\n";
  os << "*m=" << inst.meta.m << " k=" << inst.meta.k << " dims=" << inst.meta.d_A << "x"
     << inst.meta.d_B << " side=" << inst.side << " state_hash=" << inst.meta.state_hash << "\n";
  os << "*OFFSET " << fmt(offset) << "\n";
  os << free_idx.size() << " = mDIM\n";
  os << "1 = nBLOCK\n";
  os << inst.side << " = bLOCKsTRUCT\n";
  for (std::size_t i = 0; i < free_idx.size(); ++i)
    os << fmt(inst.q[free_idx[i]]) << (i + 1 < free_idx.size() ? " " : "");
  os << "\n";

  auto emit = [&](int matno, const SDPInstance::Cls& cls, double scale) {
    for (auto [cell, sign] : cls.members) {
      std::int64_t r = cell % inst.side, c = cell / inst.side;
      if (r > c) continue;  // symmetric partner implied
      os << matno << " 1 " << (r + 1) << " " << (c + 1) << " " << fmt(scale * sign) << "\n";
    }
  };

  for (std::size_t j = 0; j < inst.classes.size(); ++j)
    if (inst.classes[j].pinned && inst.classes[j].pin != 0.0)
      emit(0, inst.classes[j], -inst.classes[j].pin);  // F_0 = -(pinned part)
  for (std::size_t i = 0; i < free_idx.size(); ++i)
    emit(static_cast<int>(i) + 1, inst.classes[free_idx[i]], 1.0);
}

inline std::string to_dat_s(const SDPInstance& inst) {
  std::ostringstream os;
  write_dat_s(inst, os);
  return os.str();
}

struct DatSHeader {
  int m = 0, k = 0, d_A = 0, d_B = 0, side = 0;
  std::string state_hash;
  double offset = 0.0;
  int mdim = 0;
  int nblock = 0;
  int block_side = 0;
};

/// Re-read the comment header and the structural lines of an exported file.
inline DatSHeader parse_dat_s_header(std::istream& is) {
  DatSHeader h;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && (line[0] == '*' || line[0] == '"')) {
      std::istringstream ls(line.substr(1));
      std::string tok;
      while (ls >> tok) {
        auto eat = [&](const char* key, auto& out) {
          std::string k(key);
          if (tok.rfind(k, 0) == 0) {
            std::istringstream vs(tok.substr(k.size()));
            vs >> out;
            return true;
          }
          return false;
        };
        std::string dims;
        if (eat("m=", h.m) || eat("k=", h.k) || eat("side=", h.side) ||
            eat("state_hash=", h.state_hash))
          continue;
        if (eat("dims=", dims)) {
          auto xpos = dims.find('x');
          if (xpos != std::string::npos) {
            h.d_A = std::atoi(dims.substr(0, xpos).c_str());
            h.d_B = std::atoi(dims.substr(xpos + 1).c_str());
          }
          continue;
        }
        if (tok == "OFFSET") ls >> h.offset;
      }
      continue;
    }
    std::istringstream(line) >> h.mdim;  // first non-comment line
    if (std::getline(is, line)) std::istringstream(line) >> h.nblock;
    if (std::getline(is, line)) std::istringstream(line) >> h.block_side;
    break;
  }
  return h;
}

struct ExternalResult {
  double primal = 0.0;
  double dual = 0.0;
  std::string phase;
  SolveStatus status = SolveStatus::numerical_trouble;
};

/// Parse an SDPA-style result file (objValPrimal / objValDual / phase.value).
inline ExternalResult parse_result(const std::string& text) {
  ExternalResult r;
  bool saw_primal = false, saw_dual = false;
  std::istringstream is(text);
  std::string line;
  auto value_after_eq = [](const std::string& s, double& out) {
    auto pos = s.find('=');
    if (pos == std::string::npos) return false;
    return std::sscanf(s.c_str() + pos + 1, "%lf", &out) == 1;
  };
  while (std::getline(is, line)) {
    if (line.find("objValPrimal") != std::string::npos)
      saw_primal = value_after_eq(line, r.primal) || saw_primal;
    else if (line.find("objValDual") != std::string::npos)
      saw_dual = value_after_eq(line, r.dual) || saw_dual;
    else if (line.find("phase.value") != std::string::npos) {
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok)
        if (tok != "phase.value" && tok != "=") r.phase = tok;
    }
  }
  if (!saw_primal || !saw_dual || r.phase.empty())
    throw protocol_error("external solver output missing objValPrimal/objValDual/phase.value:\n" +
                         text);
  if (r.phase == "pdOPT")
    r.status = SolveStatus::optimal;
  else if (r.phase == "pdFEAS" || r.phase == "pFEAS" || r.phase == "dFEAS")
    r.status = SolveStatus::near_optimal;
  else if (r.phase == "pINF_dFEAS" || r.phase == "dUNBD")
    r.status = SolveStatus::infeasible;
  else if (r.phase == "pFEAS_dINF" || r.phase == "pUNBD")
    r.status = SolveStatus::unbounded;
  else
    r.status = SolveStatus::numerical_trouble;
  return r;
}

}  // namespace sdpa

/// File-based external backend: write .dat-s, invoke `<binary> in out`,
/// parse the result file. The binary comes from the options or from
/// $SQUASH_SDP_SOLVER.
inline SolveInfo solve_external(const SDPInstance& inst, const SolverOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  std::string binary = opts.external_path;
  if (binary.empty()) {
    const char* env = std::getenv("SQUASH_SDP_SOLVER");
    if (env) binary = env;
  }
  if (binary.empty())
    throw environment_error("external backend requested but SQUASH_SDP_SOLVER is unset");
  if (!std::filesystem::exists(binary))
    throw environment_error("external solver binary not found: " + binary);

  namespace fs = std::filesystem;
  fs::path dir =
      fs::temp_directory_path() /
      ("squash-sdp-" +
       std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  fs::create_directories(dir);
  fs::path in = dir / "problem.dat-s", out = dir / "problem.result";
  {
    std::ofstream os(in);
    sdpa::write_dat_s(inst, os);
  }
  std::string cmd = "\"" + binary + "\" \"" + in.string() + "\" \"" + out.string() + "\" > \"" +
                    (dir / "solver.log").string() + "\" 2>&1";
  int rc = std::system(cmd.c_str());
  std::ifstream is(out);
  if (!is)
    throw protocol_error("external solver produced no result file (exit " + std::to_string(rc) +
                         ")");
  std::stringstream buffer;
  buffer << is.rdbuf();
  auto parsed = sdpa::parse_result(buffer.str());

  double offset = 0.0;
  for (std::size_t j = 0; j < inst.classes.size(); ++j)
    if (inst.classes[j].pinned) offset += inst.q[j] * inst.classes[j].pin;

  SolveInfo info;
  info.primal = parsed.primal + offset;
  info.dual = parsed.dual + offset;
  info.status = parsed.status;
  info.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return info;
}

/// Uniform entry point for both backends.
inline SolveInfo solve(const SDPInstance& inst, const SolverOptions& opts = {}) {
  if (opts.backend == SolverBackend::external) return solve_external(inst, opts);
  return solve_embedded(inst, opts);
}

/// Build an instance from an explicit constraint list, recognizing the
/// signed-partition structure (pins and pairwise +-ties) when every
/// constraint fits it; otherwise the constraint list is kept and the solver
/// uses the generic projection path.
inline SDPInstance make_instance(int side,
                                 std::vector<std::pair<std::int64_t, double>> objective,
                                 std::vector<SDPInstance::Constraint> constraints,
                                 SDPInstance::Meta meta = {}) {
  SDPInstance inst;
  inst.side = side;
  inst.objective = std::move(objective);
  inst.constraints = std::move(constraints);
  inst.meta = std::move(meta);

  auto rep_of = [&](std::int64_t cell) {
    std::int64_t r = cell % side, c = cell / side;
    return (r <= c) ? cell : c + r * static_cast<std::int64_t>(side);
  };

  // Normalize each constraint onto distinct unordered cell pairs.
  struct Norm {
    std::vector<std::pair<std::int64_t, double>> pairs;  // representative cell, total coeff
    double rhs = 0.0;
  };
  std::vector<Norm> norms;
  bool partition_ok = true;
  for (const auto& c : inst.constraints) {
    Norm nm;
    nm.rhs = c.rhs;
    for (auto [cell, coeff] : c.entries) {
      std::int64_t rep = rep_of(cell);
      bool found = false;
      for (auto& [pc, pv] : nm.pairs)
        if (pc == rep) {
          pv += coeff;
          found = true;
        }
      if (!found) nm.pairs.emplace_back(rep, coeff);
    }
    std::erase_if(nm.pairs, [](const auto& pr) { return std::abs(pr.second) < 1e-15; });
    if (nm.pairs.empty()) {
      if (std::abs(nm.rhs) > 1e-12) partition_ok = false;
      continue;
    }
    if (nm.pairs.size() == 1) {
      norms.push_back(std::move(nm));
    } else if (nm.pairs.size() == 2 && std::abs(nm.rhs) < 1e-15 &&
               std::abs(std::abs(nm.pairs[0].second) - std::abs(nm.pairs[1].second)) < 1e-15) {
      norms.push_back(std::move(nm));
    } else {
      partition_ok = false;
      break;
    }
  }
  if (!partition_ok) return inst;  // generic constraint path

  // Union-find over unordered cell pairs, tracking relative signs and pins.
  struct Node {
    std::vector<std::pair<std::int64_t, std::int8_t>> members;  // rep cells with signs
    bool pinned = false;
    double pin = 0.0;
  };
  std::unordered_map<std::int64_t, int> owner;
  std::vector<Node> nodes;
  std::vector<int> parent;
  std::function<int(int)> find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto cls_of = [&](std::int64_t rep) {
    auto it = owner.find(rep);
    if (it != owner.end()) return find(it->second);
    int id = static_cast<int>(nodes.size());
    nodes.push_back(Node{{{rep, +1}}, false, 0.0});
    parent.push_back(id);
    owner.emplace(rep, id);
    return id;
  };
  auto sign_in = [&](int cls, std::int64_t rep) -> int {
    for (auto [cell, s] : nodes[cls].members)
      if (cell == rep) return s;
    return 0;
  };

  bool consistent = true;
  for (const auto& nm : norms) {
    if (nm.pairs.size() == 1) {
      auto [rep, coeff] = nm.pairs[0];
      int cls = cls_of(rep);
      double cell_value = nm.rhs / coeff;  // value of X at that cell
      double val = cell_value * sign_in(cls, rep);
      if (nodes[cls].pinned && std::abs(nodes[cls].pin - val) > 1e-9) consistent = false;
      nodes[cls].pinned = true;
      nodes[cls].pin = val;
    } else {
      auto [rep1, c1] = nm.pairs[0];
      auto [rep2, c2] = nm.pairs[1];
      int rel = (c1 * c2 > 0) ? -1 : +1;  // X_rep2 = rel * X_rep1
      int a = cls_of(rep1), b = cls_of(rep2);
      if (a == b) {
        if (sign_in(a, rep2) != rel * sign_in(a, rep1)) consistent = false;
        continue;
      }
      int adjust = rel * sign_in(a, rep1) * sign_in(b, rep2);
      for (auto& [cell, s] : nodes[b].members) {
        s = static_cast<std::int8_t>(s * adjust);
        nodes[a].members.emplace_back(cell, s);
      }
      if (nodes[b].pinned) {
        double val = nodes[b].pin * adjust;
        if (nodes[a].pinned && std::abs(nodes[a].pin - val) > 1e-9) consistent = false;
        nodes[a].pinned = true;
        nodes[a].pin = val;
      }
      nodes[b].members.clear();
      parent[b] = a;
    }
  }
  if (!consistent) return inst;  // generic path reports infeasibility

  // Expand to full-matrix classes (symmetric mirrors) and cover every
  // remaining cell with a free singleton class.
  std::vector<SDPInstance::Cls> classes;
  std::vector<bool> covered(static_cast<std::size_t>(side) * side, false);
  auto push_class = [&](const Node& nd) {
    SDPInstance::Cls cls;
    cls.pinned = nd.pinned;
    cls.pin = nd.pin;
    for (auto [rep, s] : nd.members) {
      cls.members.emplace_back(rep, s);
      covered[rep] = true;
      std::int64_t r = rep % side, c = rep / side;
      if (r != c) {
        std::int64_t mirror = c + r * static_cast<std::int64_t>(side);
        cls.members.emplace_back(mirror, s);
        covered[mirror] = true;
      }
    }
    classes.push_back(std::move(cls));
  };
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
    if (find(i) == i && !nodes[i].members.empty()) push_class(nodes[i]);
  for (std::int64_t c = 0; c < side; ++c)
    for (std::int64_t r = 0; r <= c; ++r) {
      std::int64_t cell = r + c * side;
      if (covered[cell]) continue;
      SDPInstance::Cls cls;
      cls.members.emplace_back(cell, +1);
      if (r != c) cls.members.emplace_back(c + r * static_cast<std::int64_t>(side), +1);
      classes.push_back(std::move(cls));
    }

  inst.classes = std::move(classes);
  inst.q.assign(inst.classes.size(), 0.0);
  std::unordered_map<std::int64_t, std::pair<int, std::int8_t>> cell_class;
  for (int j = 0; j < static_cast<int>(inst.classes.size()); ++j)
    for (auto [cell, s] : inst.classes[j].members) cell_class[cell] = {j, s};
  for (auto [cell, coeff] : inst.objective) {
    auto [j, s] = cell_class.at(cell);
    inst.q[j] += coeff * s;
  }
  return inst;
}

}  // namespace squash
