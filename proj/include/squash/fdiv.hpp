#pragma once

#include "squash/common.hpp"
#include "squash/qstate.hpp"
#include "squash/quadrature.hpp"

#include <cmath>
#include <limits>
#include <variant>

namespace squash {

/// Which f the divergence D_f uses. Single-t divergences are in natural
/// units (f_t is rational, no log appears); the quadrature combination
/// carries 1/ln2 so downstream values are in bits.
struct DivergenceSpec {
  struct SingleT {
    double t;
  };
  struct Quadrature {
    QuadratureRule rule;
  };
  std::variant<SingleT, Quadrature> kind;

  static DivergenceSpec single_t(double t) { return {SingleT{t}}; }
  static DivergenceSpec quadrature(QuadratureRule rule) { return {Quadrature{std::move(rule)}}; }
};

namespace detail {

struct DivergencePair {
  SpectralDecomp rho, sigma;
  RealMatrix overlap;  // |<u_j|v_k>|^2
  double leak = 0.0;   // tr(rho (I - sigma^0))
};

inline DivergencePair decompose_pair(const Matrix& rho, const Matrix& sigma, double cutoff) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw std::invalid_argument("f-divergence: dimension mismatch");
  DivergencePair p;
  p.rho = spectral(rho, cutoff);
  p.sigma = spectral(sigma, cutoff);
  Matrix ov = p.rho.eigenvectors.adjoint() * p.sigma.eigenvectors;
  p.overlap = ov.cwiseAbs2();
  for (Eigen::Index j = 0; j < p.rho.eigenvalues.size(); ++j) {
    if (p.rho.is_zero(j)) continue;
    double row = 0.0;
    for (Eigen::Index k = 0; k < p.sigma.eigenvalues.size(); ++k)
      if (!p.sigma.is_zero(k)) row += p.overlap(j, k);
    p.leak += p.rho.eigenvalues(j) * std::max(0.0, 1.0 - row);
  }
  return p;
}

// D_{-f_t} from precomputed spectral data.
inline double d_minus_ft_from(const DivergencePair& p, double t) {
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("d_minus_ft: t must lie in [0,1]");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < p.rho.eigenvalues.size(); ++j) {
    if (p.rho.is_zero(j)) continue;
    double lam = p.rho.eigenvalues(j);
    for (Eigen::Index k = 0; k < p.sigma.eigenvalues.size(); ++k) {
      if (p.sigma.is_zero(k)) continue;
      double w = p.overlap(j, k);
      if (w == 0.0) continue;
      sum += lam * (-f_t(t, p.sigma.eigenvalues(k) / lam)) * w;
    }
  }
  // Support term: (-f_t)(0+) = 1/(1-t) for t < 1; +infinity at t = 1, which
  // only fires when actual mass sits outside supp(sigma).
  if (p.leak > tol::support_leak) {
    if (t >= 1.0) return std::numeric_limits<double>::infinity();
    sum += p.leak / (1.0 - t);
  } else if (t < 1.0) {
    sum += p.leak / (1.0 - t);
  }
  return sum;
}

}  // namespace detail

/// Standard f-divergence D_{-f_t}(rho || sigma), natural units. At t = 0
/// this reduces to 1 - tr(rho^0 sigma).
inline double d_minus_ft(double t, const Matrix& rho, const Matrix& sigma,
                         double cutoff = tol::support_cutoff) {
  return detail::d_minus_ft_from(detail::decompose_pair(rho, sigma, cutoff), t);
}

/// D_{-r_m/ln2}(rho || sigma) = (1/ln2) sum_i w_i D_{-f_{t_i}}, in bits.
inline double d_rm(const QuadratureRule& rule, const Matrix& rho, const Matrix& sigma,
                   double cutoff = tol::support_cutoff) {
  auto pair = detail::decompose_pair(rho, sigma, cutoff);
  double sum = 0.0;
  for (int i = 0; i < rule.m; ++i) {
    double di = detail::d_minus_ft_from(pair, rule.nodes[i]);
    if (std::isinf(di)) return di;
    sum += rule.weights[i] * di;
  }
  return sum / kLn2;
}

inline double evaluate(const DivergenceSpec& spec, const Matrix& rho, const Matrix& sigma) {
  if (const auto* s = std::get_if<DivergenceSpec::SingleT>(&spec.kind))
    return d_minus_ft(s->t, rho, sigma);
  return d_rm(std::get<DivergenceSpec::Quadrature>(spec.kind).rule, rho, sigma);
}

/// Stationary point of the variational expression for D_{-f_t}: the solution
/// of the Sylvester-type equation (1-t) Z rho + t sigma Z = -rho on the
/// support, computed in the eigenbases of rho and sigma (elementwise division
/// after double rotation).
inline Matrix variational_optimizer(double t, const Matrix& rho, const Matrix& sigma,
                                    double cutoff = tol::support_cutoff) {
  if (!(t > 0.0 && t <= 1.0))
    throw std::invalid_argument("variational_optimizer: t must lie in (0,1]");
  if (rho.rows() != sigma.rows())
    throw std::invalid_argument("variational_optimizer: dimension mismatch");
  SpectralDecomp sr = spectral(rho, cutoff);
  SpectralDecomp ss = spectral(sigma, cutoff);
  Matrix w = ss.eigenvectors.adjoint() * sr.eigenvectors;  // sigma-frame rows, rho-frame cols

  const Eigen::Index n = rho.rows();
  Matrix ztil = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (sr.is_zero(j)) continue;  // zero numerator
    double lam = sr.eigenvalues(j);
    for (Eigen::Index k = 0; k < n; ++k) {
      double denom = (1.0 - t) * lam + t * ss.eigenvalues(k);
      Complex num = -lam * w(k, j);
      if (denom <= 1e-14 * (lam + std::abs(ss.eigenvalues(k)))) {
        if (std::abs(num) > 1e-12)
          throw conditioning_error("variational_optimizer: singular stationarity system");
        continue;
      }
      ztil(k, j) = num / denom;
    }
  }
  return ss.eigenvectors * ztil * sr.eigenvectors.adjoint();
}

/// Value of the variational expression at Z, natural units:
/// -(1/t)[tr(rho) + tr(rho(Z+Z*)) + (1-t) tr(rho Z*Z) + t tr(sigma Z Z*)].
inline double variational_expression(double t, const Matrix& rho, const Matrix& sigma,
                                     const Matrix& z) {
  Complex val = rho.trace() + (rho * (z + z.adjoint())).trace() +
                (1.0 - t) * (rho * z.adjoint() * z).trace() +
                t * (sigma * z * z.adjoint()).trace();
  return -std::real(val) / t;
}

/// Variational route to D_{-f_t}; must agree with d_minus_ft whenever
/// supp(rho) is inside supp(sigma).
inline double variational_value(double t, const Matrix& rho, const Matrix& sigma,
                                double cutoff = tol::support_cutoff) {
  return variational_expression(t, rho, sigma, variational_optimizer(t, rho, sigma, cutoff));
}

/// Exact f-squashed entanglement of any state purifying rho_A:
/// (1/ln2) tr(rho_A r_m(rho_A^-)), in bits.
inline double pure_state_sq_m(const QuadratureRule& rule, const DensityMatrix& rho_A) {
  SpectralDecomp sd = spectral(rho_A);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < sd.eigenvalues.size(); ++j) {
    if (sd.is_zero(j)) continue;
    sum += sd.eigenvalues(j) * r_m_eval(rule, 1.0 / sd.eigenvalues(j));
  }
  return sum / kLn2;
}

/// Gap bound: 0 <= E_sq - E_sq^(m) <= (2 d_A - 2)/(m^2 ln2), in bits.
inline double sq_m_error_bound(int m, int d_A) {
  if (m < 1 || d_A < 1) throw std::invalid_argument("sq_m_error_bound: arguments must be positive");
  return (2.0 * d_A - 2.0) / (static_cast<double>(m) * m * kLn2);
}

}  // namespace squash
