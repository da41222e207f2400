#pragma once

#include "squash/common.hpp"

#include <cmath>

namespace squash {

/// Gauss-Radau rule on [0,1] with the last node fixed at 1.
///
/// The rule integrates polynomials of degree <= 2m-2 exactly against the
/// uniform weight, so sum_i w_i t_i^j = 1/(j+1) for j = 0..2m-2, and the
/// weight at the fixed node is w_m = 1/m^2.
struct QuadratureRule {
  int m = 0;
  std::vector<double> nodes;    // ascending, in (0,1], last == 1
  std::vector<double> weights;  // positive
};

/// f_t(x) = (x-1)/(t(x-1)+1), the rational family whose integral over
/// t in [0,1] is ln(x). Defined for x > 0, t in [0,1].
inline double f_t(double t, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("f_t: x must be positive");
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("f_t: t must lie in [0,1]");
  return (x - 1.0) / (t * (x - 1.0) + 1.0);
}

/// Build the m-node Gauss-Radau rule on [0,1], right endpoint fixed.
///
/// Nodes and weights come from the symmetric tridiagonal Jacobi matrix of
/// the shifted Legendre recurrence, with the last diagonal entry modified
/// so that 1 is an eigenvalue (Golub's endpoint rule). Weights are the
/// squared first components of the normalized eigenvectors.
inline QuadratureRule gauss_radau(int m) {
  if (m < 1) throw std::invalid_argument("gauss_radau: m must be >= 1");
  if (m > 64) throw std::invalid_argument("gauss_radau: m > 64 unsupported (nodes cluster beyond double precision)");

  // Shifted Legendre on [0,1]: alpha_k = 1/2, beta_k = k^2 / (4(4k^2-1)).
  auto beta = [](int k) {
    double kk = static_cast<double>(k);
    return kk * kk / (4.0 * (4.0 * kk * kk - 1.0));
  };

  RealMatrix jacobi = RealMatrix::Zero(m, m);
  for (int i = 0; i < m; ++i) jacobi(i, i) = 0.5;
  for (int k = 1; k < m; ++k) {
    double b = std::sqrt(beta(k));
    jacobi(k - 1, k) = b;
    jacobi(k, k - 1) = b;
  }

  // Endpoint modification: pick the last diagonal entry so that x=1 is an
  // eigenvalue. With J' the leading (m-1) block, solve (J' - I) d = e_{m-1}
  // and set alpha_m = 1 + beta_{m-1} * d_{m-1}.
  if (m == 1) {
    jacobi(0, 0) = 1.0;
  } else {
    RealMatrix shifted = jacobi.topLeftCorner(m - 1, m - 1) - RealMatrix::Identity(m - 1, m - 1);
    RealVector rhs = RealVector::Zero(m - 1);
    rhs(m - 2) = 1.0;
    RealVector d = shifted.partialPivLu().solve(rhs);
    jacobi(m - 1, m - 1) = 1.0 + beta(m - 1) * d(m - 2);
  }

  Eigen::SelfAdjointEigenSolver<RealMatrix> es(jacobi);
  if (es.info() != Eigen::Success) throw std::runtime_error("gauss_radau: eigensolver failed");

  QuadratureRule rule;
  rule.m = m;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    // The fixed node is exactly 1; keep rounding noise inside (0, 1].
    rule.nodes[i] = std::min(es.eigenvalues()(i), 1.0);
    double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;  // measure mass on [0,1] is 1
  }
  return rule;
}

/// r_m(x) = sum_i w_i f_{t_i}(x), in natural-log units.
inline double r_m_eval(const QuadratureRule& rule, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("r_m_eval: x must be positive");
  double s = 0.0;
  for (int i = 0; i < rule.m; ++i) s += rule.weights[i] * f_t(rule.nodes[i], x);
  return s;
}

/// Apply r_m to a PSD matrix by spectral calculus. Eigenvalues below
/// cutoff * lambda_max are treated as zero and map to 0 (every use site
/// multiplies by a matrix annihilating that subspace).
inline Matrix r_m_matrix(const QuadratureRule& rule, const Matrix& psd,
                         double cutoff = tol::support_cutoff) {
  if (psd.rows() != psd.cols()) throw std::invalid_argument("r_m_matrix: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(psd);
  const auto& ev = es.eigenvalues();
  double lmax = ev.size() ? std::abs(ev(ev.size() - 1)) : 0.0;
  double floor = cutoff * std::max(lmax, 1e-300);
  Eigen::VectorXd mapped(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    mapped(i) = (ev(i) > floor) ? r_m_eval(rule, ev(i)) : 0.0;
  return es.eigenvectors() * mapped.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace squash
