#pragma once

#include "squash/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace squash {

/// Kronecker product; subsystem dimensions concatenate left-to-right.
inline Matrix tensor(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Spectral decomposition of a Hermitian matrix with a support cutoff.
/// Eigenvalues ascending; an eigenvalue is zero-class iff it is below
/// support_cutoff * max|eigenvalue|.
struct SpectralDecomp {
  RealVector eigenvalues;
  Matrix eigenvectors;     // columns match eigenvalues
  double support_cutoff = tol::support_cutoff;
  double zero_threshold = 0.0;  // absolute threshold derived from the cutoff

  bool is_zero(Eigen::Index j) const { return eigenvalues(j) <= zero_threshold; }
  int rank() const {
    int r = 0;
    for (Eigen::Index j = 0; j < eigenvalues.size(); ++j)
      if (!is_zero(j)) ++r;
    return r;
  }
};

inline double hermiticity_residual(const Matrix& m) {
  double scale = 1.0 + m.cwiseAbs().maxCoeff();
  return (m - m.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline SpectralDecomp spectral(const Matrix& h, double cutoff = tol::support_cutoff) {
  if (h.rows() != h.cols()) throw std::invalid_argument("spectral: matrix must be square");
  if (hermiticity_residual(h) > tol::hard)
    throw std::invalid_argument("spectral: matrix is not Hermitian within tolerance");
  Eigen::SelfAdjointEigenSolver<Matrix> es((h + h.adjoint()) * 0.5);
  SpectralDecomp out;
  out.eigenvalues = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  out.support_cutoff = cutoff;
  double lmax = 0.0;
  for (Eigen::Index j = 0; j < out.eigenvalues.size(); ++j)
    lmax = std::max(lmax, std::abs(out.eigenvalues(j)));
  out.zero_threshold = cutoff * lmax;
  return out;
}

/// Density matrix with an ordered subsystem-dimension profile. Subsystem
/// order is positional and immutable; operations never reorder it.
class DensityMatrix {
 public:
  DensityMatrix(std::vector<int> dims, Matrix data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    validate();
  }

  const std::vector<int>& dims() const { return dims_; }
  const Matrix& data() const { return data_; }
  int total_dim() const { return static_cast<int>(data_.rows()); }
  int dim(int subsystem) const { return dims_.at(subsystem); }
  int num_subsystems() const { return static_cast<int>(dims_.size()); }

  /// Largest validation residual (Hermiticity, trace, negative eigenvalue).
  /// Values in (1e-9, 1e-6] are accepted but worth a warning at I/O surfaces.
  double validation_residual() const { return residual_; }

 private:
  void validate() {
    int total = 1;
    for (int d : dims_) {
      if (d < 1) throw std::invalid_argument("DensityMatrix: dimensions must be positive");
      total *= d;
    }
    if (data_.rows() != total || data_.cols() != total)
      throw std::invalid_argument("DensityMatrix: matrix side does not match dimension product");
    double herm = hermiticity_residual(data_);
    double trres = std::abs(data_.trace() - Complex(1.0, 0.0));
    Eigen::SelfAdjointEigenSolver<Matrix> es((data_ + data_.adjoint()) * 0.5);
    double neg = std::max(0.0, -es.eigenvalues()(0));
    residual_ = std::max({herm, trres, neg});
    if (residual_ > tol::hard)
      throw std::invalid_argument("DensityMatrix: not a density matrix (residual " +
                                  std::to_string(residual_) + ")");
  }

  std::vector<int> dims_;
  Matrix data_;
  double residual_ = 0.0;
};

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  std::vector<int> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return DensityMatrix(std::move(dims), tensor(a.data(), b.data()));
}

namespace detail {

// Row-major strides for a dimension profile.
inline std::vector<int> strides(const std::vector<int>& dims) {
  std::vector<int> s(dims.size(), 1);
  for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * dims[i + 1];
  return s;
}

}  // namespace detail

/// Trace out every subsystem not listed in `keep`. Kept subsystems stay in
/// their original order; `keep` must be a nonempty set of valid indices.
inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  const auto& dims = rho.dims();
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep must be nonempty");
  std::vector<bool> kept(dims.size(), false);
  for (int k : keep) {
    if (k < 0 || k >= static_cast<int>(dims.size()))
      throw std::invalid_argument("partial_trace: subsystem index out of range");
    if (kept[k]) throw std::invalid_argument("partial_trace: duplicate subsystem index");
    kept[k] = true;
  }

  std::vector<int> keep_dims, trace_dims, keep_idx, trace_idx;
  for (int i = 0; i < static_cast<int>(dims.size()); ++i) {
    if (kept[i]) {
      keep_dims.push_back(dims[i]);
      keep_idx.push_back(i);
    } else {
      trace_dims.push_back(dims[i]);
      trace_idx.push_back(i);
    }
  }
  int dk = std::accumulate(keep_dims.begin(), keep_dims.end(), 1, std::multiplies<int>());
  int dt = std::accumulate(trace_dims.begin(), trace_dims.end(), 1, std::multiplies<int>());

  auto full_strides = detail::strides(dims);
  auto keep_strides = detail::strides(keep_dims);
  auto trace_strides = detail::strides(trace_dims);

  // Offset of a packed kept/traced index inside the full index.
  auto expand = [&](int packed, const std::vector<int>& packed_strides,
                    const std::vector<int>& idx_map) {
    int off = 0;
    for (std::size_t i = 0; i < idx_map.size(); ++i) {
      int digit = (packed / packed_strides[i]) % dims[idx_map[i]];
      off += digit * full_strides[idx_map[i]];
    }
    return off;
  };

  std::vector<int> keep_off(dk), trace_off(dt);
  for (int i = 0; i < dk; ++i) keep_off[i] = expand(i, keep_strides, keep_idx);
  for (int i = 0; i < dt; ++i) trace_off[i] = expand(i, trace_strides, trace_idx);

  Matrix out = Matrix::Zero(dk, dk);
  const Matrix& m = rho.data();
  for (int r = 0; r < dk; ++r)
    for (int c = 0; c < dk; ++c) {
      Complex sum = 0.0;
      for (int t = 0; t < dt; ++t) sum += m(keep_off[r] + trace_off[t], keep_off[c] + trace_off[t]);
      out(r, c) = sum;
    }
  return DensityMatrix(keep_dims, std::move(out));
}

inline SpectralDecomp spectral(const DensityMatrix& rho, double cutoff = tol::support_cutoff) {
  return spectral(rho.data(), cutoff);
}

/// Generalized (Moore-Penrose on the support) inverse of a PSD matrix.
inline Matrix gen_inverse(const Matrix& psd, double cutoff = tol::support_cutoff) {
  SpectralDecomp sd = spectral(psd, cutoff);
  Eigen::VectorXd inv(sd.eigenvalues.size());
  for (Eigen::Index j = 0; j < sd.eigenvalues.size(); ++j)
    inv(j) = sd.is_zero(j) ? 0.0 : 1.0 / sd.eigenvalues(j);
  return sd.eigenvectors * inv.asDiagonal() * sd.eigenvectors.adjoint();
}

inline Matrix gen_inverse(const DensityMatrix& rho, double cutoff = tol::support_cutoff) {
  return gen_inverse(rho.data(), cutoff);
}

/// Projector onto the support of a PSD matrix.
inline Matrix support_projector(const SpectralDecomp& sd) {
  Matrix p = Matrix::Zero(sd.eigenvectors.rows(), sd.eigenvectors.rows());
  for (Eigen::Index j = 0; j < sd.eigenvalues.size(); ++j)
    if (!sd.is_zero(j)) p += sd.eigenvectors.col(j) * sd.eigenvectors.col(j).adjoint();
  return p;
}

/// Canonical purification: |phi> = sum_i sqrt(lambda_i) |u_i> (x) |i>, with
/// the reference system appended (dimension = rank). Tracing the reference
/// recovers the state.
struct Purification {
  Vector state;  // on system (x) reference, system-major
  int ref_dim = 1;
};

inline Purification canonical_purification(const DensityMatrix& rho,
                                           double cutoff = tol::support_cutoff) {
  SpectralDecomp sd = spectral(rho, cutoff);
  int n = rho.total_dim();
  int r = std::max(1, sd.rank());
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(n) * r);
  int slot = 0;
  // Descending order so the leading reference index carries the largest weight.
  for (Eigen::Index j = sd.eigenvalues.size() - 1; j >= 0; --j) {
    if (sd.is_zero(j)) continue;
    double amp = std::sqrt(std::max(0.0, sd.eigenvalues(j)));
    for (int s = 0; s < n; ++s) psi(static_cast<Eigen::Index>(s) * r + slot) += amp * sd.eigenvectors(s, j);
    ++slot;
  }
  return Purification{std::move(psi), r};
}

/// Quantum relative entropy D(rho || sigma) in bits; +infinity when the
/// support of rho leaks outside the support of sigma.
inline double rel_entropy(const DensityMatrix& rho, const Matrix& sigma,
                          double cutoff = tol::support_cutoff) {
  if (sigma.rows() != rho.total_dim() || sigma.cols() != rho.total_dim())
    throw std::invalid_argument("rel_entropy: dimension mismatch");
  SpectralDecomp sr = spectral(rho, cutoff);
  SpectralDecomp ss = spectral(sigma, cutoff);

  const Eigen::Index n = sr.eigenvalues.size();
  Matrix overlap = sr.eigenvectors.adjoint() * ss.eigenvectors;  // <u_j | v_k>

  double leak = 0.0;  // tr(rho (I - sigma^0))
  double cross = 0.0; // tr(rho log2 sigma) on the support
  double self = 0.0;  // tr(rho log2 rho)
  for (Eigen::Index j = 0; j < n; ++j) {
    double lam = sr.eigenvalues(j);
    if (sr.is_zero(j) || lam <= 0.0) continue;
    self += lam * std::log2(lam);
    double row_support = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (ss.is_zero(k)) continue;
      double w = std::norm(overlap(j, k));
      row_support += w;
      cross += lam * w * std::log2(ss.eigenvalues(k));
    }
    leak += lam * std::max(0.0, 1.0 - row_support);
  }
  if (leak > tol::support_leak) return std::numeric_limits<double>::infinity();
  return self - cross;
}

inline double rel_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return rel_entropy(rho, sigma.data());
}

/// Von Neumann entropy in bits.
inline double entropy(const DensityMatrix& rho) {
  SpectralDecomp sd = spectral(rho);
  double h = 0.0;
  for (Eigen::Index j = 0; j < sd.eigenvalues.size(); ++j) {
    double lam = sd.eigenvalues(j);
    if (lam > 1e-15) h -= lam * std::log2(lam);  // 0 log 0 = 0
  }
  return h;
}

inline Matrix identity(int d) { return Matrix::Identity(d, d); }

/// H(A|E) = -D(rho_AE || I_A (x) rho_E), in bits. The first `n_a`
/// subsystems form A; the rest form E.
inline double cond_entropy(const DensityMatrix& rho, int n_a) {
  if (n_a < 1 || n_a >= rho.num_subsystems())
    throw std::invalid_argument("cond_entropy: split index out of range");
  std::vector<int> rest;
  int da = 1;
  for (int i = 0; i < rho.num_subsystems(); ++i) {
    if (i < n_a)
      da *= rho.dim(i);
    else
      rest.push_back(i);
  }
  DensityMatrix rho_e = partial_trace(rho, rest);
  return -rel_entropy(rho, tensor(identity(da), rho_e.data()));
}

/// I(A:B|E) = H(A|E) - H(A|BE) in bits, for subsystems grouped as the first
/// n_a (A), the next n_b (B), and the remainder (E, possibly empty).
inline double cmi(const DensityMatrix& rho, int n_a, int n_b) {
  int ns = rho.num_subsystems();
  if (n_a < 1 || n_b < 1 || n_a + n_b > ns)
    throw std::invalid_argument("cmi: invalid subsystem grouping");
  double h_a_be = cond_entropy(rho, n_a);  // conditions on everything after A
  if (n_a + n_b == ns) {
    // Trivial E: I(A:B) = H(A) + H(B) - H(AB) = H(A) - H(A|B).
    std::vector<int> a_idx(n_a);
    std::iota(a_idx.begin(), a_idx.end(), 0);
    return entropy(partial_trace(rho, a_idx)) - h_a_be;
  }
  std::vector<int> ae_idx(n_a);
  std::iota(ae_idx.begin(), ae_idx.end(), 0);
  for (int i = n_a + n_b; i < ns; ++i) ae_idx.push_back(i);
  DensityMatrix rho_ae = partial_trace(rho, ae_idx);
  return cond_entropy(rho_ae, n_a) - h_a_be;
}

/// Werner state on d (x) d: p * Pi_sym/tr + (1-p) * Pi_asym/tr, where
/// Pi_sym = (I + F)/2 and F is the swap operator.
inline DensityMatrix werner(int d, double p) {
  if (d < 2) throw std::invalid_argument("werner: d must be >= 2");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("werner: p must lie in [0,1]");
  int n = d * d;
  Matrix swap = Matrix::Zero(n, n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) swap(i * d + j, j * d + i) = 1.0;
  Matrix eye = Matrix::Identity(n, n);
  double dim_sym = d * (d + 1) / 2.0;
  double dim_asym = d * (d - 1) / 2.0;
  Matrix rho = p * (eye + swap) / (2.0 * dim_sym) + (1.0 - p) * (eye - swap) / (2.0 * dim_asym);
  return DensityMatrix({d, d}, std::move(rho));
}

}  // namespace squash
