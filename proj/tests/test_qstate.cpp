#include "squash/qstate.hpp"

#include "test_util.hpp"

#include <catch2/catch.hpp>

#include <random>

using namespace squash;
using namespace squash::testing;

TEST_CASE("tensor product") {
  Matrix i2 = Matrix::Identity(2, 2);
  CHECK((tensor(i2, i2) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

  Matrix a(2, 2), b(2, 2);
  a << 1, 0, 0, 0;
  double p = 0.3;
  b << p, 0, 0, 1 - p;
  Matrix t = tensor(a, b);
  Matrix expect = Matrix::Zero(4, 4);
  expect(0, 0) = p;
  expect(1, 1) = 1 - p;
  CHECK((t - expect).cwiseAbs().maxCoeff() < 1e-15);

  std::mt19937_64 rng(3);
  Matrix x = random_complex(2, 2, rng), y = random_complex(2, 2, rng);
  Matrix k = tensor(x, y);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          CHECK(std::abs(k(i * 2 + r, j * 2 + c) - x(i, j) * y(r, c)) < 1e-14);
}

TEST_CASE("density matrix validation") {
  CHECK_THROWS_AS(DensityMatrix({2}, Matrix::Identity(2, 2)), std::invalid_argument);  // trace 2
  CHECK_THROWS_AS(DensityMatrix({3}, Matrix::Identity(2, 2) * 0.5), std::invalid_argument);
  Matrix neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  CHECK_THROWS_AS(DensityMatrix({2}, neg), std::invalid_argument);
  DensityMatrix ok({2}, Matrix::Identity(2, 2) * 0.5);
  CHECK(ok.validation_residual() < 1e-12);
}

TEST_CASE("partial trace") {
  std::mt19937_64 rng(5);
  DensityMatrix a = random_density({2}, rng), b = random_density({3}, rng);
  DensityMatrix ab = tensor(a, b);
  DensityMatrix tr_b = partial_trace(ab, {0});
  CHECK((tr_b.data() - a.data()).cwiseAbs().maxCoeff() < 1e-12);
  DensityMatrix tr_a = partial_trace(ab, {1});
  CHECK((tr_a.data() - b.data()).cwiseAbs().maxCoeff() < 1e-12);

  // Maximally entangled pair traces to I/2.
  Vector bell = Vector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  DensityMatrix phi = pure_density({2, 2}, bell);
  CHECK((partial_trace(phi, {0}).data() - Matrix::Identity(2, 2) * 0.5).cwiseAbs().maxCoeff() <
        1e-12);

  // Random bipartite state against the elementwise summation oracle.
  DensityMatrix rho = random_density({2, 3}, rng);
  DensityMatrix got = partial_trace(rho, {0});
  Matrix expect = Matrix::Zero(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int e = 0; e < 3; ++e) expect(i, j) += rho.data()(i * 3 + e, j * 3 + e);
  CHECK((got.data() - expect).cwiseAbs().maxCoeff() < 1e-13);

  CHECK_THROWS_AS(partial_trace(rho, {2}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(rho, {}), std::invalid_argument);

  // Trace and positivity preserved on random inputs.
  for (int trial = 0; trial < 20; ++trial) {
    DensityMatrix r3 = random_density({2, 2, 2}, rng);
    DensityMatrix red = partial_trace(r3, {0, 2});
    CHECK(std::abs(red.data().trace().real() - 1.0) < 1e-9);
    SpectralDecomp sd = spectral(red);
    CHECK(sd.eigenvalues(0) > -1e-9);
  }
}

TEST_CASE("spectral decomposition and generalized inverse") {
  DensityMatrix half({2}, Matrix::Identity(2, 2) * 0.5);
  SpectralDecomp sd = spectral(half);
  CHECK(sd.eigenvalues(0) == Approx(0.5));
  CHECK(sd.eigenvalues(1) == Approx(0.5));

  Matrix d01(2, 2);
  d01 << 0, 0, 0, 1;
  SpectralDecomp sd2 = spectral(d01, 1e-12);
  CHECK(sd2.is_zero(0));
  CHECK(!sd2.is_zero(1));
  CHECK(sd2.rank() == 1);

  std::mt19937_64 rng(9);
  Matrix h = random_hermitian(5, rng);
  SpectralDecomp sd3 = spectral(h);
  Matrix recon = sd3.eigenvectors * sd3.eigenvalues.cast<Complex>().asDiagonal() *
                 sd3.eigenvectors.adjoint();
  CHECK((recon - h).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(spectral(random_complex(3, 3, rng)), std::invalid_argument);

  CHECK((gen_inverse(half) - 2.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  Matrix d10(2, 2);
  d10 << 1, 0, 0, 0;
  CHECK((gen_inverse(DensityMatrix({2}, d10)) - d10).cwiseAbs().maxCoeff() < 1e-12);

  Matrix lowrank = random_psd(5, rng, 3);
  Matrix pinv = gen_inverse(lowrank);
  CHECK((lowrank * pinv * lowrank - lowrank).cwiseAbs().maxCoeff() < 1e-9);
  // gen_inverse(rho) * rho is the support projector.
  SpectralDecomp sdl = spectral(lowrank);
  CHECK((pinv * lowrank - support_projector(sdl)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("canonical purification") {
  std::mt19937_64 rng(13);
  Vector psi = random_pure(3, rng);
  DensityMatrix pure = pure_density({3}, psi);
  Purification p = canonical_purification(pure);
  CHECK(p.ref_dim == 1);
  Complex phase = p.state(0) / psi(0);
  CHECK((p.state - phase * psi).cwiseAbs().maxCoeff() < 1e-9);

  DensityMatrix half({2}, Matrix::Identity(2, 2) * 0.5);
  Purification ph = canonical_purification(half);
  CHECK(ph.ref_dim == 2);
  DensityMatrix lifted({2, 2}, ph.state * ph.state.adjoint());
  CHECK((partial_trace(lifted, {0}).data() - half.data()).cwiseAbs().maxCoeff() < 1e-12);

  DensityMatrix w = werner(2, 0.3);
  Purification pw = canonical_purification(w);
  DensityMatrix big({4, pw.ref_dim}, pw.state * pw.state.adjoint());
  CHECK((partial_trace(big, {0}).data() - w.data()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("relative entropy") {
  std::mt19937_64 rng(17);
  DensityMatrix rho = random_density({3}, rng);
  CHECK(rel_entropy(rho, rho.data()) == Approx(0.0).margin(1e-9));

  Matrix pure(2, 2), mixed(2, 2);
  pure << 1, 0, 0, 0;
  mixed << 0.5, 0, 0, 0.5;
  CHECK(rel_entropy(DensityMatrix({2}, pure), mixed) == Approx(1.0).margin(1e-10));
  CHECK(std::isinf(rel_entropy(DensityMatrix({2}, mixed), pure)));
  CHECK_THROWS_AS(rel_entropy(rho, Matrix::Identity(2, 2)), std::invalid_argument);
}

TEST_CASE("conditional entropy") {
  std::mt19937_64 rng(19);
  DensityMatrix a = random_density({2}, rng), e = random_density({3}, rng);
  DensityMatrix ae = tensor(a, e);
  CHECK(cond_entropy(ae, 1) == Approx(entropy(a)).margin(1e-8));

  Vector bell = Vector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  CHECK(cond_entropy(pure_density({2, 2}, bell), 1) == Approx(-1.0).margin(1e-9));

  DensityMatrix maxmix({2, 2}, Matrix::Identity(4, 4) * 0.25);
  CHECK(cond_entropy(maxmix, 1) == Approx(1.0).margin(1e-9));

  // -D(rho_AE || I (x) rho_E) route equals H(AE) - H(E).
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> dims = (trial % 2) ? std::vector<int>{4, 3} : std::vector<int>{2, 4};
    DensityMatrix rho = random_density(dims, rng);
    double via_d = cond_entropy(rho, 1);
    double via_diff = entropy(rho) - entropy(partial_trace(rho, {1}));
    CHECK(via_d == Approx(via_diff).margin(1e-8));
  }
}

TEST_CASE("pure-state duality H(X|Y) = -H(X|W)") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    Vector psi = random_pure(2 * 2 * 3, rng);
    DensityMatrix rho = pure_density({2, 2, 3}, psi);
    DensityMatrix rho_xy = partial_trace(rho, {0, 1});
    DensityMatrix rho_xw = partial_trace(rho, {0, 2});
    CHECK(cond_entropy(rho_xy, 1) == Approx(-cond_entropy(rho_xw, 1)).margin(1e-8));
  }
}

TEST_CASE("conditional mutual information") {
  std::mt19937_64 rng(29);
  DensityMatrix ab = random_density({2, 2}, rng);
  DensityMatrix e = random_density({3}, rng);
  DensityMatrix abe = tensor(ab, e);
  double i_ab = entropy(partial_trace(ab, {0})) + entropy(partial_trace(ab, {1})) - entropy(ab);
  CHECK(cmi(abe, 1, 1) == Approx(i_ab).margin(1e-8));

  Vector bell = Vector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  DensityMatrix bell_e = tensor(pure_density({2, 2}, bell), DensityMatrix({1}, Matrix::Identity(1, 1)));
  CHECK(cmi(bell_e, 1, 1) == Approx(2.0).margin(1e-9));

  DensityMatrix prod = tensor(tensor(random_density({2}, rng), random_density({2}, rng)),
                              random_density({3}, rng));
  CHECK(cmi(prod, 1, 1) == Approx(0.0).margin(1e-8));

  // Strong subadditivity on random tripartite states.
  for (int trial = 0; trial < 200; ++trial) {
    DensityMatrix rho = random_density({2, 2, 3}, rng);
    CHECK(cmi(rho, 1, 1) >= -1e-8);
  }
}

TEST_CASE("werner states") {
  DensityMatrix singlet = werner(2, 0.0);
  SpectralDecomp sd = spectral(singlet);
  CHECK(sd.rank() == 1);
  Vector s = Vector::Zero(4);
  s(1) = 1.0 / std::sqrt(2.0);
  s(2) = -1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs((s.adjoint() * singlet.data() * s)(0, 0)) - 1.0) < 1e-12);

  DensityMatrix sym = werner(2, 1.0);
  CHECK(std::abs(sym.data().trace().real() - 1.0) < 1e-12);
  SpectralDecomp sd2 = spectral(sym);
  for (int i = 1; i < 4; ++i) CHECK(sd2.eigenvalues(i) == Approx(1.0 / 3.0).margin(1e-12));

  DensityMatrix w3 = werner(3, 0.5);
  CHECK(std::abs(w3.data().trace().real() - 1.0) < 1e-12);
  SpectralDecomp sd3 = spectral(w3);
  int n_sym = 0, n_asym = 0;
  for (int i = 0; i < 9; ++i) {
    if (std::abs(sd3.eigenvalues(i) - 0.5 / 6.0) < 1e-12) ++n_sym;
    if (std::abs(sd3.eigenvalues(i) - 0.5 / 3.0) < 1e-12) ++n_asym;
  }
  CHECK(n_sym == 6);
  CHECK(n_asym == 3);

  CHECK_THROWS_AS(werner(2, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(werner(2, 1.1), std::invalid_argument);
  CHECK_THROWS_AS(werner(1, 0.5), std::invalid_argument);
}
