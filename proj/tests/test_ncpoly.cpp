#include "squash/ncpoly.hpp"

#include "squash/fdiv.hpp"
#include "test_util.hpp"

#include <catch2/catch.hpp>

#include <random>

using namespace squash;
using namespace squash::testing;

namespace {

Letter mk(Family f, int i, int a1, int a2, bool star = false) {
  return Letter{f, static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(a1),
                static_cast<std::uint8_t>(a2), star};
}

std::vector<Letter> random_letters(int count, int m, int d_A, std::mt19937_64& rng) {
  std::vector<Letter> out;
  for (int i = 0; i < count; ++i)
    out.push_back(mk(rng() % 2 ? Family::Z : Family::Y, 1 + int(rng() % m), 1 + int(rng() % d_A),
                     1 + int(rng() % d_A), rng() % 2 != 0));
  return out;
}

}  // namespace

TEST_CASE("canonicalize moves Y letters left, keeps per-family order") {
  Letter z11 = mk(Family::Z, 1, 1, 1), y12 = mk(Family::Y, 1, 1, 2);
  Word w = canonicalize({z11, y12});
  REQUIRE(w.y_part.size() == 1);
  REQUIRE(w.z_part.size() == 1);
  CHECK(w.y_part[0] == y12);
  CHECK(w.z_part[0] == z11);

  // No relation between a letter and its star.
  Letter y = mk(Family::Y, 1, 1, 1), ys = star(y);
  Word w2 = canonicalize({y, ys});
  REQUIRE(w2.y_part.size() == 2);
  CHECK(w2.y_part[0] == y);
  CHECK(w2.y_part[1] == ys);
  CHECK(w2 != canonicalize({ys, y}));

  Letter z = mk(Family::Z, 2, 1, 1), zs = star(z), y2 = mk(Family::Y, 2, 2, 1), y2s = star(y2);
  Word w3 = canonicalize({z, y2, zs, y2s});
  REQUIRE(w3.y_part.size() == 2);
  REQUIRE(w3.z_part.size() == 2);
  CHECK(w3.y_part[0] == y2);
  CHECK(w3.y_part[1] == y2s);
  CHECK(w3.z_part[0] == z);
  CHECK(w3.z_part[1] == zs);
}

TEST_CASE("canonicalization is order-independent across families") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    auto letters = random_letters(5, 2, 2, rng);
    Word base = canonicalize(letters);
    // Any interleaving preserving per-family subsequences canonicalizes
    // identically: push Y letters earlier one swap at a time.
    auto shuffled = letters;
    for (std::size_t i = 1; i < shuffled.size(); ++i)
      if (shuffled[i].family == Family::Y && shuffled[i - 1].family == Family::Z)
        std::swap(shuffled[i], shuffled[i - 1]);
    CHECK(canonicalize(shuffled) == base);
    // Idempotent: canonicalizing the flattened canonical word is a fixpoint.
    std::vector<Letter> flat;
    for (const Letter& l : base.y_part) flat.push_back(l);
    for (const Letter& l : base.z_part) flat.push_back(l);
    CHECK(canonicalize(flat) == base);
  }
}

TEST_CASE("involution") {
  CHECK(involution(Word{}) == Word{});
  Letter y = mk(Family::Y, 1, 2, 1);
  Word w = canonicalize({y});
  Word ws = involution(w);
  REQUIRE(ws.y_part.size() == 1);
  CHECK(ws.y_part[0] == star(y));

  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    Word u = canonicalize(random_letters(2, 2, 2, rng));
    Word v = canonicalize(random_letters(2, 2, 2, rng));
    CHECK(involution(involution(u)) == u);
    CHECK(involution(word_mul(u, v)) == word_mul(involution(v), involution(u)));
  }
}

TEST_CASE("word multiplication") {
  std::mt19937_64 rng(79);
  Word empty;
  for (int trial = 0; trial < 30; ++trial) {
    Word u = canonicalize(random_letters(3, 2, 2, rng));
    CHECK(word_mul(u, empty) == u);
    CHECK(word_mul(empty, u) == u);
    Word v = canonicalize(random_letters(2, 2, 2, rng));
    Word w = canonicalize(random_letters(2, 2, 2, rng));
    CHECK(word_mul(word_mul(u, v), w) == word_mul(u, word_mul(v, w)));
    CHECK(word_mul(u, v).degree() == u.degree() + v.degree());
  }
  // Z-word times Y-word hoists the Y part left.
  Word zw = canonicalize({mk(Family::Z, 1, 1, 1)});
  Word yw = canonicalize({mk(Family::Y, 1, 2, 2)});
  Word prod = word_mul(zw, yw);
  CHECK(prod.y_part.size() == 1);
  CHECK(prod.z_part.size() == 1);
}

TEST_CASE("build_P_m single node single dimension") {
  QuadratureRule r1 = gauss_radau(1);
  MatPoly p = build_P_m(r1, 1, Family::Z);
  REQUIRE(p.side() == 1);
  const auto& terms = p.entry(0, 0);
  // (1/ln2)(1 + Z + Z* + Z Z*): the fixed node t=1 kills the (1-t) term.
  REQUIRE(terms.size() == 4);
  Letter z = mk(Family::Z, 1, 1, 1);
  double c = 1.0 / kLn2;
  CHECK(terms.at(Word{}).real() == Approx(c));
  CHECK(terms.at(canonicalize({z})).real() == Approx(c));
  CHECK(terms.at(canonicalize({star(z)})).real() == Approx(c));
  CHECK(terms.at(canonicalize({z, star(z)})).real() == Approx(c));
  CHECK(p.is_hermitian_symmetric());
}

TEST_CASE("build_P_m structure for general m, d_A") {
  QuadratureRule rule = gauss_radau(3);
  int d_A = 2;
  for (Family fam : {Family::Y, Family::Z}) {
    MatPoly p = build_P_m(rule, d_A, fam);
    CHECK(p.is_hermitian_symmetric());
    for (int a1 = 0; a1 < d_A; ++a1)
      for (int a2 = 0; a2 < d_A; ++a2) {
        const auto& terms = p.entry(a1, a2);
        std::size_t consts = 0, linear = 0, quad = 0;
        for (const auto& [w, coeff] : terms) {
          if (w.degree() == 0) ++consts;
          if (w.degree() == 1) ++linear;
          if (w.degree() == 2) ++quad;
        }
        int m = rule.m;
        if (a1 == a2) {
          // The m per-node constants merge into a single term.
          CHECK(consts == 1);
          double total = 0.0;
          for (int i = 0; i < m; ++i) total += rule.weights[i] / (rule.nodes[i] * kLn2);
          CHECK(terms.at(Word{}).real() == Approx(total));
          CHECK(linear == std::size_t(2 * m));
          // (m-1) d_A from the (1-t) sum (the t=1 node drops out) plus
          // m d_A^2 from the delta term.
          CHECK(quad == std::size_t((m - 1) * d_A + m * d_A * d_A));
        } else {
          CHECK(consts == 0);
          CHECK(linear == std::size_t(2 * m));
          CHECK(quad == std::size_t((m - 1) * d_A));
        }
      }
  }
}

TEST_CASE("MatPoly dump golden") {
  QuadratureRule r1 = gauss_radau(1);
  MatPoly p = build_P_m(r1, 1, Family::Z);
  std::string expected =
      "(1,1): 1.44269504089*1 1.44269504089*Z1[1,1] 1.44269504089*Z1[1,1]* "
      "1.44269504089*Z1[1,1].Z1[1,1]*\n";
  CHECK(p.dump() == expected);
}

TEST_CASE("evaluate: constant-only assignment") {
  QuadratureRule rule = gauss_radau(2);
  int d_A = 2, dim_h = 3;
  MatPoly p = build_P_m(rule, d_A, Family::Z);
  Assignment zero;
  for (int i = 1; i <= rule.m; ++i)
    for (int a1 = 1; a1 <= d_A; ++a1)
      for (int a2 = 1; a2 <= d_A; ++a2)
        zero[mk(Family::Z, i, a1, a2)] = Matrix::Zero(dim_h, dim_h);

  std::mt19937_64 rng(83);
  DensityMatrix rho = random_density({d_A, dim_h}, rng);
  double expect = 0.0;  // only the delta constants survive
  for (int i = 0; i < rule.m; ++i) expect += rule.weights[i] / (rule.nodes[i] * kLn2);
  CHECK(evaluate(p, zero, rho) == Approx(expect).margin(1e-9));
}

TEST_CASE("evaluate matches the block-assembled operator formula") {
  QuadratureRule rule = gauss_radau(2);
  int d_A = 2, dim_h = 3;
  std::mt19937_64 rng(89);
  MatPoly p = build_P_m(rule, d_A, Family::Z);

  for (int trial = 0; trial < 10; ++trial) {
    Assignment assign;
    std::vector<Matrix> blocks(rule.m);  // assembled Z_i on A (x) H
    for (int i = 1; i <= rule.m; ++i) {
      Matrix zi = Matrix::Zero(d_A * dim_h, d_A * dim_h);
      for (int a1 = 1; a1 <= d_A; ++a1)
        for (int a2 = 1; a2 <= d_A; ++a2) {
          Matrix op = random_complex(dim_h, dim_h, rng);
          assign[mk(Family::Z, i, a1, a2)] = op;
          zi.block((a1 - 1) * dim_h, (a2 - 1) * dim_h, dim_h, dim_h) = op;
        }
      blocks[i - 1] = zi;
    }
    DensityMatrix rho = random_density({d_A, dim_h}, rng);

    double expect = 0.0;
    for (int i = 0; i < rule.m; ++i) {
      double t = rule.nodes[i], w = rule.weights[i];
      const Matrix& zi = blocks[i];
      Matrix eye = Matrix::Identity(d_A * dim_h, d_A * dim_h);
      // tr_A(Z Z*) lifted back as I_A (x) .
      Matrix zz = zi * zi.adjoint();
      Matrix tr_a = Matrix::Zero(dim_h, dim_h);
      for (int a = 0; a < d_A; ++a) tr_a += zz.block(a * dim_h, a * dim_h, dim_h, dim_h);
      Matrix lifted = tensor(Matrix::Identity(d_A, d_A), tr_a);
      Complex val = (rho.data() * (eye + zi + zi.adjoint())).trace() +
                    (rho.data() * ((1.0 - t) * zi.adjoint() * zi + t * lifted)).trace();
      expect += w / (t * kLn2) * std::real(val);
    }
    CHECK(evaluate(p, assign, rho) == Approx(expect).margin(1e-9));
  }
}

TEST_CASE("evaluate at the nodewise optimizer reaches -d_rm") {
  QuadratureRule rule = gauss_radau(2);
  int d_A = 2, dim_d = 3;
  std::mt19937_64 rng(97);
  MatPoly p = build_P_m(rule, d_A, Family::Z);

  for (int trial = 0; trial < 5; ++trial) {
    DensityMatrix rho_ad = random_density({d_A, dim_d}, rng);
    Matrix sigma = tensor(Matrix::Identity(d_A, d_A), partial_trace(rho_ad, {1}).data());

    Assignment assign;
    double floor_val = 0.0;
    for (int i = 1; i <= rule.m; ++i) {
      Matrix z_opt = variational_optimizer(rule.nodes[i - 1], rho_ad.data(), sigma);
      for (int a1 = 1; a1 <= d_A; ++a1)
        for (int a2 = 1; a2 <= d_A; ++a2)
          assign[mk(Family::Z, i, a1, a2)] =
              z_opt.block((a1 - 1) * dim_d, (a2 - 1) * dim_d, dim_d, dim_d);
    }
    floor_val = -d_rm(rule, rho_ad.data(), sigma);
    CHECK(evaluate(p, assign, rho_ad) == Approx(floor_val).margin(1e-7));

    // Any other assignment is feasible for the nodewise infimum, so it
    // cannot go below the optimum.
    Assignment randomized;
    for (int i = 1; i <= rule.m; ++i)
      for (int a1 = 1; a1 <= d_A; ++a1)
        for (int a2 = 1; a2 <= d_A; ++a2)
          randomized[mk(Family::Z, i, a1, a2)] = random_complex(dim_d, dim_d, rng);
    CHECK(evaluate(p, randomized, rho_ad) >= floor_val - 1e-8);
  }
}
