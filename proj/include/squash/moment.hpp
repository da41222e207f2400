#pragma once

#include "squash/bound.hpp"
#include "squash/common.hpp"
#include "squash/ncpoly.hpp"
#include "squash/qstate.hpp"
#include "squash/quadrature.hpp"
#include "squash/solver.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace squash {

/// Canonical words of degree <= k over the 4 m d_A^2 letters, ordered by
/// degree then letter-lexicographically. |W_1| = 1 + 4 m d_A^2.
struct MonomialBasis {
  int k = 0, m = 0, d_A = 0;
  std::vector<Word> words;
};

inline std::vector<Letter> all_letters(int m, int d_A) {
  std::vector<Letter> out;
  out.reserve(4 * m * d_A * d_A);
  for (int fam = 0; fam < 2; ++fam)
    for (int i = 1; i <= m; ++i)
      for (int a1 = 1; a1 <= d_A; ++a1)
        for (int a2 = 1; a2 <= d_A; ++a2)
          for (int st = 0; st < 2; ++st)
            out.push_back(Letter{fam ? Family::Z : Family::Y, static_cast<std::uint8_t>(i),
                                 static_cast<std::uint8_t>(a1), static_cast<std::uint8_t>(a2),
                                 st != 0});
  return out;
}

inline MonomialBasis enumerate_words(int k, int m, int d_A, int cap = 2000) {
  if (k < 0) throw std::invalid_argument("enumerate_words: k must be >= 0");
  if (m < 1 || d_A < 1) throw std::invalid_argument("enumerate_words: bad m or d_A");
  if (k > 2) throw std::invalid_argument("enumerate_words: only k <= 2 is supported");

  const double n_letters = 4.0 * m * d_A * d_A;
  const double per_family = n_letters / 2.0;
  double count = 0.0;
  for (int d = 0; d <= k; ++d)
    for (int ly = 0; ly <= d; ++ly)
      count += std::pow(per_family, ly) * std::pow(per_family, d - ly);
  if (count > cap)
    throw resource_error("monomial basis of size " + std::to_string(static_cast<long long>(count)) +
                         " exceeds the cap of " + std::to_string(cap));

  std::vector<Letter> y_letters, z_letters;
  for (const Letter& l : all_letters(m, d_A))
    (l.family == Family::Y ? y_letters : z_letters).push_back(l);

  MonomialBasis basis;
  basis.k = k;
  basis.m = m;
  basis.d_A = d_A;
  // Every (y-sequence, z-sequence) pair with total length <= k; no relations
  // within a family, so sequences are free.
  std::vector<std::vector<std::vector<Letter>>> seqs_by_len(k + 1);
  auto sequences_of = [&](const std::vector<Letter>& alphabet, int len) {
    std::vector<std::vector<Letter>> out;
    if (len == 0) {
      out.push_back({});
      return out;
    }
    std::vector<int> idx(len, 0);
    while (true) {
      std::vector<Letter> seq(len);
      for (int i = 0; i < len; ++i) seq[i] = alphabet[idx[i]];
      out.push_back(std::move(seq));
      int pos = len - 1;
      while (pos >= 0 && ++idx[pos] == static_cast<int>(alphabet.size())) idx[pos--] = 0;
      if (pos < 0) break;
    }
    return out;
  };
  for (int d = 0; d <= k; ++d)
    for (int ly = 0; ly <= d; ++ly)
      for (auto& ys : sequences_of(y_letters, ly))
        for (auto& zs : sequences_of(z_letters, d - ly)) {
          Word w;
          w.y_part = ys;
          w.z_part = zs;
          basis.words.push_back(std::move(w));
        }
  std::sort(basis.words.begin(), basis.words.end());
  return basis;
}

namespace detail {

// 16-bit letter pack: family(1) | starred(1) | i(6) | a1(4) | a2(4).
inline std::uint16_t pack_letter(const Letter& l) {
  return static_cast<std::uint16_t>((static_cast<unsigned>(l.family) << 15) |
                                    (static_cast<unsigned>(l.starred) << 14) |
                                    (static_cast<unsigned>(l.quad_index) << 8) |
                                    (static_cast<unsigned>(l.row) << 4) |
                                    static_cast<unsigned>(l.col));
}

// Words up to degree 4 pack into 64 bits (letters are nonzero).
inline std::uint64_t pack_word(const Word& w) {
  std::uint64_t key = 0;
  int slot = 0;
  auto put = [&](const Letter& l) {
    key |= static_cast<std::uint64_t>(pack_letter(l)) << (16 * slot);
    ++slot;
  };
  for (const Letter& l : w.y_part) put(l);
  for (const Letter& l : w.z_part) put(l);
  if (slot > 4) throw std::invalid_argument("pack_word: degree > 4");
  return key;
}

struct VarKey {
  std::uint32_t ab = 0;
  std::uint64_t word = 0;
  friend bool operator==(const VarKey&, const VarKey&) = default;
};

struct VarKeyHash {
  std::size_t operator()(const VarKey& k) const {
    std::uint64_t h = k.word * 0x9E3779B97F4A7C15ull;
    h ^= (static_cast<std::uint64_t>(k.ab) << 1) + 0x1234567;
    h *= 0xBF58476D1CE4E5B9ull;
    return static_cast<std::size_t>(h ^ (h >> 31));
  }
};

}  // namespace detail

/// The level-k moment relaxation in complex Hermitian form. Matrix cells are
/// grouped into conjugation-aware classes (one scalar variable each, some
/// pinned to entries of rho_AB), and the objective is a sparse
/// Hermitian-symmetrized cell-coefficient map.
struct MomentProblem {
  int d_A = 0, d_B = 0, m = 0, k = 0;
  MonomialBasis basis;
  int block_side = 0;  // d_A * d_B * |W_k|
  QuadratureRule rule;

  struct MClass {
    std::vector<std::pair<std::int64_t, std::int8_t>> members;  // (cell, 1 = conjugate slot)
    bool pinned = false;
    bool real_valued = false;  // self-paired: the variable is real
    Complex pin{0.0, 0.0};
  };
  std::vector<MClass> classes;
  std::vector<Complex> q;  // engine objective: value(x) = sum_j 2 Re(conj(q_j) x_j)
  std::vector<std::pair<std::int64_t, Complex>> objective_cells;  // obj(M) = sum coeff * M_cell
  std::vector<std::int32_t> cell_class;  // per cell: class id
  std::vector<std::int8_t> cell_flag;    // per cell: conjugate slot?
  bool all_real = false;
  std::string state_hash;
  std::unordered_map<detail::VarKey, std::int32_t, detail::VarKeyHash> var_map;

  /// Variable id of the canonical triple (alpha, beta, word); -1 if absent.
  std::int32_t var_id(int alpha, int beta, const Word& w) const {
    Word ws = involution(w);
    bool use_conj = std::tie(beta, alpha) < std::tie(alpha, beta) ||
                    (alpha == beta && ws < w);
    detail::VarKey key;
    if (use_conj) {
      key.ab = (static_cast<std::uint32_t>(beta) << 16) | static_cast<std::uint32_t>(alpha);
      key.word = detail::pack_word(ws);
    } else {
      key.ab = (static_cast<std::uint32_t>(alpha) << 16) | static_cast<std::uint32_t>(beta);
      key.word = detail::pack_word(w);
    }
    auto it = var_map.find(key);
    return it == var_map.end() ? -1 : it->second;
  }

  double objective_at(const Matrix& moment_matrix) const {
    Complex v = 0.0;
    for (auto [cell, coeff] : objective_cells)
      v += coeff * moment_matrix.data()[cell];
    return std::real(v);
  }
};

inline std::string state_hash(const DensityMatrix& rho, int m = 0, int k = 0) {
  std::uint64_t h = 1469598103934665603ull;
  for (int d : rho.dims()) h = fnv1a(&d, sizeof(d), h);
  h = fnv1a(&m, sizeof(m), h);
  h = fnv1a(&k, sizeof(k), h);
  h = fnv1a(rho.data().data(), sizeof(Complex) * rho.data().size(), h);
  return hash_hex(h);
}

/// Assemble the level-k relaxation of the f-squashed entanglement for the
/// rule's r_m: moment-matrix cells share variables by canonical
/// (alpha, beta, u v*), the top-left block is pinned to rho_AB, and the
/// objective expands (P(Z) + P(Y))/2 tensored with the B identity.
inline MomentProblem build_moment_problem(const DensityMatrix& rho_AB, const QuadratureRule& rule,
                                          int k, int cap = 2000) {
  if (rho_AB.num_subsystems() != 2)
    throw std::invalid_argument("build_moment_problem: state must be bipartite");
  if (k < 1) throw std::invalid_argument("build_moment_problem: k must be >= 1");

  MomentProblem mp;
  mp.d_A = rho_AB.dim(0);
  mp.d_B = rho_AB.dim(1);
  mp.m = rule.m;
  mp.k = k;
  mp.rule = rule;
  mp.basis = enumerate_words(k, rule.m, mp.d_A, cap);
  const int nw = static_cast<int>(mp.basis.words.size());
  const int nab = mp.d_A * mp.d_B;
  const std::int64_t n = static_cast<std::int64_t>(nab) * nw;
  mp.block_side = static_cast<int>(n);
  mp.state_hash = state_hash(rho_AB, rule.m, k);
  mp.all_real = rho_AB.data().imag().cwiseAbs().maxCoeff() <= 1e-14;

  // Per word pair (u, v): the canonical product u v*, its involution, and
  // their order (for representative selection).
  struct PairInfo {
    std::uint64_t key = 0, key_star = 0;
    int cmp = 0;  // w <=> w*
    bool is_empty = false;
  };
  std::vector<PairInfo> pair_info(static_cast<std::size_t>(nw) * nw);
  for (int ui = 0; ui < nw; ++ui) {
    for (int vi = 0; vi < nw; ++vi) {
      Word w = word_mul(mp.basis.words[ui], involution(mp.basis.words[vi]));
      Word ws = involution(w);
      PairInfo pi;
      pi.key = detail::pack_word(w);
      pi.key_star = detail::pack_word(ws);
      auto c = w <=> ws;
      pi.cmp = c < 0 ? -1 : (c > 0 ? 1 : 0);
      pi.is_empty = w.empty();
      pair_info[static_cast<std::size_t>(ui) * nw + vi] = pi;
    }
  }

  mp.cell_class.assign(static_cast<std::size_t>(n) * n, -1);
  mp.cell_flag.assign(static_cast<std::size_t>(n) * n, 0);
  auto cell_of = [n](std::int64_t r, std::int64_t c) { return r + c * n; };

  for (std::int64_t r = 0; r < n; ++r) {
    const int alpha = static_cast<int>(r / nw), ui = static_cast<int>(r % nw);
    for (std::int64_t c = r; c < n; ++c) {
      const int beta = static_cast<int>(c / nw), vi = static_cast<int>(c % nw);
      const PairInfo& pi = pair_info[static_cast<std::size_t>(ui) * nw + vi];

      // Representative of {(alpha, beta, w), (beta, alpha, w*)}.
      bool self = (alpha == beta) && (pi.cmp == 0);
      bool use_conj = (beta < alpha) || (alpha == beta && pi.cmp > 0);
      detail::VarKey key;
      if (use_conj) {
        key.ab = (static_cast<std::uint32_t>(beta) << 16) | static_cast<std::uint32_t>(alpha);
        key.word = pi.key_star;
      } else {
        key.ab = (static_cast<std::uint32_t>(alpha) << 16) | static_cast<std::uint32_t>(beta);
        key.word = pi.key;
      }

      auto [it, inserted] = mp.var_map.try_emplace(key, static_cast<std::int32_t>(mp.classes.size()));
      if (inserted) {
        MomentProblem::MClass cls;
        cls.real_valued = self;
        if (pi.is_empty) {
          cls.pinned = true;
          int pa = use_conj ? beta : alpha, pb = use_conj ? alpha : beta;
          cls.pin = rho_AB.data()(pa, pb);
        }
        mp.classes.push_back(std::move(cls));
      }
      const std::int32_t id = it->second;

      std::int8_t flag_rc = self ? 0 : (use_conj ? 1 : 0);
      std::int64_t cell_rc = cell_of(r, c);
      mp.classes[id].members.emplace_back(cell_rc, flag_rc);
      mp.cell_class[cell_rc] = id;
      mp.cell_flag[cell_rc] = flag_rc;
      if (r != c) {
        std::int8_t flag_cr = self ? 0 : (flag_rc ? 0 : 1);
        std::int64_t cell_cr = cell_of(c, r);
        mp.classes[id].members.emplace_back(cell_cr, flag_cr);
        mp.cell_class[cell_cr] = id;
        mp.cell_flag[cell_cr] = flag_cr;
      }
    }
  }

  // Objective: 1/2 L((P(Z) + P(Y)) (x) I_B), expanded into moment cells via
  // the degree-<=2 factorizations w = u v* with u, v in W_k.
  std::map<Word, int> word_index;
  for (int i = 0; i < nw; ++i) word_index.emplace(mp.basis.words[i], i);
  auto index_of_word = [&](const Word& w) {
    auto it = word_index.find(w);
    if (it == word_index.end())
      throw std::logic_error("build_moment_problem: factor word missing from basis");
    return it->second;
  };

  std::unordered_map<std::int64_t, Complex> gamma;
  auto add_gamma = [&](std::int64_t cell, Complex g) { gamma[cell] += g; };
  for (Family fam : {Family::Y, Family::Z}) {
    MatPoly poly = build_P_m(rule, mp.d_A, fam);
    for (int a1 = 0; a1 < mp.d_A; ++a1)
      for (int a2 = 0; a2 < mp.d_A; ++a2)
        for (const auto& [w, coeff] : poly.entry(a1, a2)) {
          int ui = 0, vi = 0;
          if (w.degree() == 0) {
            ui = vi = index_of_word(Word{});
          } else if (w.degree() == 1) {
            ui = index_of_word(w);
            vi = index_of_word(Word{});
          } else if (w.degree() == 2) {
            std::vector<Letter> seq;
            for (const Letter& l : w.y_part) seq.push_back(l);
            for (const Letter& l : w.z_part) seq.push_back(l);
            ui = index_of_word(canonicalize({seq[0]}));
            vi = index_of_word(canonicalize({star(seq[1])}));
          } else {
            throw std::logic_error("build_moment_problem: objective degree > 2");
          }
          for (int b = 0; b < mp.d_B; ++b) {
            std::int64_t row = static_cast<std::int64_t>(a1 * mp.d_B + b) * nw + ui;
            std::int64_t col = static_cast<std::int64_t>(a2 * mp.d_B + b) * nw + vi;
            add_gamma(cell_of(row, col), 0.5 * coeff);
          }
        }
  }
  // Hermitian symmetrization of the cell-coefficient map.
  std::unordered_map<std::int64_t, Complex> sym;
  for (auto [cell, g] : gamma) {
    std::int64_t r = cell % n, c = cell / n;
    sym[cell] += 0.5 * g;
    sym[cell_of(c, r)] += 0.5 * std::conj(g);
  }
  mp.objective_cells.assign(sym.begin(), sym.end());
  std::sort(mp.objective_cells.begin(), mp.objective_cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Per-class objective vector for the variable-space engine.
  mp.q.assign(mp.classes.size(), Complex(0.0, 0.0));
  for (auto [cell, g] : mp.objective_cells) {
    std::int32_t j = mp.cell_class[cell];
    mp.q[j] += 0.5 * (mp.cell_flag[cell] ? g : std::conj(g));
  }
  return mp;
}

/// Encode the complex Hermitian problem as a real symmetric one of doubled
/// side: M = A + iB maps to [[A, -B], [B, A]]. Each complex class splits
/// into a real-part and an imaginary-part class; pins split likewise, and
/// the objective is scaled so the real optimum equals the complex optimum.
inline SDPInstance realify(const MomentProblem& mp) {
  SDPInstance inst;
  const std::int64_t n = mp.block_side;
  inst.side = static_cast<int>(2 * n);
  inst.complex_side = static_cast<int>(n);
  inst.meta.m = mp.m;
  inst.meta.k = mp.k;
  inst.meta.d_A = mp.d_A;
  inst.meta.d_B = mp.d_B;
  inst.meta.state_hash = mp.state_hash;

  const std::int64_t big = 2 * n;
  auto cell_big = [big](std::int64_t r, std::int64_t c) { return r + c * big; };

  inst.classes.reserve(2 * mp.classes.size());
  inst.q.reserve(2 * mp.classes.size());
  for (std::size_t j = 0; j < mp.classes.size(); ++j) {
    const auto& cls = mp.classes[j];
    SDPInstance::Cls re_cls, im_cls;
    for (auto [cell, flag] : cls.members) {
      std::int64_t r = cell % n, c = cell / n;
      re_cls.members.emplace_back(cell_big(r, c), +1);
      re_cls.members.emplace_back(cell_big(n + r, n + c), +1);
      std::int8_t s = flag ? -1 : +1;  // conjugate slot carries -Im(x)
      im_cls.members.emplace_back(cell_big(n + r, c), s);
      im_cls.members.emplace_back(cell_big(r, n + c), static_cast<std::int8_t>(-s));
    }
    re_cls.pinned = cls.pinned;
    im_cls.pinned = cls.pinned || cls.real_valued;
    re_cls.pin = cls.pin.real();
    im_cls.pin = cls.pinned ? cls.pin.imag() : 0.0;
    inst.classes.push_back(std::move(re_cls));
    inst.q.push_back(2.0 * mp.q[j].real());
    inst.classes.push_back(std::move(im_cls));
    inst.q.push_back(2.0 * mp.q[j].imag());
  }

  // Realified objective matrix (for the constraint view and generic tests).
  std::unordered_map<std::int64_t, double> c_entries;
  for (auto [cell, g] : mp.objective_cells) {
    std::int64_t r = cell % n, c = cell / n;
    c_entries[cell_big(r, c)] += 0.5 * g.real();
    c_entries[cell_big(n + r, n + c)] += 0.5 * g.real();
    c_entries[cell_big(n + r, c)] -= 0.5 * g.imag();
    c_entries[cell_big(r, n + c)] += 0.5 * g.imag();
  }
  inst.objective.assign(c_entries.begin(), c_entries.end());
  std::sort(inst.objective.begin(), inst.objective.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return inst;
}

namespace detail {

inline PartitionSdp<Complex> to_complex_partition(const MomentProblem& mp) {
  PartitionSdp<Complex> p;
  p.n = mp.block_side;
  p.classes.reserve(mp.classes.size());
  for (const auto& cls : mp.classes) {
    PartitionSdp<Complex>::Cls c;
    c.members = cls.members;
    c.pinned = cls.pinned;
    c.real_valued = cls.real_valued;
    c.pin = cls.pin;
    p.classes.push_back(std::move(c));
  }
  p.q = mp.q;
  return p;
}

// For states with a real matrix representation the optimal moment matrix can
// be taken real; the complex problem restricts losslessly to a real one of
// the same side.
inline PartitionSdp<double> to_real_partition(const MomentProblem& mp) {
  PartitionSdp<double> p;
  p.n = mp.block_side;
  p.classes.reserve(mp.classes.size());
  p.q.reserve(mp.classes.size());
  for (std::size_t j = 0; j < mp.classes.size(); ++j) {
    const auto& cls = mp.classes[j];
    PartitionSdp<double>::Cls c;
    c.members.reserve(cls.members.size());
    for (auto [cell, flag] : cls.members) c.members.emplace_back(cell, 0);
    c.pinned = cls.pinned;
    c.pin = cls.pin.real();
    p.classes.push_back(std::move(c));
    p.q.push_back(2.0 * mp.q[j].real());
  }
  return p;
}

}  // namespace detail

struct LowerBoundOptions {
  int basis_cap = 2000;
  bool force_realified = false;  // solve the doubled real instance instead of
                                 // the native complex/real one (test hook)
};

/// Level-k SDP lower bound on E_sq^(m), hence on E_sq, in bits. The solver
/// optimum lower-bounds the noncommutative optimum of the relaxation chain;
/// `value` is raw (may be slightly negative), `value_clamped` floors at 0.
inline BoundResult lower_bound(const DensityMatrix& rho_AB, int m, int k,
                               const SolverOptions& solver_opts = {},
                               const LowerBoundOptions& opts = {}) {
  QuadratureRule rule = gauss_radau(m);
  MomentProblem mp = build_moment_problem(rho_AB, rule, k, opts.basis_cap);

  SolveInfo info;
  if (solver_opts.backend == SolverBackend::external) {
    info = solve_external(realify(mp), solver_opts);
  } else if (opts.force_realified) {
    info = solve_embedded(realify(mp), solver_opts);
  } else if (mp.all_real) {
    auto part = detail::to_real_partition(mp);
    detail::AdmmSolver<double> solver(part, solver_opts);
    info = solver.run();
  } else {
    auto part = detail::to_complex_partition(mp);
    detail::AdmmSolver<Complex> solver(part, solver_opts);
    info = solver.run();
  }

  BoundResult out;
  // The solver's objective estimate: the dual value, which converges to the
  // SDP optimum also when the primal infimum is approached only in the limit
  // (these relaxations have recession directions of zero cost).
  out.value = info.dual;
  out.value_clamped = std::max(0.0, info.dual);
  out.kind = BoundKind::lower_sdp;
  out.m = m;
  out.k = k;
  out.solver_status = info.status;
  out.primal_dual_gap = std::abs(info.primal - info.dual);
  out.wall_time = info.wall_time;
  return out;
}

/// SDPA export of the realified level-k relaxation.
inline void export_sdpa(const DensityMatrix& rho_AB, int m, int k, std::ostream& os,
                        int basis_cap = 2000) {
  QuadratureRule rule = gauss_radau(m);
  MomentProblem mp = build_moment_problem(rho_AB, rule, k, basis_cap);
  sdpa::write_dat_s(realify(mp), os);
}

}  // namespace squash
