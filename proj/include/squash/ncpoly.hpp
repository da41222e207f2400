#pragma once

#include "squash/common.hpp"
#include "squash/qstate.hpp"
#include "squash/quadrature.hpp"

#include <compare>
#include <map>
#include <span>
#include <sstream>
#include <vector>

namespace squash {

enum class Family : std::uint8_t { Y = 0, Z = 1 };

/// One generator of the *-ring: Y_i[a1,a2], Z_i[a1,a2] or a starred copy.
/// Total order (used everywhere ordering matters): family, quadrature index,
/// row, col, starred.
struct Letter {
  Family family = Family::Y;
  std::uint8_t quad_index = 1;  // 1..m
  std::uint8_t row = 1;         // a1 in 1..d_A
  std::uint8_t col = 1;         // a2 in 1..d_A
  bool starred = false;

  friend auto operator<=>(const Letter&, const Letter&) = default;
};

inline Letter star(Letter l) {
  l.starred = !l.starred;
  return l;
}

/// Canonical word: all Y-letters first, then all Z-letters. There are no
/// relations inside a family, so each part keeps its original order.
struct Word {
  std::vector<Letter> y_part;
  std::vector<Letter> z_part;

  int degree() const { return static_cast<int>(y_part.size() + z_part.size()); }
  bool empty() const { return y_part.empty() && z_part.empty(); }

  friend bool operator==(const Word&, const Word&) = default;

  // Order: degree first, then the concatenated letter sequence
  // lexicographically under the Letter total order.
  friend std::strong_ordering operator<=>(const Word& a, const Word& b) {
    if (auto c = a.degree() <=> b.degree(); c != 0) return c;
    auto cmp_part = [](const std::vector<Letter>& x, const std::vector<Letter>& y) {
      return std::lexicographical_compare_three_way(x.begin(), x.end(), y.begin(), y.end());
    };
    if (auto c = cmp_part(a.y_part, b.y_part); c != 0) return c;
    return cmp_part(a.z_part, b.z_part);
  }
};

/// Stable partition of a letter sequence into the canonical Y-then-Z form.
inline Word canonicalize(std::span<const Letter> letters) {
  Word w;
  for (const Letter& l : letters)
    (l.family == Family::Y ? w.y_part : w.z_part).push_back(l);
  return w;
}

inline Word canonicalize(std::initializer_list<Letter> letters) {
  return canonicalize(std::span<const Letter>(letters.begin(), letters.size()));
}

/// w* : reverse each part and toggle every star flag.
inline Word involution(const Word& w) {
  Word out;
  out.y_part.reserve(w.y_part.size());
  out.z_part.reserve(w.z_part.size());
  for (auto it = w.y_part.rbegin(); it != w.y_part.rend(); ++it) out.y_part.push_back(star(*it));
  for (auto it = w.z_part.rbegin(); it != w.z_part.rend(); ++it) out.z_part.push_back(star(*it));
  return out;
}

/// Concatenation followed by canonicalization.
inline Word word_mul(const Word& u, const Word& v) {
  Word out;
  out.y_part = u.y_part;
  out.y_part.insert(out.y_part.end(), v.y_part.begin(), v.y_part.end());
  out.z_part = u.z_part;
  out.z_part.insert(out.z_part.end(), v.z_part.begin(), v.z_part.end());
  return out;
}

inline std::string to_string(const Letter& l) {
  std::ostringstream os;
  os << (l.family == Family::Y ? 'Y' : 'Z') << int(l.quad_index) << '[' << int(l.row) << ','
     << int(l.col) << ']';
  if (l.starred) os << '*';
  return os.str();
}

inline std::string to_string(const Word& w) {
  if (w.empty()) return "1";
  std::string s;
  for (const Letter& l : w.y_part) {
    if (!s.empty()) s += '.';
    s += to_string(l);
  }
  for (const Letter& l : w.z_part) {
    if (!s.empty()) s += '.';
    s += to_string(l);
  }
  return s;
}

/// Matrix-valued noncommutative polynomial with complex coefficients.
class MatPoly {
 public:
  using TermMap = std::map<Word, Complex>;

  explicit MatPoly(int side) : side_(side), entries_(side * side) {}

  int side() const { return side_; }

  /// Merge a term into entry (r, c); coefficients below 1e-15 are pruned.
  void add_term(int r, int c, const Word& w, Complex coeff) {
    auto& terms = entries_.at(index(r, c));
    auto [it, inserted] = terms.try_emplace(w, coeff);
    if (!inserted) {
      it->second += coeff;
      if (std::abs(it->second) < 1e-15) terms.erase(it);
    } else if (std::abs(coeff) < 1e-15) {
      terms.erase(it);
    }
  }

  const TermMap& entry(int r, int c) const { return entries_.at(index(r, c)); }

  /// entry(r,c)(w) == conj(entry(c,r)(w*)) for every entry and term.
  bool is_hermitian_symmetric(double tolerance = 1e-12) const {
    for (int r = 0; r < side_; ++r)
      for (int c = 0; c < side_; ++c)
        for (const auto& [w, coeff] : entry(r, c)) {
          const auto& mirror = entry(c, r);
          auto it = mirror.find(involution(w));
          Complex other = (it == mirror.end()) ? Complex(0) : it->second;
          if (std::abs(coeff - std::conj(other)) > tolerance) return false;
        }
    return true;
  }

  /// Deterministic text dump, one entry per line, terms in canonical order.
  std::string dump() const {
    std::ostringstream os;
    os.precision(12);
    for (int r = 0; r < side_; ++r)
      for (int c = 0; c < side_; ++c) {
        os << '(' << r + 1 << ',' << c + 1 << "):";
        for (const auto& [w, coeff] : entry(r, c)) {
          os << ' ';
          if (std::abs(coeff.imag()) < 1e-15)
            os << coeff.real();
          else
            os << '(' << coeff.real() << (coeff.imag() < 0 ? "" : "+") << coeff.imag() << "i)";
          os << '*' << to_string(w);
        }
        os << '\n';
      }
    return os.str();
  }

 private:
  int index(int r, int c) const {
    if (r < 0 || r >= side_ || c < 0 || c >= side_) throw std::invalid_argument("MatPoly: entry out of range");
    return r * side_ + c;
  }

  int side_;
  std::vector<TermMap> entries_;
};

/// The d_A x d_A polynomial P^(m) over one letter family. Entry (a1, a2):
///   sum_i w_i/(t_i ln2) [ X_i[a1,a2] + X_i[a2,a1]*
///                         + (1-t_i) sum_{a3} X_i[a3,a1]* X_i[a3,a2]
///                         + delta_{a1,a2} (1 + t_i sum_{a3,a4} X_i[a3,a4] X_i[a3,a4]*) ]
/// with X the requested family. Hermitian-symmetric, degree <= 2.
inline MatPoly build_P_m(const QuadratureRule& rule, int d_A, Family family) {
  if (d_A < 1 || d_A > 255) throw std::invalid_argument("build_P_m: bad d_A");
  if (rule.m > 255) throw std::invalid_argument("build_P_m: bad rule");
  MatPoly poly(d_A);
  auto letter = [&](int i, int a1, int a2, bool starred) {
    return Letter{family, static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(a1),
                  static_cast<std::uint8_t>(a2), starred};
  };
  for (int i = 1; i <= rule.m; ++i) {
    double t = rule.nodes[i - 1];
    double coeff = rule.weights[i - 1] / (t * kLn2);
    for (int a1 = 1; a1 <= d_A; ++a1)
      for (int a2 = 1; a2 <= d_A; ++a2) {
        int r = a1 - 1, c = a2 - 1;
        poly.add_term(r, c, canonicalize({letter(i, a1, a2, false)}), coeff);
        poly.add_term(r, c, canonicalize({letter(i, a2, a1, true)}), coeff);
        for (int a3 = 1; a3 <= d_A; ++a3)
          poly.add_term(r, c, canonicalize({letter(i, a3, a1, true), letter(i, a3, a2, false)}),
                        coeff * (1.0 - t));
        if (a1 == a2) {
          poly.add_term(r, c, Word{}, coeff);
          for (int a3 = 1; a3 <= d_A; ++a3)
            for (int a4 = 1; a4 <= d_A; ++a4)
              poly.add_term(r, c, canonicalize({letter(i, a3, a4, false), letter(i, a3, a4, true)}),
                            coeff * t);
        }
      }
  }
  return poly;
}

/// Operators assigned to unstarred letters; starred letters evaluate to the
/// adjoint of their partner. When the assignment mixes families it must make
/// them commute (automatic when H = D (x) E and each family acts on its own
/// factor).
using Assignment = std::map<Letter, Matrix>;

namespace detail {

inline const Matrix& assigned(const Assignment& assignment, Letter unstarred) {
  auto it = assignment.find(unstarred);
  if (it == assignment.end()) throw std::invalid_argument("evaluate: letter missing from assignment");
  return it->second;
}

inline Matrix word_operator(const Word& w, const Assignment& assignment, int dim_h) {
  Matrix op = Matrix::Identity(dim_h, dim_h);
  auto apply = [&](const Letter& l) {
    const Matrix& base = assigned(assignment, l.starred ? star(l) : l);
    if (base.rows() != dim_h || base.cols() != dim_h)
      throw std::invalid_argument("evaluate: operator dimension mismatch");
    if (l.starred)
      op = op * base.adjoint();
    else
      op = op * base;
  };
  for (const Letter& l : w.y_part) apply(l);
  for (const Letter& l : w.z_part) apply(l);
  return op;
}

}  // namespace detail

/// tr(rho_AH * P(assignment)) for a state on A (x) H (first subsystem = A).
inline double evaluate(const MatPoly& poly, const Assignment& assignment,
                       const DensityMatrix& state) {
  if (state.num_subsystems() < 2)
    throw std::invalid_argument("evaluate: state must live on A (x) H");
  int d_a = state.dim(0);
  if (d_a != poly.side()) throw std::invalid_argument("evaluate: polynomial side != d_A");
  int dim_h = state.total_dim() / d_a;

  Matrix op = Matrix::Zero(state.total_dim(), state.total_dim());
  for (int r = 0; r < d_a; ++r)
    for (int c = 0; c < d_a; ++c)
      for (const auto& [w, coeff] : poly.entry(r, c)) {
        Matrix wop = detail::word_operator(w, assignment, dim_h);
        op.block(r * dim_h, c * dim_h, dim_h, dim_h) += coeff * wop;
      }
  return std::real((state.data() * op).trace());
}

}  // namespace squash
