// gauge.hpp — iterative gauge transformation of H = |D|^{2m} + Op(b).
//
// A unitary U = e^{iΨ}, Ψ = Σ_{l=1}^M Ψ_l, is built so that the conjugated
// operator U* H U has no in-shell nonresonant modes up to order M.  Writing
// ad(·,·) for the bracket symbol (symbol.hpp) and iterating the expansion of
// e^{-iΨ} H e^{iΨ} by orders, the terms are
//
//     B_1 = b,
//     B_l = Σ_{j=1}^{l-1} (1/j!) Σ_{k_1+…+k_j = l-1} ad(B; Ψ_{k_1},…,Ψ_{k_j}),
//     T_l = Σ_{j=2}^{l}   (1/j!) Σ_{k_1+…+k_j = l}   ad(H₀; Ψ_{k_1},…,Ψ_{k_j}),
//
// (ordered compositions, k_i ≥ 1; multiple ad is the left-nested fold), and
// each Ψ_l is chosen to cancel the nonresonant part at its order:
//
//     ad(H₀, Ψ_l) + (B_l + T_l)^{nonres} = 0,
//     ψ̂_l(θ,ξ) = i (B̂_l + T̂_l)^{nonres}(θ,ξ) / τ_θ(ξ).
//
// With X_M = Σ_{l≤M} B_l + Σ_{2≤l≤M} T_l the conjugated operator equals
//     H₀ + (X_M − X_M^{nonres}) + R_{M+1},
// where the remainder starts with the computable term B_{M+1}.
//
// Decay bookkeeping: σ = α − (2m−2)/β − 1, σ_j = j(σ−1)+1,
// ε_j = j(σ−1) + (2m−2)/β + 2; the j-th gauge generator scales like
// ρ^{β(σ_j−γ)} and the j-th order terms like ρ^{β(ε_j−γ)} in the weighted
// norms of norms.hpp.

#pragma once

#include "blochlab/decompose.hpp"

#include <map>

namespace blochlab {

struct GaugeExponents {
  double m = 1.0, alpha = 0.0, beta = 1.0;
  double sigma() const { return alpha - (2.0 * m - 2.0) / beta - 1.0; }
  double sigma_j(int j) const { return j * (sigma() - 1.0) + 1.0; }
  double eps_j(int j) const { return j * (sigma() - 1.0) + (2.0 * m - 2.0) / beta + 2.0; }
};

inline GaugeExponents exponents(const OperatorSpec& op) {
  return GaugeExponents{op.m, op.alpha, op.beta};
}

// Predicted remainder scale ρ^{β ε_{M+1}} (sup-norm weighting, γ = 0).
inline double remainder_scale(const OperatorSpec& op, const CutoffParams& cut, int M) {
  return std::pow(cut.rho, cut.beta * exponents(op).eps_j(M + 1));
}

struct GaugeSeries {
  OperatorSpec op;
  CutoffParams cut;
  int M = 0;
  Symbol h0;                    // kinetic leaf |ξ|^{2m}
  std::vector<Symbol> psi;      // Ψ_1 .. Ψ_M
  std::vector<Symbol> b_terms;  // B_1 .. B_{M+1} (last = leading remainder term)
  std::vector<Symbol> t_terms;  // T_2 .. T_M (empty when M < 2)
  Symbol x;                     // X_M
  Symbol a1;                    // X_M − X_M^{nonres}: perturbation of the gauged operator
  Symbol psi_total;             // Σ_l Ψ_l

  const Symbol& leading_remainder() const { return b_terms.back(); }
};

namespace detail {

// All ordered tuples of positive integers summing to `total` with exactly
// `parts` entries, lexicographic order.
inline void compositions_rec(int total, int parts, std::vector<int>& cur,
                             std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = 1; k <= total - (parts - 1); ++k) {
    cur.push_back(k);
    compositions_rec(total - k, parts - 1, cur, out);
    cur.pop_back();
  }
}

inline std::vector<std::vector<int>> compositions(int total, int parts) {
  std::vector<std::vector<int>> out;
  if (parts < 1 || total < parts) return out;
  std::vector<int> cur;
  compositions_rec(total, parts, cur, out);
  return out;
}

// Left-nested bracket chains ad(base; Ψ_{k_1}, …, Ψ_{k_j}) with prefix sharing.
class ChainCache {
 public:
  ChainCache(Symbol base, const std::vector<Symbol>* psi) : psi_(psi) {
    chains_[{}] = std::move(base);
  }
  const Symbol& get(const std::vector<int>& tuple) {
    auto it = chains_.find(tuple);
    if (it != chains_.end()) return it->second;
    std::vector<int> prefix(tuple.begin(), tuple.end() - 1);
    const Symbol& head = get(prefix);
    Symbol next = commutator_symbol(head, (*psi_)[static_cast<std::size_t>(tuple.back() - 1)]);
    return chains_.emplace(tuple, std::move(next)).first->second;
  }

 private:
  const std::vector<Symbol>* psi_;
  std::map<std::vector<int>, Symbol> chains_;
};

inline double factorial(int j) {
  double f = 1.0;
  for (int i = 2; i <= j; ++i) f *= i;
  return f;
}

}  // namespace detail

inline GaugeSeries build_gauge_series(const OperatorSpec& op, const CutoffParams& cut, int M) {
  if (!op.b) throw config_error("gauge series requires a perturbation symbol");
  if (M < 1) throw config_error("gauge series depth M must be >= 1");
  cut.validate();
  auto bad = validate_standing(op);
  if (!bad.empty()) throw config_error("inadmissible operator parameters: " + bad.front());

  GaugeSeries s;
  s.op = op;
  s.cut = cut;
  s.M = M;
  s.h0 = kinetic_symbol(op.lattice, op.m);
  s.b_terms.push_back(op.b);  // B_1

  detail::ChainCache chain_b(op.b, &s.psi);
  detail::ChainCache chain_h(s.h0, &s.psi);

  // Ψ_1 from B_1 alone.
  s.psi.push_back(
      solve_gauge(filter_part(op.b, PartKind::NonResonant, cut), op.m, cut));

  for (int l = 2; l <= M + 1; ++l) {
    // B_l: compositions of l−1 into j = 1..l−1 parts (uses Ψ_1..Ψ_{l-1}).
    std::vector<Symbol> terms;
    std::vector<cplx> weights;
    for (int j = 1; j <= l - 1; ++j) {
      double w = 1.0 / detail::factorial(j);
      for (const auto& tup : detail::compositions(l - 1, j)) {
        terms.push_back(chain_b.get(tup));
        weights.emplace_back(w, 0.0);
      }
    }
    Symbol Bl = symbol_sum(terms, weights);
    s.b_terms.push_back(Bl);
    if (l == M + 1) break;  // B_{M+1} is the leading remainder; no Ψ/T at this order

    // T_l: compositions of l into j = 2..l parts (uses Ψ_1..Ψ_{l-1}).
    std::vector<Symbol> tterms;
    std::vector<cplx> tweights;
    for (int j = 2; j <= l; ++j) {
      double w = 1.0 / detail::factorial(j);
      for (const auto& tup : detail::compositions(l, j)) {
        tterms.push_back(chain_h.get(tup));
        tweights.emplace_back(w, 0.0);
      }
    }
    Symbol Tl = symbol_sum(tterms, tweights);
    s.t_terms.push_back(Tl);

    // Ψ_l kills the nonresonant part of B_l + T_l.
    Symbol source = filter_part(symbol_sum({Bl, Tl}), PartKind::NonResonant, cut);
    s.psi.push_back(solve_gauge(source, op.m, cut));
  }

  // X_M and the gauged perturbation X_M − X_M^{nonres}.
  std::vector<Symbol> xterms(s.b_terms.begin(), s.b_terms.begin() + M);
  for (const auto& t : s.t_terms) xterms.push_back(t);
  s.x = symbol_sum(xterms);
  s.a1 = symbol_sum({s.x, filter_part(s.x, PartKind::NonResonant, cut)},
                    {cplx(1.0, 0.0), cplx(-1.0, 0.0)});
  s.psi_total = symbol_sum(s.psi);
  return s;
}

// Residual of the l-th commutator equation, as a symbol:
//     ad(H₀, Ψ_l) + (B_l + T_l)^{nonres},  l = 1..M.
// Evaluating it exercises the generic bracket path against the algebraic
// construction of Ψ_l; the result should vanish to rounding error.
inline Symbol gauge_residual(const GaugeSeries& s, int l) {
  if (l < 1 || l > s.M) throw config_error("residual level out of range");
  Symbol source =
      l == 1 ? filter_part(s.b_terms[0], PartKind::NonResonant, s.cut)
             : filter_part(symbol_sum({s.b_terms[static_cast<std::size_t>(l - 1)],
                                       s.t_terms[static_cast<std::size_t>(l - 2)]}),
                           PartKind::NonResonant, s.cut);
  return symbol_sum({commutator_symbol(s.h0, s.psi[static_cast<std::size_t>(l - 1)]), source});
}

}  // namespace blochlab
