// symbol.hpp — periodic pseudo-differential symbols as immutable expression
// DAGs over Fourier modes.
//
// A symbol b(x, ξ) with period lattice Γ is stored through its mode
// coefficients b̂(θ, ξ), θ ∈ Γ†:
//     b(x, ξ) = v(Γ)^{-1/2} Σ_θ b̂(θ, ξ) e^{i θ·x}.
// Nodes of the DAG:
//     Leaf      explicit finite mode list θ ↦ coefficient function of ξ;
//     Sum       weighted linear combination;
//     Product   (b∘g)^(χ,ξ) = v^{-1/2} Σ_{θ+φ=χ} b̂(θ, ξ+φ) ĝ(φ, ξ),
//               the symbol of Op(b)Op(g);
//     Bracket   ad(b,g)^(χ,ξ) = i v^{-1/2} Σ_{θ+φ=χ}
//                 [ b̂(θ, ξ+φ) ĝ(φ, ξ) − b̂(θ, ξ) ĝ(φ, ξ+θ) ],
//               the symbol of i[Op(b), Op(g)];
//     Part      pointwise spectral-region filter (see cutoffs.hpp);
//     Solve     ψ̂(θ,ξ) = i â(θ,ξ)/τ_θ(ξ) for θ ≠ 0 and 0 at θ = 0, the
//               solution of ad(|D|^{2m}, ψ) + a = 0 for a supported where
//               τ is bounded away from zero.
//
// Evaluation is lazy with per-node memoisation keyed by (θ, bit-exact ξ);
// grid.hpp provides a batch evaluator over affine lattices of ξ-points.
// Mode supports are finite, exact, and kept sorted by (|θ|, lexicographic).

#pragma once

#include "blochlab/common.hpp"
#include "blochlab/cutoffs.hpp"
#include "blochlab/lattice.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <unordered_set>

namespace blochlab {

using CoeffFn = std::function<cplx(const Vec&)>;

class SymbolNode;
using Symbol = std::shared_ptr<const SymbolNode>;

enum class PartKind {
  Mean,           // θ = 0 coefficient only (x-average)
  BelowShell,     // ℓ<: energies well below the shell
  Resonant,       // e·ζ: in-shell, near-orthogonal window (optionally θ ∈ V)
  NonResonant,    // e·φ: in-shell, outside the window
  AboveShell,     // ℓ>: energies well above the shell
  HighFrequency   // |θ| > r, no ξ-cutoff
};

// Scalar filter factor of a Part node at (θ, ξ).
inline double part_factor(PartKind kind, const CutoffParams& cut, const Subspace* V,
                          const Mode& theta, const Vec& theta_c, const Vec& xi) {
  if (theta.is_zero()) return kind == PartKind::Mean ? 1.0 : 0.0;
  bool high = theta_c.norm() > cut.r * (1.0 + 1e-12);
  if (kind == PartKind::HighFrequency) return high ? 1.0 : 0.0;
  if (high || kind == PartKind::Mean) return 0.0;
  switch (kind) {
    case PartKind::BelowShell:
      return cutoff_below(theta_c, xi, cut.rho);
    case PartKind::AboveShell:
      return cutoff_above(theta_c, xi, cut.rho);
    case PartKind::NonResonant:
      return cutoff_shell(theta_c, xi, cut.rho) *
             (1.0 - cutoff_window(theta_c, xi, cut.window_width()));
    case PartKind::Resonant: {
      if (V && !V->contains(theta_c)) return 0.0;
      return cutoff_shell(theta_c, xi, cut.rho) * cutoff_window(theta_c, xi, cut.window_width());
    }
    default:
      return 0.0;
  }
}

class SymbolNode {
 public:
  enum class Kind { Leaf, Sum, Product, Bracket, Part, Solve };

  Kind kind = Kind::Leaf;
  std::shared_ptr<const Lattice> lat;

  // Leaf
  std::map<Mode, CoeffFn, ModeLess> coeffs;
  // Sum / Product / Bracket (binary nodes use terms[0], terms[1])
  std::vector<Symbol> terms;
  std::vector<cplx> weights;
  // Part
  PartKind part = PartKind::Mean;
  CutoffParams cut;
  std::optional<Subspace> vsub;
  // Solve
  double mpow = 1.0;
  double tau_floor = 0.0;  // |τ| must exceed tau_floor·|θ| where the source is nonzero

  std::vector<Mode> support;  // sorted by (|θ|, lex)
  std::unordered_set<Mode, ModeHash> support_set;
  int reach = 0;  // max accumulated integer shift (∞-norm) of nested evaluations

  std::uint64_t id = 0;

  mutable std::unordered_map<PointKey, cplx, PointKeyHash> memo;
  mutable std::mutex memo_mutex;

  bool in_support(const Mode& th) const { return support_set.count(th) != 0; }
};

namespace detail {

inline std::uint64_t next_node_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

inline void finalize_support(const Lattice& lat, std::vector<Mode>& v,
                             std::unordered_set<Mode, ModeHash>& set) {
  std::sort(v.begin(), v.end(), ModeLess{});
  v.erase(std::unique(v.begin(), v.end()), v.end());
  sort_modes_by_length(lat, v);
  set.clear();
  set.insert(v.begin(), v.end());
}

inline int max_linf(const std::vector<Mode>& v) {
  int m = 0;
  for (const auto& t : v) m = std::max(m, static_cast<int>(t.linf()));
  return m;
}

inline void require_same_lattice(const Symbol& a, const Symbol& b) {
  if (a->lat.get() != b->lat.get() &&
      (a->lat->d != b->lat->d || (a->lat->basis - b->lat->basis).norm() > 1e-13))
    throw config_error("symbols combined across different lattices");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

inline Symbol make_symbol(std::shared_ptr<const Lattice> lat,
                          std::vector<std::pair<Mode, CoeffFn>> modes) {
  auto n = std::make_shared<SymbolNode>();
  n->kind = SymbolNode::Kind::Leaf;
  n->lat = std::move(lat);
  for (auto& [th, fn] : modes) {
    if (n->coeffs.count(th)) throw config_error("duplicate mode in symbol definition");
    n->coeffs.emplace(th, std::move(fn));
    n->support.push_back(th);
  }
  detail::finalize_support(*n->lat, n->support, n->support_set);
  n->id = detail::next_node_id();
  return n;
}

inline Symbol make_constant_modes(std::shared_ptr<const Lattice> lat,
                                  std::vector<std::pair<Mode, cplx>> modes) {
  std::vector<std::pair<Mode, CoeffFn>> fns;
  fns.reserve(modes.size());
  for (auto& [th, c] : modes) {
    cplx cc = c;
    fns.emplace_back(th, [cc](const Vec&) { return cc; });
  }
  return make_symbol(std::move(lat), std::move(fns));
}

// |ξ|^{2m} as a symbol leaf (θ = 0 coefficient √v(Γ)·|ξ|^{2m}), so that sums
// and brackets against it carry the kinetic part with the right normalisation.
inline Symbol kinetic_symbol(std::shared_ptr<const Lattice> lat, double m) {
  double root_cell = std::sqrt(lat->cell_volume);
  return make_symbol(std::move(lat),
                     {{Mode(), [m, root_cell](const Vec& xi) {
                         return cplx(root_cell * std::pow(xi.squaredNorm(), m), 0.0);
                       }}});
}

inline Symbol symbol_sum(std::vector<Symbol> terms, std::vector<cplx> weights = {}) {
  if (terms.empty()) throw config_error("symbol_sum requires at least one term");
  if (weights.empty()) weights.assign(terms.size(), cplx(1.0, 0.0));
  if (weights.size() != terms.size())
    throw config_error("symbol_sum: weight count mismatch");
  auto n = std::make_shared<SymbolNode>();
  n->kind = SymbolNode::Kind::Sum;
  n->lat = terms.front()->lat;
  for (auto& t : terms) detail::require_same_lattice(terms.front(), t);
  for (auto& t : terms) {
    n->support.insert(n->support.end(), t->support.begin(), t->support.end());
    n->reach = std::max(n->reach, t->reach);
  }
  n->terms = std::move(terms);
  n->weights = std::move(weights);
  detail::finalize_support(*n->lat, n->support, n->support_set);
  n->id = detail::next_node_id();
  return n;
}

inline Symbol symbol_scale(Symbol a, cplx w) { return symbol_sum({std::move(a)}, {w}); }

namespace detail {

inline Symbol make_binary(SymbolNode::Kind kind, Symbol a, Symbol b) {
  require_same_lattice(a, b);
  auto n = std::make_shared<SymbolNode>();
  n->kind = kind;
  n->lat = a->lat;
  for (const auto& ta : a->support)
    for (const auto& tb : b->support) n->support.push_back(ta + tb);
  n->reach = std::max(a->reach + max_linf(b->support), b->reach + max_linf(a->support));
  n->terms = {std::move(a), std::move(b)};
  finalize_support(*n->lat, n->support, n->support_set);
  n->id = next_node_id();
  return n;
}

}  // namespace detail

// Symbol of Op(a)Op(b).
inline Symbol symbol_product(Symbol a, Symbol b) {
  return detail::make_binary(SymbolNode::Kind::Product, std::move(a), std::move(b));
}

// Symbol of i[Op(a), Op(b)].
inline Symbol commutator_symbol(Symbol a, Symbol b) {
  return detail::make_binary(SymbolNode::Kind::Bracket, std::move(a), std::move(b));
}

inline Symbol filter_part(Symbol b, PartKind kind, const CutoffParams& cut,
                          std::optional<Subspace> V = std::nullopt) {
  cut.validate();
  if (V && kind != PartKind::Resonant)
    throw config_error("subspace restriction applies to the resonant part only");
  auto n = std::make_shared<SymbolNode>();
  n->kind = SymbolNode::Kind::Part;
  n->lat = b->lat;
  n->part = kind;
  n->cut = cut;
  n->vsub = std::move(V);
  n->reach = b->reach;
  for (const auto& th : b->support) {
    if (th.is_zero()) {
      if (kind == PartKind::Mean) n->support.push_back(th);
      continue;
    }
    bool high = n->lat->dual_point(th).norm() > cut.r * (1.0 + 1e-12);
    if (kind == PartKind::Mean) continue;
    if (kind == PartKind::HighFrequency) {
      if (high) n->support.push_back(th);
    } else if (!high) {
      if (n->vsub && kind == PartKind::Resonant && !n->vsub->contains(n->lat->dual_point(th)))
        continue;
      n->support.push_back(th);
    }
  }
  n->terms = {std::move(b)};
  detail::finalize_support(*n->lat, n->support, n->support_set);
  n->id = detail::next_node_id();
  return n;
}

// ψ̂(θ,ξ) = i â(θ,ξ) / τ_θ(ξ), ψ̂(0,·) = 0: solves ad(|D|^{2m}, ψ) + a = 0.
// The divisor is guarded: where â ≠ 0, |τ| must exceed a floor tied to the
// smallest legitimate dispersion difference on the window support,
// 1e-6 · m (ρ/2)^{2m-2} ρ^β / 2 per unit |θ|.
inline Symbol solve_gauge(Symbol a, double m, const CutoffParams& cut) {
  cut.validate();
  auto n = std::make_shared<SymbolNode>();
  n->kind = SymbolNode::Kind::Solve;
  n->lat = a->lat;
  n->mpow = m;
  n->tau_floor =
      1e-6 * m * std::pow(cut.rho / 2.0, 2.0 * m - 2.0) * cut.window_width() / 2.0;
  n->reach = a->reach;
  for (const auto& th : a->support)
    if (!th.is_zero()) n->support.push_back(th);
  n->terms = {std::move(a)};
  detail::finalize_support(*n->lat, n->support, n->support_set);
  n->id = detail::next_node_id();
  return n;
}

// ---------------------------------------------------------------------------
// Point evaluation b̂(θ, ξ) with per-node memoisation.
// ---------------------------------------------------------------------------

inline cplx eval(const Symbol& s, const Mode& theta, const Vec& xi);

namespace detail {

inline cplx eval_uncached(const SymbolNode& n, const Mode& theta, const Vec& xi) {
  const Lattice& lat = *n.lat;
  switch (n.kind) {
    case SymbolNode::Kind::Leaf: {
      auto it = n.coeffs.find(theta);
      return it == n.coeffs.end() ? cplx(0.0) : it->second(xi);
    }
    case SymbolNode::Kind::Sum: {
      cplx acc = 0.0;
      for (std::size_t i = 0; i < n.terms.size(); ++i)
        if (n.terms[i]->in_support(theta)) acc += n.weights[i] * eval(n.terms[i], theta, xi);
      return acc;
    }
    case SymbolNode::Kind::Product: {
      const Symbol& L = n.terms[0];
      const Symbol& R = n.terms[1];
      cplx acc = 0.0;
      for (const auto& phi : R->support) {
        Mode tl = theta - phi;
        if (!L->in_support(tl)) continue;
        cplx rv = eval(R, phi, xi);
        if (rv == cplx(0.0)) continue;
        acc += eval(L, tl, xi + lat.dual_point(phi)) * rv;
      }
      return lat.inv_sqrt_cell * acc;
    }
    case SymbolNode::Kind::Bracket: {
      const Symbol& L = n.terms[0];
      const Symbol& R = n.terms[1];
      cplx acc = 0.0;
      for (const auto& phi : R->support) {
        Mode tl = theta - phi;
        if (!L->in_support(tl)) continue;
        Vec phi_c = lat.dual_point(phi);
        Vec tl_c = lat.dual_point(tl);
        // Evaluate the cheap right factor first; descending into the left
        // chain is skipped wherever the right factor vanishes.
        cplx r0 = eval(R, phi, xi);
        cplx r1 = eval(R, phi, xi + tl_c);
        if (r0 != cplx(0.0)) acc += eval(L, tl, xi + phi_c) * r0;
        if (r1 != cplx(0.0)) acc -= eval(L, tl, xi) * r1;
      }
      return cplx(0.0, 1.0) * lat.inv_sqrt_cell * acc;
    }
    case SymbolNode::Kind::Part: {
      Vec theta_c = lat.dual_point(theta);
      double f = part_factor(n.part, n.cut, n.vsub ? &*n.vsub : nullptr, theta, theta_c, xi);
      if (f == 0.0) return cplx(0.0);
      return f * eval(n.terms[0], theta, xi);
    }
    case SymbolNode::Kind::Solve: {
      if (theta.is_zero()) return cplx(0.0);
      cplx v = eval(n.terms[0], theta, xi);
      if (v == cplx(0.0)) return cplx(0.0);
      Vec theta_c = lat.dual_point(theta);
      double t = tau(n.mpow, theta_c, xi);
      if (std::abs(t) < n.tau_floor * theta_c.norm())
        throw numerical_error("gauge divisor too small: |tau| below the window floor");
      return cplx(0.0, 1.0) * v / t;
    }
  }
  return cplx(0.0);
}

}  // namespace detail

inline cplx eval(const Symbol& s, const Mode& theta, const Vec& xi) {
  const SymbolNode& n = *s;
  if (!n.in_support(theta)) return cplx(0.0);
  if (n.kind == SymbolNode::Kind::Leaf) return detail::eval_uncached(n, theta, xi);
  PointKey key(theta, xi);
  {
    std::lock_guard<std::mutex> lock(n.memo_mutex);
    auto it = n.memo.find(key);
    if (it != n.memo.end()) return it->second;
  }
  cplx v = detail::eval_uncached(n, theta, xi);
  {
    std::lock_guard<std::mutex> lock(n.memo_mutex);
    n.memo.emplace(key, v);
  }
  return v;
}

inline void clear_memo(const Symbol& s) {
  {
    std::lock_guard<std::mutex> lock(s->memo_mutex);
    s->memo.clear();
    s->memo.rehash(0);  // release the bucket array as well
  }
  for (const auto& t : s->terms) clear_memo(t);
}

// b(x, ξ) = v^{-1/2} Σ_θ b̂(θ,ξ) e^{iθ·x}.
inline cplx eval_symbol(const Symbol& s, const Vec& x, const Vec& xi) {
  cplx acc = 0.0;
  for (const auto& th : s->support) {
    Vec th_c = s->lat->dual_point(th);
    acc += eval(s, th, xi) * std::exp(cplx(0.0, th_c.dot(x)));
  }
  return s->lat->inv_sqrt_cell * acc;
}

// ---------------------------------------------------------------------------
// Symmetry (self-adjointness of Op(b)): b̂(θ,ξ) = conj b̂(−θ, ξ+θ).
// ---------------------------------------------------------------------------

struct SymmetryReport {
  double max_deviation = 0.0;
  double scale = 0.0;  // largest |b̂| seen
};

inline SymmetryReport check_symmetric(const Symbol& s, double radius, int samples = 64,
                                      std::uint64_t seed = 1) {
  SymmetryReport rep;
  CounterRng rng{seed, 101};
  int d = s->lat->d;
  std::uint64_t ctr = 0;
  for (int i = 0; i < samples; ++i) {
    Vec xi(d);
    for (int j = 0; j < d; ++j) xi[j] = radius * (2.0 * rng.uniform(ctr++) - 1.0);
    for (const auto& th : s->support) {
      cplx a = eval(s, th, xi);
      cplx b = eval(s, -th, xi + s->lat->dual_point(th));
      rep.max_deviation = std::max(rep.max_deviation, std::abs(a - std::conj(b)));
      rep.scale = std::max({rep.scale, std::abs(a), std::abs(b)});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Operator description H = (−Δ)^m + Op(b) with growth/weight parameters.
// ---------------------------------------------------------------------------

struct OperatorSpec {
  std::shared_ptr<const Lattice> lattice;
  double m = 1.0;      // order 2m kinetic part
  Symbol b;            // perturbation; null ⇒ free operator
  double alpha = 0.0;  // symbol growth exponent (b̂ = O(⟨ξ⟩^{αβ}))
  double beta = 1.0;   // weight exponent w(ξ) = ⟨ξ⟩^β

  double h0(const Vec& xi) const { return std::pow(xi.squaredNorm(), m); }
};

// Standing smallness/growth conditions; empty result means admissible.
inline std::vector<std::string> validate_standing(const OperatorSpec& op) {
  std::vector<std::string> bad;
  if (!(op.m > 0.0)) bad.push_back("operator order requires m > 0");
  if (!(op.beta > 0.0 && op.beta <= 1.0)) bad.push_back("requires 0 < beta <= 1");
  if (!(op.alpha * op.beta < 2.0 * op.m))
    bad.push_back("requires alpha*beta < 2*m (perturbation must be subordinate)");
  if (!(2.0 * op.m - 2.0 > op.beta * (op.alpha - 2.0)))
    bad.push_back("requires beta*(alpha-2) < 2*m-2");
  return bad;
}

// ---------------------------------------------------------------------------
// Magnetic-type symbol: b(x,ξ) = −2 a(x)·ξ + i(div a)(x) + |a(x)|² + V(x)
// from Fourier data of a real vector potential a and scalar potential V.
// Op(b) + (−Δ) is the magnetic Schrödinger operator (−i∇ − a)² + V.
// ---------------------------------------------------------------------------

inline Symbol magnetic_symbol(std::shared_ptr<const Lattice> lat,
                              const std::array<std::map<Mode, cplx, ModeLess>, 3>& a_modes,
                              const std::map<Mode, cplx, ModeLess>& v_modes) {
  int d = lat->d;
  double inv_root = lat->inv_sqrt_cell;
  // |a|² by convolution: (fg)^(θ) = v^{-1/2} Σ_{θ1+θ2=θ} f̂(θ1) ĝ(θ2).
  std::map<Mode, cplx, ModeLess> asq;
  for (int j = 0; j < d; ++j)
    for (const auto& [t1, c1] : a_modes[static_cast<std::size_t>(j)])
      for (const auto& [t2, c2] : a_modes[static_cast<std::size_t>(j)])
        asq[t1 + t2] += inv_root * c1 * c2;

  struct Entry {
    std::array<cplx, 3> A{cplx(0.0), cplx(0.0), cplx(0.0)};  // â(θ)
    cplx C = 0.0;                                            // scalar accumulation
  };
  std::map<Mode, Entry, ModeLess> entries;
  for (int j = 0; j < d; ++j)
    for (const auto& [th, c] : a_modes[static_cast<std::size_t>(j)])
      entries[th].A[static_cast<std::size_t>(j)] += c;
  for (const auto& [th, c] : asq) entries[th].C += c;
  for (const auto& [th, c] : v_modes) entries[th].C += c;

  std::vector<std::pair<Mode, CoeffFn>> fns;
  for (auto& [th, ac] : entries) {
    Vec th_c = lat->dual_point(th);
    std::array<cplx, 3> A = ac.A;
    cplx C = ac.C;
    // i(div a)^(θ) = i Σ_j (iθ_j) â_j(θ) = −θ·â(θ).
    for (int j = 0; j < d; ++j) C -= th_c[j] * A[static_cast<std::size_t>(j)];
    int dd = d;
    fns.emplace_back(th, [A, C, dd](const Vec& xi) {
      cplx dot = 0.0;
      for (int j = 0; j < dd; ++j) dot += A[static_cast<std::size_t>(j)] * xi[j];
      return -2.0 * dot + C;
    });
  }
  return make_symbol(std::move(lat), std::move(fns));
}

}  // namespace blochlab
