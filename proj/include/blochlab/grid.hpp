// grid.hpp — batch evaluation of symbol DAGs on affine momentum lattices
//     ξ(n) = base + D·n,   n in an integer box,
// the layout used by fiber matrices (base = quasimomentum k) and by operator
// assembly on truncated index sets.
//
// Every node's mode coefficients are evaluated as vectors over the box; the
// convolution sums of Product/Bracket nodes become shifted elementwise
// products, so the whole box costs |supp L|·|supp R|·(box size) per binary
// node instead of one recursion per point.
//
// Validity contract: nested convolutions read neighbours up to `reach` cells
// away (in integer coordinates), so values of a node are only complete on the
// box shrunk by its reach.  Callers must keep their target cells at least
// root->reach cells away from the box boundary; `assert_interior` checks this.

#pragma once

#include "blochlab/symbol.hpp"

namespace blochlab {

struct GridBox {
  int d = 2;
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{0, 0, 0};  // inclusive

  int len(int axis) const { return hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)] + 1; }
  long size() const {
    long s = 1;
    for (int a = 0; a < d; ++a) s *= len(a);
    return s;
  }
  bool contains(const Mode& n) const {
    for (int a = 0; a < d; ++a)
      if (n[a] < lo[static_cast<std::size_t>(a)] || n[a] > hi[static_cast<std::size_t>(a)]) return false;
    return true;
  }
  long flat(const Mode& n) const {
    long f = 0;
    for (int a = 0; a < d; ++a) f = f * len(a) + (n[a] - lo[static_cast<std::size_t>(a)]);
    return f;
  }
  // Flat-index displacement of the integer shift s (valid only for in-box reads).
  long flat_shift(const Mode& s) const {
    long f = 0;
    for (int a = 0; a < d; ++a) f = f * len(a) + s[a];
    return f;
  }
  // True if every cell of the sub-box shrunk by `margin` stays in the box.
  bool has_interior(int margin) const {
    for (int a = 0; a < d; ++a)
      if (len(a) <= 2 * margin) return false;
    return true;
  }
};

struct MomentumGrid {
  std::shared_ptr<const Lattice> lat;
  Vec base;
  GridBox box;
  std::vector<Vec> points;  // ξ(n) per flat cell

  Vec point(const Mode& n) const { return points[static_cast<std::size_t>(box.flat(n))]; }
};

inline MomentumGrid make_grid(std::shared_ptr<const Lattice> lat, const Vec& base,
                              const std::array<int, 3>& lo, const std::array<int, 3>& hi) {
  MomentumGrid g;
  g.lat = std::move(lat);
  g.base = base;
  g.box.d = g.lat->d;
  g.box.lo = lo;
  g.box.hi = hi;
  for (int a = 0; a < g.box.d; ++a)
    if (hi[static_cast<std::size_t>(a)] < lo[static_cast<std::size_t>(a)])
      throw config_error("empty momentum grid box");
  g.points.resize(static_cast<std::size_t>(g.box.size()));
  Mode n;
  if (g.box.d == 2) {
    for (int i0 = lo[0]; i0 <= hi[0]; ++i0)
      for (int i1 = lo[1]; i1 <= hi[1]; ++i1) {
        n[0] = i0; n[1] = i1;
        g.points[static_cast<std::size_t>(g.box.flat(n))] = base + g.lat->dual_point(n);
      }
  } else {
    for (int i0 = lo[0]; i0 <= hi[0]; ++i0)
      for (int i1 = lo[1]; i1 <= hi[1]; ++i1)
        for (int i2 = lo[2]; i2 <= hi[2]; ++i2) {
          n[0] = i0; n[1] = i1; n[2] = i2;
          g.points[static_cast<std::size_t>(g.box.flat(n))] = base + g.lat->dual_point(n);
        }
  }
  return g;
}

using ModeGrid = std::map<Mode, Eigen::VectorXcd, ModeLess>;

namespace detail {

// dst[n] += w · a[n + sa] · b[n + sb] over all cells where both reads are in-box.
inline void accumulate_shifted(const GridBox& box, Eigen::VectorXcd& dst,
                               const Eigen::VectorXcd& a, const Mode& sa,
                               const Eigen::VectorXcd& b, const Mode& sb, cplx w) {
  std::array<int, 3> from{0, 0, 0}, to{0, 0, 0};
  for (int ax = 0; ax < box.d; ++ax) {
    std::size_t u = static_cast<std::size_t>(ax);
    from[u] = box.lo[u] + std::max({0, -sa[ax], -sb[ax]});
    to[u] = box.hi[u] - std::max({0, sa[ax], sb[ax]});
    if (from[u] > to[u]) return;
  }
  long da = box.flat_shift(sa), db = box.flat_shift(sb);
  const cplx* pa = a.data();
  const cplx* pb = b.data();
  cplx* pd = dst.data();
  Mode n;
  if (box.d == 2) {
    for (int i0 = from[0]; i0 <= to[0]; ++i0) {
      n[0] = i0; n[1] = from[1];
      long f = box.flat(n);
      for (int i1 = from[1]; i1 <= to[1]; ++i1, ++f)
        pd[f] += w * pa[f + da] * pb[f + db];
    }
  } else {
    for (int i0 = from[0]; i0 <= to[0]; ++i0)
      for (int i1 = from[1]; i1 <= to[1]; ++i1) {
        n[0] = i0; n[1] = i1; n[2] = from[2];
        long f = box.flat(n);
        for (int i2 = from[2]; i2 <= to[2]; ++i2, ++f)
          pd[f] += w * pa[f + da] * pb[f + db];
      }
  }
}

}  // namespace detail

class GridWorkspace {
 public:
  explicit GridWorkspace(const MomentumGrid& grid) : grid_(grid) {}

  // Evaluate all roots (shared sub-DAGs computed once); intermediate node
  // grids are released as soon as their last consumer is done.  Single shot:
  // pass every root of interest in one call.
  void evaluate(const std::vector<Symbol>& roots) {
    if (evaluated_) throw std::logic_error("GridWorkspace::evaluate may only run once");
    evaluated_ = true;
    std::vector<const SymbolNode*> order;
    std::unordered_map<std::uint64_t, int> uses;
    for (const auto& r : roots) keep_.insert(r->id);
    for (const auto& r : roots) collect(r.get(), order, uses);
    for (const SymbolNode* n : order) {
      if (!cache_.count(n->id)) cache_.emplace(n->id, compute(*n));
      for (const auto& t : n->terms) {
        auto it = uses.find(t->id);
        if (it != uses.end() && --it->second == 0 && !keep_.count(t->id)) cache_.erase(t->id);
      }
    }
  }

  bool has(const Symbol& s) const { return cache_.count(s->id) != 0; }

  const ModeGrid& values(const Symbol& s) const {
    auto it = cache_.find(s->id);
    if (it == cache_.end()) throw std::logic_error("grid values not computed for this symbol");
    return it->second;
  }

  // Release a kept root's grids (memory control between assembly stages).
  void release(const Symbol& s) {
    keep_.erase(s->id);
    cache_.erase(s->id);
  }

  const MomentumGrid& grid() const { return grid_; }

  static void assert_interior(const MomentumGrid& g, const Symbol& root, const GridBox& target) {
    for (int a = 0; a < g.box.d; ++a) {
      std::size_t u = static_cast<std::size_t>(a);
      if (target.lo[u] - root->reach < g.box.lo[u] || target.hi[u] + root->reach > g.box.hi[u])
        throw std::logic_error("grid box too small for the symbol's convolution reach");
    }
  }

 private:
  // Post-order DFS; every node appears after its children, exactly once.
  // Child use counts accumulate one per parent occurrence.
  void collect(const SymbolNode* n, std::vector<const SymbolNode*>& order,
               std::unordered_map<std::uint64_t, int>& uses) {
    if (!seen_.insert(n->id).second) return;
    for (const auto& t : n->terms) collect(t.get(), order, uses);
    for (const auto& t : n->terms) uses[t->id] += 1;
    order.push_back(n);
  }

  ModeGrid compute(const SymbolNode& n) {
    const long N = grid_.box.size();
    ModeGrid out;
    switch (n.kind) {
      case SymbolNode::Kind::Leaf: {
        for (const auto& [th, fn] : n.coeffs) {
          Eigen::VectorXcd v(N);
          for (long i = 0; i < N; ++i) v[i] = fn(grid_.points[static_cast<std::size_t>(i)]);
          out.emplace(th, std::move(v));
        }
        break;
      }
      case SymbolNode::Kind::Sum: {
        for (const auto& th : n.support) out.emplace(th, Eigen::VectorXcd::Zero(N));
        for (std::size_t i = 0; i < n.terms.size(); ++i) {
          const ModeGrid& child = values(n.terms[i]);
          for (const auto& [th, v] : child) out[th] += n.weights[i] * v;
        }
        break;
      }
      case SymbolNode::Kind::Product:
      case SymbolNode::Kind::Bracket: {
        const bool br = n.kind == SymbolNode::Kind::Bracket;
        const ModeGrid& L = values(n.terms[0]);
        const ModeGrid& R = values(n.terms[1]);
        cplx w = n.lat->inv_sqrt_cell * (br ? cplx(0.0, 1.0) : cplx(1.0, 0.0));
        for (const auto& th : n.support) out.emplace(th, Eigen::VectorXcd::Zero(N));
        for (const auto& [tl, lv] : L)
          for (const auto& [phi, rv] : R) {
            auto it = out.find(tl + phi);
            if (it == out.end()) continue;
            detail::accumulate_shifted(grid_.box, it->second, lv, phi, rv, Mode(), w);
            if (br) detail::accumulate_shifted(grid_.box, it->second, lv, Mode(), rv, tl, -w);
          }
        break;
      }
      case SymbolNode::Kind::Part: {
        const ModeGrid& child = values(n.terms[0]);
        for (const auto& th : n.support) {
          auto it = child.find(th);
          if (it == child.end()) continue;
          Vec th_c = n.lat->dual_point(th);
          Eigen::VectorXcd v(N);
          for (long i = 0; i < N; ++i) {
            double f = part_factor(n.part, n.cut, n.vsub ? &*n.vsub : nullptr, th, th_c,
                                   grid_.points[static_cast<std::size_t>(i)]);
            v[i] = f == 0.0 ? cplx(0.0) : f * it->second[i];
          }
          out.emplace(th, std::move(v));
        }
        break;
      }
      case SymbolNode::Kind::Solve: {
        const ModeGrid& child = values(n.terms[0]);
        for (const auto& th : n.support) {
          auto it = child.find(th);
          if (it == child.end() || th.is_zero()) continue;
          Vec th_c = n.lat->dual_point(th);
          double floor = n.tau_floor * th_c.norm();
          Eigen::VectorXcd v(N);
          for (long i = 0; i < N; ++i) {
            cplx a = it->second[i];
            if (a == cplx(0.0)) {
              v[i] = 0.0;
              continue;
            }
            double t = tau(n.mpow, th_c, grid_.points[static_cast<std::size_t>(i)]);
            if (std::abs(t) < floor)
              throw numerical_error("gauge divisor too small: |tau| below the window floor");
            v[i] = cplx(0.0, 1.0) * a / t;
          }
          out.emplace(th, std::move(v));
        }
        break;
      }
    }
    return out;
  }

  const MomentumGrid& grid_;
  std::unordered_map<std::uint64_t, ModeGrid> cache_;
  std::unordered_set<std::uint64_t> keep_;
  std::unordered_set<std::uint64_t> seen_;
  bool evaluated_ = false;
};

}  // namespace blochlab
