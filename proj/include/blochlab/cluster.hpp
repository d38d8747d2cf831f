#pragma once

// Cluster (congruence-class) model blocks and the globally defined band
// label g.
//
// On a congruence class Y = {mu + n : n in offsets} the model operator keeps
// only the diagonal dressed kinetic term and the resonant couplings that lie
// inside a fixed subspace V:
//
//   A_{mn}(mu) = (h0(mu+n) + w * Re b^mean(mu+n)) delta_{mn}
//                + w * b^res_V(m - n, mu + n),        w = 1/sqrt(cell volume),
//
// indexed in the class's canonical order (ascending |point|, ties by
// coordinates).  The block is exactly self-adjoint for a symmetric symbol; a
// relative deviation beyond `herm_tol` raises numerical_error before the
// matrix is symmetrized.
//
// The band label g assigns to every point xi the eigenvalue of its class
// block whose ascending rank equals the canonical rank of xi inside its own
// class.  On singleton classes this collapses to the dressed diagonal, so g
// is a plain continuation of the unperturbed branch |xi|^{2m} away from
// resonances.

#include <cstddef>
#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "blochlab/common.hpp"
#include "blochlab/cutoffs.hpp"
#include "blochlab/decompose.hpp"
#include "blochlab/fiber.hpp"
#include "blochlab/lattice.hpp"
#include "blochlab/linalg.hpp"
#include "blochlab/resonance.hpp"
#include "blochlab/symbol.hpp"

namespace blochlab {

// Dense model block on a congruence class.  V restricts the coupling
// directions; passing std::nullopt keeps every resonant direction (useful
// for diagnostics), while a zero-dimensional V yields a diagonal block.
inline Eigen::MatrixXcd cluster_matrix(const OperatorSpec& op,
                                       const CutoffParams& cut,
                                       const std::optional<Subspace>& V,
                                       const CongruenceClass& cls,
                                       double herm_tol = 1e-12) {
  const int n = cls.size();
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < n; ++j)
    H(j, j) = dressed_diagonal(op, cls.points[static_cast<std::size_t>(j)]);
  if (op.b && n > 1 && (!V || V->dim > 0)) {
    Symbol res = filter_part(op.b, PartKind::Resonant, cut, V);
    const double w = op.lattice->inv_sqrt_cell;
    for (int j = 0; j < n; ++j) {
      const Vec& pt = cls.points[static_cast<std::size_t>(j)];
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        Mode th = cls.offsets[static_cast<std::size_t>(i)] -
                  cls.offsets[static_cast<std::size_t>(j)];
        if (!res->in_support(th)) continue;
        H(i, j) += w * eval(res, th, pt);
      }
    }
    double scale = H.cwiseAbs().maxCoeff();
    double dev = (H - H.adjoint().eval()).cwiseAbs().maxCoeff();
    if (scale > 0 && dev > herm_tol * scale)
      throw numerical_error("cluster block deviates from self-adjointness: "
                            "relative deviation " + format_sig17(dev / scale));
    H = ((H + H.adjoint().eval()) / 2.0).eval();
  }
  return H;
}

inline Eigen::VectorXd cluster_spectrum(const OperatorSpec& op,
                                        const CutoffParams& cut,
                                        const std::optional<Subspace>& V,
                                        const CongruenceClass& cls,
                                        double herm_tol = 1e-12) {
  return hermitian_eigenvalues(cluster_matrix(op, cut, V, cls, herm_tol));
}

// Globally defined band label.  Evaluations are memoized on the bit pattern
// of xi, so repeated queries (grids, Monte Carlo batches) are cheap and
// bitwise reproducible.
struct BandFunction {
  OperatorSpec op;
  CutoffParams cut;
  ResonanceParams res;
  std::vector<Subspace> subspaces;
  std::size_t closure_cap = 100000;
  double herm_tol = 1e-12;

  double operator()(const Vec& xi) const {
    PointKey key(Mode(), xi);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    double val = value_at(zone_of(xi));
    memo_.emplace(key, val);
    return val;
  }

  // Unmemoized pieces, for bulk sampling where caching would only grow.
  ZoneResult zone_of(const Vec& xi) const {
    return classify(*op.lattice, res, subspaces, xi, closure_cap);
  }

  double value_at(const ZoneResult& z) const {
    if (z.cls.size() == 1)
      return dressed_diagonal(op, z.cls.points.front());
    const Subspace& V = subspaces[static_cast<std::size_t>(z.zone_index)];
    Eigen::VectorXd ev = cluster_spectrum(op, cut, V, z.cls, herm_tol);
    int rank = z.cls.index_of(z.cls.root);
    if (rank < 1)
      throw numerical_error("class root missing from its own class");
    return ev[rank - 1];
  }

  std::size_t cached() const { return memo_.size(); }
  void clear_cache() const { memo_.clear(); }

 private:
  mutable std::unordered_map<PointKey, double, PointKeyHash> memo_;
};

inline BandFunction make_band_function(const OperatorSpec& op,
                                       const CutoffParams& cut,
                                       const ResonanceParams& res) {
  BandFunction f;
  f.op = op;
  f.cut = cut;
  f.res = res;
  f.subspaces = enumerate_subspaces(*op.lattice, res.radius());
  return f;
}

// Convenience probe used by the regularity checks: the increment of g
// between two nearby points, alongside the slab bound C rho^{2m-1} |b - a|.
struct LipschitzProbe {
  double increment = 0.0;
  double bound_unit = 0.0;  // rho^{2m-1} |b - a|
  double ratio = 0.0;       // increment / bound_unit
};

inline LipschitzProbe lipschitz_probe(const BandFunction& g, const Vec& a,
                                      const Vec& b) {
  LipschitzProbe p;
  p.increment = std::abs(g(b) - g(a));
  p.bound_unit =
      std::pow(g.res.rho, 2.0 * g.op.m - 1.0) * (Vec(b - a)).norm();
  p.ratio = p.bound_unit > 0 ? p.increment / p.bound_unit : 0.0;
  return p;
}

}  // namespace blochlab
