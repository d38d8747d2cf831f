// lattice.hpp — period lattice Γ = B·Z^d, its dual Γ† = D·Z^d with
// D = 2π B^{-T}, and the combinatorial geometry built on Γ†:
//
//   * enumeration of the frequency sets Θ_r = {θ ∈ Γ† : 0 < |θ| ≤ r};
//   * the family of subspaces spanned by subsets of Θ_r (with {0} and,
//     when a subset has full rank, R^d itself);
//   * shortest direct-lattice vectors orthogonal to a given subspace,
//     with the a-priori search ball  |g| ≤ 2 v(Γ) ω_{d-1}^{-1} π^{1-d} r^{d-1},
//     v(Γ) = |det B|, ω_n = volume of the unit n-ball;
//   * momentum splitting ξ = m + k, m ∈ Γ†, k in the dual fundamental cell,
//     and the torus distance |η|_T = min_{m ∈ Γ†} |η - m|.

#pragma once

#include "blochlab/common.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

namespace blochlab {

// ---------------------------------------------------------------------------
// Lattice
// ---------------------------------------------------------------------------

struct Lattice {
  int d = 0;
  Mat basis;      // columns a_1..a_d:  Γ = basis · Z^d
  Mat dual;       // columns: dual basis, dual = 2π basis^{-T}
  Mat dual_inv;   // dual^{-1}
  Mat basis_inv;  // basis^{-1}
  double cell_volume = 0.0;     // v(Γ) = |det basis|
  double inv_sqrt_cell = 0.0;   // v(Γ)^{-1/2}; Fourier normalisation factor

  // Cartesian embedding of a dual-lattice coordinate vector.
  Vec dual_point(const Mode& n) const {
    Vec x = Vec::Zero(d);
    for (int j = 0; j < d; ++j) x += static_cast<double>(n[j]) * dual.col(j);
    return x;
  }
  // Cartesian embedding of a direct-lattice coordinate vector.
  Vec direct_point(const Mode& n) const {
    Vec x = Vec::Zero(d);
    for (int j = 0; j < d; ++j) x += static_cast<double>(n[j]) * basis.col(j);
    return x;
  }
  Vec dual_coords(const Vec& xi) const { return dual_inv * xi; }

  // ξ = dual_point(m) + k with dual_coords(k) ∈ [0,1)^d.
  std::pair<Mode, Vec> split_momentum(const Vec& xi) const {
    Vec c = dual_inv * xi;
    Mode m;
    for (int j = 0; j < d; ++j) m[j] = static_cast<std::int32_t>(std::floor(c[j]));
    Vec k = xi - dual_point(m);
    return {m, k};
  }

  // |η|_T = distance from η to the nearest dual-lattice point.
  double torus_distance(const Vec& eta) const {
    Vec c = dual_inv * eta;
    // The minimiser lies within a small coordinate box around the rounded point.
    Mode c0;
    for (int j = 0; j < d; ++j) c0[j] = static_cast<std::int32_t>(std::llround(c[j]));
    double best = (eta - dual_point(c0)).norm();
    // Cell diameter bounds how far (in coordinates) a closer point can be.
    int span = 1 + static_cast<int>(std::ceil(dual_inv.cwiseAbs().sum()));
    Mode n= c0;
    double best2 = best;
    for (int i0 = -span; i0 <= span; ++i0)
      for (int i1 = -span; i1 <= span; ++i1)
        for (int i2 = (d == 3 ? -span : 0); i2 <= (d == 3 ? span : 0); ++i2) {
          n[0] = c0[0] + i0;
          n[1] = c0[1] + i1;
          n[2] = (d == 3) ? c0[2] + i2 : 0;
          best2 = std::min(best2, (eta - dual_point(n)).norm());
        }
    return best2;
  }
};

inline Lattice make_lattice(int d, const Mat& basis) {
  if (d < 1 || d > 3)
    throw config_error("lattice dimension must be 1, 2, or 3");
  if (basis.rows() != d || basis.cols() != d)
    throw config_error("lattice basis must be a d-by-d matrix of column vectors");
  Lattice lat;
  lat.d = d;
  lat.basis = basis;
  double det = basis.determinant();
  if (!(std::abs(det) > 1e-12))
    throw config_error("lattice basis is singular (|det| <= 1e-12)");
  lat.basis_inv = basis.inverse();
  lat.dual = 2.0 * pi * lat.basis_inv.transpose();
  lat.dual_inv = lat.dual.inverse();
  lat.cell_volume = std::abs(det);
  lat.inv_sqrt_cell = 1.0 / std::sqrt(lat.cell_volume);
  return lat;
}

inline Lattice cubic_lattice(int d, double a = 2.0 * pi) {
  Mat B = Mat::Identity(d, d) * a;
  return make_lattice(d, B);
}

// ---------------------------------------------------------------------------
// Frequency enumeration: Θ_r (and Θ_r with 0 prepended).
// Order: by (|θ|, lexicographic coordinates) — deterministic everywhere.
// ---------------------------------------------------------------------------

namespace detail {

inline double op_norm(const Mat& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues()(0);
}

inline void sort_modes_by_length(const Lattice& lat, std::vector<Mode>& v) {
  std::sort(v.begin(), v.end(), [&](const Mode& a, const Mode& b) {
    double la = lat.dual_point(a).norm(), lb = lat.dual_point(b).norm();
    if (la != lb) return la < lb;
    return ModeLess{}(a, b);
  });
}

}  // namespace detail

inline std::vector<Mode> enumerate_theta(const Lattice& lat, double r, bool include_zero = false) {
  if (!(r >= 0.0)) throw config_error("frequency radius r must be nonnegative");
  std::vector<Mode> out;
  if (include_zero) out.push_back(Mode());
  // |D n| <= r  ⇒  |n| <= r * ||D^{-1}||.
  int span = static_cast<int>(std::floor(r * detail::op_norm(lat.dual_inv) + 1e-9));
  for (int i0 = -span; i0 <= span; ++i0)
    for (int i1 = -span; i1 <= span; ++i1)
      for (int i2 = (lat.d == 3 ? -span : 0); i2 <= (lat.d == 3 ? span : 0); ++i2) {
        Mode n(i0, i1, i2);
        if (n.is_zero()) continue;
        if (lat.dual_point(n).norm() <= r * (1.0 + 1e-12)) out.push_back(n);
      }
  // Keep 0 (if any) in front, order the rest geometrically.
  std::size_t start = include_zero ? 1 : 0;
  std::vector<Mode> tail(out.begin() + static_cast<std::ptrdiff_t>(start), out.end());
  detail::sort_modes_by_length(lat, tail);
  std::copy(tail.begin(), tail.end(), out.begin() + static_cast<std::ptrdiff_t>(start));
  return out;
}

// ---------------------------------------------------------------------------
// Subspaces spanned by subsets of Θ_r.
// ---------------------------------------------------------------------------

struct Subspace {
  int dim = 0;
  Mat onb;                       // d×dim, orthonormal columns (0 columns when dim==0)
  std::vector<Mode> generators;  // all θ ∈ Θ_r lying in the subspace, sorted

  Mat projector(int d) const {
    if (dim == 0) return Mat::Zero(d, d);
    return onb * onb.transpose();
  }
  // |ξ_V|: length of the orthogonal projection onto the subspace.
  double proj_norm(const Vec& xi) const {
    if (dim == 0) return 0.0;
    return (onb.transpose() * xi).norm();
  }
  double perp_norm(const Vec& xi) const {
    if (dim == 0) return xi.norm();
    return (xi - onb * (onb.transpose() * xi)).norm();
  }
  bool contains(const Vec& v, double tol = 1e-9) const {
    if (dim == 0) return v.norm() <= tol;
    return (v - onb * (onb.transpose() * v)).norm() <= tol * std::max(1.0, v.norm());
  }
};

namespace detail {

// Orthonormal basis of the span of the given Cartesian vectors (rank-revealing QR).
inline Mat span_onb(int d, const std::vector<Vec>& vs, double tol = 1e-10) {
  if (vs.empty()) return Mat(d, 0);
  Eigen::MatrixXd A(d, static_cast<Eigen::Index>(vs.size()));
  for (std::size_t j = 0; j < vs.size(); ++j) A.col(static_cast<Eigen::Index>(j)) = vs[j];
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(tol);
  Eigen::Index rank = qr.rank();
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, rank);
  Mat out(d, rank);
  out = Q;
  return out;
}

inline bool same_subspace(int d, const Subspace& a, const Subspace& b, double tol = 1e-9) {
  if (a.dim != b.dim) return false;
  return (a.projector(d) - b.projector(d)).norm() <= tol;
}

}  // namespace detail

// All distinct subspaces spanned by subsets of Θ_r, including the trivial
// subspace {0} (span of the empty set).  Sorted by (dim, generator list).
inline std::vector<Subspace> enumerate_subspaces(const Lattice& lat, double r,
                                                 std::size_t max_sets = 1u << 20) {
  std::vector<Mode> theta = enumerate_theta(lat, r);
  if (theta.size() > 24)
    throw resource_error("frequency set too large for subspace enumeration (" +
                         std::to_string(theta.size()) + " > 24 vectors)");
  std::vector<Subspace> found;
  {
    Subspace zero;
    zero.dim = 0;
    zero.onb = Mat(lat.d, 0);
    found.push_back(zero);
  }
  std::size_t nsets = std::size_t{1} << theta.size();
  if (nsets > max_sets) throw resource_error("subspace enumeration budget exceeded");
  for (std::size_t mask = 1; mask < nsets; ++mask) {
    std::vector<Vec> vs;
    for (std::size_t i = 0; i < theta.size(); ++i)
      if (mask & (std::size_t{1} << i)) vs.push_back(lat.dual_point(theta[i]));
    Subspace s;
    s.onb = detail::span_onb(lat.d, vs);
    s.dim = static_cast<int>(s.onb.cols());
    bool dup = false;
    for (const auto& f : found)
      if (detail::same_subspace(lat.d, f, s)) { dup = true; break; }
    if (!dup) found.push_back(std::move(s));
  }
  // Canonical generators: every θ ∈ Θ_r contained in the subspace.
  for (auto& s : found) {
    s.generators.clear();
    if (s.dim == 0) continue;
    for (const auto& th : theta)
      if (s.contains(lat.dual_point(th))) s.generators.push_back(th);
    detail::sort_modes_by_length(lat, s.generators);
  }
  std::sort(found.begin(), found.end(), [&](const Subspace& a, const Subspace& b) {
    if (a.dim != b.dim) return a.dim < b.dim;
    return std::lexicographical_compare(a.generators.begin(), a.generators.end(),
                                        b.generators.begin(), b.generators.end(), ModeLess{});
  });
  return found;
}

// ---------------------------------------------------------------------------
// Shortest direct-lattice vector orthogonal to a subspace.
// ---------------------------------------------------------------------------

struct OrthogonalVector {
  Mode coords;     // coordinates in the direct basis
  Vec point;       // Cartesian vector g = basis · coords
  double length = 0.0;
};

// Search ball radius 2 v(Γ) ω_{d-1}^{-1} π^{1-d} r^{d-1}; a shortest orthogonal
// lattice vector for a subspace generated by dual vectors of length ≤ r is
// guaranteed inside.
inline double orthogonal_search_radius(const Lattice& lat, double r) {
  double omega = (lat.d == 2) ? 2.0 : pi;  // ω_1 = 2, ω_2 = π
  return 2.0 * lat.cell_volume / omega * std::pow(pi, 1.0 - lat.d) *
         std::pow(r, lat.d - 1.0);
}

inline std::optional<OrthogonalVector> find_orthogonal(const Lattice& lat, const Subspace& V,
                                                       double search_radius,
                                                       double tol = 1e-9) {
  if (V.dim >= lat.d) return std::nullopt;
  int span = static_cast<int>(std::floor(search_radius * detail::op_norm(lat.basis_inv) + 1e-9));
  std::optional<OrthogonalVector> best;
  for (int i0 = -span; i0 <= span; ++i0)
    for (int i1 = -span; i1 <= span; ++i1)
      for (int i2 = (lat.d == 3 ? -span : 0); i2 <= (lat.d == 3 ? span : 0); ++i2) {
        Mode n(i0, i1, i2);
        if (n.is_zero()) continue;
        Vec g = lat.direct_point(n);
        double len = g.norm();
        if (len > search_radius * (1.0 + 1e-12)) continue;
        if (V.proj_norm(g) > tol * len) continue;  // not orthogonal to V
        if (!best || len < best->length - 1e-15 ||
            (std::abs(len - best->length) <= 1e-15 && ModeLess{}(best->coords, n)))
          best = OrthogonalVector{n, g, len};
      }
  return best;
}

}  // namespace blochlab
