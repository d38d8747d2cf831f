// resonance.hpp — resonant layers, congruence classes, and zone partition.
//
// For frequencies θ ∈ Θ_r (dual-lattice points with 0 < |θ| ≤ r) the layer
//     Λ(θ) = { ξ : |ξ·θ| < ρ^{α₁} |θ| }
// collects momenta nearly orthogonal to θ.  Two momenta are directly linked
// when both lie in some Λ(θ) and differ by an integer multiple of θ; the
// congruence class Υ(ξ) is the transitive closure of this relation.  Its
// translates 𝖭(ξ) = Υ(ξ) − ξ index the coupled block of the fiber operator.
//
// Zones: for each subspace V spanned by frequencies (lattice.hpp), with
// n = dim V and exponents α₀ = 0 < α₁ < … < α_d,
//     Ξ₁(V) = { |ξ_V| < ρ^{α_n} },
//     Ξ₂(V) = { ξ : some η ∈ Υ(ξ) lies in Ξ₁(V) },
//     Ξ(V)  = Ξ₂(V) ∖ ⋃_{dim W > n} Ξ₂(W),
// so every momentum belongs to the zone of the highest-dimensional subspace
// its class touches (V = {0} gives the nonresonant zone, and classification
// fails loudly if two distinct zones of equal top dimension are touched).
// Separation of zones needs α_{n+1} − α_n > 2κd² with κ = log_ρ r.
//
// Points within 1e−9 of a layer boundary are displaced by 1e−9 along a fixed
// direction with irrational component ratios before the closure is taken, so
// that strict inequalities decide membership reproducibly.

#pragma once

#include "blochlab/lattice.hpp"

#include <deque>
#include <sstream>
#include <unordered_set>

namespace blochlab {

struct ResonanceParams {
  double rho = 0.0;
  double kappa = 0.0;          // frequency radius exponent: r = ρ^κ
  double r = 0.0;              // explicit radius override when > 0
  std::vector<double> alphas;  // α₁ … α_d (zone exponents by dimension)

  double radius() const { return r > 0.0 ? r : std::pow(rho, kappa); }
  double kappa_eff() const { return std::log(radius()) / std::log(rho); }
  double layer_halfwidth() const {
    if (alphas.empty()) throw config_error("resonance exponent list is empty");
    return std::pow(rho, alphas.front());
  }
  double zone_radius(int n) const {
    if (n == 0) return 1.0;
    if (n < 0 || static_cast<std::size_t>(n) > alphas.size())
      throw config_error("no zone exponent for this subspace dimension");
    return std::pow(rho, alphas[static_cast<std::size_t>(n - 1)]);
  }

  std::vector<std::string> validate(const Lattice& lat) const {
    std::vector<std::string> bad;
    if (!(rho > 1.0)) bad.push_back("requires rho > 1");
    if (r <= 0.0 && !(kappa > 0.0 && kappa < 1.0))
      bad.push_back("requires kappa in (0,1) when no explicit radius is given");
    if (!(radius() >= 1.0)) bad.push_back("requires frequency radius >= 1");
    if (alphas.size() != static_cast<std::size_t>(lat.d))
      bad.push_back("requires one zone exponent per dimension 1..d");
    for (std::size_t j = 0; j < alphas.size(); ++j) {
      if (!(alphas[j] > 0.0 && alphas[j] < 1.0))
        bad.push_back("requires zone exponents in (0,1)");
      if (j > 0 && !(alphas[j] > alphas[j - 1]))
        bad.push_back("requires strictly increasing zone exponents");
    }
    if (rho > 1.0 && alphas.size() == static_cast<std::size_t>(lat.d)) {
      double gap_needed = 2.0 * kappa_eff() * lat.d * lat.d;
      for (std::size_t j = 0; j + 1 < alphas.size(); ++j)
        if (!(alphas[j + 1] - alphas[j] > gap_needed)) {
          std::ostringstream os;
          os << "requires zone exponent gaps > " << gap_needed
             << " to separate zones at this frequency radius";
          bad.push_back(os.str());
          break;
        }
      if (!(alphas.front() > gap_needed))
        bad.push_back("requires alpha_1 > 2*kappa*d^2");
    }
    if (rho > 1.0) {
      auto th = enumerate_theta(lat, radius(), false);
      Eigen::MatrixXd G(lat.d, static_cast<Eigen::Index>(th.size()));
      for (std::size_t j = 0; j < th.size(); ++j)
        G.col(static_cast<Eigen::Index>(j)) = lat.dual_point(th[j]);
      if (th.empty() ||
          Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(G).rank() < lat.d)
        bad.push_back("requires frequencies spanning all d directions");
    }
    return bad;
  }
};

// Fixed displacement direction with irrational component ratios.
inline Vec nudge_direction(int d) {
  static const double primes[3] = {2.0, 3.0, 5.0};
  Vec v(d);
  for (int j = 0; j < d; ++j) v[j] = 1.0 / std::sqrt(primes[j]);
  return v / v.norm();
}

inline bool in_layer(const ResonanceParams& p, const Vec& theta_c, const Vec& xi) {
  return std::abs(xi.dot(theta_c)) < p.layer_halfwidth() * theta_c.norm();
}

// A point is critical when some chain step along some frequency lands within
// tol of a layer boundary, so that strict-inequality membership is fragile.
inline bool is_critical(const Lattice& lat, const ResonanceParams& p, const Vec& xi,
                        double tol = 1e-9) {
  double A = p.layer_halfwidth();
  for (const Mode& th : enumerate_theta(lat, p.radius(), false)) {
    Vec tc = lat.dual_point(th);
    double sn = tc.norm();
    double u0 = xi.dot(tc) / sn;
    for (double target : {A, -A}) {
      auto lstar = static_cast<long>(std::llround((target - u0) / sn));
      for (long l = lstar - 1; l <= lstar + 1; ++l) {
        double u = u0 + static_cast<double>(l) * sn;
        if (std::abs(std::abs(u) - A) < tol) return true;
      }
    }
  }
  return false;
}

inline Vec resolve_point(const Lattice& lat, const ResonanceParams& p, Vec xi,
                         double tol = 1e-9) {
  if (!is_critical(lat, p, xi, tol)) return xi;
  Vec dir = nudge_direction(lat.d);
  for (int attempt = 0; attempt < 5; ++attempt) {
    xi += tol * dir;
    // Cleared when at least 1% of the displacement separates the point from
    // every boundary — enough for strict comparisons to be reproducible.
    if (!is_critical(lat, p, xi, 1e-2 * tol)) return xi;
  }
  throw numerical_error("point remains near a layer boundary after repeated displacement");
}

struct CongruenceClass {
  Vec root;                   // seed after boundary displacement
  bool nudged = false;        // whether the seed was displaced
  std::vector<Mode> offsets;  // point(i) = root + dual·offsets[i], sorted by (|pt|, lex)
  std::vector<Vec> points;    // Υ(ξ) in the same order

  int size() const { return static_cast<int>(points.size()); }

  double diameter() const {
    double d2 = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j)
        d2 = std::max(d2, (points[i] - points[j]).squaredNorm());
    return std::sqrt(d2);
  }

  // 1-based position of η in the sorted class; 0 when absent.
  int index_of(const Vec& eta, double tol = 1e-6) const {
    for (std::size_t i = 0; i < points.size(); ++i)
      if ((points[i] - eta).norm() <= tol) return static_cast<int>(i) + 1;
    return 0;
  }

  std::vector<Vec> shifts() const {  // 𝖭(ξ) = Υ(ξ) − ξ
    std::vector<Vec> out;
    out.reserve(points.size());
    for (const auto& pt : points) out.push_back(pt - root);
    return out;
  }
};

inline CongruenceClass closure(const Lattice& lat, const ResonanceParams& p, Vec xi,
                               std::size_t cap = 100000) {
  CongruenceClass cls;
  Vec resolved = resolve_point(lat, p, xi);
  cls.nudged = (resolved - xi).norm() > 0.0;
  cls.root = resolved;
  xi = resolved;

  auto thetas = enumerate_theta(lat, p.radius(), false);
  double A = p.layer_halfwidth();

  std::unordered_set<Mode, ModeHash> seen;
  std::deque<Mode> queue;
  seen.insert(Mode());
  queue.push_back(Mode());
  std::vector<Mode> order;
  while (!queue.empty()) {
    Mode o = queue.front();
    queue.pop_front();
    order.push_back(o);
    Vec pt = xi + lat.dual_point(o);
    for (const Mode& th : thetas) {
      Vec tc = lat.dual_point(th);
      double s2 = tc.squaredNorm();
      double sn = std::sqrt(s2);
      double u = pt.dot(tc);
      if (!(std::abs(u) < A * sn)) continue;  // need pt ∈ Λ(θ)
      // pt + l·θ ∈ Λ(θ)  ⇔  |u + l s²| < A·s: an open interval in l.
      double lo = (-A * sn - u) / s2, hi = (A * sn - u) / s2;
      auto lmin = static_cast<long>(std::floor(lo)) + 1;
      auto lmax = static_cast<long>(std::ceil(hi)) - 1;
      for (long l = lmin; l <= lmax; ++l) {
        if (l == 0) continue;
        Mode nb(o[0] + static_cast<std::int32_t>(l) * th[0],
                o[1] + static_cast<std::int32_t>(l) * th[1],
                o[2] + static_cast<std::int32_t>(l) * th[2]);
        if (seen.insert(nb).second) {
          if (seen.size() > cap)
            throw resource_error("congruence class exceeds the point budget; "
                                 "the layer exponents do not confine chains at this scale");
          queue.push_back(nb);
        }
      }
    }
  }

  std::vector<std::pair<Mode, Vec>> pts;
  pts.reserve(order.size());
  for (const Mode& o : order) pts.emplace_back(o, Vec(xi + lat.dual_point(o)));
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    double na = a.second.squaredNorm(), nb = b.second.squaredNorm();
    if (na != nb) return na < nb;
    for (Eigen::Index j = 0; j < a.second.size(); ++j)
      if (a.second[j] != b.second[j]) return a.second[j] < b.second[j];
    return false;
  });
  for (auto& [o, pt] : pts) {
    cls.offsets.push_back(o);
    cls.points.push_back(pt);
  }
  return cls;
}

// Direct one-step reachability (both endpoints in Λ(θ), difference ∈ Zθ).
inline bool reachable(const Lattice& lat, const ResonanceParams& p, const Vec& xi,
                      const Vec& eta) {
  Vec diff = eta - xi;
  for (const Mode& th : enumerate_theta(lat, p.radius(), false)) {
    Vec tc = lat.dual_point(th);
    double s2 = tc.squaredNorm();
    double lreal = diff.dot(tc) / s2;
    auto l = static_cast<long>(std::llround(lreal));
    if ((diff - static_cast<double>(l) * tc).norm() > 1e-9) continue;
    if (in_layer(p, tc, xi) && in_layer(p, tc, eta)) return true;
  }
  return false;
}

// Ξ₂(V) membership for an already-computed class.
inline bool touches_zone(const ResonanceParams& p, const CongruenceClass& cls,
                         const Subspace& V) {
  double rad = p.zone_radius(V.dim);
  for (const auto& pt : cls.points)
    if (V.proj_norm(pt) < rad) return true;
  return false;
}

struct ZoneResult {
  int zone_index = -1;  // into the supplied subspace list
  int zone_dim = -1;
  CongruenceClass cls;
};

inline ZoneResult classify(const Lattice& lat, const ResonanceParams& p,
                           const std::vector<Subspace>& subspaces, const Vec& xi,
                           std::size_t cap = 100000) {
  ZoneResult z;
  z.cls = closure(lat, p, xi, cap);
  std::vector<int> hits;
  for (std::size_t i = 0; i < subspaces.size(); ++i) {
    const Subspace& V = subspaces[i];
    if (!touches_zone(p, z.cls, V)) continue;
    if (V.dim > z.zone_dim) {
      z.zone_dim = V.dim;
      hits.assign(1, static_cast<int>(i));
    } else if (V.dim == z.zone_dim) {
      hits.push_back(static_cast<int>(i));
    }
  }
  if (z.zone_dim < 0)
    throw numerical_error("momentum does not meet any zone; subspace list must "
                          "include the trivial subspace");
  if (hits.size() > 1)
    throw numerical_error("congruence class meets two zones of equal dimension; "
                          "exponent gaps do not separate zones at this scale");
  z.zone_index = hits.front();
  return z;
}

// Spherical band of directions nearly orthogonal to θ: the image of a
// resonant layer on the unit sphere has angular half-width 16 ρ^{α_{d−1}−1}.
inline double sphere_band_halfwidth(const ResonanceParams& p, int d) {
  if (static_cast<std::size_t>(d - 1) > p.alphas.size() || d < 2)
    throw config_error("sphere band needs the exponent for dimension d-1");
  return 16.0 * std::pow(p.rho, p.alphas[static_cast<std::size_t>(d - 2)] - 1.0);
}

inline bool in_sphere_band(const Lattice& lat, const ResonanceParams& p, const Mode& theta,
                           const Vec& omega) {
  Vec tc = lat.dual_point(theta);
  double val = std::abs(omega.dot(tc)) / (omega.norm() * tc.norm());
  return val < sphere_band_halfwidth(p, lat.d);
}

}  // namespace blochlab
