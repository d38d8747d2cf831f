// norms.hpp — weighted symbol-class seminorm estimator
//
//     ⦀b⦀^{(α)}_{l,s} = max_{|s'| ≤ s}  sup_{ξ,θ}  ⟨θ⟩^l  w(ξ)^{−α+|s'|} |D^{s'}_ξ b̂(θ,ξ)|,
//     w(ξ) = ⟨ξ⟩^β,  ⟨t⟩ = sqrt(1+|t|²).
//
// The sup over ξ is sampled on a deterministic log-radial grid of radii in
// [1, 4ρ] crossed with uniformly spread directions (equal angles in d = 2, a
// Fibonacci sphere in d = 3); θ runs over the finite mode support.
// Derivatives in ξ are central differences with step 1e-5·max(1,|ξ|).

#pragma once

#include "blochlab/symbol.hpp"

namespace blochlab {

struct NormParams {
  double l = 0.0;    // frequency weight exponent ⟨θ⟩^l
  int s = 0;         // highest ξ-derivative order (0, 1 or 2)
  double alpha = 0;  // growth exponent
  double beta = 1;   // weight exponent, w = ⟨ξ⟩^β
  double rho = 1;    // radial range [1, 4ρ]
  int n_radial = 24;
  int n_angular = 16;
};

namespace detail {

inline std::vector<Vec> norm_directions(int d, int n) {
  std::vector<Vec> dirs;
  dirs.reserve(static_cast<std::size_t>(n));
  if (d == 2) {
    for (int i = 0; i < n; ++i) {
      double a = 2.0 * pi * (static_cast<double>(i) + 0.5) / n;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      dirs.push_back(v);
    }
  } else {
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    for (int i = 0; i < n; ++i) {
      double z = 1.0 - (2.0 * i + 1.0) / n;
      double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
      double a = 2.0 * pi * static_cast<double>(i) / golden;
      Vec v(3);
      v << rr * std::cos(a), rr * std::sin(a), z;
      dirs.push_back(v);
    }
  }
  return dirs;
}

// All multi-indices with |s'| <= s for the active dimension.
inline std::vector<std::array<int, 3>> multi_indices(int d, int s) {
  std::vector<std::array<int, 3>> out;
  for (int a = 0; a <= s; ++a)
    for (int b = 0; a + b <= s; ++b)
      for (int c = 0; a + b + c <= s; ++c) {
        if (d == 2 && c > 0) continue;
        out.push_back({a, b, c});
      }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    int nx = x[0] + x[1] + x[2], ny = y[0] + y[1] + y[2];
    if (nx != ny) return nx < ny;
    return x < y;
  });
  return out;
}

// Central-difference D^{s'} b̂(θ, ·) at ξ; step h per axis.
inline cplx central_diff(const Symbol& b, const Mode& th, const Vec& xi,
                         const std::array<int, 3>& s, double h) {
  int total = s[0] + s[1] + s[2];
  if (total == 0) return eval(b, th, xi);
  // Peel one derivative off the first active axis.
  for (int ax = 0; ax < 3; ++ax) {
    if (s[static_cast<std::size_t>(ax)] == 0) continue;
    std::array<int, 3> rest = s;
    rest[static_cast<std::size_t>(ax)] -= 1;
    Vec e = Vec::Zero(xi.size());
    e[ax] = h;
    return (central_diff(b, th, xi + e, rest, h) - central_diff(b, th, xi - e, rest, h)) /
           (2.0 * h);
  }
  return cplx(0.0);
}

}  // namespace detail

inline double estimate_norm(const Symbol& b, const NormParams& p) {
  if (p.s < 0 || p.s > 2) throw config_error("norm estimator supports derivative orders 0..2");
  if (!(p.rho > 0.0)) throw config_error("norm estimator requires rho > 0");
  int d = b->lat->d;
  auto dirs = detail::norm_directions(d, p.n_angular);
  auto sprimes = detail::multi_indices(d, p.s);

  double best = 0.0;
  double r_lo = 1.0, r_hi = 4.0 * p.rho;
  for (int ir = 0; ir < p.n_radial; ++ir) {
    double t = p.n_radial == 1 ? 0.0 : static_cast<double>(ir) / (p.n_radial - 1);
    double r = r_lo * std::pow(r_hi / r_lo, t);
    for (const auto& dir : dirs) {
      Vec xi = r * dir;
      double h = 1e-5 * std::max(1.0, xi.norm());
      double w = jbracket(xi);
      for (const auto& th : b->support) {
        double jb = jbracket(b->lat->dual_point(th));
        for (const auto& sp : sprimes) {
          int order = sp[0] + sp[1] + sp[2];
          cplx v = detail::central_diff(b, th, xi, sp, h);
          double weight = std::pow(jb, p.l) * std::pow(w, p.beta * (-p.alpha + order));
          best = std::max(best, weight * std::abs(v));
        }
      }
    }
  }
  return best;
}

}  // namespace blochlab
