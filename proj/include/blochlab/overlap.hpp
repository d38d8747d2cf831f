#pragma once

// Band-overlap machinery.
//
// The overlap function of the full operator at energy lambda is
//
//   zeta(lambda) = sup { t >= 0 :  min_k N(lambda + t, H(k))
//                                < max_k N(lambda - t, H(k)) },   sup {} = 0,
//
// with N the counting function of the fiber at quasimomentum k.  Since
// min_k N(lambda + t) is nondecreasing and max_k N(lambda - t) is
// nonincreasing in t, the overlap predicate flips exactly once and the sup
// is found by bisection.  All counts are served from per-k windowed blocks
// built once and reused across every probe.
//
// The module also provides: band-edge extraction from dense fiber spectra
// (an independent route used to cross-check the windowed counts), a
// counting sandwich against the block-diagonal model operator, radial
// preimages of energy intervals under the band label, and a search for
// directions along which the shell crossing is simple.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "blochlab/cluster.hpp"
#include "blochlab/common.hpp"
#include "blochlab/cutoffs.hpp"
#include "blochlab/fiber.hpp"
#include "blochlab/lattice.hpp"
#include "blochlab/symbol.hpp"

namespace blochlab {

struct OverlapOptions {
  int grid_per_dim = 32;    // quasimomentum grid resolution per dimension
  double rel_tol = 1e-6;    // bisection tolerance relative to max(1, t_cap)
  double t_cap = 0.0;       // probe range; 0 = automatic from coupling bound
  double guard_factor = 8.0;
  FiberOptions fiber = {};
};

struct OverlapReport {
  double lambda = 0.0;
  double zeta = 0.0;
  bool overlapped_at_zero = false;
  bool capped = false;  // overlap persists beyond the probe range
  double t_cap = 0.0;
  long n_min = 0, n_max = 0;  // extreme counts at lambda itself
  Vec k_min, k_max;           // quasimomenta attaining them
  int grid_points = 0;
};

// Fractional quasimomentum grid over the fundamental dual cell, offset by
// half a step so symmetry points are never sampled exactly.
inline std::vector<Vec> quasimomentum_grid(const Lattice& lat, int per_dim) {
  if (per_dim < 1) throw config_error("quasimomentum grid must be positive");
  int d = lat.d;
  long total = 1;
  for (int i = 0; i < d; ++i) total *= per_dim;
  std::vector<Vec> ks;
  ks.reserve(static_cast<std::size_t>(total));
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    Vec frac(d);
    for (int i = 0; i < d; ++i) {
      frac[i] = (static_cast<double>(rem % per_dim) + 0.5) / per_dim;
      rem /= per_dim;
    }
    ks.push_back(Vec(lat.dual * frac));
  }
  return ks;
}

inline OverlapReport band_overlap(const OperatorSpec& op, double lambda,
                                  const OverlapOptions& opts = {}) {
  const Lattice& lat = *op.lattice;
  if (lambda <= 0) throw config_error("overlap energy must be positive");
  double r_shell = std::pow(lambda, 1.0 / (2.0 * op.m));
  double coup = coupling_row_sum(op, 1.2 * r_shell + 1.0);
  double t_cap = opts.t_cap > 0 ? opts.t_cap : 8.0 * coup + 1.0;

  std::vector<Vec> ks = quasimomentum_grid(lat, opts.grid_per_dim);
  std::vector<CountingWindow> wins;
  wins.reserve(ks.size());
  for (const Vec& k : ks)
    wins.push_back(make_counting_window(op, k, lambda - t_cap, lambda + t_cap,
                                        opts.guard_factor, opts.fiber));

  auto min_count = [&](double mu) {
    long best = std::numeric_limits<long>::max();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < wins.size(); ++i) {
      long c = wins[i].count(mu);
      if (c < best) { best = c; arg = i; }
    }
    return std::make_pair(best, arg);
  };
  auto max_count = [&](double mu) {
    long best = std::numeric_limits<long>::min();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < wins.size(); ++i) {
      long c = wins[i].count(mu);
      if (c > best) { best = c; arg = i; }
    }
    return std::make_pair(best, arg);
  };
  auto overlapped = [&](double t) {
    return min_count(lambda + t).first < max_count(lambda - t).first;
  };

  OverlapReport rep;
  rep.lambda = lambda;
  rep.t_cap = t_cap;
  rep.grid_points = static_cast<int>(ks.size());
  auto mn = min_count(lambda);
  auto mx = max_count(lambda);
  rep.n_min = mn.first;
  rep.n_max = mx.first;
  rep.k_min = ks[mn.second];
  rep.k_max = ks[mx.second];
  rep.overlapped_at_zero = rep.n_min < rep.n_max;
  if (!rep.overlapped_at_zero) return rep;  // zeta = 0: the sup is empty

  if (overlapped(t_cap)) {
    rep.zeta = t_cap;
    rep.capped = true;
    return rep;
  }
  double t_ok = 0.0, t_bad = t_cap;
  double tol = opts.rel_tol * std::max(1.0, t_cap);
  while (t_bad - t_ok > tol) {
    double mid = 0.5 * (t_ok + t_bad);
    (overlapped(mid) ? t_ok : t_bad) = mid;
  }
  rep.zeta = 0.5 * (t_ok + t_bad);
  return rep;
}

// ---------------------------------------------------------------------------
// Band edges by dense diagonalization (independent of the windowed engine).
// ---------------------------------------------------------------------------

struct BandEdges {
  std::vector<double> bottoms, tops;  // per band, extremized over the grid
};

inline BandEdges band_edges(const OperatorSpec& op, int n_bands,
                            int grid_per_dim, double cutoff,
                            const FiberOptions& fo = {}) {
  if (n_bands < 1) throw config_error("need at least one band");
  BandEdges be;
  be.bottoms.assign(static_cast<std::size_t>(n_bands),
                    std::numeric_limits<double>::infinity());
  be.tops.assign(static_cast<std::size_t>(n_bands),
                 -std::numeric_limits<double>::infinity());
  for (const Vec& k : quasimomentum_grid(*op.lattice, grid_per_dim)) {
    FiberSpectrum s = fiber_spectrum(op, k, cutoff, fo);
    if (s.evals.size() < n_bands)
      throw config_error("cutoff too small for the requested band count");
    for (int j = 0; j < n_bands; ++j) {
      auto b = static_cast<std::size_t>(j);
      be.bottoms[b] = std::min(be.bottoms[b], s.evals[j]);
      be.tops[b] = std::max(be.tops[b], s.evals[j]);
    }
  }
  return be;
}

// ---------------------------------------------------------------------------
// Counting sandwich against the block-diagonal model operator.
// ---------------------------------------------------------------------------

// The model keeps the mean and the resonant couplings of the symbol; its
// fiber is block-diagonal over congruence chains by construction.
inline OperatorSpec model_operator(const OperatorSpec& op,
                                   const CutoffParams& cut) {
  if (!op.b) return op;
  Symbol model = symbol_sum({filter_part(op.b, PartKind::Mean, cut),
                             filter_part(op.b, PartKind::Resonant, cut)});
  return OperatorSpec{op.lattice, op.m, model, op.alpha, op.beta};
}

struct SandwichReport {
  long n_full = 0;       // N(lambda, H(k))
  long n_model_lo = 0;   // N(lambda - shift, A(k))
  long n_model_hi = 0;   // N(lambda + shift, A(k))
  double shift = 0.0;
  bool ok = false;
};

inline SandwichReport counting_sandwich(const OperatorSpec& op,
                                        const CutoffParams& cut, const Vec& k,
                                        double lambda, double shift,
                                        double guard_factor = 8.0,
                                        const FiberOptions& fo = {}) {
  if (shift <= 0) throw config_error("sandwich shift must be positive");
  SandwichReport rep;
  rep.shift = shift;
  CountingWindow full =
      make_counting_window(op, k, lambda, lambda, guard_factor, fo);
  OperatorSpec mod = model_operator(op, cut);
  CountingWindow model = make_counting_window(mod, k, lambda - shift,
                                              lambda + shift, guard_factor, fo);
  rep.n_full = full.count(lambda);
  rep.n_model_lo = model.count(lambda - shift);
  rep.n_model_hi = model.count(lambda + shift);
  rep.ok = rep.n_model_lo <= rep.n_full && rep.n_full <= rep.n_model_hi;
  return rep;
}

// ---------------------------------------------------------------------------
// Chain reduction of a separable operator.
// ---------------------------------------------------------------------------

// When the symbol depends on a single coordinate (all modes along one axis,
// coefficients independent of the transverse momentum), the fiber decomposes
// into one-dimensional chains shifted by transverse kinetic energies.  This
// returns the chain factor as a genuine d = 1 operator; axis is 1-based.
inline OperatorSpec reduce_to_chain(const OperatorSpec& op, int axis) {
  const Lattice& lat = *op.lattice;
  if (axis < 1 || axis > lat.d)
    throw config_error("chain axis must lie in 1..dimension");
  int ax = axis - 1;
  for (int r = 0; r < lat.d; ++r)
    for (int c = 0; c < lat.d; ++c)
      if (r != c && std::abs(lat.basis(r, c)) > 1e-12 * lat.basis.norm())
        throw config_error("chain reduction needs an axis-aligned lattice");
  auto lat1 = std::make_shared<Lattice>(
      cubic_lattice(1, std::abs(lat.basis(ax, ax))));
  if (!op.b) return OperatorSpec{lat1, op.m, nullptr, op.alpha, op.beta};

  double scale = std::sqrt(lat1->cell_volume / lat.cell_volume);
  std::vector<std::pair<Mode, CoeffFn>> modes;
  for (const Mode& th : op.b->support) {
    for (int j = 0; j < lat.d; ++j)
      if (j != ax && th.c[static_cast<std::size_t>(j)] != 0)
        throw config_error("symbol has modes off the chain axis; "
                           "not separable along axis " + std::to_string(axis));
    // The coefficient must not see the transverse momentum.
    Vec probe_a = Vec::Zero(lat.d), probe_b = Vec::Zero(lat.d);
    probe_a[ax] = 3.7;
    probe_b[ax] = 3.7;
    for (int j = 0; j < lat.d; ++j)
      if (j != ax) probe_b[j] = 5.3 + j;
    cplx va = eval(op.b, th, probe_a), vb = eval(op.b, th, probe_b);
    if (std::abs(va - vb) > 1e-9 * (1.0 + std::abs(va)))
      throw config_error("symbol coefficients depend on transverse momentum; "
                         "not separable along axis " + std::to_string(axis));
    Mode th1(th.c[static_cast<std::size_t>(ax)], 0, 0);
    Symbol b2 = op.b;
    int d2 = lat.d;
    CoeffFn fn = [b2, th, ax, d2, scale](const Vec& x1) {
      Vec x = Vec::Zero(d2);
      x[ax] = x1[0];
      return scale * eval(b2, th, x);
    };
    modes.emplace_back(th1, std::move(fn));
  }
  return OperatorSpec{lat1, op.m, make_symbol(lat1, modes), op.alpha, op.beta};
}

// ---------------------------------------------------------------------------
// Radial preimages of energy intervals under the band label.
// ---------------------------------------------------------------------------

struct RadialInterval {
  double lo = 0.0, hi = 0.0;
  double length() const { return hi - lo; }
};

namespace detail {

// Solve g(r * omega) = level for r near r_guess by bracketed bisection.
inline double radial_solve(const BandFunction& g, const Vec& omega,
                           double level, double r_guess, double rel_tol) {
  auto f = [&](double r) { return g(Vec(r * omega)) - level; };
  double w = std::max(1e-3 * r_guess, 1e-6);
  double a = r_guess - w, b = r_guess + w;
  for (int i = 0; i < 60 && !(f(a) < 0 && f(b) > 0); ++i) {
    w *= 1.6;
    a = std::max(r_guess - w, 1e-9);
    b = r_guess + w;
    if (i == 59)
      throw numerical_error("radial bracket for the band label did not close");
  }
  while (b - a > rel_tol * std::max(1.0, b)) {
    double mid = 0.5 * (a + b);
    (f(mid) < 0 ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

inline RadialInterval interval_preimage(const BandFunction& g,
                                        const Vec& omega, double lam_lo,
                                        double lam_hi, double r_guess,
                                        double rel_tol = 1e-10) {
  if (!(lam_lo < lam_hi)) throw config_error("empty energy interval");
  RadialInterval iv;
  iv.lo = detail::radial_solve(g, omega, lam_lo, r_guess, rel_tol);
  iv.hi = detail::radial_solve(g, omega, lam_hi, r_guess, rel_tol);
  if (!(iv.lo < iv.hi))
    throw numerical_error("radial preimage came out reversed; the band label "
                          "is not increasing along this direction");
  return iv;
}

// ---------------------------------------------------------------------------
// Simple-crossing directions.
// ---------------------------------------------------------------------------

struct SimpleDirection {
  Vec omega;
  RadialInterval interval;
  double delta = 0.0;
  int tried = 0;
};

// Scan deterministic pseudo-random directions until one is found where the
// band label increases strictly through the window [lambda - delta,
// lambda + delta] along the ray (intermediate-value crossing, checked on a
// monotonicity ladder), then return the radial preimage.
inline SimpleDirection find_simple_direction(const BandFunction& g,
                                             double lambda, double delta,
                                             int max_try = 256,
                                             std::uint64_t seed = 7) {
  const Lattice& lat = *g.op.lattice;
  int d = lat.d;
  double m2 = 2.0 * g.op.m;
  double r_shell = std::pow(lambda, 1.0 / m2);
  // Window wide enough that the level set sits strictly inside.
  double half = 4.0 * delta / (m2 * std::pow(r_shell, m2 - 1.0));
  CounterRng rng{seed, 11};
  std::uint64_t ctr = 0;
  for (int t = 0; t < max_try; ++t) {
    Vec omega(d);
    if (d == 1) {
      omega << 1.0;
    } else if (d == 2) {
      double ang = 2.0 * pi * rng.uniform(ctr++);
      omega << std::cos(ang), std::sin(ang);
    } else {
      double z = 2.0 * rng.uniform(ctr++) - 1.0;
      double ang = 2.0 * pi * rng.uniform(ctr++);
      double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      omega << s * std::cos(ang), s * std::sin(ang), z;
    }
    bool monotone = true;
    const int rungs = 6;
    double prev = 0.0;
    for (int j = 0; j <= rungs && monotone; ++j) {
      double r = r_shell - half + 2.0 * half * j / rungs;
      double v = g(Vec(r * omega));
      if (j > 0 && v <= prev) monotone = false;
      prev = v;
    }
    if (!monotone) continue;
    double at_lo = g(Vec((r_shell - half) * omega));
    double at_hi = g(Vec((r_shell + half) * omega));
    if (!(at_lo < lambda - delta && at_hi > lambda + delta)) continue;
    SimpleDirection out;
    out.omega = omega;
    out.delta = delta;
    out.tried = t + 1;
    out.interval =
        interval_preimage(g, omega, lambda - delta, lambda + delta, r_shell);
    return out;
  }
  throw numerical_error("no simple crossing direction found");
}

}  // namespace blochlab
