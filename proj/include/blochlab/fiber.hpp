// fiber.hpp — Floquet–Bloch fiber matrices and eigenvalue counting.
//
// For quasimomentum k in the fundamental cell the fiber of H = |D|^{2m} +
// Op(b) acts on ℓ²(dual lattice) by
//     H(k)_{mn} = |n+k|^{2m} δ_{mn} + v^{-1/2} b̂(m−n, n+k),
// with v the unit-cell volume.  Finite sections are taken over index bases
// (balls |m+k| < cutoff, annuli, or explicit mode lists), always sorted by
// (|m+k|, lexicographic mode) so labels are reproducible.
//
// Counting N(λ, H(k)) = #{eigenvalues ≤ λ} has two routes: a dense
// eigensolve of the truncated fiber (capped to protect memory), and — when
// the symbol has only a zero-frequency mode — an exact diagonal path with no
// size cap.  For large cutoffs the windowed engine counts the deep levels by
// their dressed diagonal (Gershgorin-separated by a guard of several
// row-sum couplings) and diagonalizes only the modes whose diagonal lands
// near the window of interest.

#pragma once

#include "blochlab/linalg.hpp"
#include "blochlab/symbol.hpp"

#include <unordered_map>

namespace blochlab {

struct FiberBasis {
  std::shared_ptr<const Lattice> lat;
  Vec k;
  std::vector<Mode> modes;  // sorted by (|dual(m)+k|, lexicographic m)
  std::vector<Vec> points;  // dual(m) + k, same order
  std::unordered_map<Mode, int, ModeHash> pos;

  int dim() const { return static_cast<int>(modes.size()); }
  int find(const Mode& m) const {
    auto it = pos.find(m);
    return it == pos.end() ? -1 : it->second;
  }
};

inline FiberBasis basis_from_modes(std::shared_ptr<const Lattice> lat, Vec k,
                                   std::vector<Mode> modes) {
  FiberBasis b;
  std::vector<std::pair<Mode, Vec>> pts;
  pts.reserve(modes.size());
  for (const Mode& m : modes) pts.emplace_back(m, Vec(lat->dual_point(m) + k));
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& c) {
    double na = a.second.squaredNorm(), nc = c.second.squaredNorm();
    if (na != nc) return na < nc;
    return ModeLess{}(a.first, c.first);
  });
  b.lat = std::move(lat);
  b.k = std::move(k);
  b.modes.reserve(pts.size());
  b.points.reserve(pts.size());
  for (auto& [m, pt] : pts) {
    b.pos.emplace(m, static_cast<int>(b.modes.size()));
    b.modes.push_back(m);
    b.points.push_back(pt);
  }
  return b;
}

namespace detail {

template <class Pred>
inline std::vector<Mode> modes_where(const Lattice& lat, const Vec& k, double radius,
                                     Pred&& keep) {
  int span = static_cast<int>(std::floor((radius + k.norm()) * op_norm(lat.dual_inv))) + 1;
  std::vector<Mode> out;
  int s1 = lat.d >= 2 ? span : 0;
  int s2 = lat.d == 3 ? span : 0;
  for (int i0 = -span; i0 <= span; ++i0)
    for (int i1 = -s1; i1 <= s1; ++i1)
      for (int i2 = -s2; i2 <= s2; ++i2) {
        Mode m(i0, i1, i2);
        if (keep(Vec(lat.dual_point(m) + k))) out.push_back(m);
      }
  return out;
}

}  // namespace detail

// Strict ball |m+k| < cutoff.
inline FiberBasis ball_basis(std::shared_ptr<const Lattice> lat, const Vec& k, double cutoff) {
  auto modes = detail::modes_where(*lat, k, cutoff,
                                   [cutoff](const Vec& pt) { return pt.norm() < cutoff; });
  return basis_from_modes(std::move(lat), k, std::move(modes));
}

// Closed annulus lo ≤ |m+k| ≤ hi.
inline FiberBasis annulus_basis(std::shared_ptr<const Lattice> lat, const Vec& k, double lo,
                                double hi) {
  auto modes = detail::modes_where(*lat, k, hi, [lo, hi](const Vec& pt) {
    double n = pt.norm();
    return n >= lo && n <= hi;
  });
  return basis_from_modes(std::move(lat), k, std::move(modes));
}

struct FiberOptions {
  double herm_tol = 1e-12;       // relative self-adjointness tolerance
  std::size_t dense_cap = 20000;  // largest dense fiber dimension
};

// True when the symbol contributes only to the diagonal.
inline bool is_diagonal_operator(const OperatorSpec& op) {
  if (!op.b) return true;
  for (const Mode& th : op.b->support)
    if (!th.is_zero()) return false;
  return true;
}

// Diagonal entry: |ξ|^{2m} plus the zero-frequency (mean) term.
inline double dressed_diagonal(const OperatorSpec& op, const Vec& xi) {
  double v = op.h0(xi);
  if (op.b && op.b->in_support(Mode()))
    v += (op.lattice->inv_sqrt_cell * eval(op.b, Mode(), xi)).real();
  return v;
}

inline Eigen::MatrixXcd fiber_matrix(const OperatorSpec& op, const FiberBasis& basis,
                                     const FiberOptions& opts = {}) {
  auto n = static_cast<std::size_t>(basis.dim());
  if (n > opts.dense_cap)
    throw resource_error("fiber dimension exceeds the dense budget; shrink the cutoff or "
                         "use the windowed counting engine");
  Eigen::MatrixXcd H =
      Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j)
    H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = op.h0(basis.points[j]);
  if (op.b) {
    double w = op.lattice->inv_sqrt_cell;
    for (const Mode& th : op.b->support)
      for (std::size_t j = 0; j < n; ++j) {
        int i = basis.find(basis.modes[j] + th);
        if (i < 0) continue;
        H(i, static_cast<Eigen::Index>(j)) += w * eval(op.b, th, basis.points[j]);
      }
  }
  double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  double dev = (H - H.adjoint()).cwiseAbs().maxCoeff();
  if (dev > opts.herm_tol * scale)
    throw numerical_error("fiber matrix deviates from self-adjointness beyond tolerance; "
                          "the symbol lacks the conjugate-mode symmetry");
  H = 0.5 * (H + H.adjoint()).eval();
  return H;
}

inline long count_leq(const Eigen::VectorXd& sorted_evals, double lambda) {
  return std::upper_bound(sorted_evals.data(), sorted_evals.data() + sorted_evals.size(),
                          lambda) -
         sorted_evals.data();
}

struct FiberSpectrum {
  FiberBasis basis;
  Eigen::VectorXd evals;  // ascending
};

inline FiberSpectrum fiber_spectrum(const OperatorSpec& op, const Vec& k, double cutoff,
                                    const FiberOptions& opts = {}) {
  FiberSpectrum s;
  s.basis = ball_basis(op.lattice, k, cutoff);
  if (is_diagonal_operator(op)) {
    s.evals.resize(s.basis.dim());
    for (int j = 0; j < s.basis.dim(); ++j)
      s.evals[j] = dressed_diagonal(op, s.basis.points[static_cast<std::size_t>(j)]);
    std::sort(s.evals.data(), s.evals.data() + s.evals.size());
  } else {
    s.evals = hermitian_eigenvalues(fiber_matrix(op, s.basis, opts));
  }
  return s;
}

// N(λ, H(k)) on the ball truncation.  Diagonal operators take the exact
// counting path with no dense-size cap.
inline long count_states(const OperatorSpec& op, const Vec& k, double lambda, double cutoff,
                         const FiberOptions& opts = {}) {
  if (is_diagonal_operator(op)) {
    long c = 0;
    auto modes = detail::modes_where(
        *op.lattice, k, cutoff, [cutoff](const Vec& pt) { return pt.norm() < cutoff; });
    for (const Mode& m : modes)
      if (dressed_diagonal(op, Vec(op.lattice->dual_point(m) + k)) <= lambda) ++c;
    return c;
  }
  FiberSpectrum s = fiber_spectrum(op, k, cutoff, opts);
  return count_leq(s.evals, lambda);
}

// ---------------------------------------------------------------------------
// Windowed counting: exact dressed-diagonal counting for levels far below
// the window, a dense block for levels near it.
// ---------------------------------------------------------------------------

struct CountingWindow {
  Vec k;
  double lo = 0.0, hi = 0.0;  // validity range for count()
  double guard = 0.0;         // energy margin around [lo, hi]
  double coupling = 0.0;      // row-sum bound on off-diagonal coupling
  long base = 0;              // levels counted below lo − guard
  int window_dim = 0;
  Eigen::VectorXd evals;  // eigenvalues of the windowed block, ascending

  long count(double lambda) const {
    if (lambda < lo || lambda > hi)
      throw config_error("count requested outside the validity window");
    return base + count_leq(evals, lambda);
  }
};

// Row-sum bound of the off-diagonal coupling, sampled over directions at the
// given radii (worst case over samples; symbols here grow with |ξ|, so the
// outer radius dominates).
inline double coupling_row_sum(const OperatorSpec& op, double radius, int samples = 48) {
  if (!op.b) return 0.0;
  double w = op.lattice->inv_sqrt_cell;
  double worst = 0.0;
  int d = op.lattice->d;
  CounterRng rng{1234, 3};
  std::uint64_t ctr = 0;
  for (int t = 0; t < samples; ++t) {
    Vec xi(d);
    if (d == 1) {
      xi << (t % 2 == 0 ? radius : -radius);
    } else if (d == 2) {
      double ang = 2.0 * pi * (t + 0.5) / samples;
      xi << radius * std::cos(ang), radius * std::sin(ang);
    } else {
      double z = 2.0 * rng.uniform(ctr++) - 1.0;
      double ang = 2.0 * pi * rng.uniform(ctr++);
      double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      xi << radius * s * std::cos(ang), radius * s * std::sin(ang), radius * z;
    }
    double row = 0.0;
    for (const Mode& th : op.b->support)
      if (!th.is_zero()) row += std::abs(w * eval(op.b, th, xi));
    worst = std::max(worst, row);
  }
  return worst;
}

inline CountingWindow make_counting_window(const OperatorSpec& op, const Vec& k, double lo,
                                           double hi, double guard_factor = 8.0,
                                           const FiberOptions& opts = {}) {
  if (!(hi >= lo)) throw config_error("counting window requires lo <= hi");
  CountingWindow w;
  w.k = k;
  w.lo = lo;
  w.hi = hi;

  double inv2m = 1.0 / (2.0 * op.m);
  double r_probe = std::pow(std::max(hi, 1.0), inv2m);
  w.coupling = coupling_row_sum(op, r_probe * 1.2 + 1.0);
  w.guard = guard_factor * w.coupling + 1e-9;

  // Mean-term magnitude bound, for the enumeration radius only.
  double mean_bound = 0.0;
  if (op.b && op.b->in_support(Mode())) {
    CounterRng rng{77, 4};
    std::uint64_t ctr = 0;
    for (int t = 0; t < 32; ++t) {
      double ang = 2.0 * pi * rng.uniform(ctr++);
      Vec xi(op.lattice->d);
      if (op.lattice->d == 2)
        xi << r_probe * std::cos(ang), r_probe * std::sin(ang);
      else {
        double z = 2.0 * rng.uniform(ctr++) - 1.0;
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        xi << r_probe * s * std::cos(ang), r_probe * s * std::sin(ang), r_probe * z;
      }
      mean_bound = std::max(mean_bound,
                            std::abs(op.lattice->inv_sqrt_cell * eval(op.b, Mode(), xi)));
    }
  }

  double top = hi + w.guard + mean_bound + 1.0;
  double r_max = std::pow(top, inv2m) + 1e-9;
  auto modes = detail::modes_where(*op.lattice, k, r_max,
                                   [r_max](const Vec& pt) { return pt.norm() <= r_max; });

  std::vector<Mode> window_modes;
  for (const Mode& m : modes) {
    Vec pt = op.lattice->dual_point(m) + k;
    double d = dressed_diagonal(op, pt);
    if (d < lo - w.guard)
      ++w.base;
    else if (d <= hi + w.guard)
      window_modes.push_back(m);
  }

  FiberBasis basis = basis_from_modes(op.lattice, k, std::move(window_modes));
  w.window_dim = basis.dim();
  if (basis.dim() == 0) {
    w.evals.resize(0);
    return w;
  }
  if (is_diagonal_operator(op)) {
    w.evals.resize(basis.dim());
    for (int j = 0; j < basis.dim(); ++j)
      w.evals[j] = dressed_diagonal(op, basis.points[static_cast<std::size_t>(j)]);
    std::sort(w.evals.data(), w.evals.data() + w.evals.size());
  } else {
    w.evals = hermitian_eigenvalues(fiber_matrix(op, basis, opts));
  }
  return w;
}

// Truncation sensitivity: rebuild with a 25% wider guard and report the
// largest count difference over a probe grid.
inline long window_truncation_estimate(const OperatorSpec& op, const Vec& k, double lo,
                                       double hi, double guard_factor = 8.0,
                                       int probes = 9, const FiberOptions& opts = {}) {
  CountingWindow a = make_counting_window(op, k, lo, hi, guard_factor, opts);
  CountingWindow b = make_counting_window(op, k, lo, hi, guard_factor * 1.25, opts);
  long worst = 0;
  for (int t = 0; t < probes; ++t) {
    double lam = lo + (hi - lo) * (t + 0.5) / probes;
    worst = std::max(worst, std::abs(a.count(lam) - b.count(lam)));
  }
  return worst;
}

}  // namespace blochlab
