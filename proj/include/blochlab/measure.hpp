#pragma once

// Monte-Carlo volume estimators for the band-label level sets.
//
// All sampling is uniform over a spherical shell that encloses the preimage
// g^{-1}[lambda - delta, lambda + delta]: directions uniform on the sphere,
// radii drawn by inverting the shell's radial volume law r^{d-1} dr.  The
// counter-based generator keeps every estimate a pure function of
// (seed, stream, sample index), independent of batching.
//
// Estimated regions:
//   total    — the full level slab  {xi : |g(xi) - lambda| <= delta},
//   resonant — its intersection with the nontrivial zones (class dim >= 1).
//
// A deterministic cross-check is provided by lens_area_quadrature: the exact
// (to quadrature accuracy) area of the planar region where both |xi|^2 and
// |xi - theta|^2 lie within delta of rho^2.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "blochlab/cluster.hpp"
#include "blochlab/common.hpp"
#include "blochlab/lattice.hpp"

namespace blochlab {

// Slab half-width used by the scaling studies.
inline double default_delta(double rho, double m, double eps = 0.1) {
  return std::pow(rho, 2.0 * m - 2.0 - 2.0 * eps);
}

inline double shell_volume(int d, double r_lo, double r_hi) {
  switch (d) {
    case 1: return 2.0 * (r_hi - r_lo);
    case 2: return pi * (sq(r_hi) - sq(r_lo));
    case 3: return 4.0 * pi / 3.0 * (std::pow(r_hi, 3) - std::pow(r_lo, 3));
    default: throw config_error("shell volume needs dimension 1, 2, or 3");
  }
}

// Uniform sample in the shell r_lo <= |x| <= r_hi via radial CDF inversion.
inline Vec shell_sample(int d, double r_lo, double r_hi, const CounterRng& rng,
                        std::uint64_t& ctr) {
  double u_r = rng.uniform(ctr++);
  double r;
  if (d == 1) {
    r = r_lo + u_r * (r_hi - r_lo);
  } else if (d == 2) {
    r = std::sqrt(sq(r_lo) + u_r * (sq(r_hi) - sq(r_lo)));
  } else {
    double a3 = std::pow(r_lo, 3), b3 = std::pow(r_hi, 3);
    r = std::cbrt(a3 + u_r * (b3 - a3));
  }
  Vec x(d);
  if (d == 1) {
    x << (rng.uniform(ctr++) < 0.5 ? -r : r);
  } else if (d == 2) {
    double ang = 2.0 * pi * rng.uniform(ctr++);
    x << r * std::cos(ang), r * std::sin(ang);
  } else {
    double z = 2.0 * rng.uniform(ctr++) - 1.0;
    double ang = 2.0 * pi * rng.uniform(ctr++);
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    x << r * s * std::cos(ang), r * s * std::sin(ang), r * z;
  }
  return x;
}

struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long n_inside = 0;
  long n_total = 0;
};

struct BandMeasureOptions {
  long samples = 1000000;
  std::uint64_t seed = 1;
  std::uint64_t stream = 17;
  double pad_energy = -1.0;  // < 0: automatic from the coupling bound
};

struct BandMeasure {
  double lambda = 0.0, delta = 0.0;
  double r_lo = 0.0, r_hi = 0.0, domain_volume = 0.0;
  VolumeEstimate total, resonant;
};

inline BandMeasure measure_band_volumes(const BandFunction& g, double lambda,
                                        double delta,
                                        const BandMeasureOptions& opts = {}) {
  if (delta <= 0 || lambda <= delta)
    throw config_error("need 0 < delta < lambda for a level slab");
  const Lattice& lat = *g.op.lattice;
  int d = lat.d;
  double m2 = 2.0 * g.op.m;

  double pad = opts.pad_energy;
  if (pad < 0) {
    double r_shell = std::pow(lambda, 1.0 / m2);
    pad = 2.0 * coupling_row_sum(g.op, 1.2 * r_shell + 1.0) + 1.0;
  }
  double e_lo = std::max(lambda - delta - pad, 0.0);
  double e_hi = lambda + delta + pad;
  double r_lo = std::pow(e_lo, 1.0 / m2);
  double r_hi = std::pow(e_hi, 1.0 / m2);

  BandMeasure out;
  out.lambda = lambda;
  out.delta = delta;
  out.r_lo = r_lo;
  out.r_hi = r_hi;
  out.domain_volume = shell_volume(d, r_lo, r_hi);

  CounterRng rng{opts.seed, opts.stream};
  std::uint64_t ctr = 0;
  long n_in = 0, n_res = 0;
  for (long i = 0; i < opts.samples; ++i) {
    Vec xi = shell_sample(d, r_lo, r_hi, rng, ctr);
    ZoneResult z = g.zone_of(xi);
    double v = g.value_at(z);
    if (std::abs(v - lambda) > delta) continue;
    ++n_in;
    if (z.zone_dim >= 1) ++n_res;
  }

  auto finish = [&](long hits) {
    VolumeEstimate e;
    e.n_inside = hits;
    e.n_total = opts.samples;
    double p = static_cast<double>(hits) / static_cast<double>(opts.samples);
    e.value = out.domain_volume * p;
    e.std_error = out.domain_volume *
                  std::sqrt(std::max(p * (1.0 - p), 0.0) /
                            static_cast<double>(opts.samples));
    return e;
  };
  out.total = finish(n_in);
  out.resonant = finish(n_res);
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic lens area (d = 2): both |xi| and |xi - theta| within the
// shell of energy half-width delta around rho^{2}.
// ---------------------------------------------------------------------------

inline double lens_area_quadrature(double rho, double delta, double r,
                                   int n_panels = 2000) {
  if (rho <= 0 || delta <= 0 || r <= 0)
    throw config_error("lens area needs positive rho, delta, r");
  if (delta >= rho * rho) throw config_error("lens area needs delta < rho^2");
  double s_lo = std::sqrt(rho * rho - delta);
  double s_hi = std::sqrt(rho * rho + delta);
  auto clamp01 = [](double c) { return std::min(1.0, std::max(-1.0, c)); };
  // Angular measure (both signs of the angle) of the second shell condition
  // at radius s: cos(phi) in [(s^2 + r^2 - rho^2 - delta) / (2 s r), ...].
  auto arc = [&](double s) {
    double c_lo = clamp01((s * s + r * r - rho * rho - delta) / (2.0 * s * r));
    double c_hi = clamp01((s * s + r * r - rho * rho + delta) / (2.0 * s * r));
    return 2.0 * std::max(0.0, std::acos(c_lo) - std::acos(c_hi));
  };
  // Composite Simpson over the radial section.
  int n = n_panels + (n_panels % 2);  // even panel count
  double h = (s_hi - s_lo) / n;
  double acc = s_lo * arc(s_lo) + s_hi * arc(s_hi);
  for (int i = 1; i < n; ++i) {
    double s = s_lo + i * h;
    acc += (i % 2 ? 4.0 : 2.0) * s * arc(s);
  }
  return acc * h / 3.0;
}

// ---------------------------------------------------------------------------
// Log-log scaling fit.
// ---------------------------------------------------------------------------

struct ScalingFit {
  double exponent = 0.0;       // slope of log(value) against log(rho)
  double log_prefactor = 0.0;  // intercept
  double max_residual = 0.0;   // worst absolute log deviation from the fit
};

inline ScalingFit fit_scaling(
    const std::vector<std::pair<double, double>>& rho_value) {
  if (rho_value.size() < 2)
    throw config_error("scaling fit needs at least two points");
  double sx = 0, sy = 0;
  for (auto& [r, v] : rho_value) {
    if (r <= 0 || v <= 0)
      throw config_error("scaling fit needs positive radii and values");
    sx += std::log(r);
    sy += std::log(v);
  }
  double n = static_cast<double>(rho_value.size());
  double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (auto& [r, v] : rho_value) {
    double dx = std::log(r) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  if (!(sxx > 0)) throw config_error("scaling fit needs distinct radii");
  ScalingFit f;
  f.exponent = sxy / sxx;
  f.log_prefactor = my - f.exponent * mx;
  for (auto& [r, v] : rho_value) {
    double pred = f.log_prefactor + f.exponent * std::log(r);
    f.max_residual = std::max(f.max_residual, std::abs(std::log(v) - pred));
  }
  return f;
}

}  // namespace blochlab
