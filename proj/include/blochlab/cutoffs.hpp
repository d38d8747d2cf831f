// cutoffs.hpp — the smooth partition machinery used to split a symbol into
// spectral regions, and the dispersion difference driving the gauge equations.
//
// Base bump ι ∈ C^∞(R): ι(z) = 1 for z ≤ 1/4, ι(z) = 0 for z ≥ 1/2, strictly
// monotone in between.  Realised as
//     ι(z) = f(1/2 − z) / ( f(1/2 − z) + f(z − 1/4) ),   f(t) = e^{-1/t} (t>0), else 0,
// which gives the plateaus exactly in floating point (one of the two f's is an
// exact zero there) and ι(3/8) = 1/2 exactly.  When e^{-1/t} underflows near a
// plateau edge the quotient degrades gracefully to the plateau value.
//
// For a frequency θ ≠ 0 and energy shell radius ρ, with s = |ξ + θ/2| / ρ:
//     shell window   e_θ(ξ)   = ι(|s − 1|)
//     above shell    ℓ>_θ(ξ)  = 1 − ι(s − 1)
//     below shell    ℓ<_θ(ξ)  = 1 − ι(1 − s)
// so that e + ℓ> + ℓ< = 1 identically.  Inside the shell the resonant window
// with width L splits further:
//     ζ_θ(ξ; L) = ι( |θ·(ξ + θ/2)| / (L |θ|) ),   φ_θ = 1 − ζ_θ.

#pragma once

#include "blochlab/common.hpp"

namespace blochlab {

inline double bump_f(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

inline double iota(double z) {
  if (z <= 0.25) return 1.0;
  if (z >= 0.5) return 0.0;
  double a = bump_f(0.5 - z), b = bump_f(z - 0.25);
  double s = a + b;
  if (s == 0.0) return z < 0.375 ? 1.0 : 0.0;  // both underflowed (unreachable in practice)
  return a / s;
}

// Parameters of the decomposition: shell radius ρ, weight exponent β
// (resonant window width L = ρ^β), frequency radius r.
struct CutoffParams {
  double rho = 0.0;
  double beta = 0.0;
  double r = 0.0;

  double window_width() const { return std::pow(rho, beta); }

  void validate() const {
    if (!(rho > 0.0)) throw config_error("cutoff shell radius rho must be positive");
    if (!(beta > 0.0 && beta <= 1.0)) throw config_error("cutoff exponent beta must lie in (0,1]");
    if (!(r >= 1.0)) throw config_error("frequency radius r must be >= 1");
  }
};

// s = |ξ + θ/2| / ρ for a Cartesian frequency vector θ.
inline double shell_coord(const Vec& theta_c, const Vec& xi, double rho) {
  return (xi + 0.5 * theta_c).norm() / rho;
}

inline double cutoff_shell(const Vec& theta_c, const Vec& xi, double rho) {
  return iota(std::abs(shell_coord(theta_c, xi, rho) - 1.0));
}
inline double cutoff_above(const Vec& theta_c, const Vec& xi, double rho) {
  return 1.0 - iota(shell_coord(theta_c, xi, rho) - 1.0);
}
inline double cutoff_below(const Vec& theta_c, const Vec& xi, double rho) {
  return 1.0 - iota(1.0 - shell_coord(theta_c, xi, rho));
}

// ζ_θ(ξ; L): ≈1 where ξ+θ/2 is nearly orthogonal to θ (the resonant window).
inline double cutoff_window(const Vec& theta_c, const Vec& xi, double width) {
  double t = std::abs(theta_c.dot(xi + 0.5 * theta_c)) / (width * theta_c.norm());
  return iota(t);
}

// Dispersion difference τ_θ(ξ) = |ξ+θ|^{2m} − |ξ|^{2m}.
inline double tau(double m, const Vec& theta_c, const Vec& xi) {
  double a = (xi + theta_c).squaredNorm(), b = xi.squaredNorm();
  if (m == 1.0) return a - b;
  return std::pow(a, m) - std::pow(b, m);
}

}  // namespace blochlab
