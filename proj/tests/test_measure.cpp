// Volume-estimator tests: shell-sampler moments, the exact unperturbed
// annulus area, a deterministic slab-arc oracle for the resonant subvolume,
// the lens-area quadrature against direct Monte Carlo, scaling fits, and
// bitwise reproducibility of the counter-based sampling.

#include <catch2/catch_amalgamated.hpp>

#include "blochlab/measure.hpp"

#include <array>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

using namespace blochlab;

namespace {

std::shared_ptr<const Lattice> square() { return std::make_shared<Lattice>(cubic_lattice(2)); }

Symbol preset_b(const std::shared_ptr<const Lattice>& lat, double amp_a = 0.04,
                double amp_v = 0.25) {
  double rc = std::sqrt(lat->cell_volume);
  std::array<std::map<Mode, cplx, ModeLess>, 3> a{};
  a[0][Mode(0, 1, 0)] = 0.5 * amp_a * rc;
  a[0][Mode(0, -1, 0)] = 0.5 * amp_a * rc;
  a[1][Mode(1, 0, 0)] = 0.5 * amp_a * rc;
  a[1][Mode(-1, 0, 0)] = 0.5 * amp_a * rc;
  std::map<Mode, cplx, ModeLess> v;
  for (auto mm : {Mode(1, 0, 0), Mode(-1, 0, 0), Mode(0, 1, 0), Mode(0, -1, 0)})
    v[mm] = 0.5 * amp_v * rc;
  return magnetic_symbol(lat, a, v);
}

ResonanceParams preset_rp() { return ResonanceParams{40.0, 0.02, 0.0, {0.6, 0.8}}; }

// Area of {|xi| in shell} ∩ {|xi . e| < w} for one coordinate slab, by
// composite Simpson over the radius.
double slab_arc_area(double s_lo, double s_hi, double w, int n = 4000) {
  auto arc = [&](double s) {
    double c = std::min(1.0, w / s);
    return 2.0 * pi - 4.0 * std::acos(c);
  };
  double h = (s_hi - s_lo) / n;
  double acc = s_lo * arc(s_lo) + s_hi * arc(s_hi);
  for (int i = 1; i < n; ++i) {
    double s = s_lo + i * h;
    acc += (i % 2 ? 4.0 : 2.0) * s * arc(s);
  }
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("shell sampler has the uniform radial law", "[measure]") {
  CounterRng rng{42, 5};
  std::uint64_t ctr = 0;
  const long n = 50000;

  // d = 2: for uniform area sampling E[r^2] = (a^2 + b^2) / 2.
  double sum2 = 0;
  for (long i = 0; i < n; ++i) {
    Vec x = shell_sample(2, 2.0, 3.0, rng, ctr);
    REQUIRE(x.norm() >= 2.0);
    REQUIRE(x.norm() <= 3.0);
    sum2 += x.squaredNorm();
  }
  REQUIRE(sum2 / n == Catch::Approx(6.5).margin(0.033));

  // d = 3: for uniform volume sampling E[r^3] = (a^3 + b^3) / 2.
  double sum3 = 0;
  for (long i = 0; i < n; ++i) {
    Vec x = shell_sample(3, 2.0, 3.0, rng, ctr);
    double r = x.norm();
    REQUIRE(r >= 2.0);
    REQUIRE(r <= 3.0);
    sum3 += r * r * r;
  }
  REQUIRE(sum3 / n == Catch::Approx(17.5).margin(0.15));

  REQUIRE(shell_volume(2, 2.0, 3.0) == Catch::Approx(5.0 * pi).margin(1e-12));
  REQUIRE(shell_volume(3, 0.0, 1.0) ==
          Catch::Approx(4.0 * pi / 3.0).margin(1e-12));
}

TEST_CASE("slab half-width defaults", "[measure]") {
  REQUIRE(default_delta(40.0, 1.0) == Catch::Approx(std::pow(40.0, -0.2)).margin(1e-15));
  REQUIRE(default_delta(8.0, 2.0) == Catch::Approx(std::pow(8.0, 1.8)).margin(1e-12));
}

TEST_CASE("unperturbed level slab has area two pi delta", "[measure]") {
  auto lat = square();
  OperatorSpec op{lat, 1.0, nullptr, 5.0 / 3.0, 0.6};
  BandFunction g = make_band_function(op, CutoffParams{40.0, 0.6, 2.0}, preset_rp());

  double lambda = 1600.0;
  double delta = default_delta(40.0, 1.0);
  BandMeasureOptions opts;
  opts.samples = 200000;
  BandMeasure bm = measure_band_volumes(g, lambda, delta, opts);

  double exact = 2.0 * pi * delta;
  REQUIRE(bm.total.std_error < 0.015 * exact);
  REQUIRE(std::abs(bm.total.value - exact) <= 4.0 * bm.total.std_error);

  // Resonant subvolume: two coordinate slabs of half-width rho^{0.6}.
  double w = std::pow(40.0, 0.6);
  double oracle =
      2.0 * slab_arc_area(std::sqrt(lambda - delta), std::sqrt(lambda + delta), w);
  REQUIRE(std::abs(bm.resonant.value - oracle) <=
          4.0 * bm.resonant.std_error + 1e-6);
  REQUIRE(bm.resonant.value < bm.total.value);
  REQUIRE(bm.resonant.n_inside <= bm.total.n_inside);
}

TEST_CASE("strong-field slab volumes keep the expected order", "[measure]") {
  auto lat = square();
  OperatorSpec op{lat, 1.0, preset_b(lat), 5.0 / 3.0, 0.6};
  BandFunction g = make_band_function(op, CutoffParams{40.0, 0.6, 2.0}, preset_rp());

  double lambda = 1600.0;
  double delta = default_delta(40.0, 1.0);
  BandMeasureOptions opts;
  opts.samples = 100000;
  BandMeasure bm = measure_band_volumes(g, lambda, delta, opts);

  double free_area = 2.0 * pi * delta;
  REQUIRE(bm.total.value > 0.5 * free_area);
  REQUIRE(bm.total.value < 2.0 * free_area);
  REQUIRE(bm.resonant.value <= bm.total.value);
  // Slab scale of the resonant subvolume: delta * rho^{d-1-2m+alpha_d}.
  REQUIRE(bm.resonant.value <= 16.0 * delta * std::pow(40.0, -0.2));
  REQUIRE(bm.resonant.value >= 0.05 * delta);
}

TEST_CASE("lens area quadrature matches direct sampling", "[measure]") {
  double rho = 40.0, delta = default_delta(40.0, 1.0), r = 1.0;
  double quad = lens_area_quadrature(rho, delta, r);
  REQUIRE(quad > 0.0);

  double s_lo = std::sqrt(rho * rho - delta);
  double s_hi = std::sqrt(rho * rho + delta);
  CounterRng rng{9, 2};
  std::uint64_t ctr = 0;
  const long n = 300000;
  long hits = 0;
  Vec th(2);
  th << r, 0.0;
  for (long i = 0; i < n; ++i) {
    Vec x = shell_sample(2, s_lo, s_hi, rng, ctr);
    double other = (x - th).squaredNorm();
    if (std::abs(other - rho * rho) <= delta) ++hits;
  }
  double domain = shell_volume(2, s_lo, s_hi);  // = 2 pi delta exactly
  REQUIRE(domain == Catch::Approx(2.0 * pi * delta).margin(1e-9));
  double est = domain * static_cast<double>(hits) / n;
  double p = static_cast<double>(hits) / n;
  double sigma = domain * std::sqrt(p * (1.0 - p) / n);
  REQUIRE(std::abs(est - quad) <= 4.0 * sigma + 1e-5);
}

TEST_CASE("scaling fit recovers exact exponents", "[measure]") {
  std::vector<std::pair<double, double>> pts;
  for (double rho : {20.0, 40.0, 80.0}) pts.push_back({rho, 0.3 * std::pow(rho, -0.5)});
  ScalingFit f = fit_scaling(pts);
  REQUIRE(f.exponent == Catch::Approx(-0.5).margin(1e-12));
  REQUIRE(f.log_prefactor == Catch::Approx(std::log(0.3)).margin(1e-12));
  REQUIRE(f.max_residual < 1e-12);

  std::vector<std::pair<double, double>> up;
  for (double rho : {10.0, 30.0, 90.0}) up.push_back({rho, 7.0 * std::pow(rho, 1.3)});
  REQUIRE(fit_scaling(up).exponent == Catch::Approx(1.3).margin(1e-12));

  REQUIRE_THROWS_AS(fit_scaling({{10.0, 1.0}}), config_error);
  REQUIRE_THROWS_AS(fit_scaling({{10.0, 1.0}, {20.0, -1.0}}), config_error);
  REQUIRE_THROWS_AS(fit_scaling({{10.0, 1.0}, {10.0, 2.0}}), config_error);
}

TEST_CASE("estimates are bitwise reproducible per stream", "[measure]") {
  auto lat = square();
  OperatorSpec op{lat, 1.0, nullptr, 5.0 / 3.0, 0.6};
  BandFunction g = make_band_function(op, CutoffParams{40.0, 0.6, 2.0}, preset_rp());

  BandMeasureOptions opts;
  opts.samples = 20000;
  opts.pad_energy = 1.0;
  BandMeasure a = measure_band_volumes(g, 1600.0, 0.5, opts);
  BandMeasure b = measure_band_volumes(g, 1600.0, 0.5, opts);
  REQUIRE(bits_of(a.total.value) == bits_of(b.total.value));
  REQUIRE(a.resonant.n_inside == b.resonant.n_inside);

  opts.stream = 18;
  BandMeasure c = measure_band_volumes(g, 1600.0, 0.5, opts);
  REQUIRE(a.total.n_inside != c.total.n_inside);
  REQUIRE(std::abs(c.total.value - a.total.value) <
          5.0 * (a.total.std_error + c.total.std_error));
}
