// Overlap-function tests: an exact grid-aware value for the unperturbed
// one-dimensional chain, a cosine-chain (Mathieu) gap where the overlap
// vanishes, cross-checks of the windowed route against dense band edges,
// separable factorization of a two-dimensional fiber into chains, radial
// interval preimages, simple-direction search, and the counting sandwich.

#include <catch2/catch_amalgamated.hpp>

#include "blochlab/overlap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <vector>

using namespace blochlab;

namespace {

std::shared_ptr<const Lattice> square() { return std::make_shared<Lattice>(cubic_lattice(2)); }
std::shared_ptr<const Lattice> line() { return std::make_shared<Lattice>(cubic_lattice(1)); }

Vec v1(double x) {
  Vec v(1);
  v << x;
  return v;
}

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

// Cosine chain of amplitude `amp`: b(x) = amp * cos(x1) on the given lattice.
Symbol cosine_chain(const std::shared_ptr<const Lattice>& lat, double amp) {
  double c = 0.5 * amp * std::sqrt(lat->cell_volume);
  CoeffFn fn = [c](const Vec&) { return cplx(c, 0.0); };
  return make_symbol(lat, {{Mode(1, 0, 0), fn}, {Mode(-1, 0, 0), fn}});
}

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

// Overlap value recomputed from dense band edges: the counting minimum over
// quasimomenta is the number of band tops below the level, the maximum is
// the number of band bottoms.  Bisection on the same flip predicate.
double zeta_from_edges(const BandEdges& be, double lambda, double t_hi) {
  auto tops_leq = [&](double mu) {
    return std::count_if(be.tops.begin(), be.tops.end(),
                         [&](double t) { return t <= mu; });
  };
  auto bots_leq = [&](double mu) {
    return std::count_if(be.bottoms.begin(), be.bottoms.end(),
                         [&](double b) { return b <= mu; });
  };
  auto overlapped = [&](double t) {
    return tops_leq(lambda + t) < bots_leq(lambda - t);
  };
  if (!overlapped(0.0)) return 0.0;
  if (overlapped(t_hi)) return t_hi;
  double lo = 0.0, hi = t_hi;
  while (hi - lo > 1e-9) {
    double mid = 0.5 * (lo + hi);
    (overlapped(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("unperturbed chain overlap has an exact grid value", "[overlap]") {
  auto lat = line();
  OperatorSpec op{lat, 1.0, nullptr, 5.0 / 3.0, 0.4};
  OverlapOptions opts;
  opts.grid_per_dim = 32;
  OverlapReport rep = band_overlap(op, 0.2, opts);

  // On the half-offset 32-point grid the first branch tops out at
  // (15.5/32)^2, so the overlap at 0.2 ends exactly there.
  double top0 = sq(15.5 / 32.0);
  REQUIRE(rep.overlapped_at_zero);
  REQUIRE(rep.n_min == 0);
  REQUIRE(rep.n_max == 1);
  REQUIRE(!rep.capped);
  REQUIRE(rep.zeta == Catch::Approx(top0 - 0.2).margin(2e-6));
  REQUIRE(rep.grid_points == 32);
}

TEST_CASE("cosine chain: zero overlap in the gap, edge-matched inside a band",
          "[overlap]") {
  auto lat = line();
  OperatorSpec op{lat, 1.0, cosine_chain(lat, 1.0), 5.0 / 3.0, 0.4};

  const int G = 48;
  BandEdges be = band_edges(op, 6, G, 6.5);

  // The chain has a genuine first gap (amplitude 1 => well separated).
  REQUIRE(be.tops[0] < be.bottoms[1] - 0.05);
  double lam_gap = 0.5 * (be.tops[0] + be.bottoms[1]);

  OverlapOptions opts;
  opts.grid_per_dim = G;
  OverlapReport gap = band_overlap(op, lam_gap, opts);
  REQUIRE(!gap.overlapped_at_zero);
  REQUIRE(gap.zeta == 0.0);
  REQUIRE(gap.n_min == gap.n_max);

  // Inside the second band the windowed route must match the dense-edge
  // route on the same grid.
  double lam_band = 0.5 * (be.bottoms[1] + be.tops[1]);
  OverlapReport inside = band_overlap(op, lam_band, opts);
  double oracle = zeta_from_edges(be, lam_band, inside.t_cap);
  REQUIRE(inside.overlapped_at_zero);
  REQUIRE(inside.zeta > 0.0);
  REQUIRE(!inside.capped);
  REQUIRE(inside.zeta == Catch::Approx(oracle).margin(3e-5));
}

TEST_CASE("separable two-dimensional fiber factorizes into chains", "[overlap]") {
  auto lat2 = square();
  auto lat1 = line();
  double amp = 0.8;
  OperatorSpec op2{lat2, 1.0, cosine_chain(lat2, amp), 5.0 / 3.0, 0.4};
  OperatorSpec op1{lat1, 1.0, cosine_chain(lat1, amp), 5.0 / 3.0, 0.4};

  Vec k = v2(0.3, 0.7);
  double cutoff = 4.2;
  FiberSpectrum full = fiber_spectrum(op2, k, cutoff);

  // Rebuild each x1-chain of the ball with the one-dimensional operator and
  // shift by the transverse kinetic energy; the union must be the spectrum.
  FiberBasis ball = ball_basis(lat2, k, cutoff);
  std::map<int, std::vector<Mode>> rows;
  for (const Mode& mm : ball.modes) rows[mm.c[1]].push_back(Mode(mm.c[0], 0, 0));
  std::vector<double> rebuilt;
  for (auto& [n2, modes] : rows) {
    FiberBasis chain = basis_from_modes(lat1, v1(0.3), modes);
    Eigen::MatrixXcd H = fiber_matrix(op1, chain);
    Eigen::VectorXd ev = hermitian_eigenvalues(H);
    double shift = sq(n2 + 0.7);
    for (int j = 0; j < ev.size(); ++j) rebuilt.push_back(ev[j] + shift);
  }
  std::sort(rebuilt.begin(), rebuilt.end());
  REQUIRE(static_cast<long>(rebuilt.size()) == full.evals.size());
  double scale = std::abs(full.evals[full.evals.size() - 1]);
  for (int j = 0; j < full.evals.size(); ++j)
    REQUIRE(rebuilt[static_cast<std::size_t>(j)] ==
            Catch::Approx(full.evals[j]).margin(1e-10 * scale));
}

TEST_CASE("radial interval preimage matches closed forms", "[overlap]") {
  auto lat = square();
  // Second-order kinetic part at rho = 40, width 0.5.
  {
    OperatorSpec op{lat, 1.0, nullptr, 5.0 / 3.0, 0.4};
    ResonanceParams rp{40.0, 0.02, 0.0, {0.6, 0.8}};
    BandFunction g = make_band_function(op, CutoffParams{40.0, 0.6, 2.0}, rp);
    Vec omega = v2(std::cos(0.7), std::sin(0.7));
    double lam = 1600.0, delta = 0.5;
    RadialInterval iv =
        interval_preimage(g, omega, lam - delta, lam + delta, 40.0);
    REQUIRE(iv.lo == Catch::Approx(std::sqrt(lam - delta)).margin(1e-7));
    REQUIRE(iv.hi == Catch::Approx(std::sqrt(lam + delta)).margin(1e-7));
    double unit = 2.0 * delta * std::pow(40.0, 1.0 - 2.0) / 2.0;
    REQUIRE(iv.length() >= unit / 4.0);
    REQUIRE(iv.length() <= unit * 4.0);
  }
  // Fourth-order kinetic part at rho = 30, width 2; the ray at angle 0.4
  // keeps clear of every resonant layer of the radius-1.5 direction set.
  {
    OperatorSpec op{lat, 2.0, nullptr, 3.0, 0.5};
    ResonanceParams rp{30.0, 0.0, 1.5, {0.6, 0.8}};
    BandFunction g = make_band_function(op, CutoffParams{30.0, 0.5, 1.5}, rp);
    Vec omega = v2(std::cos(0.4), std::sin(0.4));
    double lam = 810000.0, delta = 2.0;
    RadialInterval iv =
        interval_preimage(g, omega, lam - delta, lam + delta, 30.0);
    REQUIRE(iv.lo == Catch::Approx(std::pow(lam - delta, 0.25)).margin(1e-8));
    REQUIRE(iv.hi == Catch::Approx(std::pow(lam + delta, 0.25)).margin(1e-8));
  }
}

TEST_CASE("simple-direction search finds a monotone crossing", "[overlap]") {
  auto lat = square();
  OperatorSpec op{lat, 1.0, preset_b(lat), 5.0 / 3.0, 0.6};
  ResonanceParams rp{40.0, 0.02, 0.0, {0.6, 0.8}};
  BandFunction g = make_band_function(op, CutoffParams{40.0, 0.6, 2.0}, rp);

  double lam = 1600.0, delta = 0.1;
  SimpleDirection sd = find_simple_direction(g, lam, delta);
  REQUIRE(sd.omega.norm() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(sd.tried >= 1);

  // Endpoints reproduce the window levels and the length has the slab scale.
  REQUIRE(g(Vec(sd.interval.lo * sd.omega)) ==
          Catch::Approx(lam - delta).margin(1e-6 * lam));
  REQUIRE(g(Vec(sd.interval.hi * sd.omega)) ==
          Catch::Approx(lam + delta).margin(1e-6 * lam));
  double unit = 2.0 * delta * std::pow(40.0, -1.0) / 2.0;
  REQUIRE(sd.interval.length() >= unit / 4.0);
  REQUIRE(sd.interval.length() <= unit * 4.0);
}

TEST_CASE("full counts sit inside the model sandwich", "[overlap]") {
  auto lat = square();
  OperatorSpec op{lat, 1.0, preset_b(lat), 5.0 / 3.0, 0.6};
  CutoffParams cut{40.0, 0.6, 2.0};
  Vec k = v2(0.3, 0.7);

  SandwichReport rep = counting_sandwich(op, cut, k, 1600.0, 2.0);
  REQUIRE(rep.n_model_lo <= rep.n_model_hi);
  REQUIRE(rep.ok);

  SandwichReport wide = counting_sandwich(op, cut, k, 1600.0, 4.0);
  REQUIRE(wide.ok);
  REQUIRE(wide.n_model_lo <= rep.n_model_lo);
  REQUIRE(wide.n_model_hi >= rep.n_model_hi);
  REQUIRE(wide.n_full == rep.n_full);
}

TEST_CASE("strong-field overlap at the shell energy is positive", "[overlap]") {
  auto lat = square();
  OperatorSpec op{lat, 1.0, preset_b(lat), 5.0 / 3.0, 0.6};
  OverlapOptions opts;
  opts.grid_per_dim = 6;
  opts.t_cap = 8.0;
  OverlapReport rep = band_overlap(op, 1600.0, opts);
  REQUIRE(rep.overlapped_at_zero);
  REQUIRE(rep.zeta > 0.01);
  REQUIRE(rep.grid_points == 36);
  REQUIRE(rep.n_min < rep.n_max);
}
