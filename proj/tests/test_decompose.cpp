// Cutoffs and the six-region decomposition.  Oracles: hand-computed window
// values at shell points, the algebraic partition-of-unity identity, and the
// exact shift symmetries of the cutoff factors.

#include <catch2/catch_amalgamated.hpp>

#include "blochlab/decompose.hpp"
#include "blochlab/norms.hpp"

#include <memory>

using namespace blochlab;

namespace {

std::shared_ptr<const Lattice> square() {
  return std::make_shared<Lattice>(cubic_lattice(2));
}

Symbol symmetric_pair(std::shared_ptr<const Lattice> lat, Mode th, cplx c) {
  // b̂(θ,ξ) = c, b̂(−θ,ξ) = conj(c): a self-adjoint two-mode symbol.
  return make_constant_modes(std::move(lat), {{th, c}, {-th, std::conj(c)}});
}

}  // namespace

TEST_CASE("base bump: exact plateaus, midpoint, monotone, continuous", "[decompose]") {
  CHECK(iota(0.0) == 1.0);
  CHECK(iota(0.25) == 1.0);
  CHECK(iota(-3.0) == 1.0);
  CHECK(iota(0.5) == 0.0);
  CHECK(iota(2.0) == 0.0);
  CHECK(iota(0.375) == 0.5);
  double prev = 1.0;
  for (int i = 1; i <= 1000; ++i) {
    double z = 0.25 + 0.25 * i / 1000.0;
    double v = iota(z);
    CHECK(v <= prev + 1e-15);  // monotone decreasing
    prev = v;
  }
  // No jumps: successive values on a fine grid stay close (C^infinity bump).
  double worst = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    double z = 0.2 + 0.4 * i / 20000.0;
    if (i > 0) worst = std::max(worst, std::abs(iota(z) - iota(z - 0.4 / 20000.0)));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("shell cutoffs form a partition of unity", "[decompose]") {
  auto lat = square();
  double rho = 37.0;
  CounterRng rng{10, 1};
  std::uint64_t ctr = 0;
  for (int t = 0; t < 300; ++t) {
    Vec th(2), xi(2);
    th << 1.0, 0.0;
    // Sweep radii from deep inside to far outside the shell.
    double r = rho * (0.05 + 2.5 * rng.uniform(ctr++));
    double a = 2.0 * pi * rng.uniform(ctr++);
    xi << r * std::cos(a), r * std::sin(a);
    double e = cutoff_shell(th, xi, rho);
    double up = cutoff_above(th, xi, rho);
    double lo = cutoff_below(th, xi, rho);
    CHECK(e + up + lo == Catch::Approx(1.0).margin(1e-14));
    CHECK(e >= 0.0);
    CHECK(up >= 0.0);
    CHECK(lo >= 0.0);
  }
}

TEST_CASE("cutoff shift symmetries are exact", "[decompose]") {
  double rho = 21.0, L = std::pow(rho, 0.6);
  CounterRng rng{12, 2};
  std::uint64_t ctr = 0;
  for (int t = 0; t < 200; ++t) {
    Vec th(2), xi(2);
    double u0 = rng.uniform(ctr++);
    double u1 = rng.uniform(ctr++);
    th << std::floor(3 * u0) - 1.0, std::floor(3 * u1) - 1.0;
    if (th.norm() == 0.0) continue;
    double r = rho * (0.3 + 1.4 * rng.uniform(ctr++));
    double a = 2.0 * pi * rng.uniform(ctr++);
    xi << r * std::cos(a), r * std::sin(a);
    // e_θ(ξ) = e_{−θ}(ξ+θ) and ζ_θ(ξ) = ζ_{−θ}(ξ+θ): the shifted midpoint
    // |ξ+θ/2| and the window argument are literally the same numbers.
    CHECK(cutoff_shell(th, xi, rho) == cutoff_shell(Vec(-th), Vec(xi + th), rho));
    CHECK(cutoff_window(th, xi, L) == cutoff_window(Vec(-th), Vec(xi + th), L));
  }
}

TEST_CASE("worked shell points: resonant capture and high-energy capture", "[decompose]") {
  auto lat = square();
  double rho = 100.0;
  CutoffParams cut{rho, 0.6, 1.5};
  auto b = symmetric_pair(lat, Mode(1, 0), cplx(1.0, 0.0));
  auto parts = decompose(b, cut);

  // ξ on the shell, θ·(ξ+θ/2) = 0.5 well inside the window ρ^0.6 ≈ 15.85:
  // the whole coefficient is resonant.
  Vec xi(2);
  xi << 0.0, 100.0;
  Mode th(1, 0);
  CHECK(std::abs(eval(parts.resonant, th, xi) - cplx(1.0)) < 1e-14);
  CHECK(std::abs(eval(parts.nonresonant, th, xi)) < 1e-14);
  CHECK(std::abs(eval(parts.above, th, xi)) < 1e-14);
  CHECK(std::abs(eval(parts.below, th, xi)) < 1e-14);

  // ξ at twice the shell radius: everything is in the high-energy part.
  Vec far(2);
  far << 200.0, 0.0;
  CHECK(std::abs(eval(parts.above, th, far) - cplx(1.0)) < 1e-14);
  CHECK(std::abs(eval(parts.resonant, th, far)) < 1e-14);
  CHECK(std::abs(eval(parts.nonresonant, th, far)) < 1e-14);
  CHECK(std::abs(eval(parts.below, th, far)) < 1e-14);

  // Deep inside: the low-energy part.
  Vec in(2);
  in << 5.0, 5.0;
  CHECK(std::abs(eval(parts.below, th, in) - cplx(1.0)) < 1e-14);
}

TEST_CASE("six parts reconstruct the symbol exactly", "[decompose]") {
  auto lat = square();
  CutoffParams cut{30.0, 0.6, 1.5};
  // Mode spread includes |θ| = 2 > r (high-frequency) and θ = 0 (mean).
  std::vector<std::pair<Mode, cplx>> modes;
  CounterRng rng{91, 4};
  std::uint64_t ctr = 0;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j)
      {
        double u0 = rng.uniform(ctr++);
        double u1 = rng.uniform(ctr++);
        modes.emplace_back(Mode(i, j), cplx(u0 - 0.5, u1 - 0.5));
      }
  auto b = make_constant_modes(lat, modes);
  auto parts = decompose(b, cut);
  auto back = parts.reconstruct();
  for (int t = 0; t < 200; ++t) {
    Vec xi(2);
    double r = 30.0 * (0.05 + 2.2 * rng.uniform(ctr++));
    double a = 2.0 * pi * rng.uniform(ctr++);
    xi << r * std::cos(a), r * std::sin(a);
    for (const auto& th : b->support) {
      cplx orig = eval(b, th, xi), rec = eval(back, th, xi);
      CHECK(std::abs(orig - rec) < 1e-14);
    }
  }
  // Mean part holds exactly the zero mode.
  REQUIRE(parts.mean->support.size() == 1);
  CHECK(parts.mean->support[0].is_zero());
  // High part holds exactly the frequencies longer than r.
  for (const auto& th : parts.high->support)
    CHECK(lat->dual_point(th).norm() > cut.r);
}

TEST_CASE("in-shell parts live on ρ/2 ≤ |ξ+θ/2| ≤ 3ρ/2", "[decompose]") {
  auto lat = square();
  double rho = 40.0;
  CutoffParams cut{rho, 0.6, 1.5};
  auto b = symmetric_pair(lat, Mode(1, 0), cplx(1.0, 0.0));
  auto parts = decompose(b, cut);
  CounterRng rng{17, 3};
  std::uint64_t ctr = 0;
  for (int t = 0; t < 400; ++t) {
    Vec xi(2);
    double r = rho * 2.5 * rng.uniform(ctr++);
    double a = 2.0 * pi * rng.uniform(ctr++);
    xi << r * std::cos(a), r * std::sin(a);
    for (const auto& th : b->support) {
      double mid = (xi + 0.5 * lat->dual_point(th)).norm();
      if (std::abs(eval(parts.resonant, th, xi)) > 0.0 ||
          std::abs(eval(parts.nonresonant, th, xi)) > 0.0) {
        CHECK(mid >= rho / 2.0);
        CHECK(mid <= 3.0 * rho / 2.0);
      }
    }
  }
}

TEST_CASE("parts of a self-adjoint symbol stay self-adjoint", "[decompose]") {
  auto lat = square();
  CutoffParams cut{25.0, 0.6, 1.5};
  auto b = symbol_sum({symmetric_pair(lat, Mode(1, 0), cplx(0.4, 0.7)),
                       symmetric_pair(lat, Mode(1, 1), cplx(-0.2, 0.1)),
                       symmetric_pair(lat, Mode(2, 0), cplx(0.3, -0.6))});
  auto parts = decompose(b, cut);
  for (const auto& part : parts.all()) {
    auto rep = check_symmetric(part, 2.5 * cut.rho, 96, 7);
    CHECK(rep.max_deviation <= 1e-12 * std::max(1.0, rep.scale));
  }
}

TEST_CASE("subspace-restricted resonant part keeps only frequencies in V", "[decompose]") {
  auto lat = square();
  CutoffParams cut{30.0, 0.6, 1.5};
  auto b = symbol_sum({symmetric_pair(lat, Mode(1, 0), cplx(1.0, 0.0)),
                       symmetric_pair(lat, Mode(0, 1), cplx(1.0, 0.0)),
                       symmetric_pair(lat, Mode(1, 1), cplx(1.0, 0.0))});
  auto famly = enumerate_subspaces(*lat, 1.0);
  const Subspace* axis1 = nullptr;
  Vec e1(2);
  e1 << 1.0, 0.0;
  for (auto& s : famly)
    if (s.dim == 1 && s.contains(e1)) axis1 = &s;
  REQUIRE(axis1 != nullptr);
  auto bv = resonant_part_V(b, cut, *axis1);
  for (const auto& th : bv->support) {
    CHECK(th[1] == 0);  // only ±e1 frequencies survive
  }
  // And on its support it matches the unrestricted resonant filter.
  auto parts = decompose(b, cut);
  Vec xi(2);
  xi << 0.3, 30.0;
  CHECK(std::abs(eval(bv, Mode(1, 0), xi) - eval(parts.resonant, Mode(1, 0), xi)) < 1e-14);
}
