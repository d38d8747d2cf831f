// Resonance geometry tests: parameter diagnostics, boundary displacement,
// worked congruence classes, a brute-force closure oracle, zone
// classification with invariance, and the spherical band picture.

#include <catch2/catch_amalgamated.hpp>

#include "blochlab/resonance.hpp"

#include <set>

using namespace blochlab;

namespace {

std::shared_ptr<const Lattice> square() { return std::make_shared<Lattice>(cubic_lattice(2)); }

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

// Exhaustive closure inside a coordinate box: repeatedly sweep all candidate
// lattice translates and admit any point one chain step away from a current
// member.  Independent of the interval-walk in closure().
std::vector<Vec> brute_closure(const Lattice& lat, const ResonanceParams& p, const Vec& xi,
                               int K) {
  double A = p.layer_halfwidth();
  auto thetas = enumerate_theta(lat, p.radius(), false);
  struct Cand {
    Mode o;
    Vec pt;
    bool in = false;
  };
  std::vector<Cand> cands;
  for (int i = -K; i <= K; ++i)
    for (int j = -K; j <= K; ++j) {
      Mode o(i, j, 0);
      cands.push_back({o, Vec(xi + lat.dual_point(o)), o.is_zero()});
    }
  auto linked = [&](const Cand& a, const Cand& b) {
    Mode diff = b.o - a.o;
    for (const Mode& th : thetas) {
      // diff must be a nonzero integer multiple of th.
      long l = 0;
      bool have_l = false, mult = true;
      for (int c = 0; c < 3; ++c) {
        if (th[c] != 0) {
          if (diff[c] % th[c] != 0) { mult = false; break; }
          long cand = diff[c] / th[c];
          if (!have_l) { l = cand; have_l = true; }
          else if (cand != l) { mult = false; break; }
        } else if (diff[c] != 0) { mult = false; break; }
      }
      if (!mult || !have_l || l == 0) continue;
      Vec tc = lat.dual_point(th);
      double sn = tc.norm();
      if (std::abs(a.pt.dot(tc)) < A * sn && std::abs(b.pt.dot(tc)) < A * sn) return true;
    }
    return false;
  };
  bool grew = true;
  while (grew) {
    grew = false;
    for (auto& c : cands) {
      if (c.in) continue;
      for (const auto& m : cands) {
        if (!m.in) continue;
        if (linked(m, c)) {
          c.in = true;
          grew = true;
          break;
        }
      }
    }
  }
  std::vector<Vec> out;
  for (const auto& c : cands)
    if (c.in) out.push_back(c.pt);
  return out;
}

bool same_point_sets(const std::vector<Vec>& a, std::vector<Vec> b, double tol = 1e-9) {
  if (a.size() != b.size()) return false;
  for (const auto& pa : a) {
    bool found = false;
    for (auto it = b.begin(); it != b.end(); ++it)
      if ((*it - pa).norm() <= tol) {
        b.erase(it);
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("resonance parameter diagnostics", "[resonance]") {
  auto lat = square();
  ResonanceParams good{40.0, 0.02, 0.0, {0.6, 0.8}};
  REQUIRE(good.validate(*lat).empty());
  REQUIRE(good.radius() == Catch::Approx(std::pow(40.0, 0.02)).margin(1e-12));

  // Wide frequency radius relative to the exponent gaps: separation fails.
  ResonanceParams wide{100.0, 0.0, 1.5, {0.4, 0.8}};
  auto msgs = wide.validate(*lat);
  REQUIRE_FALSE(msgs.empty());
  bool mentions_gap = false;
  for (const auto& m : msgs) mentions_gap = mentions_gap || m.find("gap") != std::string::npos;
  REQUIRE(mentions_gap);

  ResonanceParams bad_rho{0.5, 0.02, 0.0, {0.6, 0.8}};
  auto m2 = bad_rho.validate(*lat);
  bool mentions_rho = false;
  for (const auto& m : m2) mentions_rho = mentions_rho || m.find("rho") != std::string::npos;
  REQUIRE(mentions_rho);

  ResonanceParams short_list{40.0, 0.02, 0.0, {0.6}};
  REQUIRE_FALSE(short_list.validate(*lat).empty());
}

TEST_CASE("boundary points are displaced before closure", "[resonance]") {
  auto lat = square();
  ResonanceParams p{100.0, 0.0, 1.5, {0.4, 0.8}};
  double A = p.layer_halfwidth();  // 100^{0.4} ≈ 6.3096

  Vec boundary = v2(A, 50.0);  // exactly on the Λ((1,0)) boundary
  REQUIRE(is_critical(*lat, p, boundary));
  Vec fixed = resolve_point(*lat, p, boundary);
  REQUIRE((fixed - boundary).norm() > 0.0);
  REQUIRE((fixed - boundary).norm() < 1e-8);
  REQUIRE_FALSE(is_critical(*lat, p, fixed, 1e-11));

  CongruenceClass cls = closure(*lat, p, boundary);
  REQUIRE(cls.nudged);

  REQUIRE_FALSE(is_critical(*lat, p, v2(3.0, 100.0)));
  REQUIRE_FALSE(closure(*lat, p, v2(3.0, 100.0)).nudged);

  // The displacement direction is fixed and normalized.
  Vec d2dir = nudge_direction(2);
  REQUIRE(d2dir.norm() == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(d2dir[0] == Catch::Approx(0.774596669241483).margin(1e-12));  // (1/√2)/‖·‖
  Vec d3dir = nudge_direction(3);
  REQUIRE(d3dir.norm() == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("thirteen-point collinear class", "[resonance]") {
  auto lat = square();
  ResonanceParams p{100.0, 0.0, 1.5, {0.4, 0.8}};
  CongruenceClass cls = closure(*lat, p, v2(3.0, 100.0));

  REQUIRE(cls.size() == 13);
  for (int j = -6; j <= 6; ++j) REQUIRE(cls.index_of(v2(j, 100.0)) > 0);
  REQUIRE(cls.index_of(v2(7.0, 100.0)) == 0);
  REQUIRE(cls.index_of(v2(-7.0, 100.0)) == 0);

  // Ascending (|η|, lexicographic) labels.
  REQUIRE(cls.index_of(v2(0.0, 100.0)) == 1);
  REQUIRE(cls.index_of(v2(-1.0, 100.0)) == 2);
  REQUIRE(cls.index_of(v2(1.0, 100.0)) == 3);
  REQUIRE(cls.index_of(v2(3.0, 100.0)) == 7);
  REQUIRE(cls.index_of(v2(6.0, 100.0)) == 13);

  REQUIRE(cls.diameter() == Catch::Approx(12.0).margin(1e-9));

  // Translates 𝖭(ξ) are the points minus the seed.
  auto sh = cls.shifts();
  REQUIRE(sh.size() == 13);
  REQUIRE((sh[0] - (cls.points[0] - cls.root)).norm() == 0.0);
}

TEST_CASE("closure matches exhaustive search", "[resonance]") {
  auto lat = square();
  ResonanceParams p{50.0, 0.0, 1.5, {0.4, 0.8}};

  for (const Vec& seed : {v2(3.0, 50.0), v2(3.0, 4.0), v2(23.7, 44.2)}) {
    CongruenceClass cls = closure(*lat, p, seed);
    std::vector<Vec> brute = brute_closure(*lat, p, seed, 25);
    INFO("seed (" << seed[0] << "," << seed[1] << ") fast " << cls.size() << " brute "
                  << brute.size());
    REQUIRE(same_point_sets(cls.points, brute));
  }
  // The far point is alone; the collinear seed has 9 points at this scale.
  REQUIRE(closure(*lat, p, v2(23.7, 44.2)).size() == 1);
  REQUIRE(closure(*lat, p, v2(3.0, 50.0)).size() == 9);
}

TEST_CASE("closure is class-invariant", "[resonance]") {
  auto lat = square();
  ResonanceParams p{100.0, 0.0, 1.5, {0.4, 0.8}};
  CongruenceClass cls = closure(*lat, p, v2(3.0, 100.0));
  for (int idx : {0, 4, 12}) {
    CongruenceClass other = closure(*lat, p, cls.points[static_cast<std::size_t>(idx)]);
    REQUIRE(same_point_sets(cls.points, other.points));
  }

  // Single-step reachability agrees with membership on neighbors.
  REQUIRE(reachable(*lat, p, v2(3.0, 100.0), v2(4.0, 100.0)));
  REQUIRE(reachable(*lat, p, v2(3.0, 100.0), v2(-6.0, 100.0)));
  REQUIRE_FALSE(reachable(*lat, p, v2(3.0, 100.0), v2(3.0, 99.0)));
}

TEST_CASE("zone classification", "[resonance]") {
  auto lat = square();
  ResonanceParams p{100.0, 0.0, 1.5, {0.4, 0.8}};
  auto subs = enumerate_subspaces(*lat, p.radius());
  REQUIRE(subs.size() == 6);  // {0}, four lines, the plane

  // Collinear class: a one-dimensional zone along the first axis.
  ZoneResult z1 = classify(*lat, p, subs, v2(3.0, 100.0));
  REQUIRE(z1.zone_dim == 1);
  REQUIRE(subs[static_cast<std::size_t>(z1.zone_index)].contains(v2(1.0, 0.0)));

  // Generic momentum far from every layer: the trivial zone.
  ZoneResult z0 = classify(*lat, p, subs, v2(37.3, 95.1));
  REQUIRE(z0.zone_dim == 0);
  REQUIRE(z0.cls.size() == 1);

  // Small momentum: the full-dimensional zone.
  ZoneResult z2 = classify(*lat, p, subs, v2(3.0, 5.0));
  REQUIRE(z2.zone_dim == 2);

  // Invariance: every member of a class lands in the same zone.
  for (int idx : {1, 6, 11}) {
    ZoneResult zi = classify(*lat, p, subs, z1.cls.points[static_cast<std::size_t>(idx)]);
    REQUIRE(zi.zone_index == z1.zone_index);
    REQUIRE(same_point_sets(zi.cls.points, z1.cls.points));
  }
}

TEST_CASE("chain growth hits the point budget", "[resonance]") {
  auto lat = square();
  // Layer width beyond the spectral scale: chains fill a huge region.
  ResonanceParams p{100.0, 0.0, 1.5, {1.2, 1.3}};
  REQUIRE_THROWS_AS(closure(*lat, p, v2(3.0, 5.0), 500), resource_error);
}

TEST_CASE("spherical band of resonant directions", "[resonance]") {
  auto lat = square();
  ResonanceParams p{1e4, 0.0, 1.5, {0.4, 0.8}};
  // 16 ρ^{α₁−1} = 16·10^{−2.4} ≈ 0.0636971.
  REQUIRE(sphere_band_halfwidth(p, 2) == Catch::Approx(0.0636971).margin(5e-6));
  REQUIRE(in_sphere_band(*lat, p, Mode(1, 0, 0), v2(0.05, 0.99875)));
  REQUIRE_FALSE(in_sphere_band(*lat, p, Mode(1, 0, 0), v2(0.1, 0.995)));
}

TEST_CASE("class diameters stay bounded", "[resonance]") {
  auto lat = square();
  ResonanceParams p{50.0, 0.0, 1.5, {0.4, 0.8}};
  double bound = 4.0 * std::pow(p.rho, 0.4) * std::pow(1.5, 2.0);  // 4 ρ^{α₁} r^{(d−1)d}
  CounterRng rng{55, 9};
  std::uint64_t ctr = 0;
  for (int t = 0; t < 40; ++t) {
    double u0 = rng.uniform(ctr++);
    double u1 = rng.uniform(ctr++);
    double rad = 25.0 + 50.0 * u0;
    double ang = 2.0 * pi * u1;
    CongruenceClass cls = closure(*lat, p, v2(rad * std::cos(ang), rad * std::sin(ang)));
    REQUIRE(cls.size() >= 1);
    REQUIRE(cls.diameter() <= bound);
  }
}
