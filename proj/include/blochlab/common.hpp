// common.hpp — shared scalar/vector types, hashing, deterministic RNG,
// number formatting, and a small worker pool.
//
// Conventions used throughout the library:
//   * the space dimension d is a runtime value, always 2 or 3;
//   * points of R^d (momenta xi, quasimomenta k) are stored in Vec, a
//     stack-allocated Eigen vector with capacity 3;
//   * dual-lattice points are held as integer coordinate triples (Mode) with
//     respect to the dual basis; their Cartesian embedding is obtained through
//     the Lattice (see lattice.hpp);
//   * all reductions that feed reported numbers run in deterministic order.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace blochlab {

using cplx = std::complex<double>;

// Fixed-capacity dynamic vectors/matrices: runtime size d <= 3, no heap.
using Vec  = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using Mat  = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

inline constexpr double pi = 3.14159265358979323846264338327950288;

// ---------------------------------------------------------------------------
// Error taxonomy.  Exit codes: 0 success, 2 invalid configuration,
// 3 numerical failure, 4 resource limit exceeded.
// ---------------------------------------------------------------------------

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Integer dual-lattice coordinates.
// ---------------------------------------------------------------------------

// Integer coordinate triple; coordinates beyond the active dimension are 0.
struct Mode {
  std::array<std::int32_t, 3> c{0, 0, 0};

  Mode() = default;
  Mode(std::int32_t a, std::int32_t b, std::int32_t cc = 0) : c{a, b, cc} {}

  std::int32_t  operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  std::int32_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

  bool operator==(const Mode& o) const { return c == o.c; }
  bool operator!=(const Mode& o) const { return c != o.c; }

  Mode operator+(const Mode& o) const { return Mode(c[0] + o.c[0], c[1] + o.c[1], c[2] + o.c[2]); }
  Mode operator-(const Mode& o) const { return Mode(c[0] - o.c[0], c[1] - o.c[1], c[2] - o.c[2]); }
  Mode operator-() const { return Mode(-c[0], -c[1], -c[2]); }

  bool is_zero() const { return c[0] == 0 && c[1] == 0 && c[2] == 0; }

  // Conservative sup-norm of the integer coordinates.
  std::int32_t linf() const {
    return std::max(std::abs(c[0]), std::max(std::abs(c[1]), std::abs(c[2])));
  }
};

// Lexicographic order on the coordinate triple (used only as a deterministic
// tie-break; geometric orders always compare lengths first).
struct ModeLess {
  bool operator()(const Mode& a, const Mode& b) const { return a.c < b.c; }
};

struct ModeHash {
  std::size_t operator()(const Mode& m) const {
    // FNV-1a over the packed coordinates.
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < 3; ++i) {
      std::uint64_t v = static_cast<std::uint32_t>(m.c[static_cast<std::size_t>(i)]);
      h = (h ^ v) * 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

// ---------------------------------------------------------------------------
// Bit-exact floating-point keys (memoization of evaluations at points xi).
// ---------------------------------------------------------------------------

inline std::uint64_t bits_of(double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, sizeof u);
  return u;
}

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 12) + (h >> 4);
  return h;
}

struct PointKey {
  Mode theta;
  std::array<std::uint64_t, 3> xi{0, 0, 0};

  PointKey() = default;
  PointKey(const Mode& th, const Vec& x) : theta(th) {
    for (int i = 0; i < x.size(); ++i) xi[static_cast<std::size_t>(i)] = bits_of(x[i]);
  }
  bool operator==(const PointKey& o) const { return theta == o.theta && xi == o.xi; }
};

struct PointKeyHash {
  std::size_t operator()(const PointKey& k) const {
    std::uint64_t h = ModeHash{}(k.theta);
    for (auto v : k.xi) h = hash_mix(h, v);
    return static_cast<std::size_t>(h);
  }
};

// ---------------------------------------------------------------------------
// Counter-based deterministic RNG.
//
// Stateless: the n-th draw of stream s under seed q is a pure function of
// (q, s, n), so any parallel schedule reproduces the same sample set.  The
// mixing function is the SplitMix64 finalizer applied to the combined words.
// ---------------------------------------------------------------------------

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct CounterRng {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::uint64_t word(std::uint64_t counter) const {
    std::uint64_t h = mix64(seed ^ 0x243f6a8885a308d3ull);
    h = mix64(h ^ stream);
    return mix64(h ^ counter);
  }
  // Uniform in [0,1).
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(word(counter) >> 11) * 0x1.0p-53;
  }
};

// ---------------------------------------------------------------------------
// Number formatting for reports: decimal with 17 significant digits plus the
// exact hexadecimal form, e.g. "2.5000000000000000e+00 (0x1.4p+1)".
// ---------------------------------------------------------------------------

inline std::string format_full(double x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  std::string s(buf);
  std::snprintf(buf, sizeof buf, "%a", x);
  s += " (";
  s += buf;
  s += ")";
  return s;
}

inline std::string format_sig17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return std::string(buf);
}

inline std::string format_hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Deterministic chunked parallel map.
//
// The index range [0,n) is split into fixed chunks assigned round-robin to
// workers; per-index results are written into caller-owned slots, so any
// subsequent reduction runs in index order regardless of thread count.
// ---------------------------------------------------------------------------

inline int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 0) threads = hardware_threads();
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t i = t; i < n; i += nthreads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// FNV-1a checksum over bytes (manifest integrity; not cryptographic).
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) h = (h ^ p[i]) * 1099511628211ull;
  return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  return fnv1a(s.data(), s.size(), h);
}

// ---------------------------------------------------------------------------
// Misc small helpers.
// ---------------------------------------------------------------------------

// Japanese bracket <t> = sqrt(1 + |t|^2).
inline double jbracket(double t) { return std::sqrt(1.0 + t * t); }
inline double jbracket(const Vec& v) { return std::sqrt(1.0 + v.squaredNorm()); }

inline double sq(double x) { return x * x; }

}  // namespace blochlab
