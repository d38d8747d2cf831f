#pragma once

// JSON problem configuration, validation, and run outputs.
//
// A problem file carries the lattice, the operator exponents, the symbol
// (free, Fourier modes with coefficient expressions, or magnetic fields),
// the shell/cutoff scales, resonance exponents, and tool defaults.  Loading
// validates everything that can be checked statically: exponent standing
// conditions, resonance parameter separation, realness of configured
// fields, and symmetry of the assembled symbol.  Violations raise
// config_error before any computation starts.
//
// Output directories are write-once: a directory that already holds a run
// manifest is refused, so results are never silently overwritten.

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blochlab/common.hpp"
#include "blochlab/cutoffs.hpp"
#include "blochlab/expr.hpp"
#include "blochlab/lattice.hpp"
#include "blochlab/resonance.hpp"
#include "blochlab/symbol.hpp"

namespace blochlab {

using nlohmann::json;

struct LoadedProblem {
  std::shared_ptr<const Lattice> lattice;
  OperatorSpec op;
  CutoffParams cut;
  ResonanceParams res;
  int gauge_depth = 5;
  int overlap_grid = 32;
  double overlap_t_cap = 0.0;
  long mc_samples = 1000000;
  double mc_epsilon = 0.1;
  double delta_simple = 0.1;
  std::uint64_t seed = 1;
  std::string source_text;  // raw JSON, for checksums
  std::string source_path;  // empty when parsed from memory
};

namespace detail {

inline Mode mode_from_json(const json& j, int d) {
  if (!j.is_array() || static_cast<int>(j.size()) != d)
    throw config_error("mode must be an integer array of length " +
                       std::to_string(d));
  std::array<std::int32_t, 3> c{0, 0, 0};
  for (int i = 0; i < d; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number_integer())
      throw config_error("mode entries must be integers");
    c[static_cast<std::size_t>(i)] =
        j[static_cast<std::size_t>(i)].get<std::int32_t>();
  }
  return Mode(c[0], c[1], c[2]);
}

// Evaluate a coefficient expression that must be momentum independent.
inline cplx constant_coeff(const std::string& text, int d) {
  ExprFn fn = parse_coeff_expr(text);
  Vec a = Vec::Zero(d), b = Vec::Constant(d, 1.37);
  cplx va = fn(a), vb = fn(b);
  if (std::abs(va - vb) > 1e-12 * (1.0 + std::abs(va)))
    throw config_error("coefficient \"" + text +
                       "\" must not depend on momentum here");
  return va;
}

inline std::map<Mode, cplx, ModeLess> field_modes(const json& arr, int d,
                                                  double root_cell,
                                                  const std::string& what) {
  std::map<Mode, cplx, ModeLess> out;
  if (!arr.is_array()) throw config_error(what + " must be an array of modes");
  for (const json& e : arr) {
    Mode m = mode_from_json(e.at("mode"), d);
    if (out.count(m)) throw config_error(what + " lists a mode twice");
    out[m] = root_cell * constant_coeff(e.at("coeff").get<std::string>(), d);
  }
  // A physical field is real: coefficients must pair conjugately.
  for (const auto& [m, c] : out) {
    auto it = out.find(-m);
    if (it == out.end() || std::abs(std::conj(it->second) - c) >
                               1e-12 * (1.0 + std::abs(c)))
      throw config_error(what + " is not a real field: mode and its negative "
                         "must carry conjugate coefficients");
  }
  return out;
}

}  // namespace detail

inline LoadedProblem parse_problem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  LoadedProblem p;
  p.source_text = text;
  try {
    const json& jl = j.at("lattice");
    int d = jl.at("dimension").get<int>();
    if (jl.contains("basis")) {
      const json& jb = jl.at("basis");
      if (!jb.is_array() || static_cast<int>(jb.size()) != d)
        throw config_error("lattice basis must be d column vectors");
      Mat B(d, d);
      for (int c = 0; c < d; ++c) {
        const json& col = jb[static_cast<std::size_t>(c)];
        if (!col.is_array() || static_cast<int>(col.size()) != d)
          throw config_error("lattice basis columns must have length d");
        for (int r = 0; r < d; ++r)
          B(r, c) = col[static_cast<std::size_t>(r)].get<double>();
      }
      p.lattice = std::make_shared<Lattice>(make_lattice(d, B));
    } else {
      double scale = jl.value("scale", 2.0 * pi);
      p.lattice = std::make_shared<Lattice>(cubic_lattice(d, scale));
    }

    const json& jo = j.at("operator");
    double m = jo.at("order").get<double>();
    double alpha = jo.at("alpha").get<double>();
    double beta = jo.at("beta").get<double>();

    Symbol b = nullptr;
    double root_cell = std::sqrt(p.lattice->cell_volume);
    if (j.contains("symbol")) {
      const json& js = j.at("symbol");
      std::string kind = js.value("kind", "free");
      if (kind == "free") {
        // nothing to build
      } else if (kind == "magnetic") {
        std::array<std::map<Mode, cplx, ModeLess>, 3> a{};
        const json& ja = js.at("vector_potential");
        if (!ja.is_array() || static_cast<int>(ja.size()) != d)
          throw config_error("vector_potential needs one mode list per "
                             "coordinate");
        for (int c = 0; c < d; ++c)
          a[static_cast<std::size_t>(c)] = detail::field_modes(
              ja[static_cast<std::size_t>(c)], d, root_cell,
              "vector_potential[" + std::to_string(c + 1) + "]");
        std::map<Mode, cplx, ModeLess> v;
        if (js.contains("scalar_potential"))
          v = detail::field_modes(js.at("scalar_potential"), d, root_cell,
                                  "scalar_potential");
        b = magnetic_symbol(p.lattice, a, v);
      } else if (kind == "modes") {
        const json& jm = js.at("modes");
        if (!jm.is_array() || jm.empty())
          throw config_error("symbol modes must be a nonempty array");
        std::vector<std::pair<Mode, CoeffFn>> modes;
        for (const json& e : jm) {
          Mode th = detail::mode_from_json(e.at("mode"), d);
          ExprFn fn = parse_coeff_expr(e.at("coeff").get<std::string>());
          modes.emplace_back(th, [fn, root_cell](const Vec& x) {
            return root_cell * fn(x);
          });
        }
        b = make_symbol(p.lattice, modes);
      } else {
        throw config_error("unknown symbol kind \"" + kind + "\"");
      }
    }
    p.op = OperatorSpec{p.lattice, m, b, alpha, beta};

    double rho = j.at("rho").get<double>();
    const json& jc = j.at("cutoff");
    p.cut = CutoffParams{rho, jc.at("beta").get<double>(),
                         jc.at("radius").get<double>()};
    const json& jr = j.at("resonance");
    p.res = ResonanceParams{rho, jr.value("kappa", 0.0), jr.value("radius", 0.0),
                            jr.at("alphas").get<std::vector<double>>()};

    if (j.contains("gauge")) p.gauge_depth = j.at("gauge").value("depth", 5);
    if (j.contains("overlap")) {
      p.overlap_grid = j.at("overlap").value("grid", 32);
      p.overlap_t_cap = j.at("overlap").value("t_cap", 0.0);
    }
    if (j.contains("measure")) {
      const json& jm = j.at("measure");
      p.mc_samples = jm.value("samples", 1000000L);
      p.mc_epsilon = jm.value("epsilon", 0.1);
      p.delta_simple = jm.value("delta_simple", 0.1);
      p.seed = jm.value("seed", std::uint64_t{1});
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("config field error: ") + e.what());
  }

  // Static validation: exponent standing, cutoff sanity, resonance scales,
  // and symmetry of the assembled symbol.
  std::vector<std::string> problems = validate_standing(p.op);
  try {
    p.cut.validate();
  } catch (const config_error& e) {
    problems.push_back(e.what());
  }
  for (const std::string& s : p.res.validate(*p.lattice)) problems.push_back(s);
  if (p.gauge_depth < 1) problems.push_back("gauge depth must be at least 1");
  if (p.mc_samples < 1) problems.push_back("sample count must be positive");
  if (p.op.b) {
    SymmetryReport rep = check_symmetric(p.op.b, 1.5 * p.cut.rho + 3.0);
    if (rep.max_deviation > 1e-9 * rep.scale)
      problems.push_back("symbol is not symmetric: relative deviation " +
                         format_sig17(rep.max_deviation /
                                      std::max(rep.scale, 1e-300)));
  }
  if (!problems.empty()) {
    std::string msg = "configuration rejected:";
    for (const std::string& s : problems) msg += "\n  - " + s;
    throw config_error(msg);
  }
  return p;
}

inline LoadedProblem load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  LoadedProblem p = parse_problem(ss.str());
  p.source_path = path;
  return p;
}

// Rebuild the scale-dependent parameters at a different shell radius.
inline void override_rho(LoadedProblem& p, double rho) {
  if (!(rho > 1.0)) throw config_error("rho override must exceed 1");
  p.cut.rho = rho;
  p.res.rho = rho;
  std::vector<std::string> problems;
  try {
    p.cut.validate();
  } catch (const config_error& e) {
    problems.push_back(e.what());
  }
  for (const std::string& s : p.res.validate(*p.lattice)) problems.push_back(s);
  if (!problems.empty()) {
    std::string msg = "rho override rejected:";
    for (const std::string& s : problems) msg += "\n  - " + s;
    throw config_error(msg);
  }
}

// ---------------------------------------------------------------------------
// Run outputs.
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  std::string config_path;
  std::uint64_t config_checksum = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

// Create the directory; refuse one that already holds a run.
inline void ensure_fresh_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw config_error("cannot create output directory " + dir.string() +
                       ": " + ec.message());
  if (fs::exists(dir / "manifest.json"))
    throw config_error("output directory " + dir.string() +
                       " already holds results (write-once)");
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write " + path.string());
  out << text;
  if (!out) throw config_error("short write to " + path.string());
}

inline void write_manifest(const std::filesystem::path& dir,
                           const RunManifest& man) {
  json j;
  j["command"] = man.command;
  j["args"] = man.args;
  j["config_path"] = man.config_path;
  j["config_checksum_fnv1a"] = man.config_checksum;
  j["seed"] = man.seed;
  j["wall_seconds"] = man.wall_seconds;
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

// One numeric cell, rendered both human-readable and bit-exact.
inline json number_cell(double x) {
  return json{{"value", format_sig17(x)}, {"hex", format_hex(x)}};
}

}  // namespace blochlab
