#pragma once

// Command-line front end.
//
// `run_cli` takes the argument list (program name excluded) and executes one
// subcommand against a JSON problem file.  It is a plain function so tests
// can drive the tool in-process; tools/blochlab_main.cpp is a thin wrapper.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration/usage error,
// 3 numerical breakdown, 4 resource budget exceeded.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blochlab/cluster.hpp"
#include "blochlab/config.hpp"
#include "blochlab/fiber.hpp"
#include "blochlab/gauge.hpp"
#include "blochlab/measure.hpp"
#include "blochlab/norms.hpp"
#include "blochlab/overlap.hpp"
#include "blochlab/resonance.hpp"

namespace blochlab {

namespace cli_detail {

inline Vec parse_vec(const std::string& text, int d) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw config_error("cannot parse \"" + item + "\" in vector \"" + text + "\"");
    }
  }
  if (static_cast<int>(vals.size()) != d)
    throw config_error("vector \"" + text + "\" must have " + std::to_string(d) +
                       " components");
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = vals[static_cast<std::size_t>(i)];
  return v;
}

inline json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline std::string vec_text(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

// Collects rows and renders CSV with paired readable/bit-exact columns.
struct CsvTable {
  std::string header;
  std::vector<std::string> rows;
  std::ostringstream cur;
  bool first_cell = true;

  explicit CsvTable(std::string h) : header(std::move(h)) {}
  void cell(const std::string& s) {
    if (!first_cell) cur << ",";
    cur << s;
    first_cell = false;
  }
  void cell(long v) { cell(std::to_string(v)); }
  void number(double x) {
    cell(format_sig17(x));
    cell(format_hex(x));
  }
  void end_row() {
    rows.push_back(cur.str());
    cur.str("");
    first_cell = true;
  }
  std::string text() const {
    std::string out = header + "\n";
    for (const std::string& r : rows) out += r + "\n";
    return out;
  }
};

struct Sink {
  std::optional<std::filesystem::path> dir;

  explicit Sink(const std::string& out) {
    if (!out.empty()) {
      dir = std::filesystem::path(out);
      ensure_fresh_dir(*dir);
    }
  }
  void file(const std::string& name, const std::string& text) const {
    if (dir) write_text_file(*dir / name, text);
  }
};

struct CommonOpts {
  std::string config;
  std::string out;
  double rho = 0.0;  // > 0: override the shell radius
  int threads = 1;
};

inline LoadedProblem load_common(const CommonOpts& c) {
  LoadedProblem p = load_problem(c.config);
  if (c.rho > 0.0) override_rho(p, c.rho);
  if (c.threads != 1)
    std::cout << "note: single-core build; --threads has no effect\n";
  return p;
}

}  // namespace cli_detail

inline int run_cli(std::vector<std::string> args) {
  using cli_detail::CommonOpts;
  using cli_detail::CsvTable;
  using cli_detail::Sink;

  const std::vector<std::string> given_args = args;

  CLI::App app{"Floquet-Bloch spectral laboratory for periodic operators"};
  app.require_subcommand(1);

  CommonOpts common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "problem file (JSON)")
        ->required();
    sub->add_option("--out", common.out,
                    "output directory (created, write-once)");
    sub->add_option("--rho", common.rho, "override the shell radius");
    sub->add_option("--threads", common.threads, "accepted for compatibility");
  };

  std::string k_text, xi_text;
  double cutoff = 0.0, lambda = 0.0, delta = 0.0, t_cap = -1.0;
  int n_bands = 8, grid = 0, depth = 0, axis = 0;
  long samples = 0, closure_cap = 100000;
  std::uint64_t seed_opt = 0;
  bool seed_given = false;

  CLI::App* sc_spectrum = app.add_subcommand(
      "spectrum", "eigenvalues of one quasimomentum fiber");
  add_common(sc_spectrum);
  sc_spectrum->add_option("--k", k_text, "quasimomentum, comma separated");
  sc_spectrum->add_option("--cutoff", cutoff, "momentum ball radius")
      ->required();

  CLI::App* sc_bands = app.add_subcommand(
      "bands", "band edges over a quasimomentum grid");
  add_common(sc_bands);
  sc_bands->add_option("--bands", n_bands, "number of bands to report");
  sc_bands->add_option("--grid", grid, "grid points per dimension");
  sc_bands->add_option("--cutoff", cutoff, "momentum ball radius")->required();

  CLI::App* sc_overlap = app.add_subcommand(
      "overlap", "band overlap margin at an energy");
  add_common(sc_overlap);
  sc_overlap->add_option("--lambda", lambda, "energy level")->required();
  sc_overlap->add_option("--grid", grid, "grid points per dimension");
  sc_overlap->add_option("--t-cap", t_cap, "largest probed margin");
  sc_overlap->add_option("--axis", axis,
                         "reduce a separable problem to this axis (1-based)");

  CLI::App* sc_g = app.add_subcommand(
      "g", "globally labeled band value at a momentum");
  add_common(sc_g);
  sc_g->add_option("--xi", xi_text, "momentum, comma separated")->required();

  CLI::App* sc_rmap = app.add_subcommand(
      "resonance-map", "zone classification and congruence class");
  add_common(sc_rmap);
  sc_rmap->add_option("--xi", xi_text, "momentum, comma separated")->required();
  sc_rmap->add_option("--cap", closure_cap, "class size budget");

  CLI::App* sc_gauge = app.add_subcommand(
      "gauge", "gauge series terms and their scales");
  add_common(sc_gauge);
  sc_gauge->add_option("--depth", depth, "series depth");

  CLI::App* sc_volumes = app.add_subcommand(
      "volumes", "Monte Carlo level-slab volumes");
  add_common(sc_volumes);
  sc_volumes->add_option("--lambda", lambda, "energy level")->required();
  sc_volumes->add_option("--delta", delta, "slab half-width");
  sc_volumes->add_option("--samples", samples, "sample count");
  sc_volumes->add_option("--seed", seed_opt, "random seed");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  seed_given = sc_volumes->count("--seed") > 0;

  auto started = std::chrono::steady_clock::now();
  RunManifest man;
  man.args = given_args;

  try {
    LoadedProblem p = cli_detail::load_common(common);
    const OperatorSpec& op = p.op;
    int d = p.lattice->d;
    Sink sink(common.out);
    man.config_path = common.config;
    man.config_checksum = fnv1a(p.source_text);
    man.seed = 0;

    if (*sc_spectrum) {
      man.command = "spectrum";
      Vec k = k_text.empty() ? Vec(Vec::Zero(d))
                             : cli_detail::parse_vec(k_text, d);
      FiberSpectrum s = fiber_spectrum(op, k, cutoff);
      CsvTable t("index,value,value_hex");
      for (int i = 0; i < s.evals.size(); ++i) {
        t.cell(static_cast<long>(i));
        t.number(s.evals[i]);
        t.end_row();
      }
      sink.file("spectrum.csv", t.text());
      std::cout << "fiber at k=" << cli_detail::vec_text(k) << ": dimension "
                << s.evals.size() << "\n";
      long show = std::min<long>(s.evals.size(), 8);
      for (long i = 0; i < show; ++i)
        std::cout << "  ev[" << i << "] = " << format_sig17(s.evals[i]) << "\n";
      if (show < s.evals.size())
        std::cout << "  ... up to " << format_sig17(s.evals[s.evals.size() - 1])
                  << "\n";
    } else if (*sc_bands) {
      man.command = "bands";
      int g = grid > 0 ? grid : p.overlap_grid;
      BandEdges be = band_edges(op, n_bands, g, cutoff);
      CsvTable t("band,bottom,bottom_hex,top,top_hex");
      for (std::size_t b = 0; b < be.bottoms.size(); ++b) {
        t.cell(static_cast<long>(b));
        t.number(be.bottoms[b]);
        t.number(be.tops[b]);
        t.end_row();
      }
      sink.file("bands.csv", t.text());
      std::cout << "band edges over a " << g << "^" << d << " grid:\n";
      for (std::size_t b = 0; b < be.bottoms.size(); ++b) {
        std::cout << "  band " << b << ": [" << format_sig17(be.bottoms[b])
                  << ", " << format_sig17(be.tops[b]) << "]";
        if (b + 1 < be.bottoms.size()) {
          double gap = be.bottoms[b + 1] - be.tops[b];
          std::cout << (gap > 0 ? "  gap " : "  overlap ")
                    << format_sig17(std::abs(gap));
        }
        std::cout << "\n";
      }
    } else if (*sc_overlap) {
      man.command = "overlap";
      OperatorSpec work = op;
      if (axis != 0) work = reduce_to_chain(op, axis);
      OverlapOptions oo;
      oo.grid_per_dim = grid > 0 ? grid : p.overlap_grid;
      oo.t_cap = t_cap >= 0.0 ? t_cap : p.overlap_t_cap;
      OverlapReport r = band_overlap(work, lambda, oo);
      json j;
      j["lambda"] = number_cell(r.lambda);
      j["zeta"] = number_cell(r.zeta);
      j["overlapped_at_zero"] = r.overlapped_at_zero;
      j["capped"] = r.capped;
      j["t_cap"] = number_cell(r.t_cap);
      j["n_min"] = r.n_min;
      j["n_max"] = r.n_max;
      j["k_min"] = cli_detail::vec_json(r.k_min);
      j["k_max"] = cli_detail::vec_json(r.k_max);
      j["grid_points"] = r.grid_points;
      if (axis != 0) j["axis"] = axis;
      sink.file("overlap.json", j.dump(2) + "\n");
      std::cout << "overlap margin at lambda=" << format_sig17(lambda)
                << ": zeta = " << format_sig17(r.zeta)
                << (r.capped ? " (capped)" : "") << "\n"
                << "  counts at lambda: min " << r.n_min << " at k="
                << cli_detail::vec_text(r.k_min) << ", max " << r.n_max
                << " at k=" << cli_detail::vec_text(r.k_max) << "\n";
    } else if (*sc_g) {
      man.command = "g";
      Vec xi = cli_detail::parse_vec(xi_text, d);
      BandFunction g = make_band_function(op, p.cut, p.res);
      g.closure_cap = static_cast<std::size_t>(closure_cap);
      ZoneResult z = g.zone_of(xi);
      double value = g.value_at(z);
      json j;
      j["xi"] = cli_detail::vec_json(xi);
      j["value"] = number_cell(value);
      j["zone_dim"] = z.zone_dim;
      j["class_size"] = z.cls.size();
      j["class_rank"] = z.cls.index_of(z.cls.root);
      j["nudged"] = z.cls.nudged;
      sink.file("g.json", j.dump(2) + "\n");
      std::cout << "g" << cli_detail::vec_text(xi) << " = "
                << format_sig17(value) << "  (zone dim " << z.zone_dim
                << ", class size " << z.cls.size() << ", rank "
                << z.cls.index_of(z.cls.root) << ")\n";
    } else if (*sc_rmap) {
      man.command = "resonance-map";
      Vec xi = cli_detail::parse_vec(xi_text, d);
      auto subs = enumerate_subspaces(*p.lattice, p.res.radius());
      ZoneResult z = classify(*p.lattice, p.res, subs, xi,
                              static_cast<std::size_t>(closure_cap));
      std::string head = "rank";
      for (int i = 0; i < d; ++i)
        head += ",coord" + std::to_string(i + 1) + ",coord" +
                std::to_string(i + 1) + "_hex";
      head += ",dist2,dist2_hex";
      CsvTable t(head);
      for (int i = 0; i < z.cls.size(); ++i) {
        const Vec& pt = z.cls.points[static_cast<std::size_t>(i)];
        t.cell(static_cast<long>(i + 1));
        for (int c = 0; c < d; ++c) t.number(pt[c]);
        t.number(pt.squaredNorm());
        t.end_row();
      }
      sink.file("class.csv", t.text());
      json j;
      j["xi"] = cli_detail::vec_json(xi);
      j["zone_dim"] = z.zone_dim;
      j["zone_index"] = z.zone_index;
      j["class_size"] = z.cls.size();
      j["class_rank"] = z.cls.index_of(z.cls.root);
      j["nudged"] = z.cls.nudged;
      sink.file("zone.json", j.dump(2) + "\n");
      std::cout << "momentum " << cli_detail::vec_text(xi) << ": zone dim "
                << z.zone_dim << ", class size " << z.cls.size() << ", rank "
                << z.cls.index_of(z.cls.root)
                << (z.cls.nudged ? " (seed displaced off a boundary)" : "")
                << "\n";
    } else if (*sc_gauge) {
      man.command = "gauge";
      int M = depth > 0 ? depth : p.gauge_depth;
      GaugeSeries s = build_gauge_series(op, p.cut, M);
      NormParams np;
      np.rho = p.cut.rho;
      CsvTable t("order,term_norm,term_norm_hex,predicted_scale,"
                 "predicted_scale_hex");
      std::cout << "gauge series to depth " << M << " (last row = leading "
                << "remainder term):\n";
      for (std::size_t jx = 0; jx < s.b_terms.size(); ++jx) {
        double nb = estimate_norm(s.b_terms[jx], np);
        double pred = remainder_scale(op, p.cut, static_cast<int>(jx));
        t.cell(static_cast<long>(jx + 1));
        t.number(nb);
        t.number(pred);
        t.end_row();
        std::cout << "  order " << jx + 1 << ": norm "
                  << format_sig17(nb) << ", predicted scale "
                  << format_sig17(pred) << "\n";
      }
      sink.file("gauge.csv", t.text());
    } else if (*sc_volumes) {
      man.command = "volumes";
      BandFunction g = make_band_function(op, p.cut, p.res);
      double dl = delta > 0.0 ? delta
                              : default_delta(p.cut.rho, op.m, p.mc_epsilon);
      BandMeasureOptions mo;
      mo.samples = samples > 0 ? samples : p.mc_samples;
      mo.seed = seed_given ? seed_opt : p.seed;
      man.seed = mo.seed;
      BandMeasure bm = measure_band_volumes(g, lambda, dl, mo);
      auto est = [](const VolumeEstimate& e) {
        json j;
        j["value"] = number_cell(e.value);
        j["std_error"] = number_cell(e.std_error);
        j["n_inside"] = e.n_inside;
        j["n_total"] = e.n_total;
        return j;
      };
      json j;
      j["lambda"] = number_cell(bm.lambda);
      j["delta"] = number_cell(bm.delta);
      j["r_lo"] = number_cell(bm.r_lo);
      j["r_hi"] = number_cell(bm.r_hi);
      j["domain_volume"] = number_cell(bm.domain_volume);
      j["total"] = est(bm.total);
      j["resonant"] = est(bm.resonant);
      j["samples"] = mo.samples;
      j["seed"] = mo.seed;
      sink.file("volumes.json", j.dump(2) + "\n");
      double frac = bm.total.value > 0 ? bm.resonant.value / bm.total.value : 0;
      std::cout << "level slab [" << format_sig17(lambda - dl) << ", "
                << format_sig17(lambda + dl) << "] with " << mo.samples
                << " samples:\n"
                << "  total volume    " << format_sig17(bm.total.value)
                << " +/- " << format_sig17(bm.total.std_error) << "\n"
                << "  resonant part   " << format_sig17(bm.resonant.value)
                << " +/- " << format_sig17(bm.resonant.std_error)
                << "  (fraction " << format_sig17(frac) << ")\n";
    }

    man.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    if (sink.dir) {
      write_manifest(*sink.dir, man);
      std::cout << "results written to " << sink.dir->string() << "\n";
    }
    return 0;
  } catch (const config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical breakdown: " << e.what() << "\n";
    return 3;
  } catch (const resource_error& e) {
    std::cerr << "resource budget exceeded: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace blochlab
