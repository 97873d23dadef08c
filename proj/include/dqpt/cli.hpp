#pragma once

// Batch front-end. Every subcommand reads a key = value config, expands list
// valued keys into variants, and writes CSV files with JSON sidecars plus a
// run manifest. Exit codes: 0 success, 2 config, 3 I/O, 4 numeric.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dqpt/dqpt.hpp"

namespace dqpt::cli {

inline constexpr const char* kVersion = "dqpt 1.0.0";

enum ExitCode : int { kOk = 0, kConfig = 2, kIo = 3, kNumeric = 4 };

struct Options {
  std::string subcommand;
  std::filesystem::path config;
  std::filesystem::path out = ".";
  unsigned workers = 1;
  std::optional<std::uint64_t> seed;
  bool include_linear = false;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// One concrete spectrum out of the list-valued [spectrum] keys.
struct Variant {
  std::string tag;
  ModeSpectrum spectrum;
};

inline std::vector<Variant> build_variants(const io::Config& c, const std::filesystem::path& config_dir) {
  const std::string kind = c.get_string("spectrum.kind");
  std::vector<Variant> out;
  if (kind == "file") {
    auto path = std::filesystem::path(c.get_string("spectrum.path"));
    if (path.is_relative()) path = config_dir / path;
    out.push_back({"file", io::load_spectrum(path)});
    return out;
  }
  const auto sizes = c.get_ints("spectrum.n_modes");
  for (long long n : sizes)
    if (n < 1) throw ConfigError("spectrum.n_modes must be >= 1");
  if (kind == "comb") {
    const double tau0 = c.get_double("spectrum.tau0", 1.0);
    const double scale = c.get_double("spectrum.coupling_scale", 1.0);
    for (long long n : sizes)
      for (double a : c.get_doubles("spectrum.alpha"))
        out.push_back({"N" + std::to_string(n) + "_alpha" + num(a),
                       build_comb_spectrum(static_cast<std::size_t>(n), tau0, a, scale)});
  } else if (kind == "powerlaw") {
    const double omega0 = c.get_double("spectrum.omega0", 2.0 * std::numbers::pi);
    const double scale = c.get_double("spectrum.coupling_scale", 1.0);
    const auto betas = c.get_doubles("spectrum.beta");
    for (long long n : sizes)
      for (double a : c.get_doubles("spectrum.alpha"))
        for (double b : betas)
          out.push_back({"N" + std::to_string(n) + "_alpha" + num(a) + "_beta" + num(b),
                         build_powerlaw_spectrum(static_cast<std::size_t>(n), omega0, b, a, scale)});
  } else if (kind == "membrane") {
    const MembraneParams params = io::membrane_params_from_config(c);
    const std::string units = c.get_string("spectrum.units", std::string("dimensionless"));
    const double ratio = c.get_double("spectrum.coupling_ratio", 1.0);
    if (units != "dimensionless" && units != "physical")
      throw ConfigError("spectrum.units must be 'dimensionless' or 'physical'");
    for (long long n : sizes) {
      const MembraneModes modes = mode_table(params, static_cast<std::size_t>(n));
      out.push_back({"N" + std::to_string(n),
                     units == "physical" ? from_membrane(modes) : dimensionless_membrane(modes, ratio)});
    }
  } else {
    throw ConfigError("spectrum.kind must be comb, powerlaw, membrane or file; got '" + kind + "'");
  }
  return out;
}

/// Thermal settings: an optional list of fundamental-mode occupations.
struct ThermalChoice {
  std::string tag;
  std::optional<double> n_th;
};

inline std::vector<ThermalChoice> thermal_choices(const io::Config& c) {
  if (!c.has("thermal.n_th")) return {{"", std::nullopt}};
  std::vector<ThermalChoice> out;
  for (double n : c.get_doubles("thermal.n_th")) {
    if (!(n >= 0.0)) throw ConfigError("thermal.n_th must be >= 0");
    out.push_back({"_nth" + num(n), n});
  }
  return out;
}

inline ThermalState make_thermal(const ModeSpectrum& s, const ThermalChoice& t) {
  if (!t.n_th) return ThermalState::zero();
  return ThermalState::from_fundamental_occupation(*t.n_th, s.frequencies().front());
}

/// Collects output files and shared metadata for one run.
class Run {
 public:
  Run(const Options& opt, const io::Config& config) : opt_(opt), config_(config) {}

  void finalize_config() {
    for (const auto& key : config_.unused_keys()) throw ConfigError("unknown or unused config key '" + key + "'");
    hash_ = io::config_hash(config_);
  }

  const std::string& hash() const { return hash_; }

  std::vector<std::pair<std::string, std::string>> metadata(const ModeSpectrum* s, const std::string& tag) const {
    std::vector<std::pair<std::string, std::string>> m{
        {"tool", kVersion}, {"subcommand", opt_.subcommand}, {"config_hash", hash_}};
    if (!tag.empty()) m.emplace_back("variant", tag);
    if (s) {
      m.emplace_back("spectrum", "kind=" + std::string(to_string(s->kind())) + " alpha=" + io::format_number(s->alpha()) +
                                     " beta=" + io::format_number(s->beta()) + " size=" + std::to_string(s->size()));
      m.emplace_back("time_unit", "period_hint = " + io::format_number(s->period_hint()));
    }
    return m;
  }

  io::json sidecar(const ModeSpectrum* s, const std::string& tag) const {
    io::json j{{"tool", kVersion}, {"subcommand", opt_.subcommand}, {"config_hash", hash_}};
    if (!tag.empty()) j["variant"] = tag;
    io::json cfg = io::json::object();
    for (const auto& [k, v] : config_.resolved()) cfg[k] = v;
    j["resolved_config"] = cfg;
    if (s) j["spectrum"] = io::spectrum_meta(*s);
    return j;
  }

  void write_csv(const std::string& name, const io::CsvTable& table) { write_text(name, table.render()); }

  void write_json(const std::string& name, const io::json& j) { write_text(name, j.dump(2) + "\n"); }

  void write_csv_with_sidecar(const std::string& stem, const io::CsvTable& table, const io::json& sidecar) {
    write_csv(stem + ".csv", table);
    write_json(stem + ".json", sidecar);
  }

  void write_manifest(double wall_time) {
    io::json j{{"subcommand", opt_.subcommand},
               {"config_hash", hash_},
               {"outputs", outputs_},
               {"wall_time", wall_time},
               {"versions", kVersion}};
    io::write_json(opt_.out / "manifest.json", j);
  }

  unsigned workers() const { return opt_.workers; }

 private:
  void write_text(const std::string& name, const std::string& content) {
    const auto path = opt_.out / name;
    io::write_file_atomic(path, content);
    outputs_.push_back(path.string());
  }

  const Options& opt_;
  const io::Config& config_;
  std::string hash_;
  std::vector<std::string> outputs_;
};

inline TimeGrid read_grid(const io::Config& c) {
  TimeGrid g;
  g.start = c.get_double("grid.start", 0.0);
  g.end = c.get_double("grid.end");
  const long long points = c.get_int("grid.points");
  if (points < 2) throw ConfigError("grid.points must be >= 2");
  g.points = static_cast<std::size_t>(points);
  return g;
}

// Grid in units of period_hint scaled to the spectrum's time unit.
inline TimeGrid scaled(const TimeGrid& g, const ModeSpectrum& s) {
  return {g.start * s.period_hint(), g.end * s.period_hint(), g.points};
}

inline std::vector<double> in_periods(const std::vector<double>& t, const ModeSpectrum& s) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] / s.period_hint();
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline void cmd_rate(Run& run, const io::Config& c, const std::vector<Variant>& variants, bool fid) {
  const TimeGrid grid = read_grid(c);
  const auto thermals = thermal_choices(c);
  const bool derivatives = c.get_bool("rate.derivatives", true);
  const bool any_thermal = thermals.front().n_th.has_value();
  const double c0 = (fid || any_thermal) ? c.get_double("fid.initial_coherence", 0.5) : 0.5;
  run.finalize_config();
  for (const auto& v : variants) {
    for (const auto& th : thermals) {
      const ThermalState thermal = make_thermal(v.spectrum, th);
      const TimeGrid g = scaled(grid, v.spectrum);
      RateSeries rs = (fid || th.n_th) ? fid_series(v.spectrum, g, thermal, c0, derivatives, run.workers())
                                       : rate_series(v.spectrum, g, thermal, derivatives, run.workers());
      io::CsvTable t;
      const std::string tag = v.tag + th.tag;
      t.metadata = run.metadata(&v.spectrum, tag);
      if (rs.temperature_tag) t.metadata.emplace_back("n_th", io::format_number(*rs.temperature_tag));
      t.header = {"t", "gamma"};
      t.columns = {in_periods(rs.times, v.spectrum), rs.gamma};
      if (rs.d1) {
        // Derivatives with respect to t in units of period_hint.
        const double p = v.spectrum.period_hint();
        std::vector<double> d1 = *rs.d1, d2 = *rs.d2;
        for (auto& x : d1) x *= p;
        for (auto& x : d2) x *= p * p;
        t.header.insert(t.header.end(), {"d1", "d2"});
        t.columns.push_back(d1);
        t.columns.push_back(d2);
      }
      if (rs.coherence) {
        t.header.push_back("coherence");
        t.columns.push_back(*rs.coherence);
      }
      io::json side = run.sidecar(&v.spectrum, tag);
      if (rs.temperature_tag) side["n_th"] = *rs.temperature_tag;
      run.write_csv_with_sidecar((fid ? "fid_" : "rate_") + tag, t, side);
    }
  }
}

inline void cmd_geomphase(Run& run, const io::Config& c, const std::vector<Variant>& variants, bool flag) {
  const TimeGrid grid = read_grid(c);
  const bool include_linear = c.get_bool("geomphase.include_linear", flag) || flag;
  run.finalize_config();
  for (const auto& v : variants) {
    const auto times = scaled(grid, v.spectrum).times();
    std::vector<double> phase(times.size());
    parallel_for(times.size(), run.workers(),
                 [&](std::size_t i) { phase[i] = geometric_phase(v.spectrum, times[i], include_linear); });
    io::CsvTable t;
    t.metadata = run.metadata(&v.spectrum, v.tag);
    t.metadata.emplace_back("include_linear", include_linear ? "true" : "false");
    t.header = {"t", "phase"};
    t.columns = {in_periods(times, v.spectrum), phase};
    io::json side = run.sidecar(&v.spectrum, v.tag);
    side["include_linear"] = include_linear;
    run.write_csv_with_sidecar("geomphase_" + v.tag, t, side);
  }
}

inline void cmd_spectrum(Run& run, const io::Config& c, const std::vector<Variant>& variants) {
  const long long bins = c.get_int("output.density_bins", 50);
  if (bins < 1) throw ConfigError("output.density_bins must be >= 1");
  run.finalize_config();
  for (const auto& v : variants) {
    run.write_json("spectrum_" + v.tag + ".json", io::spectrum_to_json(v.spectrum));
    const auto h = spectral_density(v.spectrum, static_cast<std::size_t>(bins));
    io::CsvTable t;
    t.metadata = run.metadata(&v.spectrum, v.tag);
    t.header = {"nu_low", "nu_high", "mass"};
    t.columns = {std::vector<double>(h.bin_edges.begin(), h.bin_edges.end() - 1),
                 std::vector<double>(h.bin_edges.begin() + 1, h.bin_edges.end()), h.mass};
    run.write_csv_with_sidecar("density_" + v.tag, t, run.sidecar(&v.spectrum, v.tag));
  }
}

inline void cmd_fisher(Run& run, const io::Config& c, const std::vector<Variant>& variants) {
  ComplexRegion unit;
  unit.re_min = c.get_double("fisher.re_min");
  unit.re_max = c.get_double("fisher.re_max");
  unit.im_min = c.get_double("fisher.im_min");
  unit.im_max = c.get_double("fisher.im_max");
  const bool clip = c.get_bool("fisher.clip_to_guard", false);
  const long long nx = c.get_int("fisher.nx", 0);
  const long long ny = c.get_int("fisher.ny", 0);
  const double axis_tol = c.get_double("fisher.axis_tolerance", 1e-6);
  run.finalize_config();
  for (const auto& v : variants) {
    const double p = v.spectrum.period_hint();
    ComplexRegion r{unit.re_min * p, unit.re_max * p, unit.im_min * p, unit.im_max * p};
    if (clip) {
      // Keep the region inside the overflow guard, with a small margin.
      const double g = 0.9 * max_admissible_imag(v.spectrum);
      r.im_min = std::max(r.im_min, -g);
      r.im_max = std::min(r.im_max, g);
    }
    ScanResolution res = (nx > 0 && ny > 0) ? ScanResolution{static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)}
                                            : default_resolution(v.spectrum, r);
    const auto zeros = find_fisher_zeros(v.spectrum, r, res, run.workers());
    const auto crossings = crossing_report(zeros, axis_tol * p);

    io::CsvTable zt;
    zt.metadata = run.metadata(&v.spectrum, v.tag);
    zt.metadata.emplace_back("region", io::format_number(r.re_min / p) + " " + io::format_number(r.re_max / p) + " " +
                                           io::format_number(r.im_min / p) + " " + io::format_number(r.im_max / p));
    zt.metadata.emplace_back("resolution", std::to_string(res.nx) + "x" + std::to_string(res.ny));
    zt.header = {"re_z", "im_z", "residual", "branch", "iterations"};
    zt.columns.assign(5, {});
    for (const auto& z : zeros) {
      zt.columns[0].push_back(z.z.real() / p);
      zt.columns[1].push_back(z.z.imag() / p);
      zt.columns[2].push_back(z.residual);
      zt.columns[3].push_back(z.branch);
      zt.columns[4].push_back(z.iterations);
    }
    io::CsvTable ct;
    ct.metadata = zt.metadata;
    ct.metadata.emplace_back("axis_tolerance", io::format_number(axis_tol));
    ct.header = {"branch", "t_crossing", "im_z"};
    ct.columns.assign(3, {});
    for (const auto& x : crossings) {
      ct.columns[0].push_back(x.branch);
      ct.columns[1].push_back(x.t_crossing / p);
      ct.columns[2].push_back(x.im_z / p);
    }
    io::json side = run.sidecar(&v.spectrum, v.tag);
    side["region"] = {r.re_min / p, r.re_max / p, r.im_min / p, r.im_max / p};
    side["resolution"] = {res.nx, res.ny};
    side["zero_count"] = zeros.size();
    io::json crossing_list = io::json::array();
    for (const auto& x : crossings)
      crossing_list.push_back({{"branch", x.branch}, {"t_crossing", x.t_crossing / p}, {"im_z", x.im_z / p},
                               {"crossing", x.crossing}});
    side["crossings"] = crossing_list;
    run.write_csv_with_sidecar("zeros_" + v.tag, zt, side);
    run.write_csv("crossings_" + v.tag + ".csv", ct);
  }
}

inline io::json fit_record(const ScalingFit& f, const ModeSpectrum& s, const std::string& tag,
                           std::optional<double> n_th) {
  io::json j{{"variant", tag},
             {"t_c", f.t_c / s.period_hint()},
             {"model", std::string(to_string(f.model))},
             {"exponent", f.exponent ? io::json(*f.exponent) : io::json(nullptr)},
             {"prefactor", f.prefactor},
             {"r2_power", f.r2_power()},
             {"r2_log", f.r2_log()},
             {"exponent_stderr", f.power_fit.slope_stderr},
             {"window", {f.tau_window.first, f.tau_window.second}},
             {"n_samples", f.n_samples},
             {"side", std::string(to_string(f.side))},
             {"spectrum_meta", io::spectrum_meta(s)}};
  j["n_th"] = n_th ? io::json(*n_th) : io::json(nullptr);
  return j;
}

inline void scaling_fit_mode(Run& run, const io::Config& c, const std::vector<Variant>& variants) {
  const auto tcs = c.get_doubles("scaling.t_c");
  const std::pair<double, double> window{c.get_double("scaling.window_low"), c.get_double("scaling.window_high")};
  const long long n_samples = c.get_int("scaling.n_samples", static_cast<long long>(default_samples(window)));
  const Side side = side_from_string(c.get_string("scaling.side", std::string("above")));
  const auto thermals = thermal_choices(c);
  run.finalize_config();
  io::json fits = io::json::array();
  for (const auto& v : variants) {
    for (const auto& th : thermals) {
      const std::optional<ThermalState> thermal =
          th.n_th ? std::optional<ThermalState>(make_thermal(v.spectrum, th)) : std::nullopt;
      for (double tc : tcs) {
        const double t_c = tc * v.spectrum.period_hint();
        const ScalingFit f = fit_scaling(v.spectrum, t_c, window, static_cast<std::size_t>(n_samples), thermal, side,
                                         run.workers());
        const std::string tag = v.tag + th.tag + "_tc" + detail::num(tc);
        fits.push_back(fit_record(f, v.spectrum, tag, th.n_th));
        auto [tau, delta] = ::dqpt::detail::sample_distance(v.spectrum, t_c, window,
                                                            static_cast<std::size_t>(n_samples), thermal, side,
                                                            run.workers());
        io::CsvTable t;
        t.metadata = run.metadata(&v.spectrum, tag);
        t.header = {"tau", "delta_gamma"};
        t.columns = {tau, delta};
        run.write_csv("sweep_" + tag + ".csv", t);
      }
    }
  }
  io::json side_j = run.sidecar(nullptr, "");
  side_j["fits"] = fits;
  run.write_json("scaling_fits.json", side_j);
}

inline void scaling_crossover_mode(Run& run, const io::Config& c, const std::vector<Variant>& variants) {
  const double tc = c.get_double("scaling.t_c", 1.0);
  run.finalize_config();
  io::json records = io::json::array();
  for (const auto& v : variants) {
    const Crossover x = short_time_crossover(v.spectrum, tc * v.spectrum.period_hint(), run.workers());
    records.push_back({{"variant", v.tag},
                       {"t_c", tc},
                       {"inner_exponent", x.inner_exponent},
                       {"outer_exponent", x.outer_exponent},
                       {"tau_break", x.tau_break ? io::json(*x.tau_break) : io::json(nullptr)},
                       {"inner_window", {x.inner.window.first, x.inner.window.second}},
                       {"outer_window", {x.outer.window.first, x.outer.window.second}},
                       {"spectrum_meta", io::spectrum_meta(v.spectrum)}});
    const double n = static_cast<double>(v.spectrum.size());
    const std::pair<double, double> full{1e-2 / n, 100.0 / n};
    auto [tau, delta] = ::dqpt::detail::sample_distance(v.spectrum, tc * v.spectrum.period_hint(), full,
                                                        default_samples(full), std::nullopt, Side::Above,
                                                        run.workers());
    io::CsvTable t;
    t.metadata = run.metadata(&v.spectrum, v.tag);
    t.header = {"tau", "delta_gamma"};
    t.columns = {tau, delta};
    run.write_csv("crossover_" + v.tag + ".csv", t);
  }
  io::json side = run.sidecar(nullptr, "");
  side["crossovers"] = records;
  run.write_json("scaling_crossover.json", side);
}

inline void scaling_size_mode(Run& run, const io::Config& c) {
  const auto alphas = c.get_doubles("scaling.alpha");
  std::vector<std::size_t> sizes;
  for (long long n : c.get_ints("scaling.sizes")) {
    if (n < 1) throw ConfigError("scaling.sizes must be >= 1");
    sizes.push_back(static_cast<std::size_t>(n));
  }
  const double tau = c.get_double("scaling.tau");
  const long long index = c.get_int("scaling.t_c_index", 1);
  run.finalize_config();
  for (double a : alphas) {
    const auto points = size_scaling(a, sizes, tau, static_cast<int>(index), run.workers());
    io::CsvTable t;
    t.metadata = run.metadata(nullptr, "alpha" + num(a));
    t.metadata.emplace_back("alpha", io::format_number(a));
    t.header = {"size", "tau", "gamma"};
    t.columns.assign(3, {});
    for (const auto& p : points) {
      t.columns[0].push_back(static_cast<double>(p.size));
      t.columns[1].push_back(p.tau);
      t.columns[2].push_back(p.gamma);
    }
    io::json side = run.sidecar(nullptr, "alpha" + num(a));
    side["alpha"] = a;
    run.write_csv_with_sidecar("size_alpha" + num(a), t, side);
  }
}

// Synthetic A tau^xi (1 + noise) series, for exercising the fitter.
inline void scaling_synthetic_mode(Run& run, const io::Config& c, std::optional<std::uint64_t> seed) {
  const double exponent = c.get_double("scaling.exponent");
  const double prefactor = c.get_double("scaling.prefactor", 1.0);
  const double noise = c.get_double("scaling.noise", 0.0);
  const std::pair<double, double> window{c.get_double("scaling.window_low"), c.get_double("scaling.window_high")};
  const long long n = c.get_int("scaling.n_samples", static_cast<long long>(default_samples(window)));
  const std::uint64_t s = seed ? *seed : static_cast<std::uint64_t>(c.get_int("scaling.seed", 0));
  c.record("scaling.seed_used", std::to_string(s));
  run.finalize_config();
  if (!(prefactor > 0.0) || !(noise >= 0.0 && noise < 1.0))
    throw DomainError("synthetic scaling: prefactor must be > 0 and noise in [0, 1)");
  if (n < 10) throw DomainError("synthetic scaling: n_samples must be >= 10");
  std::mt19937_64 rng(s);
  const auto tau = log_space(window.first, window.second, static_cast<std::size_t>(n));
  std::vector<double> delta(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) {
    // Uniform in [-1, 1) from the top 53 bits; portable across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    delta[i] = prefactor * std::pow(tau[i], exponent) * (1.0 + noise * u);
  }
  const ScalingFit f = fit_scaling_samples(tau, delta);
  io::CsvTable t;
  t.metadata = run.metadata(nullptr, "synthetic");
  t.metadata.emplace_back("seed", std::to_string(s));
  t.header = {"tau", "delta_gamma"};
  t.columns = {tau, delta};
  io::json side = run.sidecar(nullptr, "synthetic");
  side["fit"] = {{"model", std::string(to_string(f.model))},
                 {"exponent", f.exponent ? io::json(*f.exponent) : io::json(nullptr)},
                 {"prefactor", f.prefactor},
                 {"r2_power", f.r2_power()},
                 {"r2_log", f.r2_log()},
                 {"window", {window.first, window.second}},
                 {"n_samples", n}};
  run.write_csv_with_sidecar("synthetic", t, side);
}

inline void cmd_scaling(Run& run, const io::Config& c, const std::filesystem::path& dir,
                        std::optional<std::uint64_t> seed) {
  const std::string mode = c.get_string("scaling.mode", std::string("fit"));
  if (mode == "fit") {
    scaling_fit_mode(run, c, build_variants(c, dir));
  } else if (mode == "crossover") {
    scaling_crossover_mode(run, c, build_variants(c, dir));
  } else if (mode == "size") {
    scaling_size_mode(run, c);
  } else if (mode == "synthetic") {
    scaling_synthetic_mode(run, c, seed);
  } else {
    throw ConfigError("scaling.mode must be fit, crossover, size or synthetic; got '" + mode + "'");
  }
}

inline void cmd_membrane(Run& run, const io::Config& c) {
  const MembraneParams params = io::membrane_params_from_config(c);
  const long long n = c.get_int("membrane.n_modes", 10);
  const double occupation = c.get_double("membrane.occupation", 1.0);
  if (n < 1) throw ConfigError("membrane.n_modes must be >= 1");
  run.finalize_config();
  const MembraneModes m = mode_table(params, static_cast<std::size_t>(n));
  io::CsvTable t;
  t.metadata = run.metadata(nullptr, "");
  t.header = {"n", "zeta", "omega_rad_s", "mass_kg", "xzpf_m", "lambda_rad_s"};
  t.columns.assign(6, {});
  io::json ratios = io::json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    t.columns[0].push_back(static_cast<double>(i + 1));
    t.columns[1].push_back(m.zeta[i]);
    t.columns[2].push_back(m.omega[i]);
    t.columns[3].push_back(m.mass[i]);
    t.columns[4].push_back(m.xzpf[i]);
    t.columns[5].push_back(m.coupling[i]);
    if (i < 10) ratios.push_back(anharmonicity_ratio(params, i + 1, occupation));
  }
  io::json side = run.sidecar(nullptr, "");
  side["params"] = io::membrane_params_to_json(params);
  side["derived"] = {{"wave_speed_m_s", params.wave_speed()},
                     {"fundamental_hz", m.omega.front() / (2.0 * std::numbers::pi)},
                     {"mean_gap_rad_s", m.delta},
                     {"collective_period_s", membrane_collective_period(m.delta)},
                     {"occupation", occupation},
                     {"anharmonicity_ratio", ratios}};
  run.write_csv_with_sidecar("membrane_modes", t, side);
}

inline int dispatch(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  const io::Config config = io::Config::load(opt.config);
  const auto dir = opt.config.has_parent_path() ? opt.config.parent_path() : std::filesystem::path(".");
  Run run(opt, config);
  std::error_code ec;
  std::filesystem::create_directories(opt.out, ec);
  if (ec || !std::filesystem::is_directory(opt.out))
    throw IoError("cannot create output directory '" + opt.out.string() + "'");

  const std::string& s = opt.subcommand;
  if (s == "rate" || s == "fid") {
    const auto variants = build_variants(config, dir);
    cmd_rate(run, config, variants, s == "fid");
  } else if (s == "geomphase") {
    cmd_geomphase(run, config, build_variants(config, dir), opt.include_linear);
  } else if (s == "spectrum") {
    cmd_spectrum(run, config, build_variants(config, dir));
  } else if (s == "fisher") {
    cmd_fisher(run, config, build_variants(config, dir));
  } else if (s == "scaling") {
    cmd_scaling(run, config, dir, opt.seed);
  } else if (s == "membrane") {
    cmd_membrane(run, config);
  } else {
    throw ConfigError("unknown subcommand '" + s + "'");
  }
  run.write_manifest(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return kOk;
}

}  // namespace detail

/// Parses arguments and runs one subcommand; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Return-rate dynamics, Fisher zeros and critical scaling of quenched boson baths"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options opt;
  std::uint64_t seed = 0;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"rate", "return rate gamma(t) with derivatives"},
      {"fid", "free-induction decay of the qubit coherence"},
      {"geomphase", "total geometric phase"},
      {"fisher", "Fisher zeros in complex time and axis crossings"},
      {"scaling", "critical exponents, crossover and size scaling"},
      {"membrane", "membrane mode table"},
      {"spectrum", "mode spectrum JSON and spectral density"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "config file (key = value with [sections])")->required();
    sub->add_option("--out", opt.out, "output directory")->default_val(".");
    sub->add_option("--workers", opt.workers, "worker threads (0 = hardware)")->default_val(1);
    sub->add_option("--seed", seed, "seed for synthetic data");
    if (name == "geomphase") sub->add_flag("--include-linear", opt.include_linear, "keep the linear term");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    app.exit(e);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }
  for (auto* sub : app.get_subcommands()) {
    opt.subcommand = sub->get_name();
    if (sub->count("--seed")) opt.seed = seed;
  }
  try {
    return detail::dispatch(opt);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  }
}

}  // namespace dqpt::cli
