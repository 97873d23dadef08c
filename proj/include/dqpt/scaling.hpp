#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string_view>
#include <utility>
#include <vector>

#include "dqpt/dynamics.hpp"
#include "dqpt/errors.hpp"
#include "dqpt/numerics.hpp"
#include "dqpt/parallel.hpp"
#include "dqpt/spectrum.hpp"

namespace dqpt {

enum class ScalingModel { PowerLaw, Logarithmic };
enum class Side { Above, Below, Both };

inline std::string_view to_string(ScalingModel m) { return m == ScalingModel::PowerLaw ? "power_law" : "logarithmic"; }

inline std::string_view to_string(Side s) {
  switch (s) {
    case Side::Above: return "above";
    case Side::Below: return "below";
    case Side::Both: return "both";
  }
  return "above";
}

inline Side side_from_string(std::string_view s) {
  if (s == "above") return Side::Above;
  if (s == "below") return Side::Below;
  if (s == "both") return Side::Both;
  throw DomainError("unknown side '" + std::string(s) + "' (expected above, below or both)");
}

/// Fit of the distance |gamma(t) - gamma(t_c)| against tau = |t - t_c| / t_c.
///
/// Both models are fitted on the same samples: PowerLaw regresses
/// log(delta) on log(tau), Logarithmic regresses delta on log(tau). For a
/// power law the prefactor is A in A tau^xi; for the logarithm it is the slope.
struct ScalingFit {
  double t_c = 0.0;
  ScalingModel model = ScalingModel::PowerLaw;
  std::optional<double> exponent;
  double prefactor = 0.0;
  FitResult fit;          // selected model
  FitResult power_fit;
  FitResult log_fit;
  std::pair<double, double> tau_window{0.0, 0.0};
  std::size_t n_samples = 0;
  Side side = Side::Above;

  double r2_power() const { return power_fit.r_squared; }
  double r2_log() const { return log_fit.r_squared; }
};

/// Log-spaced sampling at 50 points per decade.
inline std::size_t default_samples(std::pair<double, double> window) {
  const double decades = std::log10(window.second / window.first);
  return std::max<std::size_t>(10, static_cast<std::size_t>(std::ceil(50.0 * decades)) + 1);
}

/// Comb and dispersion spectra: n tau0. Membranes: multiples of tau_bar / 2,
/// i.e. both half-integer and integer multiples of the collective period.
inline std::vector<double> candidate_critical_times(const ModeSpectrum& spectrum, int n_periods) {
  if (n_periods < 1) throw DomainError("candidate_critical_times: n_periods must be >= 1");
  std::vector<double> out;
  const double p = spectrum.period_hint();
  if (spectrum.kind() == SpectrumKind::Membrane) {
    for (int m = 1; m <= 2 * n_periods; ++m) out.push_back(0.5 * p * m);
  } else {
    for (int n = 1; n <= n_periods; ++n) out.push_back(p * n);
  }
  return out;
}

/// Fits both models to given (tau, delta) samples; delta must be > 0.
inline ScalingFit fit_scaling_samples(std::span<const double> tau, std::span<const double> delta, double t_c = 0.0,
                                      Side side = Side::Above) {
  if (tau.size() != delta.size()) throw DomainError("fit_scaling: tau/delta length mismatch");
  if (tau.size() < 3) throw DomainError("fit_scaling: need at least three samples");
  std::vector<double> lt(tau.size()), ld(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(tau[i] > 0.0)) throw DomainError("fit_scaling: tau must be > 0");
    if (!(delta[i] > 0.0) || !std::isfinite(delta[i])) {
      std::ostringstream os;
      os.precision(17);
      os << "fit_scaling: window error, delta is not positive at tau = " << tau[i];
      throw DomainError(os.str());
    }
    lt[i] = std::log(tau[i]);
    ld[i] = std::log(delta[i]);
  }
  ScalingFit f;
  f.t_c = t_c;
  f.side = side;
  f.power_fit = linear_fit(lt, ld);
  f.log_fit = linear_fit(lt, std::vector<double>(delta.begin(), delta.end()));
  auto [lo, hi] = std::minmax_element(tau.begin(), tau.end());
  f.tau_window = {*lo, *hi};
  f.n_samples = tau.size();
  if (f.power_fit.r_squared >= f.log_fit.r_squared) {
    f.model = ScalingModel::PowerLaw;
    f.exponent = f.power_fit.slope;
    f.prefactor = std::exp(f.power_fit.intercept);
    f.fit = f.power_fit;
  } else {
    f.model = ScalingModel::Logarithmic;
    f.prefactor = f.log_fit.slope;
    f.fit = f.log_fit;
  }
  return f;
}

namespace detail {

inline double rate_at(const ModeSpectrum& spectrum, double t, const std::optional<ThermalState>& thermal) {
  return thermal ? decoherence_rate(spectrum, t, *thermal) : return_rate(spectrum, t);
}

// Samples |rate(t) - rate(t_c)| on a log-spaced tau grid for the chosen side(s).
inline std::pair<std::vector<double>, std::vector<double>> sample_distance(
    const ModeSpectrum& spectrum, double t_c, std::pair<double, double> window, std::size_t n_samples,
    const std::optional<ThermalState>& thermal, Side side, unsigned workers) {
  const auto grid = log_space(window.first, window.second, n_samples);
  std::vector<double> tau, t;
  if (side != Side::Below)
    for (double x : grid) tau.push_back(x), t.push_back(t_c * (1.0 + x));
  if (side != Side::Above)
    for (double x : grid) tau.push_back(x), t.push_back(t_c * (1.0 - x));
  const double base = rate_at(spectrum, t_c, thermal);
  std::vector<double> delta(t.size());
  parallel_for(t.size(), workers, [&](std::size_t i) { delta[i] = std::abs(rate_at(spectrum, t[i], thermal) - base); });
  return {std::move(tau), std::move(delta)};
}

}  // namespace detail

/// Lower window edge allowed for a spectrum of N modes: tau >~ 1/N.
inline double finite_size_bound(const ModeSpectrum& spectrum) {
  return std::max(1.0 / static_cast<double>(spectrum.size()), 1e-10);
}

inline ScalingFit fit_scaling(const ModeSpectrum& spectrum, double t_c, std::pair<double, double> tau_window,
                              std::size_t n_samples, const std::optional<ThermalState>& thermal = std::nullopt,
                              Side side = Side::Above, unsigned workers = 1) {
  if (!(t_c > 0.0) || !std::isfinite(t_c)) throw DomainError("fit_scaling: t_c must be > 0");
  if (n_samples < 10) throw DomainError("fit_scaling: n_samples must be >= 10");
  const double bound = finite_size_bound(spectrum);
  if (!(tau_window.first >= bound)) {
    std::ostringstream os;
    os << "fit_scaling: window low " << tau_window.first << " is below the finite-size bound " << bound;
    throw DomainError(os.str());
  }
  if (!(tau_window.second < 0.5) || !(tau_window.second > tau_window.first))
    throw DomainError("fit_scaling: window must satisfy low < high < 0.5");
  auto [tau, delta] = detail::sample_distance(spectrum, t_c, tau_window, n_samples, thermal, side, workers);
  ScalingFit f = fit_scaling_samples(tau, delta, t_c, side);
  f.tau_window = tau_window;
  f.n_samples = n_samples;
  return f;
}

struct Crossover {
  std::optional<double> tau_break;  // empty when the two fitted lines are parallel
  double inner_exponent = 0.0;
  double outer_exponent = 0.0;
  FitResult inner;
  FitResult outer;
};

namespace detail {

inline Crossover crossover_from(std::span<const double> inner_tau, std::span<const double> inner_delta,
                                std::span<const double> outer_tau, std::span<const double> outer_delta) {
  const ScalingFit a = fit_scaling_samples(inner_tau, inner_delta);
  const ScalingFit b = fit_scaling_samples(outer_tau, outer_delta);
  Crossover c;
  c.inner = a.power_fit;
  c.outer = b.power_fit;
  c.inner_exponent = a.power_fit.slope;
  c.outer_exponent = b.power_fit.slope;
  const double ds = c.inner_exponent - c.outer_exponent;
  if (std::abs(ds) > 1e-9) c.tau_break = std::exp((b.power_fit.intercept - a.power_fit.intercept) / ds);
  return c;
}

inline void check_crossover_size(double n) {
  if (!(100.0 / n < 0.5) || !(1e-2 / n >= 1e-10))
    throw DomainError("short_time_crossover: mode count too small (or too large) for the inner and outer windows");
}

}  // namespace detail

/// Power laws on the inner window [1e-2/N, 1e-1/N] and outer window
/// [10/N, 100/N]; tau_break is where the two fitted lines intersect.
inline Crossover short_time_crossover(const ModeSpectrum& spectrum, double t_c, unsigned workers = 1) {
  if (spectrum.kind() != SpectrumKind::Comb) throw DomainError("short_time_crossover: comb spectrum required");
  const double n = static_cast<double>(spectrum.size());
  detail::check_crossover_size(n);
  const std::pair<double, double> inner{1e-2 / n, 1e-1 / n};
  const std::pair<double, double> outer{10.0 / n, 100.0 / n};
  auto [ti, di] = detail::sample_distance(spectrum, t_c, inner, default_samples(inner), std::nullopt, Side::Above, workers);
  auto [to, dout] = detail::sample_distance(spectrum, t_c, outer, default_samples(outer), std::nullopt, Side::Above, workers);
  return detail::crossover_from(ti, di, to, dout);
}

/// Same analysis on an arbitrary distance function delta(tau) with size n.
template <class DistanceFn>
Crossover short_time_crossover_series(DistanceFn&& delta, double n) {
  detail::check_crossover_size(n);
  auto sample = [&](std::pair<double, double> w) {
    auto tau = log_space(w.first, w.second, default_samples(w));
    std::vector<double> d(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) d[i] = delta(tau[i]);
    return std::pair{tau, d};
  };
  auto [ti, di] = sample({1e-2 / n, 1e-1 / n});
  auto [to, dout] = sample({10.0 / n, 100.0 / n});
  return detail::crossover_from(ti, di, to, dout);
}

struct SizePoint {
  std::size_t size = 0;
  double tau = 0.0;
  double gamma = 0.0;
};

/// gamma(t_c (1 + tau)) on unit-period combs of each size, t_c = t_c_index tau0.
inline std::vector<SizePoint> size_scaling(double alpha, const std::vector<std::size_t>& sizes, double tau,
                                           int t_c_index = 1, unsigned workers = 1) {
  if (sizes.empty()) throw DomainError("size_scaling: at least one size is required");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw DomainError("size_scaling: sizes must be >= 1");
    if (i > 0 && !(sizes[i] > sizes[i - 1])) throw DomainError("size_scaling: sizes must be increasing");
  }
  if (t_c_index < 1) throw DomainError("size_scaling: t_c_index must be >= 1");
  std::vector<SizePoint> out(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const ModeSpectrum comb = build_comb_spectrum(sizes[i], 1.0, alpha);
    const double t = static_cast<double>(t_c_index) * (1.0 + tau);
    // The per-size sum is split into a fixed number of chunks so that the
    // result does not depend on the worker count.
    const auto& w = comb.frequencies();
    const auto& c = comb.weights();
    const std::size_t chunks = std::min<std::size_t>(64, w.size());
    std::vector<double> partial(chunks);
    parallel_for(chunks, workers, [&](std::size_t j) {
      const std::size_t lo = w.size() * j / chunks;
      const std::size_t hi = w.size() * (j + 1) / chunks;
      NeumaierSum acc;
      for (std::size_t k = lo; k < hi; ++k) {
        const double s = std::sin(0.5 * w[k] * t);
        acc.add(2.0 * c[k] * s * s);
      }
      partial[j] = acc.value();
    });
    out[i] = {sizes[i], tau, compensated_sum(partial)};
  }
  return out;
}

struct JumpDiagnostic {
  double intercept = 0.0;         // extrapolated jump at delta -> 0
  double intercept_stderr = 0.0;
  double ratio = 0.0;             // intercept / jump at the largest delta
  bool nonvanishing = false;
};

struct TransitionOrder {
  std::optional<int> order;  // empty: analytic, no transition detected
  std::array<JumpDiagnostic, 4> diagnostics{};
};

namespace detail {

// Jump of the order-m derivative across t_c, combining the antisymmetric
// (step) and symmetric (cusp) parts, at 11 log-spaced offsets in
// [10/N, 100/N] periods, extrapolated linearly to zero offset.
inline JumpDiagnostic derivative_jump(const ModeSpectrum& spectrum, double t_c, int m) {
  const double n = static_cast<double>(spectrum.size());
  const double p = spectrum.period_hint();
  const auto deltas = log_space(10.0 / n * p, 100.0 / n * p, 11);
  const double centre = return_rate_derivative(spectrum, t_c, m);
  std::vector<double> jump(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double a = return_rate_derivative(spectrum, t_c + deltas[i], m);
    const double b = return_rate_derivative(spectrum, t_c - deltas[i], m);
    jump[i] = std::max(std::abs(a - b), std::abs(a + b - 2.0 * centre));
  }
  const FitResult f = linear_fit(deltas, jump);
  JumpDiagnostic d;
  d.intercept = f.intercept;
  d.intercept_stderr = f.intercept_stderr;
  d.ratio = jump.back() > 0.0 ? f.intercept / jump.back() : 0.0;
  d.nonvanishing = d.ratio > 0.5 && f.intercept > 3.0 * f.intercept_stderr;
  return d;
}

}  // namespace detail

/// Lowest derivative order m in 0..3 whose jump across t_c extrapolates to a
/// nonzero constant.
inline TransitionOrder transition_order(const ModeSpectrum& spectrum, double t_c) {
  if (!std::isfinite(t_c)) throw DomainError("transition_order: t_c must be finite");
  if (spectrum.size() < 200) throw DomainError("transition_order: need at least 200 modes for the offset sweep");
  TransitionOrder out;
  for (int m = 0; m <= 3; ++m) {
    out.diagnostics[static_cast<std::size_t>(m)] = detail::derivative_jump(spectrum, t_c, m);
    if (!out.order && out.diagnostics[static_cast<std::size_t>(m)].nonvanishing) out.order = m;
  }
  return out;
}

/// Magnitude of the extrapolated jump of d gamma / dt across t_c.
inline double kink_jump_metric(const ModeSpectrum& spectrum, double t_c) {
  if (spectrum.size() < 200) throw DomainError("kink_jump_metric: need at least 200 modes for the offset sweep");
  const double n = static_cast<double>(spectrum.size());
  const double p = spectrum.period_hint();
  const auto deltas = log_space(10.0 / n * p, 100.0 / n * p, 11);
  std::vector<double> jump(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i)
    jump[i] = std::abs(return_rate_derivative(spectrum, t_c + deltas[i], 1) -
                       return_rate_derivative(spectrum, t_c - deltas[i], 1));
  return std::abs(linear_fit(deltas, jump).intercept);
}

}  // namespace dqpt
