#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dqpt/errors.hpp"
#include "dqpt/numerics.hpp"
#include "dqpt/parallel.hpp"
#include "dqpt/spectrum.hpp"

namespace dqpt {

using complex = std::complex<double>;

// |Im z| * max(omega) above this overflows cosh in double precision.
inline constexpr double kComplexExponentLimit = 700.0;

inline double max_admissible_imag(const ModeSpectrum& spectrum) {
  return kComplexExponentLimit / spectrum.max_frequency();
}

inline void check_overflow_guard(const ModeSpectrum& spectrum, double imag) {
  if (!std::isfinite(imag) || std::abs(imag) * spectrum.max_frequency() > kComplexExponentLimit) {
    std::ostringstream os;
    os.precision(17);
    os << "complex time outside overflow guard: |Im z| = " << std::abs(imag)
       << " exceeds the maximum admissible " << max_admissible_imag(spectrum);
    throw RangeError(os.str());
  }
}

/// gamma(t) = sum_k (lambda_k/omega_k)^2 (1 - cos omega_k t), with 1 - cos x
/// evaluated as 2 sin^2(x/2).
inline double return_rate(const ModeSpectrum& spectrum, double t) {
  const auto& w = spectrum.frequencies();
  const auto& c = spectrum.weights();
  NeumaierSum acc;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double s = std::sin(0.5 * w[k] * t);
    acc.add(2.0 * c[k] * s * s);
  }
  return acc.value();
}

/// gamma on complex time. Uses 1 - cos z = 2 sin^2(z/2) termwise so that the
/// real axis reproduces return_rate bit for bit and conjugation is exact.
inline complex return_rate_complex(const ModeSpectrum& spectrum, complex z) {
  if (!std::isfinite(z.real())) throw DomainError("return_rate_complex: non-finite time");
  check_overflow_guard(spectrum, z.imag());
  const auto& w = spectrum.frequencies();
  const auto& c = spectrum.weights();
  NeumaierSum re, im;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double a = 0.5 * w[k] * z.real();
    const double b = 0.5 * w[k] * z.imag();
    const double sr = std::sin(a) * std::cosh(b);
    const double si = std::cos(a) * std::sinh(b);
    re.add(2.0 * c[k] * (sr * sr - si * si));
    im.add(4.0 * c[k] * sr * si);
  }
  return {re.value(), im.value()};
}

/// gamma'(z) = sum_k (lambda_k/omega_k)^2 omega_k sin(omega_k z).
inline complex return_rate_complex_derivative(const ModeSpectrum& spectrum, complex z) {
  check_overflow_guard(spectrum, z.imag());
  const auto& w = spectrum.frequencies();
  const auto& c = spectrum.weights();
  NeumaierSum re, im;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double x = w[k] * z.real();
    const double y = w[k] * z.imag();
    const double f = c[k] * w[k];
    re.add(f * std::sin(x) * std::cosh(y));
    im.add(f * std::cos(x) * std::sinh(y));
  }
  return {re.value(), im.value()};
}

/// d^order gamma / dt^order on the real axis, order in 0..3.
inline double return_rate_derivative(const ModeSpectrum& spectrum, double t, int order) {
  if (order == 0) return return_rate(spectrum, t);
  if (order < 0 || order > 3) throw DomainError("return_rate_derivative: order must be in 0..3");
  const auto& w = spectrum.frequencies();
  const auto& c = spectrum.weights();
  NeumaierSum acc;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double x = w[k] * t;
    switch (order) {
      case 1: acc.add(c[k] * w[k] * std::sin(x)); break;
      case 2: acc.add(c[k] * w[k] * w[k] * std::cos(x)); break;
      default: acc.add(-c[k] * w[k] * w[k] * w[k] * std::sin(x)); break;
    }
  }
  return acc.value();
}

/// |G(t)| = exp(-gamma(t)).
inline double loschmidt_modulus(const ModeSpectrum& spectrum, double t) { return std::exp(-return_rate(spectrum, t)); }

/// Total geometric phase sum_k (lambda_k/omega_k)^2 (omega_k t - sin omega_k t),
/// or only its oscillating part when the linear term is discarded.
inline double geometric_phase(const ModeSpectrum& spectrum, double t, bool include_linear) {
  const auto& w = spectrum.frequencies();
  const auto& c = spectrum.weights();
  NeumaierSum acc;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double x = w[k] * t;
    acc.add(include_linear ? c[k] * (x - std::sin(x)) : -c[k] * std::sin(x));
  }
  return acc.value();
}

/// Bose occupations of a thermal bath, n(omega) = 1 / (exp(omega / T) - 1)
/// with T expressed as an angular frequency (k_B T / hbar).
class ThermalState {
 public:
  static ThermalState zero() { return ThermalState(0.0); }

  /// Physical temperature in kelvin; frequencies must then be in rad/s.
  static ThermalState from_temperature(double kelvin) {
    if (!(kelvin >= 0.0) || !std::isfinite(kelvin)) throw DomainError("thermal: temperature must be >= 0");
    return ThermalState(kelvin * constants::k_boltzmann / constants::hbar);
  }

  /// Temperature fixed by the occupation n_th of a reference mode at omega_ref.
  static ThermalState from_fundamental_occupation(double n_th, double omega_ref) {
    if (!(n_th >= 0.0) || !std::isfinite(n_th)) throw DomainError("thermal: occupation must be >= 0");
    if (!(omega_ref > 0.0)) throw DomainError("thermal: reference frequency must be > 0");
    if (n_th == 0.0) return zero();
    return ThermalState(omega_ref / std::log1p(1.0 / n_th));
  }

  double angular_temperature() const noexcept { return angular_temperature_; }
  bool is_zero() const noexcept { return angular_temperature_ == 0.0; }

  double occupation(double omega) const {
    if (angular_temperature_ == 0.0) return 0.0;
    return 1.0 / std::expm1(omega / angular_temperature_);
  }

  // coth(hbar omega / 2 k_B T) = 2 n(omega) + 1
  double coth_factor(double omega) const { return 2.0 * occupation(omega) + 1.0; }

 private:
  explicit ThermalState(double angular_temperature) : angular_temperature_(angular_temperature) {}
  double angular_temperature_;
};

/// Gamma(t) = sum_k (Lambda_k/Omega_k)^2 coth(hbar Omega_k / 2 k_B T) (1 - cos Omega_k t).
inline double decoherence_rate(const ModeSpectrum& spectrum, double t, const ThermalState& thermal) {
  const auto& w = spectrum.frequencies();
  const auto& c = spectrum.weights();
  NeumaierSum acc;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double s = std::sin(0.5 * w[k] * t);
    acc.add(2.0 * c[k] * thermal.coth_factor(w[k]) * s * s);
  }
  return acc.value();
}

/// Spectrum with weights multiplied by coth factors, so that its return rate
/// equals the thermal decoherence rate of the original.
inline ModeSpectrum thermally_weighted(const ModeSpectrum& spectrum, const ThermalState& thermal) {
  if (thermal.is_zero()) return spectrum;
  std::vector<double> g(spectrum.size());
  for (std::size_t k = 0; k < spectrum.size(); ++k)
    g[k] = spectrum.couplings()[k] * std::sqrt(thermal.coth_factor(spectrum.frequencies()[k]));
  return ModeSpectrum(spectrum.kind(), spectrum.alpha(), spectrum.beta(), spectrum.period_hint(),
                      spectrum.frequencies(), std::move(g));
}

struct TimeGrid {
  double start = 0.0;
  double end = 1.0;
  std::size_t points = 2;

  void validate() const {
    if (points < 2) throw DomainError("time grid needs at least two points");
    if (!std::isfinite(start) || !std::isfinite(end) || !(end > start))
      throw DomainError("time grid must satisfy start < end");
  }

  double step() const { return (end - start) / static_cast<double>(points - 1); }

  std::vector<double> times() const {
    validate();
    std::vector<double> t(points);
    for (std::size_t i = 0; i < points; ++i)
      t[i] = start + (end - start) * static_cast<double>(i) / static_cast<double>(points - 1);
    t.back() = end;
    return t;
  }
};

struct RateSeries {
  std::vector<double> times;
  std::vector<double> gamma;
  std::optional<std::vector<double>> d1;
  std::optional<std::vector<double>> d2;
  std::optional<std::vector<double>> coherence;
  std::optional<double> temperature_tag;  // occupation of the lowest mode
};

/// gamma (or Gamma at finite temperature) on a uniform grid, optionally with
/// finite-difference derivatives. Each time point is an independent task.
inline RateSeries rate_series(const ModeSpectrum& spectrum, const TimeGrid& grid,
                              const ThermalState& thermal = ThermalState::zero(), bool with_derivatives = false,
                              unsigned workers = 1) {
  RateSeries out;
  out.times = grid.times();
  out.gamma.resize(out.times.size());
  parallel_for(out.times.size(), workers,
               [&](std::size_t i) { out.gamma[i] = decoherence_rate(spectrum, out.times[i], thermal); });
  if (!thermal.is_zero()) out.temperature_tag = thermal.occupation(spectrum.frequencies().front());
  if (with_derivatives) {
    out.d1 = central_derivative(out.times, out.gamma, 1).values;
    out.d2 = central_derivative(out.times, out.gamma, 2).values;
  }
  return out;
}

/// Free-induction decay of the qubit coherence, c(t) = c(0) exp(-Gamma(t)).
/// Populations are constant under pure dephasing and are not tracked.
inline RateSeries fid_series(const ModeSpectrum& spectrum, const TimeGrid& grid, const ThermalState& thermal,
                             double initial_coherence, bool with_derivatives = false, unsigned workers = 1) {
  if (!(initial_coherence >= 0.0 && initial_coherence <= 0.5))
    throw DomainError("fid_series: initial coherence must lie in [0, 0.5]");
  RateSeries out = rate_series(spectrum, grid, thermal, with_derivatives, workers);
  std::vector<double> coh(out.gamma.size());
  for (std::size_t i = 0; i < coh.size(); ++i) coh[i] = initial_coherence * std::exp(-out.gamma[i]);
  out.coherence = std::move(coh);
  return out;
}

}  // namespace dqpt
