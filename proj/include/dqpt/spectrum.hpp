#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dqpt/errors.hpp"
#include "dqpt/membrane.hpp"
#include "dqpt/numerics.hpp"

namespace dqpt {

enum class SpectrumKind { Comb, PowerLawDispersion, Membrane };

inline std::string_view to_string(SpectrumKind kind) {
  switch (kind) {
    case SpectrumKind::Comb: return "comb";
    case SpectrumKind::PowerLawDispersion: return "powerlaw";
    case SpectrumKind::Membrane: return "membrane";
  }
  return "comb";
}

inline SpectrumKind spectrum_kind_from_string(std::string_view name) {
  if (name == "comb") return SpectrumKind::Comb;
  if (name == "powerlaw") return SpectrumKind::PowerLawDispersion;
  if (name == "membrane") return SpectrumKind::Membrane;
  throw DomainError("unknown spectrum kind '" + std::string(name) + "'");
}

/// Immutable bath spectrum: ascending mode frequencies with their couplings.
///
/// Frequencies are in units of 1/period for dimensionless runs and rad/s for
/// physical ones; couplings carry the same units (hbar = 1). The weights
/// (lambda_k/omega_k)^2 that enter every time-domain quantity are cached.
class ModeSpectrum {
 public:
  ModeSpectrum(SpectrumKind kind, double alpha, double beta, double period_hint, std::vector<double> frequencies,
               std::vector<double> couplings)
      : kind_(kind),
        alpha_(alpha),
        beta_(beta),
        period_hint_(period_hint),
        frequencies_(std::move(frequencies)),
        couplings_(std::move(couplings)) {
    if (frequencies_.empty()) throw DomainError("spectrum: at least one mode is required");
    if (frequencies_.size() != couplings_.size()) throw DomainError("spectrum: frequency/coupling length mismatch");
    if (!(period_hint_ > 0.0) || !std::isfinite(period_hint_)) throw DomainError("spectrum: period_hint must be > 0");
    for (std::size_t i = 0; i < frequencies_.size(); ++i) {
      const double w = frequencies_[i];
      if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("spectrum: frequencies must be finite and > 0");
      if (i > 0 && !(w > frequencies_[i - 1])) throw DomainError("spectrum: frequencies must be strictly increasing");
      const double g = couplings_[i];
      if (!(g >= 0.0) || !std::isfinite(g)) throw DomainError("spectrum: couplings must be finite and >= 0");
    }
    weights_.resize(frequencies_.size());
    NeumaierSum total;
    for (std::size_t i = 0; i < frequencies_.size(); ++i) {
      const double r = couplings_[i] / frequencies_[i];
      weights_[i] = r * r;
      total.add(weights_[i]);
    }
    total_weight_ = total.value();
  }

  SpectrumKind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double period_hint() const noexcept { return period_hint_; }
  std::size_t size() const noexcept { return frequencies_.size(); }
  const std::vector<double>& frequencies() const noexcept { return frequencies_; }
  const std::vector<double>& couplings() const noexcept { return couplings_; }
  // (lambda_k / omega_k)^2
  const std::vector<double>& weights() const noexcept { return weights_; }
  // sum_k (lambda_k / omega_k)^2, the scale of every relative residual
  double total_weight() const noexcept { return total_weight_; }
  double max_frequency() const noexcept { return frequencies_.back(); }

 private:
  SpectrumKind kind_;
  double alpha_;
  double beta_;
  double period_hint_;
  std::vector<double> frequencies_;
  std::vector<double> couplings_;
  std::vector<double> weights_;
  double total_weight_ = 0.0;
};

namespace detail {
inline double power_law_coupling(double omega, double alpha, double scale) {
  return scale * std::pow(omega, alpha / 2.0);
}
}  // namespace detail

/// Linear-dispersion comb omega_k = 2 pi k / tau0, k = 1..n_modes, lambda_k = scale omega_k^{alpha/2}.
inline ModeSpectrum build_comb_spectrum(std::size_t n_modes, double tau0, double alpha, double coupling_scale = 1.0) {
  if (n_modes == 0) throw DomainError("build_comb_spectrum: n_modes must be >= 1");
  if (!(tau0 > 0.0)) throw DomainError("build_comb_spectrum: tau0 must be > 0");
  if (!(coupling_scale > 0.0)) throw DomainError("build_comb_spectrum: coupling_scale must be > 0");
  if (!std::isfinite(alpha)) throw DomainError("build_comb_spectrum: alpha must be finite");
  const double fundamental = 2.0 * std::numbers::pi / tau0;
  std::vector<double> w(n_modes), g(n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) {
    w[k] = static_cast<double>(k + 1) * fundamental;
    g[k] = detail::power_law_coupling(w[k], alpha, coupling_scale);
  }
  return ModeSpectrum(SpectrumKind::Comb, alpha, 1.0, tau0, std::move(w), std::move(g));
}

/// Perturbed dispersion omega_k = (k+1)^beta omega0, k = 0..n_modes-1.
inline ModeSpectrum build_powerlaw_spectrum(std::size_t n_modes, double omega0, double beta, double alpha,
                                            double coupling_scale = 1.0) {
  if (n_modes == 0) throw DomainError("build_powerlaw_spectrum: n_modes must be >= 1");
  if (!(beta > 0.0)) throw DomainError("build_powerlaw_spectrum: beta must be > 0");
  if (!(omega0 > 0.0)) throw DomainError("build_powerlaw_spectrum: omega0 must be > 0");
  if (!(coupling_scale > 0.0)) throw DomainError("build_powerlaw_spectrum: coupling_scale must be > 0");
  std::vector<double> w(n_modes), g(n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) {
    // exact integer multiples when beta == 1
    w[k] = beta == 1.0 ? static_cast<double>(k + 1) * omega0 : std::pow(static_cast<double>(k + 1), beta) * omega0;
    g[k] = detail::power_law_coupling(w[k], alpha, coupling_scale);
  }
  return ModeSpectrum(SpectrumKind::PowerLawDispersion, alpha, beta, 2.0 * std::numbers::pi / omega0, std::move(w),
                      std::move(g));
}

/// Collective period of a membrane bath, 4 pi / Delta. Non-analytic points of
/// the rate function sit at integer multiples of half this period.
inline double membrane_collective_period(double delta) { return 4.0 * std::numbers::pi / delta; }

/// Membrane bath: frequencies Omega_n, couplings Lambda_n / hbar.
inline ModeSpectrum from_membrane(const MembraneModes& modes) {
  if (modes.size() == 0) throw DomainError("from_membrane: empty mode table");
  if (!(modes.delta > 0.0)) throw DomainError("from_membrane: mode spacing must be > 0");
  return ModeSpectrum(SpectrumKind::Membrane, 0.0, 1.0, membrane_collective_period(modes.delta), modes.omega,
                      modes.coupling);
}

/// Membrane bath in dimensionless units: time measured in collective periods
/// (period_hint = 1), couplings rescaled so that Lambda_1 / Omega_1 equals
/// `coupling_ratio`. Relative mode couplings are kept.
inline ModeSpectrum dimensionless_membrane(const MembraneModes& modes, double coupling_ratio = 1.0) {
  if (!(coupling_ratio > 0.0)) throw DomainError("dimensionless_membrane: coupling_ratio must be > 0");
  const ModeSpectrum physical = from_membrane(modes);
  const double unit = physical.period_hint();
  const double g_scale = coupling_ratio * modes.omega.front() / modes.coupling.front();
  std::vector<double> w(modes.size()), g(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    w[i] = modes.omega[i] * unit;
    g[i] = modes.coupling[i] * g_scale * unit;
  }
  return ModeSpectrum(SpectrumKind::Membrane, 0.0, 1.0, 1.0, std::move(w), std::move(g));
}

struct SpectralDensityHistogram {
  std::vector<double> bin_edges;
  std::vector<double> mass;  // sum of lambda_k^2 per bin

  double total_mass() const {
    NeumaierSum s;
    for (double m : mass) s.add(m);
    return s.value();
  }
};

/// J(nu) = sum_k lambda_k^2 delta(nu - omega_k) binned uniformly over [0, max omega].
inline SpectralDensityHistogram spectral_density(const ModeSpectrum& spectrum, std::size_t n_bins) {
  if (n_bins == 0) throw DomainError("spectral_density: n_bins must be >= 1");
  const double top = spectrum.max_frequency();
  const double width = top / static_cast<double>(n_bins);
  SpectralDensityHistogram h;
  h.bin_edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) h.bin_edges[i] = width * static_cast<double>(i);
  h.bin_edges.back() = top;
  std::vector<NeumaierSum> acc(n_bins);
  const auto& w = spectrum.frequencies();
  const auto& g = spectrum.couplings();
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    auto bin = static_cast<std::size_t>(w[k] / width);
    bin = std::min(bin, n_bins - 1);
    acc[bin].add(g[k] * g[k]);
  }
  h.mass.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) h.mass[i] = acc[i].value();
  return h;
}

}  // namespace dqpt
