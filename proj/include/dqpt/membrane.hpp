#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dqpt/errors.hpp"
#include "dqpt/numerics.hpp"

namespace dqpt {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double k_boltzmann = 1.380649e-23;    // J/K
inline constexpr double bohr_magneton = 9.2740100783e-24;  // J/T
inline constexpr double electron_g = 2.002319;
}  // namespace constants

/// Physical constants of a clamped circular membrane under dominant tension.
///
/// When `strain_rule` is set the strain is not free: it follows
/// eps = strain_rule * (h/R)^2 and is recomputed whenever R changes.
struct MembraneParams {
  double radius = 0.0;          // m
  double thickness = 0.0;       // m
  double young_modulus = 0.0;   // Pa
  double density_2d = 0.0;      // kg/m^2
  double strain = 0.0;          // dimensionless
  double gradient = 1e5;        // T/m, rescales every coupling uniformly
  double g_factor = constants::electron_g;
  double bohr_magneton = constants::bohr_magneton;
  std::optional<double> strain_rule;          // coefficient c in eps = c (h/R)^2
  std::optional<double> fundamental_target;   // Omega_1 / 2pi in Hz
  double poisson_ratio = 0.0;  // accepted for completeness; bending rigidity is dropped

  double effective_strain() const {
    if (strain_rule) {
      const double r = thickness / radius;
      return *strain_rule * r * r;
    }
    return strain;
  }

  // Transverse wave speed sqrt(Y h eps / rho_2D).
  double wave_speed() const {
    return std::sqrt(young_modulus * thickness * effective_strain() / density_2d);
  }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw DomainError(std::string("membrane: ") + name + " must be finite and > 0");
    };
    positive(radius, "radius");
    positive(thickness, "thickness");
    positive(young_modulus, "young_modulus");
    positive(density_2d, "density_2d");
    positive(gradient, "gradient");
    positive(g_factor, "g_factor");
    positive(bohr_magneton, "bohr_magneton");
    if (strain_rule) positive(*strain_rule, "strain_rule");
    positive(effective_strain(), "strain");
    if (fundamental_target) positive(*fundamental_target, "fundamental_target");
    const double r = thickness / radius;
    if (effective_strain() < 100.0 * r * r)
      throw DomainError("membrane: strain must satisfy eps >= 100 (h/R)^2 (tension-dominated regime)");
  }

  /// Monolayer h-BN: h = 3.3 A, Y = 270 GPa, rho_2D = 6.93e-7 kg/m^2, eps = 1e7 (h/R)^2.
  static MembraneParams hbn(double radius) {
    MembraneParams p;
    p.radius = radius;
    p.thickness = 3.3e-10;
    p.young_modulus = 270e9;
    p.density_2d = 6.93e-7;
    p.strain_rule = 1e7;
    return p;
  }
};

/// Per-mode data of the axisymmetric modes, ordered by frequency.
struct MembraneModes {
  std::vector<double> zeta;      // zeros of J_0
  std::vector<double> omega;     // rad/s
  std::vector<double> mass;      // kg
  std::vector<double> xzpf;      // m
  std::vector<double> coupling;  // Lambda_n / hbar, rad/s
  double delta = 0.0;            // mean frequency gap over the upper half, rad/s

  std::size_t size() const { return zeta.size(); }
  double coupling_joule(std::size_t i) const { return coupling.at(i) * constants::hbar; }
};

/// Mean consecutive gap over the upper half of an ascending list.
inline double upper_half_mean_gap(const std::vector<double>& values) {
  if (values.size() < 2) throw DomainError("mean gap needs at least two values");
  const std::size_t first = (values.size() - 1) / 2;
  const std::size_t last = values.size() - 1;
  return (values[last] - values[first]) / static_cast<double>(last - first);
}

/// Returns a copy of `params` whose radius puts Omega_1/2pi at `target_hz`.
inline MembraneParams solve_radius_for_fundamental(MembraneParams params, double target_hz) {
  if (!(target_hz > 0.0)) throw DomainError("membrane: fundamental target must be > 0");
  const double zeta1 = bessel_j0_zeros(1).front();
  const double omega1 = 2.0 * std::numbers::pi * target_hz;
  if (params.strain_rule) {
    // Omega_1 = zeta_1 sqrt(Y h^3 c / rho) / R^2
    const double k = std::sqrt(params.young_modulus * std::pow(params.thickness, 3) * *params.strain_rule /
                               params.density_2d);
    params.radius = std::sqrt(zeta1 * k / omega1);
  } else {
    params.radius = zeta1 * std::sqrt(params.young_modulus * params.thickness * params.strain / params.density_2d) /
                    omega1;
  }
  params.fundamental_target = target_hz;
  return params;
}

/// Axisymmetric normal modes: Omega_n = (zeta_n/R) v, M_n = pi R^2 rho J_1(zeta_n)^2,
/// x_n = sqrt(hbar / 2 M_n Omega_n), Lambda_n = g mu_B eta x_n.
inline MembraneModes mode_table(const MembraneParams& params, std::size_t n_modes) {
  if (n_modes == 0) throw DomainError("mode_table: n_modes must be >= 1");
  params.validate();
  MembraneModes m;
  m.zeta = bessel_j0_zeros(n_modes);
  const double v = params.wave_speed();
  const double area_mass = std::numbers::pi * params.radius * params.radius * params.density_2d;
  const double coupling_scale = params.g_factor * params.bohr_magneton * params.gradient / constants::hbar;
  m.omega.resize(n_modes);
  m.mass.resize(n_modes);
  m.xzpf.resize(n_modes);
  m.coupling.resize(n_modes);
  for (std::size_t i = 0; i < n_modes; ++i) {
    const double z = m.zeta[i];
    const double j1 = bessel_j(1, z);
    m.omega[i] = z / params.radius * v;
    m.mass[i] = area_mass * j1 * j1;
    m.xzpf[i] = std::sqrt(constants::hbar / (2.0 * m.mass[i] * m.omega[i]));
    m.coupling[i] = coupling_scale * m.xzpf[i];
  }
  if (n_modes >= 2) {
    m.delta = upper_half_mean_gap(m.omega);
  } else {
    m.delta = std::numbers::pi / params.radius * v;  // asymptotic gap of the Bessel zeros
  }
  return m;
}

/// Mean-field quartic-to-quadratic energy ratio of mode n (1-based) at occupation n_occ:
/// (hbar zeta_n / 8 pi R^3) eps^{-3/2} / sqrt(Y h rho) n_occ^2.
inline double anharmonicity_ratio(const MembraneParams& params, std::size_t n, double n_occupation) {
  if (n == 0) throw DomainError("anharmonicity_ratio: mode index is 1-based");
  if (!(n_occupation >= 0.0)) throw DomainError("anharmonicity_ratio: occupation must be >= 0");
  params.validate();
  const double zeta = bessel_j0_zeros(n).back();
  const double eps = params.effective_strain();
  const double r3 = params.radius * params.radius * params.radius;
  return constants::hbar * zeta / (8.0 * std::numbers::pi * r3) * std::pow(eps, -1.5) /
         std::sqrt(params.young_modulus * params.thickness * params.density_2d) * n_occupation * n_occupation;
}

/// Duffing (n == m) and cross-Kerr rate (Y h pi / 2 R^2) zeta_n^2 zeta_m^2 J_1(zeta_n)^2 J_1(zeta_m)^2, in J/m^4.
inline double quartic_coupling(const MembraneParams& params, double zeta_n, double zeta_m) {
  const double jn = bessel_j(1, zeta_n);
  const double jm = bessel_j(1, zeta_m);
  return params.young_modulus * params.thickness * std::numbers::pi / (2.0 * params.radius * params.radius) *
         zeta_n * zeta_n * zeta_m * zeta_m * jn * jn * jm * jm;
}

/// chi_nm n_n x_n n_m x_m / (1/2 sqrt(M_n M_m) Omega_n Omega_m), evaluated literally.
/// Its diagonal is 4x the closed-form anharmonicity_ratio.
inline double cross_coupling_quotient(const MembraneParams& params, std::size_t n, std::size_t m, double occ_n,
                                      double occ_m) {
  if (n == 0 || m == 0) throw DomainError("cross_coupling_ratio: mode indices are 1-based");
  if (!(occ_n >= 0.0) || !(occ_m >= 0.0)) throw DomainError("cross_coupling_ratio: occupations must be >= 0");
  const MembraneModes modes = mode_table(params, std::max(n, m));
  const std::size_t a = n - 1;
  const std::size_t b = m - 1;
  const double chi = quartic_coupling(params, modes.zeta[a], modes.zeta[b]);
  const double num = chi * occ_n * modes.xzpf[a] * occ_m * modes.xzpf[b];
  const double den = 0.5 * std::sqrt(modes.mass[a] * modes.mass[b]) * modes.omega[a] * modes.omega[b];
  return num / den;
}

/// Generalized negligibility ratio, normalized so that the diagonal equals
/// anharmonicity_ratio (the literal quotient carries an extra factor 4).
inline double cross_coupling_ratio(const MembraneParams& params, std::size_t n, std::size_t m, double occ_n,
                                   double occ_m) {
  return 0.25 * cross_coupling_quotient(params, n, m, occ_n, occ_m);
}

}  // namespace dqpt
