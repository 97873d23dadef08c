#pragma once

// Independent reference computations for the test suite. Nothing here calls
// into the library's numerical kernels; only plain data (frequencies,
// couplings) is read from a ModeSpectrum.

#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "dqpt/spectrum.hpp"

namespace oracle {

using complex = std::complex<double>;

// J_n(x) for n = 0, 1 from the alternating power series, in long double.
inline long double bessel_series(int n, long double x) {
  const long double q = -(x * x) / 4.0L;
  long double term = n == 0 ? 1.0L : x / 2.0L;
  long double sum = term;
  for (int k = 1; k < 400; ++k) {
    term *= q / (static_cast<long double>(k) * static_cast<long double>(k + n));
    sum += term;
    if (std::fabs(term) < 1e-30L * std::fabs(sum) && k > 5) break;
  }
  return sum;
}

// Bisection on the series; bracket must hold one sign change.
// Bisection for a sign change of J0 on [lo, hi]. The long double series is
// only trusted for x < 15; beyond that the standard library J0 is used.
inline double bisect_j0_zero(double lo, double hi) {
  const bool series = hi < 15.0;
  auto j0 = [&](long double x) -> long double {
    return series ? bessel_series(0, x) : static_cast<long double>(std::cyl_bessel_j(0.0, static_cast<double>(x)));
  };
  long double a = lo, b = hi;
  long double fa = j0(a);
  for (int i = 0; i < 200; ++i) {
    const long double m = 0.5L * (a + b);
    const long double fm = j0(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return static_cast<double>(0.5L * (a + b));
}

inline std::vector<double> weights(const dqpt::ModeSpectrum& s) {
  std::vector<double> c(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const long double r = static_cast<long double>(s.couplings()[k]) / s.frequencies()[k];
    c[k] = static_cast<double>(r * r);
  }
  return c;
}

// gamma(t) = sum c (1 - cos wt) in long double.
inline double gamma_real(const dqpt::ModeSpectrum& s, double t) {
  const auto c = weights(s);
  long double acc = 0;
  for (std::size_t k = 0; k < s.size(); ++k)
    acc += c[k] * (1.0L - std::cos(static_cast<long double>(s.frequencies()[k]) * t));
  return static_cast<double>(acc);
}

// gamma(z) with std::cos on complex arguments.
inline complex gamma_complex(const dqpt::ModeSpectrum& s, complex z) {
  const auto c = weights(s);
  std::complex<long double> acc = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const std::complex<long double> zz(z.real(), z.imag());
    acc += static_cast<long double>(c[k]) * (1.0L - std::cos(static_cast<long double>(s.frequencies()[k]) * zz));
  }
  return {static_cast<double>(acc.real()), static_cast<double>(acc.imag())};
}

// Brute-force zero oracle: local minima of |gamma| on an n x n grid over the
// rectangle, each polished by repeatedly shrinking a 9 x 9 grid around the
// current best point. Returns positions whose polished |gamma| is below
// `accept`. By the minimum-modulus principle every interior local minimum
// of |gamma| lies next to a zero.
inline std::vector<complex> grid_zero_oracle(const dqpt::ModeSpectrum& s, double re0, double re1, double im0,
                                             double im1, std::size_t n, double accept) {
  const auto c = weights(s);
  const auto& w = s.frequencies();
  const std::size_t m = w.size();
  const double hx = (re1 - re0) / static_cast<double>(n - 1);
  const double hy = (im1 - im0) / static_cast<double>(n - 1);

  // |gamma|^2 via 1 - cos(x + iy) = 1 - cos x cosh y + i sin x sinh y.
  std::vector<double> cx(n * m), sx(n * m), chy(n * m), shy(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = re0 + hx * static_cast<double>(i);
    const double y = im0 + hy * static_cast<double>(i);
    for (std::size_t k = 0; k < m; ++k) {
      cx[i * m + k] = std::cos(w[k] * x);
      sx[i * m + k] = std::sin(w[k] * x);
      chy[i * m + k] = std::cosh(w[k] * y);
      shy[i * m + k] = std::sinh(w[k] * y);
    }
  }
  auto mod2 = [&](std::size_t i, std::size_t j) {
    double re = 0, im = 0;
    for (std::size_t k = 0; k < m; ++k) {
      re += c[k] * (1.0 - cx[i * m + k] * chy[j * m + k]);
      im += c[k] * sx[i * m + k] * shy[j * m + k];
    }
    return re * re + im * im;
  };

  std::vector<std::pair<std::size_t, std::size_t>> minima;
  std::vector<double> prev(n), cur(n), next(n);
  for (std::size_t i = 0; i < n; ++i) cur[i] = mod2(i, 0);
  for (std::size_t i = 0; i < n; ++i) next[i] = mod2(i, 1);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    prev.swap(cur);
    cur.swap(next);
    for (std::size_t i = 0; i < n; ++i) next[i] = mod2(i, j + 1);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double v = cur[i];
      if (v <= prev[i - 1] && v <= prev[i] && v <= prev[i + 1] && v <= cur[i - 1] && v < cur[i + 1] &&
          v < next[i - 1] && v < next[i] && v < next[i + 1])
        minima.emplace_back(i, j);
    }
  }

  std::vector<complex> zeros;
  for (auto [i, j] : minima) {
    complex best(re0 + hx * static_cast<double>(i), im0 + hy * static_cast<double>(j));
    double best_v = std::abs(gamma_complex(s, best));
    double rx = hx, ry = hy;
    for (int round = 0; round < 60; ++round) {
      complex centre = best;
      for (int a = -4; a <= 4; ++a)
        for (int b = -4; b <= 4; ++b) {
          const complex z = centre + complex(rx * a / 4.0, ry * b / 4.0);
          const double v = std::abs(gamma_complex(s, z));
          if (v < best_v) {
            best_v = v;
            best = z;
          }
        }
      rx *= 0.5;
      ry *= 0.5;
    }
    if (best_v <= accept) zeros.push_back(best);
  }
  return zeros;
}

}  // namespace oracle
