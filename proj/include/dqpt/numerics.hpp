#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dqpt/errors.hpp"

namespace dqpt {

// ---------------------------------------------------------------------------
// Compensated summation
// ---------------------------------------------------------------------------

// Neumaier's variant of Kahan summation. The running compensation also
// captures the low-order bits lost when an addend is larger than the total.
class NeumaierSum {
 public:
  void add(double term) noexcept {
    if (!std::isfinite(term)) finite_ = false;
    const double t = sum_ + term;
    if (std::abs(sum_) >= std::abs(term))
      comp_ += (sum_ - t) + term;
    else
      comp_ += (term - t) + sum_;
    sum_ = t;
  }

  NeumaierSum& operator+=(double term) noexcept {
    add(term);
    return *this;
  }

  double value() const noexcept { return finite_ ? sum_ + comp_ : sum_; }

  // False once any non-finite term has been added; value() then carries the
  // non-finite result of the plain sum.
  bool finite() const noexcept { return finite_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
  bool finite_ = true;
};

struct CompensatedTotal {
  double value = 0.0;
  bool finite = true;
};

inline CompensatedTotal compensated_total(std::span<const double> terms) noexcept {
  NeumaierSum acc;
  for (double t : terms) acc.add(t);
  return {acc.value(), acc.finite()};
}

inline double compensated_sum(std::span<const double> terms) noexcept {
  return compensated_total(terms).value;
}

// ---------------------------------------------------------------------------
// Bracketed root finding
// ---------------------------------------------------------------------------

/// Bisection on [lo, hi] where f changes sign; stops when the bracket is
/// below `x_tolerance` or f hits zero exactly.
template <class F>
double bisect_root(F&& f, double lo, double hi, double x_tolerance = 0.0, int max_iterations = 200) {
  if (!(lo < hi)) throw DomainError("bisect_root: need lo < hi");
  double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo < 0.0) == (f_hi < 0.0)) throw InternalError("bisect_root: no sign change in bracket");
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || hi - lo <= x_tolerance) break;
    const double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Bessel functions of the first kind, orders 0 and 1
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double kBesselSeriesLimit = 12.0;

// Ascending series, accumulated in extended precision: the largest term at
// x = 12 is ~4e3, so double accumulation would lose three digits.
inline double bessel_series(int order, double x) {
  const long double half = static_cast<long double>(x) / 2.0L;
  const long double q = -half * half;
  long double term = order == 0 ? 1.0L : half;
  long double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<long double>(k) * static_cast<long double>(k + order));
    sum += term;
    if (std::abs(term) < 1e-22L * std::abs(sum) + 1e-30L) break;
  }
  return static_cast<double>(sum);
}

// Hankel asymptotic expansion J_v(x) = sqrt(2/(pi x)) (P cos chi - Q sin chi),
// chi = x - (2v+1) pi/4, truncated at its smallest term.
inline double bessel_hankel(int order, double x) {
  const double mu = 4.0 * order * order;
  double p = 1.0;
  double q = 0.0;
  double a = 1.0;
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = a * (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) >= previous) break;
    previous = std::abs(next);
    a = next;
    // a_k contributes to Q for odd k and to P for even k, with alternating signs.
    const int j = k / 2;
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 1)
      q += sign * a;
    else
      p += sign * a;
    if (previous < 1e-17) break;
  }
  // cos(x - phi) and sin(x - phi) expanded so that the large argument x goes
  // through the library's exact range reduction.
  const double c = std::cos(x);
  const double s = std::sin(x);
  const double r = std::numbers::sqrt2 / 2.0;
  double cos_chi, sin_chi;
  if (order == 0) {  // phi = pi/4
    cos_chi = r * (c + s);
    sin_chi = r * (s - c);
  } else {  // phi = 3 pi/4
    cos_chi = r * (s - c);
    sin_chi = -r * (c + s);
  }
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * cos_chi - q * sin_chi);
}

}  // namespace detail

/// J_0(x) or J_1(x) for x >= 0, absolute error below 1e-12.
inline double bessel_j(int order, double x) {
  if (order != 0 && order != 1) throw DomainError("bessel_j: order must be 0 or 1");
  if (!std::isfinite(x) || x < 0.0) throw DomainError("bessel_j: argument must be finite and >= 0");
  if (x <= detail::kBesselSeriesLimit) return detail::bessel_series(order, x);
  return detail::bessel_hankel(order, x);
}

/// The first `count` positive zeros of J_0, ascending.
///
/// Zero n is bracketed by ((n - 3/4) pi, (n + 1/4) pi), which contains exactly
/// one sign change, and polished by safeguarded Newton steps (J_0' = -J_1).
inline std::vector<double> bessel_j0_zeros(std::size_t count) {
  if (count == 0) throw DomainError("bessel_j0_zeros: count must be >= 1");
  constexpr double pi = std::numbers::pi;
  std::vector<double> zeros;
  zeros.reserve(count);
  for (std::size_t n = 1; n <= count; ++n) {
    double lo = (static_cast<double>(n) - 0.75) * pi;
    double hi = (static_cast<double>(n) + 0.25) * pi;
    double f_lo = bessel_j(0, lo);
    const double f_hi = bessel_j(0, hi);
    if (!(f_lo * f_hi < 0.0))
      throw InternalError("bessel_j0_zeros: no sign change in bracket for zero " + std::to_string(n));

    // McMahon: beta + 1/(8 beta) - 31/(384 beta^3), beta = (n - 1/4) pi.
    const double beta = (static_cast<double>(n) - 0.25) * pi;
    double x = beta + 1.0 / (8.0 * beta) - 31.0 / (384.0 * beta * beta * beta);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);

    for (int it = 0; it < 100; ++it) {
      const double f = bessel_j(0, x);
      if (f == 0.0) break;
      if ((f < 0.0) == (f_lo < 0.0)) {
        lo = x;
        f_lo = f;
      } else {
        hi = x;
      }
      const double slope = -bessel_j(1, x);
      double next = x - f / slope;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const double step = std::abs(next - x);
      x = next;
      if (step <= 4.0 * std::numeric_limits<double>::epsilon() * x) break;
    }
    if (std::abs(bessel_j(0, x)) > 1e-10)
      throw InternalError("bessel_j0_zeros: zero " + std::to_string(n) + " failed to converge");
    zeros.push_back(x);
  }
  return zeros;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

struct SampledDerivative {
  double step = 0.0;
  int order = 1;
  std::vector<double> values;
};

// Relative spacing tolerance used to accept a grid as uniform.
inline constexpr double kUniformGridTolerance = 1e-8;

inline double uniform_step(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("grid needs at least two points");
  const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("grid must be strictly increasing");
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double d = x[i] - x[i - 1];
    if (std::abs(d - h) > kUniformGridTolerance * std::abs(h) + 1e-15 * std::abs(x[i]))
      throw DomainError("grid is not uniform at index " + std::to_string(i));
  }
  return h;
}

/// Second-order central differences with one-sided second-order endpoint stencils.
inline SampledDerivative central_derivative(std::span<const double> x, std::span<const double> y,
                                            int order) {
  if (order != 1 && order != 2) throw DomainError("central_derivative: order must be 1 or 2");
  if (x.size() != y.size()) throw DomainError("central_derivative: length mismatch");
  const std::size_t need = 2 * static_cast<std::size_t>(order) + 1;
  if (x.size() < need) throw DomainError("central_derivative: too few points for requested order");
  const double h = uniform_step(x);
  const std::size_t n = y.size();
  SampledDerivative out{h, order, std::vector<double>(n)};
  auto& d = out.values;
  if (order == 1) {
    const double inv = 1.0 / (2.0 * h);
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) * inv;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i - 1]) * inv;
    d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) * inv;
  } else {
    const double inv = 1.0 / (h * h);
    d[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) * inv;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) * inv;
    d[n - 1] = (2.0 * y[n - 1] - 5.0 * y[n - 2] + 4.0 * y[n - 3] - y[n - 4]) * inv;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ordinary least squares
// ---------------------------------------------------------------------------

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
  std::pair<double, double> window{0.0, 0.0};  // (min x, max x)
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
};

/// OLS line through (xs, ys). r_squared = 1 - SS_res/SS_tot, defined as 1
/// when both vanish.
inline FitResult linear_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("linear_fit: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) throw DomainError("linear_fit: need at least two points");

  NeumaierSum sx, sy;
  for (std::size_t i = 0; i < n; ++i) {
    sx.add(xs[i]);
    sy.add(ys[i]);
  }
  const double mx = sx.value() / static_cast<double>(n);
  const double my = sy.value() / static_cast<double>(n);
  NeumaierSum sxx, sxy, syy;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx.add(dx * dx);
    sxy.add(dx * dy);
    syy.add(dy * dy);
  }
  const double vxx = sxx.value();
  if (!(vxx > 0.0)) throw DomainError("linear_fit: abscissae are degenerate");

  FitResult fit;
  fit.n_points = n;
  fit.slope = sxy.value() / vxx;
  fit.intercept = my - fit.slope * mx;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  fit.window = {*lo, *hi};

  NeumaierSum ss_res;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res.add(r * r);
  }
  const double res = ss_res.value();
  const double tot = syy.value();
  if (tot == 0.0)
    fit.r_squared = res == 0.0 ? 1.0 : 0.0;
  else
    fit.r_squared = std::clamp(1.0 - res / tot, 0.0, 1.0);

  if (n > 2) {
    const double sigma2 = res / static_cast<double>(n - 2);
    fit.slope_stderr = std::sqrt(sigma2 / vxx);
    fit.intercept_stderr = std::sqrt(sigma2 * (1.0 / static_cast<double>(n) + mx * mx / vxx));
  }
  return fit;
}

/// n points, logarithmically spaced over [lo, hi] inclusive.
inline std::vector<double> log_space(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw DomainError("log_space: need 0 < lo < hi and n >= 2");
  std::vector<double> out(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace dqpt
