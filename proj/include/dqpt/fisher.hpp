#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dqpt/dynamics.hpp"
#include "dqpt/errors.hpp"
#include "dqpt/numerics.hpp"
#include "dqpt/parallel.hpp"
#include "dqpt/spectrum.hpp"

namespace dqpt {

/// Axis-aligned rectangle in the complex time plane.
struct ComplexRegion {
  double re_min = 0.0;
  double re_max = 1.0;
  double im_min = -0.1;
  double im_max = 0.1;

  void validate() const {
    if (!std::isfinite(re_min) || !std::isfinite(re_max) || !std::isfinite(im_min) || !std::isfinite(im_max))
      throw DomainError("region bounds must be finite");
    if (!(re_max > re_min) || !(im_max > im_min)) throw DomainError("region must have positive area");
  }

  bool contains(complex z) const {
    return z.real() >= re_min && z.real() <= re_max && z.imag() >= im_min && z.imag() <= im_max;
  }

  // Same center, each side scaled by `factor`.
  ComplexRegion expanded(double factor) const {
    const double cr = 0.5 * (re_min + re_max);
    const double ci = 0.5 * (im_min + im_max);
    const double hr = 0.5 * (re_max - re_min) * factor;
    const double hi = 0.5 * (im_max - im_min) * factor;
    return {cr - hr, cr + hr, ci - hi, ci + hi};
  }
};

struct ScanResolution {
  std::size_t nx = 400;
  std::size_t ny = 400;
};

/// Cells per unit of Re: 400 per period, raised so that the fastest mode
/// advances by at most pi/4 in phase per cell (otherwise aliased sign changes
/// flag every cell far from the axis). Im uses at least 400 cells and no
/// coarser spacing than Re.
inline ScanResolution default_resolution(const ModeSpectrum& spectrum, const ComplexRegion& region) {
  const double per_unit = std::max(400.0 / spectrum.period_hint(), 4.0 * spectrum.max_frequency() / std::numbers::pi);
  const double width = region.re_max - region.re_min;
  const double height = region.im_max - region.im_min;
  const auto nx = static_cast<std::size_t>(std::ceil(width * per_unit));
  const auto ny = static_cast<std::size_t>(std::ceil(height * per_unit));
  return {std::max<std::size_t>(nx, 2), std::max<std::size_t>(ny, 400)};
}

struct FisherZero {
  complex z;
  double residual = 0.0;  // |gamma(z)|
  int branch = 0;         // nearest integer to Re z / (period_hint / 2)
  int iterations = 0;
  bool conjugate = false;  // added by conjugate completion rather than refined
};

enum class RefineFailureKind { SingularJacobian, LeftRegion, OverflowGuard, Stagnated, IterationLimit };

struct RefineFailure {
  RefineFailureKind kind;
  complex last;
  double residual;
  int iterations;
  std::string message;
};

using RefineOutcome = std::variant<FisherZero, RefineFailure>;

struct RefineOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 100;
  std::optional<ComplexRegion> bounds;  // iterates must stay inside
};

inline int branch_index(const ModeSpectrum& spectrum, double re) {
  return static_cast<int>(std::lround(re / (0.5 * spectrum.period_hint())));
}

namespace detail {

inline void check_region_guard(const ModeSpectrum& spectrum, const ComplexRegion& region) {
  check_overflow_guard(spectrum, std::max(std::abs(region.im_min), std::abs(region.im_max)));
}

inline bool straddles_zero(double a, double b, double c, double d) {
  const double lo = std::min({a, b, c, d});
  const double hi = std::max({a, b, c, d});
  return lo <= 0.0 && hi >= 0.0;
}

inline RefineFailure make_failure(RefineFailureKind kind, complex z, double residual, int it, std::string why) {
  std::ostringstream os;
  os.precision(12);
  os << why << " at z = (" << z.real() << ", " << z.imag() << "), |gamma| = " << residual << " after " << it
     << " iterations";
  return {kind, z, residual, it, os.str()};
}

}  // namespace detail

/// Cell centers where both Re gamma and Im gamma change sign over the four
/// cell corners. Columns are processed in fixed tiles (independent tasks)
/// so memory stays bounded; seeds are returned sorted by (Im, Re) and are
/// free of duplicates by construction.
inline std::vector<complex> scan_candidates(const ModeSpectrum& spectrum, const ComplexRegion& region,
                                            std::size_t nx, std::size_t ny, unsigned workers = 1) {
  region.validate();
  if (nx < 2 || ny < 2) throw DomainError("scan_candidates: need nx, ny >= 2");
  detail::check_region_guard(spectrum, region);

  const auto& w = spectrum.frequencies();
  const auto& c = spectrum.weights();
  const std::size_t n = w.size();
  const std::size_t rows = ny + 1;
  const double hx = (region.re_max - region.re_min) / static_cast<double>(nx);
  const double hy = (region.im_max - region.im_min) / static_cast<double>(ny);
  auto xcoord = [&](std::size_t i) { return i == nx ? region.re_max : region.re_min + hx * static_cast<double>(i); };
  auto ycoord = [&](std::size_t j) { return j == ny ? region.im_max : region.im_min + hy * static_cast<double>(j); };

  // Separable factors: cosh/sinh of the imaginary half-phase per row,
  // sin/cos of the real half-phase per column (computed per tile).
  std::vector<double> ch(rows * n), sh(rows * n);
  parallel_for(rows, workers, [&](std::size_t j) {
    const double y = ycoord(j);
    for (std::size_t k = 0; k < n; ++k) {
      const double b = 0.5 * w[k] * y;
      ch[j * n + k] = std::cosh(b);
      sh[j * n + k] = std::sinh(b);
    }
  });

  constexpr std::size_t tile = 32;
  const std::size_t n_tiles = (nx + tile - 1) / tile;
  std::vector<std::vector<complex>> found(n_tiles);
  parallel_for(n_tiles, workers, [&](std::size_t t) {
    const std::size_t i0 = t * tile;
    const std::size_t i1 = std::min(nx, i0 + tile);  // corner columns i0..i1
    const std::size_t cols = i1 - i0 + 1;
    std::vector<double> sa(cols * n), ca(cols * n);
    for (std::size_t i = 0; i < cols; ++i) {
      const double x = xcoord(i0 + i);
      for (std::size_t k = 0; k < n; ++k) {
        const double a = 0.5 * w[k] * x;
        sa[i * n + k] = std::sin(a);
        ca[i * n + k] = std::cos(a);
      }
    }
    std::vector<double> re_val(rows * cols), im_val(rows * cols);
    for (std::size_t j = 0; j < rows; ++j) {
      const double* chj = &ch[j * n];
      const double* shj = &sh[j * n];
      for (std::size_t i = 0; i < cols; ++i) {
        // Only signs are needed here, so plain sums suffice; four
        // interleaved partial sums break the add dependency chain.
        double re[4] = {0.0, 0.0, 0.0, 0.0};
        double im[4] = {0.0, 0.0, 0.0, 0.0};
        const double* sai = &sa[i * n];
        const double* cai = &ca[i * n];
        std::size_t k = 0;
        for (; k + 4 <= n; k += 4) {
          for (std::size_t u = 0; u < 4; ++u) {
            const double sr = sai[k + u] * chj[k + u];
            const double si = cai[k + u] * shj[k + u];
            re[u] += c[k + u] * (sr * sr - si * si);
            im[u] += c[k + u] * sr * si;
          }
        }
        for (; k < n; ++k) {
          const double sr = sai[k] * chj[k];
          const double si = cai[k] * shj[k];
          re[0] += c[k] * (sr * sr - si * si);
          im[0] += c[k] * sr * si;
        }
        re_val[j * cols + i] = 2.0 * ((re[0] + re[1]) + (re[2] + re[3]));
        im_val[j * cols + i] = 4.0 * ((im[0] + im[1]) + (im[2] + im[3]));
      }
    }
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i + 1 < cols; ++i) {
        const std::size_t a = j * cols + i;
        const std::size_t b = a + 1;
        const std::size_t d = a + cols;
        const std::size_t e = d + 1;
        if (detail::straddles_zero(re_val[a], re_val[b], re_val[d], re_val[e]) &&
            detail::straddles_zero(im_val[a], im_val[b], im_val[d], im_val[e])) {
          found[t].emplace_back(0.5 * (xcoord(i0 + i) + xcoord(i0 + i + 1)), 0.5 * (ycoord(j) + ycoord(j + 1)));
        }
      }
    }
  });

  std::vector<complex> seeds;
  for (auto& f : found) seeds.insert(seeds.end(), f.begin(), f.end());
  std::sort(seeds.begin(), seeds.end(), [](complex p, complex q) {
    if (p.imag() != q.imag()) return p.imag() < q.imag();
    return p.real() < q.real();
  });
  return seeds;
}

/// Damped Newton on gamma(z) with the analytic derivative. Steps are halved
/// while the residual fails to decrease, so multiple roots (where gamma and
/// gamma' vanish together) converge instead of diverging. Acceptance is on
/// the relative residual |gamma| / sum_k (lambda_k/omega_k)^2.
inline RefineOutcome refine_zero(const ModeSpectrum& spectrum, complex seed, const RefineOptions& options = {}) {
  using detail::make_failure;
  if (!std::isfinite(seed.real()) || !std::isfinite(seed.imag())) throw DomainError("refine_zero: seed must be finite");
  check_overflow_guard(spectrum, seed.imag());
  const double tolerance = options.relative_tolerance * spectrum.total_weight();
  const double guard = max_admissible_imag(spectrum);
  auto admissible = [&](complex z) {
    if (std::abs(z.imag()) > guard) return false;
    return !options.bounds || options.bounds->contains(z);
  };

  complex z = seed;
  complex f = return_rate_complex(spectrum, z);
  bool accepted = false;
  int it = 0;
  auto success = [&] {
    FisherZero zero;
    zero.z = z;
    zero.residual = std::abs(f);
    zero.branch = branch_index(spectrum, z.real());
    zero.iterations = it;
    return zero;
  };
  for (;; ++it) {
    const double r = std::abs(f);
    // Once accepted, keep polishing while each step at least halves the
    // residual; at multiple roots this tightens the position considerably.
    if (r <= tolerance) accepted = true;
    if (it == options.max_iterations || r == 0.0) break;
    const complex d = return_rate_complex_derivative(spectrum, z);
    if (std::abs(d) < 1e-30) {
      if (accepted) break;
      return make_failure(RefineFailureKind::SingularJacobian, z, r, it, "derivative vanishes");
    }
    const complex step = f / d;
    const double target = accepted ? 0.5 * r : r;
    double lambda = 1.0;
    bool improved = false;
    bool left = false;
    for (int half = 0; half < 40; ++half, lambda *= 0.5) {
      const complex trial = z - lambda * step;
      if (!admissible(trial)) {
        left = true;
        continue;
      }
      const complex ft = return_rate_complex(spectrum, trial);
      if (std::abs(ft) < target) {
        z = trial;
        f = ft;
        improved = true;
        break;
      }
      if (accepted) break;  // polishing takes full steps only
    }
    if (!improved) {
      if (accepted) break;
      if (left) return make_failure(RefineFailureKind::LeftRegion, z, r, it, "iterate leaves the search region");
      return make_failure(RefineFailureKind::Stagnated, z, r, it, "residual stopped decreasing");
    }
  }
  if (accepted) return success();
  return make_failure(RefineFailureKind::IterationLimit, z, std::abs(f), it, "iteration limit reached");
}

/// Scan, refine, deduplicate and complete conjugates. Zeros are kept when
/// their refined position lies inside `region`; refinement may wander within
/// twice the region. Output is sorted by (Re z, Im z).
inline std::vector<FisherZero> find_fisher_zeros(const ModeSpectrum& spectrum, const ComplexRegion& region,
                                                 const ScanResolution& resolution, unsigned workers = 1) {
  const auto seeds = scan_candidates(spectrum, region, resolution.nx, resolution.ny, workers);
  RefineOptions options;
  ComplexRegion bounds = region.expanded(2.0);
  const double guard = max_admissible_imag(spectrum);
  bounds.im_min = std::max(bounds.im_min, -guard);
  bounds.im_max = std::min(bounds.im_max, guard);
  options.bounds = bounds;

  std::vector<std::optional<FisherZero>> refined(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    auto outcome = refine_zero(spectrum, seeds[i], options);
    if (auto* zero = std::get_if<FisherZero>(&outcome)) {
      if (region.contains(zero->z) || region.contains(std::conj(zero->z))) refined[i] = *zero;
    }
  });

  // Canonical upper-half representatives.
  std::vector<FisherZero> upper;
  for (const auto& r : refined) {
    if (!r) continue;
    FisherZero z = *r;
    if (z.z.imag() < 0.0) z.z = std::conj(z.z);
    upper.push_back(z);
  }
  auto by_position = [](const FisherZero& a, const FisherZero& b) {
    if (a.z.real() != b.z.real()) return a.z.real() < b.z.real();
    return a.z.imag() < b.z.imag();
  };
  std::sort(upper.begin(), upper.end(), by_position);

  const double radius = 1e-6 * spectrum.period_hint();
  std::vector<FisherZero> kept;
  for (const auto& z : upper) {
    auto near = std::find_if(kept.begin(), kept.end(), [&](const FisherZero& k) { return std::abs(k.z - z.z) < radius; });
    if (near == kept.end())
      kept.push_back(z);
    else if (z.residual < near->residual)
      *near = z;
  }

  // A root within the dedup radius of the real axis and its mirror image are
  // the same root (the double root at a crossing): merge onto the axis.
  const double tolerance = options.relative_tolerance * spectrum.total_weight();
  for (auto& z : kept) {
    if (z.z.imag() <= 0.0 || z.z.imag() >= radius) continue;
    const complex axis(z.z.real(), 0.0);
    const double residual = std::abs(return_rate_complex(spectrum, axis));
    if (residual <= tolerance) {
      z.z = axis;
      z.residual = residual;
    }
  }

  std::vector<FisherZero> out;
  out.reserve(2 * kept.size());
  for (const auto& z : kept) {
    out.push_back(z);
    if (z.z.imag() > 0.0) {
      FisherZero partner = z;
      partner.z = std::conj(z.z);
      partner.conjugate = true;
      out.push_back(partner);
    }
  }
  std::sort(out.begin(), out.end(), by_position);
  return out;
}

inline std::vector<FisherZero> find_fisher_zeros(const ModeSpectrum& spectrum, const ComplexRegion& region,
                                                 unsigned workers = 1) {
  return find_fisher_zeros(spectrum, region, default_resolution(spectrum, region), workers);
}

struct Crossing {
  int branch = 0;
  double t_crossing = 0.0;
  double im_z = 0.0;
  bool crossing = false;  // |Im z| <= axis tolerance
};

/// Per branch, the zero closest to the real axis.
inline std::vector<Crossing> crossing_report(const std::vector<FisherZero>& zeros, double axis_tolerance) {
  if (!(axis_tolerance > 0.0)) throw DomainError("crossing_report: axis tolerance must be > 0");
  std::vector<Crossing> out;
  for (const auto& z : zeros) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Crossing& c) { return c.branch == z.branch; });
    const double im = std::abs(z.z.imag());
    if (it == out.end()) {
      out.push_back({z.branch, z.z.real(), im, im <= axis_tolerance});
    } else if (im < it->im_z || (im == it->im_z && z.z.real() < it->t_crossing)) {
      *it = {z.branch, z.z.real(), im, im <= axis_tolerance};
    }
  }
  std::sort(out.begin(), out.end(), [](const Crossing& a, const Crossing& b) { return a.branch < b.branch; });
  return out;
}

/// Smallest |Im z| over zeros whose real part lies in [re_lo, re_hi].
inline std::optional<FisherZero> closest_to_axis(const std::vector<FisherZero>& zeros, double re_lo, double re_hi) {
  std::optional<FisherZero> best;
  for (const auto& z : zeros) {
    if (z.z.real() < re_lo || z.z.real() > re_hi) continue;
    if (!best || std::abs(z.z.imag()) < std::abs(best->z.imag())) best = z;
  }
  return best;
}

}  // namespace dqpt
