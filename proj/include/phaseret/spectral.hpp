#pragma once

// Centered finite Fourier transforms and autocorrelation spectra.
//
// Every sequence lives densely on a grid of length M whose logical indices
// run over [-(M/2), M - 1 - M/2]; for odd M that is the symmetric range
// -(M-1)/2 .. (M-1)/2, for even M it is -M/2 .. M/2-1. The single mapping
// from logical index to storage offset is grid_offset().

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "phaseret/error.hpp"

namespace phaseret {

using cplx = std::complex<double>;

constexpr int grid_lo(int grid_len) noexcept { return -(grid_len / 2); }
constexpr int grid_hi(int grid_len) noexcept { return grid_len - 1 - grid_len / 2; }

/// Storage offset of logical index `index` on a grid of length `grid_len`.
constexpr std::size_t grid_offset(int index, int grid_len) noexcept {
  return static_cast<std::size_t>(index + grid_len / 2);
}

constexpr bool on_grid(int index, int grid_len) noexcept {
  return index >= grid_lo(grid_len) && index <= grid_hi(grid_len);
}

/// Closed window [lo, hi] of logical indices.
struct Window {
  int lo = 0;
  int hi = 0;

  constexpr int size() const noexcept { return hi - lo + 1; }
  constexpr bool contains(int i) const noexcept { return i >= lo && i <= hi; }
  friend constexpr bool operator==(Window, Window) = default;
};

inline void check_grid(int grid_len) {
  if (grid_len < 1) throw std::invalid_argument("grid length must be positive");
}

/// Table of e^{2 pi i m / M}, m = 0..M-1, with exact index reduction so that
/// e^{2 pi i l k / M} is looked up rather than recomputed from a large angle.
class Twiddles {
 public:
  explicit Twiddles(int grid_len) : grid_len_(grid_len), table_(static_cast<std::size_t>(grid_len)) {
    check_grid(grid_len);
    for (int m = 0; m < grid_len; ++m) {
      table_[static_cast<std::size_t>(m)] =
          std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(m) / grid_len);
    }
  }

  /// e^{2 pi i p / M} for any integer p.
  cplx operator()(long long p) const noexcept {
    long long r = p % grid_len_;
    if (r < 0) r += grid_len_;
    return table_[static_cast<std::size_t>(r)];
  }

  int grid_len() const noexcept { return grid_len_; }

 private:
  int grid_len_;
  std::vector<cplx> table_;
};

/// Complex coefficients a_l on a centered grid, exactly zero outside `support`.
class CenteredSpectrum {
 public:
  CenteredSpectrum() : CenteredSpectrum(1, Window{0, 0}) {}

  CenteredSpectrum(int grid_len, Window support)
      : grid_len_(grid_len), support_(support), coeffs_(static_cast<std::size_t>(std::max(grid_len, 0))) {
    check_grid(grid_len);
    if (support.size() < 1 || support.size() > grid_len || !on_grid(support.lo, grid_len) ||
        !on_grid(support.hi, grid_len)) {
      throw std::invalid_argument("support [" + std::to_string(support.lo) + ", " +
                                  std::to_string(support.hi) + "] does not fit a grid of length " +
                                  std::to_string(grid_len));
    }
  }

  /// `values` are listed from support.lo to support.hi.
  CenteredSpectrum(int grid_len, Window support, std::span<const cplx> values)
      : CenteredSpectrum(grid_len, support) {
    if (values.size() != static_cast<std::size_t>(support.size())) {
      throw std::invalid_argument("coefficient count does not match the support length");
    }
    std::copy(values.begin(), values.end(), coeffs_.begin() + static_cast<std::ptrdiff_t>(grid_offset(support.lo, grid_len)));
  }

  int grid_len() const noexcept { return grid_len_; }
  Window support() const noexcept { return support_; }

  /// Coefficient at logical index l; zero anywhere on the grid outside the support.
  cplx operator[](int l) const {
    if (!on_grid(l, grid_len_)) throw std::out_of_range("index " + std::to_string(l) + " is off the grid");
    return coeffs_[grid_offset(l, grid_len_)];
  }

  void set(int l, cplx value) {
    if (!support_.contains(l)) {
      throw std::out_of_range("index " + std::to_string(l) + " is outside the support");
    }
    coeffs_[grid_offset(l, grid_len_)] = value;
  }

  /// Coefficients over the support, lo first.
  std::span<const cplx> in_support() const noexcept {
    return std::span<const cplx>(coeffs_).subspan(grid_offset(support_.lo, grid_len_),
                                                  static_cast<std::size_t>(support_.size()));
  }

  std::span<const cplx> dense() const noexcept { return coeffs_; }

  friend bool operator==(const CenteredSpectrum&, const CenteredSpectrum&) = default;

 private:
  int grid_len_;
  Window support_;
  std::vector<cplx> coeffs_;
};

/// Complex samples F(k) over a centered grid.
struct SampledField {
  int grid_len = 0;
  std::vector<cplx> values;

  cplx at(int k) const { return values.at(grid_offset(k, grid_len)); }
};

/// Fourier coefficients b_j of |F|^2 over the centered grid.
struct AutocorrSpectrum {
  int grid_len = 0;
  std::vector<cplx> coeffs;

  cplx at(int j) const {
    if (!on_grid(j, grid_len)) return {};
    return coeffs[grid_offset(j, grid_len)];
  }
};

/// F(k) = sum_l a_l e^{2 pi i l k / M}.
inline SampledField forward_dft(const CenteredSpectrum& spec) {
  const int m = spec.grid_len();
  const Twiddles tw(m);
  const Window sup = spec.support();
  SampledField out{m, std::vector<cplx>(static_cast<std::size_t>(m))};
  for (int k = grid_lo(m); k <= grid_hi(m); ++k) {
    cplx acc{};
    for (int l = sup.lo; l <= sup.hi; ++l) acc += spec[l] * tw(static_cast<long long>(l) * k);
    out.values[grid_offset(k, m)] = acc;
  }
  return out;
}

namespace detail {

inline std::vector<cplx> inverse_all(std::span<const cplx> values, int m) {
  const Twiddles tw(m);
  std::vector<cplx> a(static_cast<std::size_t>(m));
  for (int l = grid_lo(m); l <= grid_hi(m); ++l) {
    cplx acc{};
    for (int k = grid_lo(m); k <= grid_hi(m); ++k) {
      acc += values[grid_offset(k, m)] * tw(-static_cast<long long>(l) * k);
    }
    a[grid_offset(l, m)] = acc / static_cast<double>(m);
  }
  return a;
}

}  // namespace detail

/// Relative threshold for energy outside a declared support.
inline constexpr double kSupportTolerance = 1e-8;

/// a_l = (1/M) sum_k F(k) e^{-2 pi i l k / M}, restricted to `support`.
/// Throws SupportViolation when a coefficient outside the window exceeds
/// kSupportTolerance times the largest coefficient magnitude.
inline CenteredSpectrum inverse_dft(const SampledField& field, Window support) {
  const int m = field.grid_len;
  check_grid(m);
  if (field.values.size() != static_cast<std::size_t>(m)) {
    throw std::invalid_argument("field length does not match its grid length");
  }
  const auto all = detail::inverse_all(field.values, m);
  double peak = 0.0;
  for (const auto& v : all) peak = std::max(peak, std::abs(v));
  const double threshold = kSupportTolerance * peak;
  CenteredSpectrum out(m, support);
  for (int l = grid_lo(m); l <= grid_hi(m); ++l) {
    const cplx v = all[grid_offset(l, m)];
    if (support.contains(l)) {
      out.set(l, v);
    } else if (std::abs(v) > threshold) {
      throw SupportViolation(l, std::abs(v), threshold);
    }
  }
  return out;
}

/// Inverse transform over the whole grid, no support check.
inline CenteredSpectrum inverse_dft(const SampledField& field) {
  const int m = field.grid_len;
  return inverse_dft(field, Window{grid_lo(m), grid_hi(m)});
}

/// b_j = (1/M) sum_k mag_sq(k) e^{-2 pi i j k / M}. `mag_sq` is stored
/// densely over the centered grid; its length is the grid length.
inline AutocorrSpectrum autocorr_from_magnitude(std::span<const double> mag_sq) {
  const int m = static_cast<int>(mag_sq.size());
  check_grid(m);
  for (double v : mag_sq) {
    if (!(v >= 0.0)) throw std::invalid_argument("squared magnitudes must be nonnegative");
  }
  const Twiddles tw(m);
  AutocorrSpectrum out{m, std::vector<cplx>(static_cast<std::size_t>(m))};
  for (int j = grid_lo(m); j <= grid_hi(m); ++j) {
    cplx acc{};
    for (int k = grid_lo(m); k <= grid_hi(m); ++k) {
      acc += mag_sq[grid_offset(k, m)] * tw(-static_cast<long long>(j) * k);
    }
    out.coeffs[grid_offset(j, m)] = acc / static_cast<double>(m);
  }
  return out;
}

/// b_l = sum_j a_j conj(a_{j-l}) by the explicit double sum. Requires the
/// autocorrelation support (2S-1 lags) to fit on the grid.
inline AutocorrSpectrum convolve_direct(const CenteredSpectrum& spec) {
  const int m = spec.grid_len();
  const Window sup = spec.support();
  const int span = sup.size() - 1;
  if (!on_grid(span, m) || !on_grid(-span, m)) {
    throw std::invalid_argument("autocorrelation lags exceed the grid (need 2S-1 <= M)");
  }
  AutocorrSpectrum out{m, std::vector<cplx>(static_cast<std::size_t>(m))};
  for (int lag = -span; lag <= span; ++lag) {
    cplx acc{};
    const int j_lo = std::max(sup.lo, sup.lo + lag);
    const int j_hi = std::min(sup.hi, sup.hi + lag);
    for (int j = j_lo; j <= j_hi; ++j) acc += spec[j] * std::conj(spec[j - lag]);
    out.coeffs[grid_offset(lag, m)] = acc;
  }
  return out;
}

/// Squared magnitudes |F(k)|^2 of a sampled field.
inline std::vector<double> squared_magnitude(const SampledField& field) {
  std::vector<double> out(field.values.size());
  std::transform(field.values.begin(), field.values.end(), out.begin(),
                 [](const cplx& v) { return std::norm(v); });
  return out;
}

}  // namespace phaseret
