#pragma once

// Two-dimensional recovery of a (2N+1) x (2N+1) coefficient square from
// |f| sampled on an M x M grid (M >= 4N+1 per axis) and the coefficient
// moduli.
//
// The corner pair a(N,N), a(-N,-N) anchors the gauge. The remaining pairs
// (a(u,v), a(-u,-v)) are taken along anti-diagonals s = u+v from 2N-1 down to
// 1 (larger u first), then (u,-u) for u = N..1, and a(0,0) last. Row
// b(u+N, v+N) then has exactly two unknown products,
//
//   a(u,v) conj(a(-N,-N))   and   a(N,N) conj(a(-u,-v)):
//
// every other product in the row pairs two coefficients fixed on earlier
// anti-diagonals. PairRecursion re-checks this on every row.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phaseret/engine1d.hpp"
#include "phaseret/error.hpp"
#include "phaseret/recursion.hpp"
#include "phaseret/residual.hpp"
#include "phaseret/spectral.hpp"

namespace phaseret {

using Index2D = std::array<int, 2>;

/// Coefficients a(n1, n2), n1, n2 in [-N, N], on an M x M centered grid.
/// Stored row-major with n1 the slow index.
class Spectrum2D {
 public:
  Spectrum2D() = default;
  Spectrum2D(int grid_len, int order) : grid_len_(grid_len), order_(order) {
    check_grid(grid_len);
    if (order < 0) throw std::invalid_argument("coefficient order must be nonnegative");
    if (!on_grid(order, grid_len) || !on_grid(-order, grid_len)) {
      throw std::invalid_argument("coefficient square exceeds the grid");
    }
    values_.assign(static_cast<std::size_t>(dim() * dim()), cplx{});
  }
  Spectrum2D(int grid_len, int order, std::span<const cplx> values) : Spectrum2D(grid_len, order) {
    if (values.size() != values_.size()) throw std::invalid_argument("coefficient count differs from (2N+1)^2");
    std::copy(values.begin(), values.end(), values_.begin());
  }

  int grid_len() const noexcept { return grid_len_; }
  int order() const noexcept { return order_; }
  int dim() const noexcept { return 2 * order_ + 1; }
  bool contains(int n1, int n2) const noexcept {
    return std::abs(n1) <= order_ && std::abs(n2) <= order_;
  }

  cplx operator()(int n1, int n2) const {
    if (!contains(n1, n2)) return {};
    return values_[offset(n1, n2)];
  }
  void set(int n1, int n2, cplx v) {
    if (!contains(n1, n2)) throw std::out_of_range("coefficient index outside the square");
    values_[offset(n1, n2)] = v;
  }

  std::span<const cplx> values() const noexcept { return values_; }

  friend bool operator==(const Spectrum2D&, const Spectrum2D&) = default;

 private:
  std::size_t offset(int n1, int n2) const noexcept {
    return static_cast<std::size_t>((n1 + order_) * dim() + (n2 + order_));
  }

  int grid_len_ = 1;
  int order_ = 0;
  std::vector<cplx> values_{cplx{}};
};

/// Samples over the M x M grid, row-major with k1 the slow index.
struct Field2D {
  int grid_len = 0;
  std::vector<cplx> values;

  cplx at(int k1, int k2) const {
    return values.at(grid_offset(k1, grid_len) * static_cast<std::size_t>(grid_len) + grid_offset(k2, grid_len));
  }
};

/// b(l1, l2) over the M x M grid; zero off the grid.
struct Autocorr2D {
  int grid_len = 0;
  std::vector<cplx> coeffs;

  cplx at(int l1, int l2) const {
    if (!on_grid(l1, grid_len) || !on_grid(l2, grid_len)) return {};
    return coeffs[grid_offset(l1, grid_len) * static_cast<std::size_t>(grid_len) + grid_offset(l2, grid_len)];
  }
};

namespace detail {

// out[r][j] = sum_i in[r][i] tw(sign * idx_in(i) * idx_out(j)), one axis at a time.
inline std::vector<cplx> transform_axis(std::span<const cplx> in, int rows, int in_len, int in_lo, int out_len,
                                        int out_lo, const Twiddles& tw, int sign) {
  std::vector<cplx> out(static_cast<std::size_t>(rows) * static_cast<std::size_t>(out_len));
  for (int r = 0; r < rows; ++r) {
    const cplx* row = in.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(in_len);
    for (int j = 0; j < out_len; ++j) {
      cplx acc{};
      for (int i = 0; i < in_len; ++i) {
        acc += row[i] * tw(static_cast<long long>(sign) * (in_lo + i) * (out_lo + j));
      }
      out[static_cast<std::size_t>(r) * static_cast<std::size_t>(out_len) + static_cast<std::size_t>(j)] = acc;
    }
  }
  return out;
}

inline std::vector<cplx> transpose(std::span<const cplx> in, int rows, int cols) {
  std::vector<cplx> out(in.size());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out[static_cast<std::size_t>(c) * static_cast<std::size_t>(rows) + static_cast<std::size_t>(r)] =
          in[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
    }
  }
  return out;
}

// Separable 2D sum: both axes map in_len centered indices to out_len ones.
inline std::vector<cplx> transform_2d(std::span<const cplx> in, int in_len, int in_lo, int out_len, int out_lo,
                                      const Twiddles& tw, int sign) {
  const auto pass1 = transform_axis(in, in_len, in_len, in_lo, out_len, out_lo, tw, sign);
  const auto flipped = transpose(pass1, in_len, out_len);
  const auto pass2 = transform_axis(flipped, out_len, in_len, in_lo, out_len, out_lo, tw, sign);
  return transpose(pass2, out_len, out_len);
}

}  // namespace detail

/// f(k1, k2) = sum a(n1, n2) e^{2 pi i (n1 k1 + n2 k2) / M}.
inline Field2D forward_dft_2d(const Spectrum2D& spec) {
  const int m = spec.grid_len();
  const Twiddles tw(m);
  return {m, detail::transform_2d(spec.values(), spec.dim(), -spec.order(), m, grid_lo(m), tw, 1)};
}

/// a(n1, n2) = M^-2 sum f(k1, k2) e^{-2 pi i (n1 k1 + n2 k2) / M} on the
/// square of order N. Throws SupportViolation when a coefficient outside the
/// square exceeds kSupportTolerance times the largest one, unless
/// `check_support` is false.
inline Spectrum2D inverse_dft_2d(const Field2D& field, int order, bool check_support = true) {
  const int m = field.grid_len;
  check_grid(m);
  if (field.values.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m)) {
    throw std::invalid_argument("field size does not match its grid length");
  }
  const Twiddles tw(m);
  auto all = detail::transform_2d(field.values, m, grid_lo(m), m, grid_lo(m), tw, -1);
  const double scale = 1.0 / (static_cast<double>(m) * m);
  double peak = 0.0;
  for (auto& v : all) {
    v *= scale;
    peak = std::max(peak, std::abs(v));
  }
  const double threshold = kSupportTolerance * peak;
  Spectrum2D out(m, order);
  for (int n1 = grid_lo(m); n1 <= grid_hi(m); ++n1) {
    for (int n2 = grid_lo(m); n2 <= grid_hi(m); ++n2) {
      const cplx v = all[grid_offset(n1, m) * static_cast<std::size_t>(m) + grid_offset(n2, m)];
      if (out.contains(n1, n2)) {
        out.set(n1, n2, v);
      } else if (check_support && std::abs(v) > threshold) {
        throw SupportViolation(n1 * m + n2, std::abs(v), threshold);
      }
    }
  }
  return out;
}

/// b(l1, l2) = M^-2 sum |f(k1, k2)|^2 e^{-2 pi i (l1 k1 + l2 k2) / M}.
/// `mag_sq` is M x M, row-major over the centered grid.
inline Autocorr2D autocorr2d(std::span<const double> mag_sq, int grid_len) {
  const int m = grid_len;
  check_grid(m);
  if (mag_sq.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m)) {
    throw std::invalid_argument("squared magnitude array is not M x M");
  }
  std::vector<cplx> in(mag_sq.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!(mag_sq[i] >= 0.0)) throw std::invalid_argument("squared magnitudes must be nonnegative");
    in[i] = mag_sq[i];
  }
  const Twiddles tw(m);
  auto b = detail::transform_2d(in, m, grid_lo(m), m, grid_lo(m), tw, -1);
  const double scale = 1.0 / (static_cast<double>(m) * m);
  for (auto& v : b) v *= scale;
  return {m, std::move(b)};
}

/// b(l) = sum_j a(j) conj(a(j - l)) by the explicit quadruple sum.
inline Autocorr2D convolve_direct_2d(const Spectrum2D& spec) {
  const int m = spec.grid_len();
  const int n = spec.order();
  if (!on_grid(2 * n, m) || !on_grid(-2 * n, m)) {
    throw std::invalid_argument("autocorrelation lags exceed the grid (need 4N+1 <= M)");
  }
  Autocorr2D out{m, std::vector<cplx>(static_cast<std::size_t>(m) * static_cast<std::size_t>(m))};
  for (int l1 = -2 * n; l1 <= 2 * n; ++l1) {
    for (int l2 = -2 * n; l2 <= 2 * n; ++l2) {
      cplx acc{};
      for (int j1 = std::max(-n, l1 - n); j1 <= std::min(n, l1 + n); ++j1) {
        for (int j2 = std::max(-n, l2 - n); j2 <= std::min(n, l2 + n); ++j2) {
          acc += spec(j1, j2) * std::conj(spec(j1 - l1, j2 - l2));
        }
      }
      out.coeffs[grid_offset(l1, m) * static_cast<std::size_t>(m) + grid_offset(l2, m)] = acc;
    }
  }
  return out;
}

struct ProblemInstance2D {
  int order = 0;
  int grid_len = 1;
  /// |f| over the M x M grid, row-major.
  std::vector<double> field_magnitude;
  /// |a(n1, n2)| over the square, row-major.
  std::vector<double> coeff_magnitudes;
  std::map<Index2D, cplx> priors;
  cplx gauge_phase{1.0, 0.0};
  InstanceMeta meta;

  int dim() const noexcept { return 2 * order + 1; }
  double modulus(int n1, int n2) const {
    return coeff_magnitudes.at(static_cast<std::size_t>((n1 + order) * dim() + (n2 + order)));
  }

  /// Throws std::invalid_argument unless the instance is well formed and the
  /// lags +-2N fit on the grid.
  void validate() const {
    check_grid(grid_len);
    if (order < 0) throw std::invalid_argument("coefficient order must be nonnegative");
    if (!on_grid(2 * order, grid_len) || !on_grid(-2 * order, grid_len)) {
      throw std::invalid_argument("oversampling condition 4N+1 <= M violated");
    }
    if (field_magnitude.size() != static_cast<std::size_t>(grid_len) * static_cast<std::size_t>(grid_len)) {
      throw std::invalid_argument("field magnitude array is not M x M");
    }
    if (coeff_magnitudes.size() != static_cast<std::size_t>(dim() * dim())) {
      throw std::invalid_argument("coefficient modulus count differs from (2N+1)^2");
    }
    const auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
    if (std::any_of(field_magnitude.begin(), field_magnitude.end(), bad) ||
        std::any_of(coeff_magnitudes.begin(), coeff_magnitudes.end(), bad)) {
      throw std::invalid_argument("magnitudes must be finite and nonnegative");
    }
    if (!std::isfinite(std::abs(gauge_phase)) || std::abs(gauge_phase) == 0.0) {
      throw std::invalid_argument("gauge phase must be a nonzero finite complex number");
    }
    for (const auto& [idx, v] : priors) {
      if (std::abs(idx[0]) > order || std::abs(idx[1]) > order) {
        throw std::invalid_argument("prior outside the coefficient square");
      }
    }
  }
};

using SolveReport2D = BasicSolveReport<Spectrum2D, Index2D>;

/// Corner anchors, then anti-diagonals s = 2N-1 .. 1 (larger u first), the
/// s = 0 pairs (u, -u) for u = N .. 1, and the center.
inline Schedule schedule_2d(const Lattice2D& lat) {
  const int n = lat.order();
  Schedule sch;
  sch.top = lat.index(n, n);
  sch.bottom = lat.index(-n, -n);
  sch.anchor_row = *lat.lag_index(2 * n, 2 * n);
  const auto add = [&](int u, int v) {
    sch.steps.push_back({lat.index(u, v), lat.index(-u, -v), *lat.lag_index(u + n, v + n)});
  };
  for (int s = 2 * n - 1; s >= 1; --s) {
    for (int u = n; u >= -n; --u) {
      const int v = s - u;
      if (v >= -n && v <= n) add(u, v);
    }
  }
  for (int u = n; u >= 1; --u) add(u, -u);
  if (n >= 1) add(0, 0);
  return sch;
}

struct SolveOptions2D {
  Selector selector = Selector::incremental;
  Search search = Search::backtracking;
  Placeholder placeholder = Placeholder::zero;
};

inline cplx hint_phase(const ProblemInstance2D& inst, Index2D idx) {
  const cplx g = inst.gauge_phase / std::abs(inst.gauge_phase);
  if (const auto it = inst.priors.find(idx); it != inst.priors.end() && std::abs(it->second) > 0.0) {
    return g * it->second / std::abs(it->second);
  }
  return g;
}

/// Full 2D recovery. Throws AnchorFailure when a corner anchor modulus is at
/// or below kAnchorTolerance times the largest modulus; every other anomaly
/// is reported as a flag.
inline SolveReport2D solve_2d(const ProblemInstance2D& inst, SolveOptions2D options = {}) {
  inst.validate();
  const int n = inst.order;
  const auto& mods = inst.coeff_magnitudes;
  const double peak = *std::max_element(mods.begin(), mods.end());
  const double tau = kAnchorTolerance * peak;
  if (!(inst.modulus(n, n) > tau) || !(inst.modulus(-n, -n) > tau)) {
    throw AnchorFailure("corner anchor modulus vanishes (|a(N,N)| = " + std::to_string(inst.modulus(n, n)) +
                        ", |a(-N,-N)| = " + std::to_string(inst.modulus(-n, -n)) + ")");
  }

  std::vector<double> mag_sq(inst.field_magnitude.size());
  std::transform(inst.field_magnitude.begin(), inst.field_magnitude.end(), mag_sq.begin(),
                 [](double v) { return v * v; });
  const Autocorr2D b = autocorr2d(mag_sq, inst.grid_len);

  const Lattice2D lat(n);
  std::vector<cplx> target(lat.lag_count());
  for (std::size_t k = 0; k < target.size(); ++k) {
    const auto [l1, l2] = lat.lag(k);
    target[k] = b.at(l1, l2);
  }
  CoefficientData data;
  data.moduli = mods;
  for (std::size_t i = 0; i < lat.coeff_count(); ++i) {
    const Index2D idx = lat.position(i);
    data.hints.push_back(hint_phase(inst, idx));
    data.has_prior.push_back(inst.priors.count(idx) != 0);
  }
  const double row_error =
      std::numeric_limits<double>::epsilon() * static_cast<double>(inst.grid_len) * std::abs(b.at(0, 0));
  PairRecursion<Lattice2D> root(lat, schedule_2d(lat), std::move(data), std::move(target), options.selector,
                                options.placeholder, row_error);
  const auto run = run_recursion(std::move(root), options.search);

  SolveReport2D report;
  report.flags = run.flags;
  report.search_nodes = run.nodes;
  for (const auto& step : run.path) {
    report.branch_log.push_back({step.candidates.step, lat.position(step.candidates.upper),
                                 lat.position(step.candidates.lower), step.choice, taken_gap(step)});
  }
  report.recovered = Spectrum2D(inst.grid_len, n, run.state.candidate());

  const Autocorr2D c = convolve_direct_2d(report.recovered);
  double residual = 0.0;
  for (std::size_t k = 0; k < lat.lag_count(); ++k) {
    const auto [l1, l2] = lat.lag(k);
    residual += std::norm(c.at(l1, l2) - b.at(l1, l2));
  }
  report.final_residual = residual;
  return report;
}

}  // namespace phaseret
