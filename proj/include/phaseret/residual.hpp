#pragma once

// Closest-point residual d = sum_rows |c_L - b_L|^2, where c is the
// autocorrelation of a candidate coefficient vector, kept up to date either
// incrementally (O(rows) per change of two coefficients) or by full
// recomputation. The index geometry is supplied by a Lattice:
//
//   std::size_t coeff_count() const;
//   std::size_t lag_count() const;
//   std::optional<std::size_t> partner(std::size_t j, std::size_t lag) const;  // index of j - L
//   std::optional<std::size_t> source(std::size_t i, std::size_t lag) const;   // index of i + L

#include <algorithm>
#include <array>
#include <complex>
#include <concepts>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace phaseret {

using cplx = std::complex<double>;

template <class L>
concept Lattice = requires(const L& lat, std::size_t i) {
  { lat.coeff_count() } -> std::convertible_to<std::size_t>;
  { lat.lag_count() } -> std::convertible_to<std::size_t>;
  { lat.partner(i, i) } -> std::same_as<std::optional<std::size_t>>;
  { lat.source(i, i) } -> std::same_as<std::optional<std::size_t>>;
};

/// Contiguous 1D support of length S; rows are the lags 0..S-1.
class Lattice1D {
 public:
  explicit Lattice1D(std::size_t size) : size_(size) {}

  std::size_t coeff_count() const noexcept { return size_; }
  std::size_t lag_count() const noexcept { return size_; }
  std::optional<std::size_t> partner(std::size_t j, std::size_t lag) const noexcept {
    if (j < lag || j >= size_) return std::nullopt;
    return j - lag;
  }
  std::optional<std::size_t> source(std::size_t i, std::size_t lag) const noexcept {
    if (i + lag >= size_) return std::nullopt;
    return i + lag;
  }

 private:
  std::size_t size_;
};

/// Full square of coefficients n1, n2 in [-N, N], stored row-major. Rows are
/// the half plane of lags (l1 > 0, or l1 == 0 and l2 >= 0) in [-2N, 2N]^2.
class Lattice2D {
 public:
  explicit Lattice2D(int order) : order_(order), dim_(2 * order + 1) {
    for (int l1 = 0; l1 <= 2 * order; ++l1) {
      for (int l2 = -2 * order; l2 <= 2 * order; ++l2) {
        if (l1 == 0 && l2 < 0) continue;
        lags_.push_back({l1, l2});
      }
    }
  }

  int order() const noexcept { return order_; }
  std::size_t coeff_count() const noexcept { return static_cast<std::size_t>(dim_ * dim_); }
  std::size_t lag_count() const noexcept { return lags_.size(); }
  std::array<int, 2> lag(std::size_t k) const { return lags_.at(k); }

  std::size_t index(int n1, int n2) const noexcept {
    return static_cast<std::size_t>((n1 + order_) * dim_ + (n2 + order_));
  }
  std::array<int, 2> position(std::size_t i) const noexcept {
    const int k = static_cast<int>(i);
    return {k / dim_ - order_, k % dim_ - order_};
  }
  bool inside(int n1, int n2) const noexcept {
    return n1 >= -order_ && n1 <= order_ && n2 >= -order_ && n2 <= order_;
  }

  /// Row index of lag (l1, l2), or nullopt when it lies in the other half plane.
  std::optional<std::size_t> lag_index(int l1, int l2) const noexcept {
    if (l1 < 0 || l1 > 2 * order_ || l2 < -2 * order_ || l2 > 2 * order_) return std::nullopt;
    if (l1 == 0 && l2 < 0) return std::nullopt;
    const int w = 4 * order_ + 1;
    const int k = l1 == 0 ? l2 : (2 * order_ + 1) + (l1 - 1) * w + (l2 + 2 * order_);
    return static_cast<std::size_t>(k);
  }

  std::optional<std::size_t> partner(std::size_t j, std::size_t lag) const noexcept {
    const auto [n1, n2] = position(j);
    const auto [l1, l2] = lags_[lag];
    if (!inside(n1 - l1, n2 - l2)) return std::nullopt;
    return index(n1 - l1, n2 - l2);
  }
  std::optional<std::size_t> source(std::size_t i, std::size_t lag) const noexcept {
    const auto [n1, n2] = position(i);
    const auto [l1, l2] = lags_[lag];
    if (!inside(n1 + l1, n2 + l2)) return std::nullopt;
    return index(n1 + l1, n2 + l2);
  }

 private:
  int order_;
  int dim_;
  std::vector<std::array<int, 2>> lags_;
};

/// c_L = sum_j a_j conj(a_{j-L}) over every row of the lattice.
template <Lattice Lat>
std::vector<cplx> autocorr_rows(const Lat& lat, std::span<const cplx> a) {
  std::vector<cplx> c(lat.lag_count());
  for (std::size_t lag = 0; lag < lat.lag_count(); ++lag) {
    cplx acc{};
    for (std::size_t j = 0; j < lat.coeff_count(); ++j) {
      if (const auto p = lat.partner(j, lag)) acc += a[j] * std::conj(a[*p]);
    }
    c[lag] = acc;
  }
  return c;
}

inline double row_distance(std::span<const cplx> c, std::span<const cplx> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) d += std::norm(c[i] - b[i]);
  return d;
}

/// Replacement of up to two coefficients.
struct CoeffChange {
  std::size_t index;
  cplx value;
};

/// Change in every row when `changes` are applied to `a`. Only the terms
/// a_j conj(a_{j-L}) with j or j-L among the changed indices are touched,
/// at most four per row.
template <Lattice Lat>
std::vector<cplx> autocorr_delta(const Lat& lat, std::span<const cplx> a, std::span<const CoeffChange> changes) {
  const auto updated = [&](std::size_t i) {
    for (const auto& ch : changes) {
      if (ch.index == i) return ch.value;
    }
    return a[i];
  };
  std::vector<cplx> delta(lat.lag_count());
  std::array<std::size_t, 8> terms{};
  for (std::size_t lag = 0; lag < lat.lag_count(); ++lag) {
    std::size_t n = 0;
    for (const auto& ch : changes) {
      if (lat.partner(ch.index, lag)) terms[n++] = ch.index;
      if (const auto s = lat.source(ch.index, lag)) terms[n++] = *s;
    }
    std::sort(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(n));
    const auto last = std::unique(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(n));
    cplx acc{};
    for (auto it = terms.begin(); it != last; ++it) {
      const std::size_t j = *it;
      const std::size_t p = *lat.partner(j, lag);
      acc += updated(j) * std::conj(updated(p)) - a[j] * std::conj(a[p]);
    }
    delta[lag] = acc;
  }
  return delta;
}

enum class Selector { incremental, full };

/// Candidate vector, its autocorrelation rows and the target rows.
template <Lattice Lat>
class ResidualTracker {
 public:
  ResidualTracker(Lat lattice, std::vector<cplx> target, std::vector<cplx> candidate, Selector mode)
      : lat_(std::move(lattice)),
        target_(std::make_shared<const std::vector<cplx>>(std::move(target))),
        a_(std::move(candidate)),
        mode_(mode) {
    if (target_->size() != lat_.lag_count() || a_.size() != lat_.coeff_count()) {
      throw std::invalid_argument("tracker sizes do not match the lattice");
    }
    rows_ = autocorr_rows(lat_, std::span<const cplx>(a_));
  }

  const Lat& lattice() const noexcept { return lat_; }
  std::span<const cplx> candidate() const noexcept { return a_; }
  std::span<const cplx> rows() const noexcept { return rows_; }
  std::span<const cplx> target() const noexcept { return *target_; }
  Selector mode() const noexcept { return mode_; }

  double residual() const { return row_distance(rows_, *target_); }

  /// Residual the candidate would have with `changes` applied.
  double trial(std::span<const CoeffChange> changes) const {
    return row_distance(rows_after(changes), *target_);
  }

  void commit(std::span<const CoeffChange> changes) {
    rows_ = rows_after(changes);
    for (const auto& ch : changes) a_[ch.index] = ch.value;
  }

 private:
  std::vector<cplx> rows_after(std::span<const CoeffChange> changes) const {
    if (mode_ == Selector::full) {
      auto next = a_;
      for (const auto& ch : changes) next[ch.index] = ch.value;
      return autocorr_rows(lat_, std::span<const cplx>(next));
    }
    auto delta = autocorr_delta(lat_, std::span<const cplx>(a_), changes);
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += rows_[i];
    return delta;
  }

  Lat lat_;
  // Shared between copies; the search copies trackers at every node.
  std::shared_ptr<const std::vector<cplx>> target_;
  std::vector<cplx> a_;
  std::vector<cplx> rows_;
  Selector mode_;
};

}  // namespace phaseret
