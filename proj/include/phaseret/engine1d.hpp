#pragma once

// Recursive phase recovery for one-dimensional spectra.
//
// Given |F(k)| on a grid of length M and the moduli |a_l| on a support of
// length S with 2S-1 <= M, the autocorrelation rows b_L (L = S-1 .. 0) obey
//
//   b_L = sum_{j} a_j conj(a_{j-L}).
//
// The top row pins the two endpoint coefficients up to a global phase. Each
// following row adds exactly two new unknown phases, one from each end, and
// is solved as a triangle. Of its two branches the one whose candidate
// vector (unresolved phases held at placeholders) reproduces all rows best
// is kept.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "phaseret/error.hpp"
#include "phaseret/recursion.hpp"
#include "phaseret/residual.hpp"
#include "phaseret/spectral.hpp"
#include "phaseret/triangle.hpp"

namespace phaseret {

/// Provenance of a generated instance. Carried through files untouched.
struct InstanceMeta {
  std::string kind = "unknown";
  unsigned long long seed = 0;
  double noise = 0.0;
  std::string sinc = "unnormalized";
  /// Sample positions: t = t0 + dt * (k - grid_lo).
  double t0 = 0.0;
  double dt = 1.0;
};

struct ProblemInstance1D {
  int grid_len = 1;
  /// |F(k)| over the grid, stored densely.
  std::vector<double> field_magnitude;
  Window support;
  /// |a_l| over the support, lo first.
  std::vector<double> coeff_magnitudes;
  /// Unit phase hints for unresolved coefficients, by logical index.
  std::map<int, cplx> priors;
  cplx gauge_phase{1.0, 0.0};
  InstanceMeta meta;

  double modulus(int l) const { return coeff_magnitudes.at(static_cast<std::size_t>(l - support.lo)); }

  /// Throws std::invalid_argument unless the instance is well formed and
  /// satisfies the oversampling condition 2S - 1 <= M.
  void validate() const {
    check_grid(grid_len);
    if (field_magnitude.size() != static_cast<std::size_t>(grid_len)) {
      throw std::invalid_argument("field magnitude length differs from the grid length");
    }
    if (support.size() < 1 || !on_grid(support.lo, grid_len) || !on_grid(support.hi, grid_len)) {
      throw std::invalid_argument("support window is empty or off the grid");
    }
    if (coeff_magnitudes.size() != static_cast<std::size_t>(support.size())) {
      throw std::invalid_argument("coefficient modulus count differs from the support length");
    }
    if (!on_grid(support.size() - 1, grid_len) || !on_grid(-(support.size() - 1), grid_len)) {
      throw std::invalid_argument("oversampling condition 2S-1 <= M violated");
    }
    const auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
    if (std::any_of(field_magnitude.begin(), field_magnitude.end(), bad) ||
        std::any_of(coeff_magnitudes.begin(), coeff_magnitudes.end(), bad)) {
      throw std::invalid_argument("magnitudes must be finite and nonnegative");
    }
    if (!std::isfinite(std::abs(gauge_phase)) || std::abs(gauge_phase) == 0.0) {
      throw std::invalid_argument("gauge phase must be a nonzero finite complex number");
    }
  }
};

using SolveReport = BasicSolveReport<CenteredSpectrum, int>;

/// Endpoint moduli at or below this fraction of the largest are trimmed.
inline constexpr double kAnchorTolerance = 1e-9;

/// Shrink the support to the smallest window whose endpoint moduli exceed
/// kAnchorTolerance times the largest modulus. Interior zeros are kept.
inline ProblemInstance1D trim_support(const ProblemInstance1D& inst) {
  const auto& mods = inst.coeff_magnitudes;
  const double peak = mods.empty() ? 0.0 : *std::max_element(mods.begin(), mods.end());
  const double tau = kAnchorTolerance * peak;
  const auto above = [tau](double v) { return v > tau; };
  const auto first = std::find_if(mods.begin(), mods.end(), above);
  if (first == mods.end()) throw EmptySupport();
  const auto last = std::find_if(mods.rbegin(), mods.rend(), above).base();

  ProblemInstance1D out = inst;
  const int lo = inst.support.lo + static_cast<int>(first - mods.begin());
  const int hi = inst.support.lo + static_cast<int>(last - mods.begin()) - 1;
  out.support = Window{lo, hi};
  out.coeff_magnitudes.assign(first, last);
  out.validate();
  return out;
}

/// Hint phase per support position: the gauge times the unit prior, if any.
inline cplx hint_phase(const ProblemInstance1D& inst, int l) {
  const cplx g = inst.gauge_phase / std::abs(inst.gauge_phase);
  if (const auto it = inst.priors.find(l); it != inst.priors.end() && std::abs(it->second) > 0.0) {
    return g * it->second / std::abs(it->second);
  }
  return g;
}

/// Endpoints a_{S-1}, a_0 anchor the recursion; step s solves row
/// L = S-1-s for the pair (a_{S-1-s}, a_s), a single middle coefficient when
/// S is odd and the two meet. Positions are relative to the support start.
inline Schedule schedule_1d(std::size_t size) {
  Schedule sch;
  sch.top = size - 1;
  sch.bottom = 0;
  sch.anchor_row = size - 1;
  for (std::size_t s = 1; 2 * s + 1 <= size; ++s) sch.steps.push_back({size - 1 - s, s, size - 1 - s});
  return sch;
}

using Recursion1D = PairRecursion<Lattice1D>;

/// Recursion state on a trimmed support. `target` holds b_L for L = 0..S-1.
inline Recursion1D make_recursion_1d(const ProblemInstance1D& trimmed, std::vector<cplx> target, Selector mode,
                                     Placeholder placeholder = Placeholder::zero) {
  const auto size = static_cast<std::size_t>(trimmed.support.size());
  CoefficientData data;
  data.moduli = trimmed.coeff_magnitudes;
  for (std::size_t i = 0; i < size; ++i) {
    const int l = trimmed.support.lo + static_cast<int>(i);
    data.hints.push_back(hint_phase(trimmed, l));
    data.has_prior.push_back(trimmed.priors.count(l) != 0);
  }
  // b comes out of an M-point transform of |F|^2, whose largest coefficient is b_0.
  const double row_error = std::numeric_limits<double>::epsilon() *
                           std::sqrt(static_cast<double>(trimmed.grid_len)) *
                           std::abs(target.empty() ? cplx{} : target[0]);
  return Recursion1D(Lattice1D(size), schedule_1d(size), std::move(data), std::move(target), mode, placeholder,
                     row_error);
}

struct SolveOptions1D {
  Selector selector = Selector::incremental;
  Search search = Search::backtracking;
  Placeholder placeholder = Placeholder::zero;
};

/// Full recovery: trim, extract b from |F|^2, fix the gauge, run the
/// recursion with closest-point selection and assemble the spectrum. Data
/// anomalies become flags; only an empty support throws.
inline SolveReport solve_1d(const ProblemInstance1D& inst, SolveOptions1D options = {}) {
  inst.validate();
  const ProblemInstance1D trimmed = trim_support(inst);
  const int s_len = trimmed.support.size();

  std::vector<double> mag_sq(inst.field_magnitude.size());
  std::transform(inst.field_magnitude.begin(), inst.field_magnitude.end(), mag_sq.begin(),
                 [](double v) { return v * v; });
  const AutocorrSpectrum b = autocorr_from_magnitude(mag_sq);
  std::vector<cplx> target(static_cast<std::size_t>(s_len));
  for (int lag = 0; lag < s_len; ++lag) target[static_cast<std::size_t>(lag)] = b.at(lag);

  SolveReport report;
  if (trimmed.support != inst.support) {
    report.flags.push_back({FlagKind::support_trimmed, 0,
                            "support trimmed to [" + std::to_string(trimmed.support.lo) + ", " +
                                std::to_string(trimmed.support.hi) + "]"});
  }

  const auto run = run_recursion(make_recursion_1d(trimmed, target, options.selector, options.placeholder),
                                 options.search);
  report.flags.insert(report.flags.end(), run.flags.begin(), run.flags.end());
  report.search_nodes = run.nodes;
  const int lo = trimmed.support.lo;
  for (const auto& step : run.path) {
    report.branch_log.push_back({step.candidates.step, lo + static_cast<int>(step.candidates.upper),
                                 lo + static_cast<int>(step.candidates.lower), step.choice, taken_gap(step)});
  }

  // Trimmed-off coefficients keep their negligible moduli with hint phases.
  CenteredSpectrum out(inst.grid_len, inst.support);
  for (int l = inst.support.lo; l <= inst.support.hi; ++l) {
    if (trimmed.support.contains(l)) {
      out.set(l, run.state.candidate()[static_cast<std::size_t>(l - lo)]);
    } else {
      out.set(l, inst.modulus(l) * hint_phase(inst, l));
    }
  }

  const AutocorrSpectrum c = convolve_direct(out);
  double residual = 0.0;
  for (int lag = 0; lag < inst.support.size(); ++lag) residual += std::norm(c.at(lag) - b.at(lag));
  report.final_residual = residual;
  report.recovered = std::move(out);
  return report;
}

}  // namespace phaseret
