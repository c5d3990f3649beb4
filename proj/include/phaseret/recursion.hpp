#pragma once

// Pairwise phase recursion over an arbitrary coefficient lattice.
//
// A Schedule names two anchor coefficients (top, bottom) whose product
// a_top conj(a_bottom) is the anchor row, and an ordered list of steps. Step
// k fixes the pair (upper, lower) from one row in which every product except
//
//     a_upper conj(a_bottom)   and   a_top conj(a_lower)
//
// involves coefficients already fixed, so the row reduces to a two-phase
// triangle (or, when upper == lower, to a conjugate-pair equation).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phaseret/error.hpp"
#include "phaseret/residual.hpp"
#include "phaseret/triangle.hpp"

namespace phaseret {

enum class FlagKind { clamped, degenerate, tie, inconsistent_top, support_trimmed, unresolved, precision_loss };

inline const char* to_string(FlagKind k) noexcept {
  switch (k) {
    case FlagKind::clamped: return "clamped";
    case FlagKind::degenerate: return "degenerate";
    case FlagKind::tie: return "tie";
    case FlagKind::inconsistent_top: return "inconsistent_top";
    case FlagKind::support_trimmed: return "support_trimmed";
    case FlagKind::unresolved: return "unresolved";
    case FlagKind::precision_loss: return "precision_loss";
  }
  return "unknown";
}

inline FlagKind parse_flag_kind(const std::string& name) {
  for (auto k : {FlagKind::clamped, FlagKind::degenerate, FlagKind::tie, FlagKind::inconsistent_top,
                 FlagKind::support_trimmed, FlagKind::unresolved, FlagKind::precision_loss}) {
    if (name == to_string(k)) return k;
  }
  throw FormatError("unknown flag kind '" + name + "'");
}

struct ConsistencyFlag {
  FlagKind kind;
  int step;
  std::string detail;

  friend bool operator==(const ConsistencyFlag&, const ConsistencyFlag&) = default;
};

/// One resolved recursion step. `upper` / `lower` are the logical indices of
/// the coefficients fixed by the step (equal for a self-paired coefficient).
template <class Index>
struct BranchDecision {
  int step = 0;
  Index upper{};
  Index lower{};
  int choice = 1;
  /// Residual of the rejected branch minus that of the chosen one. A
  /// diagnostic: it carries round-off from the selector's bookkeeping and
  /// is left out of comparisons.
  double gap = 0.0;

  friend bool operator==(const BranchDecision& a, const BranchDecision& b) {
    return a.step == b.step && a.upper == b.upper && a.lower == b.lower && a.choice == b.choice;
  }
};

template <class Spectrum, class Index>
struct BasicSolveReport {
  Spectrum recovered;
  std::vector<BranchDecision<Index>> branch_log;
  /// sum over the autocorrelation rows of |c - b|^2 for the recovered spectrum.
  double final_residual = 0.0;
  std::vector<ConsistencyFlag> flags;
  /// Recursion steps proposed while searching for a consistent branch sequence.
  long search_nodes = 0;

  bool has_flag(FlagKind k) const {
    return std::any_of(flags.begin(), flags.end(), [k](const auto& f) { return f.kind == k; });
  }
};

/// How unresolved coefficients enter the candidate vector when no prior is
/// given: `unit` uses |a| times the gauge phase, `zero` leaves them out.
enum class Placeholder { zero, unit };

/// `greedy` keeps the closest-point branch at every step. `backtracking`
/// tries branches in closest-point order, abandons a path as soon as a row
/// cannot be satisfied or the finished vector misses the remaining rows, and
/// falls back to the greedy path when no consistent sequence is found.
enum class Search { greedy, backtracking };

// Thresholds.
inline constexpr double kTopTolerance = 1e-6;   // relative mismatch of |b_top|
inline constexpr double kTieTolerance = 1e-12;  // relative to sum |b|^2
/// Relative residual sum |c - b|^2 / sum |b|^2 below which a finished
/// candidate counts as consistent with every row.
inline constexpr double kConsistentResidual = 1e-16;
/// The consistency test widens to (kRoundoffSlack * estimate)^2 when the
/// propagated round-off estimate of the path is larger.
inline constexpr double kRoundoffSlack = 100;
/// Propagated relative error estimate above which a result is flagged as
/// limited by round-off.
inline constexpr double kPrecisionBound = 1e-10;
/// Proposals allowed per recursion step before the search gives up.
inline constexpr long kSearchNodesPerStep = 16;

/// Phases of the two anchor coefficients.
struct GaugeAnchors {
  cplx upper;  // a_top = |a_top| * gauge
  cplx lower;  // a_bottom, from a_top conj(a_bottom) = b_top
  bool consistent = true;
};

/// Assign the gauge to the top anchor and derive the bottom one from the
/// anchor row: phase(a_bottom) = phase(a_top) - phase(b_top).
inline GaugeAnchors fix_gauge(double upper_modulus, double lower_modulus, cplx gauge, cplx b_top) {
  const cplx unit_gauge = gauge / std::abs(gauge);
  GaugeAnchors g;
  g.upper = upper_modulus * unit_gauge;
  const double expected = upper_modulus * lower_modulus;
  g.consistent = std::abs(std::abs(b_top) - expected) <= kTopTolerance * expected && std::abs(b_top) > 0.0;
  g.lower = lower_modulus * unit_gauge * std::polar(1.0, -std::arg(b_top));
  return g;
}

struct RecursionStep {
  std::size_t upper = 0;
  std::size_t lower = 0;
  std::size_t row = 0;
};

struct Schedule {
  std::size_t top = 0;
  std::size_t bottom = 0;
  std::size_t anchor_row = 0;
  std::vector<RecursionStep> steps;
};

/// Two tentative values for the coefficients fixed at one step.
struct StepCandidates {
  int step = 0;
  std::size_t upper = 0;
  std::size_t lower = 0;
  std::array<cplx, 2> upper_value{};
  std::array<cplx, 2> lower_value{};
  bool clamped = false;
  bool degenerate = false;
  /// |lhs - rhs| of the row equation at the returned branches; nonzero only
  /// when clamped.
  double violation = 0.0;
  /// First-order estimate of the absolute error of the new coefficients,
  /// propagated from round-off in b and in earlier steps.
  double upper_error = 0.0;
  double lower_error = 0.0;

  bool self_paired() const noexcept { return upper == lower; }
  bool distinct() const noexcept { return upper_value[0] != upper_value[1] || lower_value[0] != lower_value[1]; }
};

struct BranchSelection {
  int choice = 1;
  double gap = 0.0;
  bool tie = false;
};

/// Per-coefficient inputs of a recursion.
struct CoefficientData {
  std::vector<double> moduli;
  /// Unit phase used for anything the data leave undetermined (gauge times prior).
  std::vector<cplx> hints;
  std::vector<bool> has_prior;
};

template <Lattice Lat>
class PairRecursion {
 public:
  /// `target` holds b on every lattice row; `row_error` is the absolute
  /// round-off expected in each b.
  PairRecursion(Lat lattice, Schedule schedule, CoefficientData data, std::vector<cplx> target, Selector mode,
                Placeholder placeholder, double row_error)
      : fixed_(std::make_shared<const Fixed>(Fixed{std::move(schedule), std::move(data)})),
        tracker_(lattice, std::move(target), initial_candidate(fixed_->data, placeholder), mode),
        resolved_(fixed_->data.moduli.size(), false),
        error_(fixed_->data.moduli.size(), 0.0),
        fixed_sum_(lattice.lag_count()),
        open_mass_(lattice.lag_count(), 0.0),
        row_error_(row_error) {
    for (const auto& v : target_()) energy_ += std::norm(v);
    for (std::size_t lag = 0; lag < lattice.lag_count(); ++lag) {
      for (std::size_t j = 0; j < lattice.coeff_count(); ++j) {
        if (const auto p = lattice.partner(j, lag)) open_mass_[lag] += data_().moduli[j] * data_().moduli[*p];
      }
    }
    double norm = 0.0;
    for (double m : data_().moduli) norm += m * m;
    norm_ = std::sqrt(norm);
  }

  int step_count() const noexcept { return static_cast<int>(schedule_().steps.size()); }
  const Schedule& schedule() const noexcept { return schedule_(); }
  std::span<const cplx> candidate() const noexcept { return tracker_.candidate(); }
  const ResidualTracker<Lat>& tracker() const noexcept { return tracker_; }
  const Lat& lattice() const noexcept { return tracker_.lattice(); }
  bool resolved(std::size_t i) const { return resolved_.at(i); }
  /// sum |b|^2 over the rows.
  double energy() const noexcept { return energy_; }
  /// Largest squared excess max(0, |b - fixed| - open)^2 over the rows
  /// touched by the last accept(), where `fixed` sums the products of fixed
  /// coefficients and `open` bounds the modulus of the rest. A fully fixed
  /// row contributes |c - b|^2.
  double row_excess() const noexcept { return row_excess_; }

  /// Largest propagated error estimate relative to the coefficient norm.
  double relative_error_bound() const noexcept {
    const double worst = error_.empty() ? 0.0 : *std::max_element(error_.begin(), error_.end());
    return norm_ > 0.0 ? worst / norm_ : worst;
  }

  /// Fix the gauge on the anchors. Returns false if the anchor row is
  /// inconsistent with the anchor moduli.
  bool anchor() {
    const auto& m = data_().moduli;
    const std::size_t top = schedule_().top, bottom = schedule_().bottom;
    if (top == bottom) {
      const std::array<CoeffChange, 1> ch{{{top, m[top] * data_().hints[top]}}};
      tracker_.commit(ch);
      settle(top);
      return true;
    }
    const cplx b_top = target_()[schedule_().anchor_row];
    const auto g = fix_gauge(m[top], m[bottom], data_().hints[top], b_top);
    const std::array<CoeffChange, 2> ch{{{top, g.upper}, {bottom, g.lower}}};
    tracker_.commit(ch);
    settle(top);
    settle(bottom);
    error_[top] = m[top] * std::numeric_limits<double>::epsilon();
    error_[bottom] = error_[top] + (m[top] > 0.0 ? row_error_ / m[top] : 0.0);
    return g.consistent;
  }

  /// Solve the row of step s (1-based) for its two unknown phases.
  StepCandidates propose(int s) const {
    if (s < 1 || s > step_count()) throw std::out_of_range("recursion step out of range");
    const RecursionStep& st = schedule_().steps[static_cast<std::size_t>(s - 1)];
    const auto a = tracker_.candidate();
    const auto& lat = tracker_.lattice();
    const auto& m = data_().moduli;
    const std::size_t top = schedule_().top, bottom = schedule_().bottom;
    if (resolved_[st.upper] || resolved_[st.lower]) throw std::logic_error("step revisits a fixed coefficient");

    StepCandidates out;
    out.step = s;
    out.upper = st.upper;
    out.lower = st.lower;

    // Peel every product except the two corner terms; each must be fully fixed.
    const auto sq = [](double v) { return v * v; };
    cplx rest = target_()[st.row];
    double rest_var = sq(row_error_) + sq(m[st.upper] * error_[bottom]) + sq(m[st.lower] * error_[top]);
    int corners = 0;
    for (std::size_t j = 0; j < lat.coeff_count(); ++j) {
      const auto p = lat.partner(j, st.row);
      if (!p) continue;
      if ((j == st.upper && *p == bottom) || (j == top && *p == st.lower)) {
        ++corners;
        continue;
      }
      if (!resolved_[j] || !resolved_[*p]) {
        throw std::logic_error("row of step " + std::to_string(s) + " has more than two unknown products");
      }
      rest -= a[j] * std::conj(a[*p]);
      rest_var += sq(m[j] * error_[*p]) + sq(error_[j] * m[*p]);
    }
    if (corners != 2) throw std::logic_error("row of step " + std::to_string(s) + " lacks its corner products");
    const double rest_error = std::sqrt(rest_var);

    const double hint_upper = std::arg(data_().hints[st.upper]);
    const double hint_lower = std::arg(data_().hints[st.lower]);
    TriangleSolution sol;
    try {
      if (out.self_paired()) {
        const double r = m[st.upper];
        sol = solve_conjugate_pair(r * std::conj(a[bottom]), r * a[top], rest, hint_upper);
      } else {
        sol = solve_triangle(std::conj(a[bottom]) * m[st.upper], a[top] * m[st.lower], rest,
                             {hint_upper, -hint_lower});
      }
      out.clamped = !sol.feasible;
      out.degenerate = sol.degenerate;
      if (out.clamped) out.violation = std::max(sol.residuals[0], sol.residuals[1]);
    } catch (const DegenerateTriangle&) {
      out.degenerate = true;
      out.clamped = true;
      out.violation = std::abs(rest);
      sol.branches = {PhasePair{hint_upper, -hint_lower}, PhasePair{hint_upper, -hint_lower}};
    }
    for (std::size_t k = 0; k < 2; ++k) {
      out.upper_value[k] = std::polar(m[st.upper], sol.branches[k].first);
      out.lower_value[k] = std::polar(m[st.lower], -sol.branches[k].second);
    }

    // Linearised: i u da1 + i v da2 = dz for the two placed vectors u, v, so
    // |u da1|, |v da2| <= |dz| / |sin(angle(u, v))|.
    const double inf = std::numeric_limits<double>::infinity();
    if (out.degenerate) {
      out.upper_error = out.lower_error = 0.0;
    } else if (out.self_paired()) {
      const double r = m[st.upper];
      const cplx e = out.upper_value[0] / r;
      const double speed = std::abs(r * std::conj(a[bottom]) * e - r * a[top] * std::conj(e));
      out.upper_error = out.lower_error = speed > 0.0 ? r * rest_error / speed : inf;
    } else {
      const cplx u = std::conj(a[bottom]) * out.upper_value[0];
      const cplx v = a[top] * std::conj(out.lower_value[0]);
      const double sine = std::abs(std::imag(std::conj(u) * v)) / std::max(std::abs(u) * std::abs(v), 1e-300);
      out.upper_error = sine > 0.0 && m[bottom] > 0.0 ? rest_error / (m[bottom] * sine) : inf;
      out.lower_error = sine > 0.0 && m[top] > 0.0 ? rest_error / (m[top] * sine) : inf;
    }
    return out;
  }

  /// Closest-point choice: the branch whose candidate vector gives the
  /// smaller sum over all rows of |c - b|^2.
  BranchSelection select(const StepCandidates& c) const {
    std::array<double, 2> d{};
    for (std::size_t k = 0; k < 2; ++k) d[k] = tracker_.trial(changes(c, k));
    BranchSelection s;
    s.tie = std::abs(d[0] - d[1]) <= kTieTolerance * energy_;
    s.choice = (s.tie || d[0] <= d[1]) ? 1 : 2;
    s.gap = s.choice == 1 ? d[1] - d[0] : d[0] - d[1];
    return s;
  }

  void accept(const StepCandidates& c, int choice) {
    if (choice != 1 && choice != 2) throw std::invalid_argument("branch choice must be 1 or 2");
    tracker_.commit(changes(c, static_cast<std::size_t>(choice - 1)));
    row_excess_ = 0.0;
    settle(c.upper);
    if (c.lower != c.upper) settle(c.lower);
    error_[c.upper] = std::min(c.upper_error, 2.0 * data_().moduli[c.upper]);
    error_[c.lower] = std::min(c.lower_error, 2.0 * data_().moduli[c.lower]);
  }

 private:
  // Mark coefficient i fixed, move every product whose other factor is
  // already fixed from the open mass to the fixed sum, and re-check the rows.
  void settle(std::size_t i) {
    resolved_[i] = true;
    const auto& lat = tracker_.lattice();
    const auto a = tracker_.candidate();
    const auto& m = data_().moduli;
    for (std::size_t lag = 0; lag < lat.lag_count(); ++lag) {
      bool touched = false;
      if (const auto p = lat.partner(i, lag); p && resolved_[*p]) {
        fixed_sum_[lag] += a[i] * std::conj(a[*p]);
        open_mass_[lag] -= m[i] * m[*p];
        touched = true;
      }
      if (const auto q = lat.source(i, lag); q && *q != i && resolved_[*q]) {
        fixed_sum_[lag] += a[*q] * std::conj(a[i]);
        open_mass_[lag] -= m[*q] * m[i];
        touched = true;
      }
      if (!touched) continue;
      const double excess = std::abs(target_()[lag] - fixed_sum_[lag]) - std::max(open_mass_[lag], 0.0);
      if (excess > 0.0) row_excess_ = std::max(row_excess_, excess * excess);
    }
  }

  static std::vector<cplx> initial_candidate(const CoefficientData& d, Placeholder placeholder) {
    std::vector<cplx> a(d.moduli.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (d.has_prior[i] || placeholder == Placeholder::unit) a[i] = d.moduli[i] * d.hints[i];
    }
    return a;
  }

  static std::vector<CoeffChange> changes(const StepCandidates& c, std::size_t k) {
    if (c.self_paired()) return {{c.upper, c.upper_value[k]}};
    return {{c.upper, c.upper_value[k]}, {c.lower, c.lower_value[k]}};
  }

  // Inputs that never change after construction, shared by every copy.
  struct Fixed {
    Schedule schedule;
    CoefficientData data;
  };
  const Schedule& schedule_() const noexcept { return fixed_->schedule; }
  const CoefficientData& data_() const noexcept { return fixed_->data; }
  std::span<const cplx> target_() const noexcept { return tracker_.target(); }

  std::shared_ptr<const Fixed> fixed_;
  ResidualTracker<Lat> tracker_;
  std::vector<bool> resolved_;
  std::vector<double> error_;
  std::vector<cplx> fixed_sum_;
  std::vector<double> open_mass_;
  double row_excess_ = 0.0;
  double row_error_ = 0.0;
  double energy_ = 0.0;
  double norm_ = 0.0;
};

/// One step on the accepted path.
struct StepRecord {
  StepCandidates candidates;
  BranchSelection selection;
  int choice = 1;
};

namespace detail {

template <Lattice Lat>
double consistency_tolerance(const PairRecursion<Lat>& rec) {
  const double e = kRoundoffSlack * rec.relative_error_bound();
  return rec.energy() * std::max(kConsistentResidual, e * e);
}

template <Lattice Lat>
bool consistent_search(PairRecursion<Lat>& rec, int s, std::vector<StepRecord>& path, long& nodes, long budget) {
  if (s > rec.step_count()) return rec.tracker().residual() <= consistency_tolerance(rec);
  if (nodes >= budget) return false;
  ++nodes;
  const StepCandidates cand = rec.propose(s);
  if (cand.clamped && cand.violation * cand.violation > consistency_tolerance(rec)) return false;
  const BranchSelection sel = rec.select(cand);
  const std::array<int, 2> order{sel.choice, 3 - sel.choice};
  const std::size_t tries = cand.distinct() ? 2 : 1;
  for (std::size_t i = 0; i < tries; ++i) {
    PairRecursion<Lat> child = rec;
    child.accept(cand, order[i]);
    if (child.row_excess() > consistency_tolerance(child)) continue;
    path.push_back({cand, sel, order[i]});
    if (consistent_search(child, s + 1, path, nodes, budget)) {
      rec = std::move(child);
      return true;
    }
    path.pop_back();
  }
  return false;
}

}  // namespace detail

template <Lattice Lat>
struct RecursionOutcome {
  PairRecursion<Lat> state;
  std::vector<StepRecord> path;
  std::vector<ConsistencyFlag> flags;
  long nodes = 0;
};

/// Anchor, then walk the schedule with the chosen search strategy.
template <Lattice Lat>
RecursionOutcome<Lat> run_recursion(PairRecursion<Lat> root, Search search) {
  std::vector<ConsistencyFlag> flags;
  if (!root.anchor()) {
    flags.push_back({FlagKind::inconsistent_top, 0, "anchor row modulus disagrees with anchor moduli"});
  }
  RecursionOutcome<Lat> out{root, {}, {}, 0};
  bool found = false;
  if (search == Search::backtracking) {
    const long budget = kSearchNodesPerStep * (root.step_count() + 1);
    found = detail::consistent_search(out.state, 1, out.path, out.nodes, budget);
    if (!found) {
      flags.push_back({FlagKind::unresolved, 0, "no branch sequence satisfies every row; closest-point path kept"});
      out.path.clear();
      out.state = root;
    }
  }
  if (!found) {
    for (int s = 1; s <= out.state.step_count(); ++s) {
      const StepCandidates cand = out.state.propose(s);
      const BranchSelection sel = out.state.select(cand);
      out.state.accept(cand, sel.choice);
      out.path.push_back({cand, sel, sel.choice});
    }
  }
  for (const auto& step : out.path) {
    const int s = step.candidates.step;
    if (step.candidates.degenerate) flags.push_back({FlagKind::degenerate, s, "undetermined phase set to its hint"});
    if (step.candidates.clamped) flags.push_back({FlagKind::clamped, s, "triangle inequality violated"});
    if (step.selection.tie && (step.candidates.distinct() || step.candidates.clamped)) {
      flags.push_back({FlagKind::tie, s, "branches indistinguishable"});
    }
  }
  if (out.state.relative_error_bound() > kPrecisionBound) {
    flags.push_back({FlagKind::precision_loss, 0,
                     "propagated round-off estimate " + std::to_string(out.state.relative_error_bound())});
  }
  out.flags = std::move(flags);
  return out;
}

/// Gap as seen from the branch actually taken (negative when the search
/// overrode the closest-point preference).
inline double taken_gap(const StepRecord& r) {
  return r.choice == r.selection.choice ? r.selection.gap : -r.selection.gap;
}

}  // namespace phaseret
