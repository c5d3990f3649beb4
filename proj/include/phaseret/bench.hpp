#pragma once

// Runtime and accuracy sweep over support sizes.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "phaseret/engine1d.hpp"
#include "phaseret/oracle.hpp"

namespace phaseret {

struct BenchOptions {
  std::vector<int> sizes;
  int trials = 10;
  GeneratorKind kind = GeneratorKind::random_smooth;
  std::uint64_t seed = 0;
  SolveOptions1D solve;
  /// A single solve is repeated until at least this much time has passed,
  /// so short solves are not dominated by clock resolution.
  double min_seconds = 0.02;
  double success_tolerance = 1e-10;
};

struct BenchRow {
  int size = 0;
  double mean_seconds = 0.0;
  double median_seconds = 0.0;
  double mean_spectral_error = 0.0;
  double success_rate = 0.0;
};

/// Seconds per call of `f`, averaged over enough calls to fill `min_seconds`.
template <class F>
double time_per_call(F&& f, double min_seconds) {
  using clock = std::chrono::steady_clock;
  long calls = 0;
  const auto start = clock::now();
  double elapsed = 0.0;
  do {
    f();
    ++calls;
    elapsed = std::chrono::duration<double>(clock::now() - start).count();
  } while (elapsed < min_seconds);
  return elapsed / static_cast<double>(calls);
}

/// Trial t of size S uses seed `seed + t`; rows come out in the order of
/// `sizes`.
inline std::vector<BenchRow> run_bench(const BenchOptions& opt) {
  if (opt.sizes.empty()) throw std::invalid_argument("bench needs at least one size");
  if (opt.trials < 1) throw std::invalid_argument("bench needs at least one trial");
  std::vector<BenchRow> rows;
  for (int size : opt.sizes) {
    if (size < 1) throw std::invalid_argument("bench sizes must be positive");
    std::vector<double> times;
    BenchRow row;
    row.size = size;
    int ok = 0;
    for (int t = 0; t < opt.trials; ++t) {
      GeneratorSpec spec;
      spec.kind = opt.kind;
      spec.size = size;
      spec.seed = opt.seed + static_cast<std::uint64_t>(t);
      const auto gen = generate(spec);
      SolveReport rep;
      times.push_back(time_per_call([&] { rep = solve_1d(gen.instance, opt.solve); }, opt.min_seconds));
      const double err = compare_up_to_gauge(rep.recovered, gen.truth).spectral_error;
      row.mean_spectral_error += err;
      if (err <= opt.success_tolerance) ++ok;
    }
    for (double s : times) row.mean_seconds += s;
    row.mean_seconds /= opt.trials;
    row.mean_spectral_error /= opt.trials;
    row.success_rate = static_cast<double>(ok) / opt.trials;
    std::sort(times.begin(), times.end());
    const auto n = times.size();
    row.median_seconds = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace phaseret
