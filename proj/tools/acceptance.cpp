// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--strict] [--curves DIR] [--only N[,N...]]
//
// Without --strict the exit status only reports whether every criterion could
// be evaluated; with --strict any FAIL makes it nonzero.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phaseret/phaseret.hpp"

using namespace phaseret;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kExact = 1e-10;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GeneratorSpec spec_1d(GeneratorKind kind, int size, std::uint64_t seed, double noise = 0.0) {
  GeneratorSpec s;
  s.kind = kind;
  s.size = size;
  s.seed = seed;
  s.noise_amplitude = noise;
  return s;
}

std::vector<double> squared(const std::vector<double>& mag) {
  std::vector<double> out;
  out.reserve(mag.size());
  for (double v : mag) out.push_back(v * v);
  return out;
}

// 1. autocorr_from_magnitude against convolve_direct, 1D and 2D.
Verdict spectral_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  int count = 0;
  for (int t = 0; t < 100; ++t, ++count) {
    const int s = 4 + static_cast<int>(rng.uniform() * 61);
    const auto g = generate(spec_1d(GeneratorKind::random_uniform, s, 1000 + static_cast<std::uint64_t>(t)));
    const auto b = autocorr_from_magnitude(squared(g.instance.field_magnitude));
    const auto c = convolve_direct(g.truth);
    for (int j = grid_lo(b.grid_len); j <= grid_hi(b.grid_len); ++j) worst = std::max(worst, std::abs(b.at(j) - c.at(j)));
  }
  // 2D: (2N+1)^2 coefficients with N = 1, 2, 3 covers 9..49.
  for (int t = 0; t < 100; ++t, ++count) {
    GeneratorSpec2D s;
    s.order = 1 + t % 3;
    s.seed = 2000 + static_cast<std::uint64_t>(t);
    const auto g = generate_2d(s);
    const int m = g.instance.grid_len;
    const auto b = autocorr2d(squared(g.instance.field_magnitude), m);
    const auto c = convolve_direct_2d(g.truth);
    for (int l1 = grid_lo(m); l1 <= grid_hi(m); ++l1) {
      for (int l2 = grid_lo(m); l2 <= grid_hi(m); ++l2) worst = std::max(worst, std::abs(b.at(l1, l2) - c.at(l1, l2)));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 10.0,
          std::to_string(count) + " instances, max |b - c| = " + fmt(worst) + ", " + fmt(secs) + " s"};
}

// 2. Triangle solutions against a 720 x 720 phase grid.
Verdict triangle_optimality() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr int kGrid = 720;
  std::vector<cplx> unit(kGrid);
  for (int k = 0; k < kGrid; ++k) unit[static_cast<std::size_t>(k)] = std::polar(1.0, 2.0 * kPi * k / kGrid);
  Rng rng(202);
  int bad = 0, infeasible = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 1000; ++t) {
    const cplx x = std::polar(2.0 * rng.uniform(), rng.phase());
    const cplx y = std::polar(2.0 * rng.uniform(), rng.phase());
    const cplx z = std::polar(4.0 * rng.uniform(), rng.phase());
    const auto sol = solve_triangle(x, y, z);
    if (!sol.feasible) ++infeasible;
    double best = std::numeric_limits<double>::infinity();
    for (const cplx& e1 : unit) {
      const cplx u = x * e1 - z;
      for (const cplx& e2 : unit) best = std::min(best, std::norm(u + y * e2));
    }
    best = std::sqrt(best);
    const double slack = (2.0 * kPi / kGrid) * (std::abs(x) + std::abs(y));
    const double margin = std::max(sol.residuals[0], sol.residuals[1]) - (best + slack);
    worst_margin = std::max(worst_margin, margin);
    if (margin > 0.0) ++bad;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 60.0, "1000 problems (" + std::to_string(infeasible) + " infeasible), " +
                                       std::to_string(bad) + " above grid minimum + slack, worst margin " +
                                       fmt(worst_margin) + ", " + fmt(secs) + " s"};
}

// 3. Exact recovery on noiseless ensembles.
Verdict exact_recovery() {
  bool pass = true;
  std::string detail;
  int unflagged = 0, round_off_only = 0;
  for (auto kind : {GeneratorKind::random_uniform, GeneratorKind::random_smooth}) {
    for (int s : {8, 16, 32, 64}) {
      int ok = 0;
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto g = generate(spec_1d(kind, s, seed));
        const auto rep = solve_1d(g.instance);
        if (compare_up_to_gauge(rep.recovered, g.truth).spectral_error <= kExact) {
          ++ok;
        } else if (!rep.has_flag(FlagKind::clamped) && !rep.has_flag(FlagKind::degenerate) &&
                   !rep.has_flag(FlagKind::tie)) {
          ++unflagged;
          if (rep.has_flag(FlagKind::precision_loss)) ++round_off_only;
        }
      }
      pass = pass && ok >= 95;
      detail += std::string(to_string(kind)) + " S=" + std::to_string(s) + ": " + std::to_string(ok) + "/100; ";
    }
  }
  pass = pass && unflagged == 0;
  detail += std::to_string(unflagged) + " failures without clamp/degenerate/tie (" + std::to_string(round_off_only) +
            " of them flagged precision_loss)";
  return {pass, detail};
}

// 4. Engine against the brute-force phase grid on tiny supports.
Verdict oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr int kGrid = 64;
  const double cell = 2.0 * kPi / kGrid;
  int bad = 0, beaten = 0;
  double worst = 0.0;
  for (int s : {3, 4, 5, 6}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto g = generate(spec_1d(GeneratorKind::random_uniform, s, seed));
      const auto rep = solve_1d(g.instance);
      const auto bf = brute_force_solve(g.instance, kGrid);
      // Both fix the top coefficient to the same gauge, so phases compare directly.
      double dev = 0.0;
      for (int l = g.instance.support.lo; l <= g.instance.support.hi; ++l) {
        dev = std::max(dev, std::abs(phase_distance(std::arg(rep.recovered[l]), std::arg(bf.best[l]))));
      }
      worst = std::max(worst, dev);
      if (dev > cell) ++bad;
      if (rep.final_residual <= bf.residual) ++beaten;
    }
  }
  return {bad == 0, "40 instances, max per-phase deviation " + fmt(worst) + " rad (grid cell " + fmt(cell) + "), " +
                        std::to_string(bad) + " outside; engine residual <= grid optimum on " +
                        std::to_string(beaten) + "/40, " + fmt(seconds_since(t0)) + " s"};
}

// 5. One-sided spectra.
Verdict one_sided() {
  bool pass = true;
  std::string detail;
  for (int s : {8, 16}) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto g = generate(spec_1d(GeneratorKind::one_sided, s, seed));
      const auto rep = solve_1d(g.instance);
      if (compare_up_to_gauge(rep.recovered, g.truth).spectral_error <= kExact) ++ok;
    }
    pass = pass && ok * 100 >= 95 * 50;
    detail += "S=" + std::to_string(s) + ": " + std::to_string(ok) + "/50; ";
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

// 6. 2D recovery.
Verdict recovery_2d() {
  bool pass = true;
  std::string detail;
  int assertions = 0;
  for (int n : {1, 2, 3}) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      GeneratorSpec2D s;
      s.order = n;
      s.seed = seed;
      s.min_modulus = 0.3;
      const auto g = generate_2d(s);
      try {
        const auto rep = solve_2d(g.instance);
        if (compare_up_to_gauge(rep.recovered, g.truth).spectral_error <= kExact) ++ok;
      } catch (const std::logic_error&) {
        ++assertions;
      }
    }
    pass = pass && ok * 10 >= 9 * 50;
    detail += "N=" + std::to_string(n) + ": " + std::to_string(ok) + "/50; ";
  }
  pass = pass && assertions == 0;
  detail += std::to_string(assertions) + " ordering assertions";
  return {pass, detail};
}

// 7. Runtime ratio T(2S) / T(S), median over five bench runs.
Verdict complexity() {
  constexpr int kRuns = 5;
  const std::vector<int> sizes{64, 128, 256, 512};
  std::vector<std::vector<double>> ratios(sizes.size() - 1);
  for (int run = 0; run < kRuns; ++run) {
    BenchOptions o;
    o.sizes = sizes;
    o.trials = 10;
    o.kind = GeneratorKind::random_smooth;
    o.seed = 0;
    o.min_seconds = 0.02;
    const auto rows = run_bench(o);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      ratios[i].push_back(rows[i + 1].median_seconds / rows[i].median_seconds);
    }
  }
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    auto r = ratios[i];
    std::sort(r.begin(), r.end());
    const double med = r[r.size() / 2];
    pass = pass && med >= 3.0 && med <= 6.0;
    detail += "T(" + std::to_string(sizes[i + 1]) + ")/T(" + std::to_string(sizes[i]) + ") = " + fmt(med) +
              (i + 1 < ratios.size() ? "; " : "");
  }
  return {pass, detail};
}

struct TestFunctionRun {
  double field_error = 0.0;
  std::size_t flags = 0;
};

TestFunctionRun test_function_run(double noise, const std::string& curves) {
  const auto g = generate(spec_1d(GeneratorKind::paper_h, 0, 0, noise));
  const auto rep = solve_1d(g.instance);
  if (!curves.empty()) {
    std::ofstream field(curves + "_field.txt"), spectrum(curves + "_spectrum.txt");
    write_field_curve(field, g.instance, rep.recovered);
    write_spectrum_curve(spectrum, g.instance, rep.recovered);
  }
  return {evaluate(g.instance, rep.recovered).field_magnitude_error, rep.flags.size()};
}

// 8 and 9. The test function, clean and with uniform noise.
Verdict clean_test_function(const std::string& dir, TestFunctionRun& clean) {
  clean = test_function_run(0.0, dir.empty() ? "" : dir + "/clean");
  return {clean.field_error <= 0.1, "M=399 S=200, field_magnitude_error " + fmt(clean.field_error) + ", " +
                                        std::to_string(clean.flags) + " flags" +
                                        (dir.empty() ? "" : ", curves in " + dir + "/clean_*.txt")};
}

Verdict noisy_test_function(const std::string& dir, const TestFunctionRun& clean) {
  const auto noisy = test_function_run(0.3, dir.empty() ? "" : dir + "/noisy");
  return {std::isfinite(noisy.field_error) && noisy.field_error > clean.field_error,
          "noise 0.3, field_magnitude_error " + fmt(noisy.field_error) + " vs noiseless " + fmt(clean.field_error) +
              ", " + std::to_string(noisy.flags) + " flags"};
}

// 10. Incremental and full selectors.
Verdict selector_equivalence() {
  int differ = 0;
  const GeneratorKind kinds[] = {GeneratorKind::random_uniform, GeneratorKind::random_smooth, GeneratorKind::one_sided};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int s = 2 + static_cast<int>(seed * 37 % 63);
    const auto g = generate(spec_1d(kinds[seed % 3], s, seed));
    const auto inc = solve_1d(g.instance, {Selector::incremental});
    const auto full = solve_1d(g.instance, {Selector::full});
    if (inc.branch_log != full.branch_log) ++differ;
  }
  return {differ == 0, "100 instances, S in [2, 64], " + std::to_string(differ) + " differing branch logs"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  bool strict = false;
  std::string curves = "acceptance_curves";
  std::vector<int> only;
  app.add_flag("--strict", strict, "exit nonzero when any criterion fails");
  app.add_option("--curves", curves, "directory for the test-function curves; empty to skip");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  if (!curves.empty()) std::filesystem::create_directories(curves);

  TestFunctionRun clean;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"spectral correctness", spectral_correctness},
      {"triangle optimality", triangle_optimality},
      {"exact recovery", exact_recovery},
      {"oracle equivalence", oracle_equivalence},
      {"one-sided mode", one_sided},
      {"2D recovery", recovery_2d},
      {"complexity", complexity},
      {"test function", [&] { return clean_test_function(curves, clean); }},
      {"test function with noise",
       [&] {
         if (clean.field_error == 0.0 && !only.empty()) clean = test_function_run(0.0, "");
         return noisy_test_function(curves, clean);
       }},
      {"selector equivalence", selector_equivalence},
  };

  const std::set<int> selected(only.begin(), only.end());
  int failed = 0, errors = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
      ++errors;
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << v.detail
              << std::endl;
  }
  std::cout << "summary: " << (selected.empty() ? criteria.size() : selected.size()) - failed << " passed, "
            << failed << " failed" << std::endl;
  if (errors > 0) return 2;
  return strict && failed > 0 ? 1 : 0;
}
