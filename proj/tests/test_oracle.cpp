#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "phaseret/engine1d.hpp"
#include "phaseret/oracle.hpp"

using namespace phaseret;

namespace {

constexpr double kPi = std::numbers::pi;

GeneratorSpec spec_of(GeneratorKind kind, int size, std::uint64_t seed, double noise = 0.0) {
  GeneratorSpec s;
  s.kind = kind;
  s.size = size;
  s.seed = seed;
  s.noise_amplitude = noise;
  return s;
}

}  // namespace

TEST(TestFunction, MatchesFormulaSpotValues) {
  // Written out from the formula with real arithmetic, unnormalized sinc.
  const auto h = [](double t) {
    const double pi = kPi;
    const double re_exp = -(t - 2) * (t - 2) / 0.6 + 0.2 * (1 - t * t);
    const double im_exp = 2 * t - 0.4 * t;
    const cplx env = 2.0 * std::exp(re_exp) * cplx{std::cos(im_exp), std::sin(im_exp)};
    const auto sc = [](double x) { return x == 0 ? 1.0 : std::sin(x) / x; };
    const cplx car{1.5 + 2 * std::sin(5 * pi * t) + sc(t - pi), 0.5 * std::sin(2 * pi * t) + 3 * sc(t - 2)};
    return env * car + std::sin(t * t);
  };
  for (double t : {0.0, 0.5, 1.37, 2.0, 3.14, 3.98}) EXPECT_NEAR(std::abs(paper_h(t) - h(t)), 0.0, 1e-12) << t;
}

TEST(Generate, TestFunctionInstanceShape) {
  const auto g = generate(spec_of(GeneratorKind::paper_h, 0, 0));
  EXPECT_EQ(g.instance.grid_len, 399);
  EXPECT_EQ(g.instance.support.size(), 200);
  EXPECT_EQ(g.instance.support, (Window{-100, 99}));
  EXPECT_EQ(g.instance.meta.sinc, "unnormalized");
  EXPECT_DOUBLE_EQ(g.instance.meta.dt, 0.01);
  // Truncation keeps the full-band coefficients on the support.
  SampledField f{399, {}};
  for (int n = 0; n < 399; ++n) f.values.push_back(paper_h(0.01 * n));
  const auto full = inverse_dft(f);
  for (int l = -100; l <= 99; ++l) EXPECT_NEAR(std::abs(g.truth[l] - full[l]), 0.0, 1e-12);
}

TEST(Generate, NoisyTestFunctionInstance) {
  const auto clean = generate(spec_of(GeneratorKind::paper_h, 0, 0));
  const auto noisy = generate(spec_of(GeneratorKind::paper_h, 0, 0, 0.3));
  EXPECT_EQ(noisy.instance.grid_len, 399);
  EXPECT_DOUBLE_EQ(noisy.instance.meta.noise, 0.3);
  double diff = 0.0, top = 0.0;
  for (std::size_t k = 0; k < 399; ++k) {
    const double d = noisy.instance.field_magnitude[k] - clean.instance.field_magnitude[k];
    diff = std::max(diff, std::abs(d));
    top = std::max(top, d);
  }
  EXPECT_GT(diff, 0.0);
  EXPECT_LE(diff, 0.3 + 1e-12);
  EXPECT_EQ(noisy.truth, clean.truth);
}

TEST(Generate, OneSidedSupport) {
  const auto g = generate(spec_of(GeneratorKind::one_sided, 8, 7));
  EXPECT_EQ(g.instance.support, (Window{0, 7}));
  for (int l = grid_lo(g.truth.grid_len()); l < 0; ++l) EXPECT_EQ(g.truth[l], cplx{});
  EXPECT_GE(g.instance.grid_len, 2 * 8 - 1);
}

TEST(Generate, Deterministic) {
  for (auto kind : {GeneratorKind::random_smooth, GeneratorKind::random_uniform, GeneratorKind::one_sided}) {
    const auto a = generate(spec_of(kind, 32, 1, 0.1));
    const auto b = generate(spec_of(kind, 32, 1, 0.1));
    EXPECT_EQ(a.truth, b.truth);
    EXPECT_EQ(a.instance.field_magnitude, b.instance.field_magnitude);
    EXPECT_EQ(a.instance.coeff_magnitudes, b.instance.coeff_magnitudes);
    const auto c = generate(spec_of(kind, 32, 2, 0.1));
    EXPECT_NE(a.truth, c.truth);
  }
}

TEST(Generate, SelfConsistent) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = generate(spec_of(GeneratorKind::random_uniform, 17, seed));
    std::vector<double> sq;
    for (double v : g.instance.field_magnitude) sq.push_back(v * v);
    const auto b = autocorr_from_magnitude(sq);
    const auto c = convolve_direct(g.truth);
    for (int lag = -16; lag <= 16; ++lag) EXPECT_NEAR(std::abs(b.at(lag) - c.at(lag)), 0.0, 1e-10);
    for (double m : g.instance.coeff_magnitudes) EXPECT_GE(m, 0.1);
  }
}

TEST(Generate, CustomCoefficients) {
  GeneratorSpec s;
  s.kind = GeneratorKind::custom_coeffs;
  s.custom_support = {-1, 0};
  s.custom_coeffs = {1.0, 2.0};
  const auto g = generate(s);
  EXPECT_EQ(g.instance.grid_len, 3);
  EXPECT_EQ(g.truth[0], cplx{2.0});
}

TEST(Generate, RejectsNegativeNoise) {
  EXPECT_THROW(generate(spec_of(GeneratorKind::random_smooth, 8, 0, -1.0)), std::invalid_argument);
}

TEST(CompareUpToGauge, PureGaugeIsZero) {
  const auto a = generate(spec_of(GeneratorKind::random_uniform, 10, 3)).truth;
  CenteredSpectrum b(a.grid_len(), a.support());
  for (int l = a.support().lo; l <= a.support().hi; ++l) b.set(l, a[l] * std::polar(1.0, kPi / 5));
  const auto m = compare_up_to_gauge(b, a);
  EXPECT_NEAR(m.spectral_error, 0.0, 1e-15);
  EXPECT_NEAR(m.field_magnitude_error, 0.0, 1e-14);
  EXPECT_NEAR(m.gauge, -kPi / 5, 1e-14);
  EXPECT_FALSE(m.zero_overlap);
}

TEST(CompareUpToGauge, ConjugateFlipIsNotGauge) {
  const auto a = generate(spec_of(GeneratorKind::random_uniform, 10, 4)).truth;
  CenteredSpectrum b(a.grid_len(), a.support());
  for (int l = a.support().lo; l <= a.support().hi; ++l) b.set(l, std::conj(a[l]));
  EXPECT_GT(compare_up_to_gauge(b, a).spectral_error, 1e-3);
}

TEST(CompareUpToGauge, FirstOrderPerturbation) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  const int m = 21;
  std::vector<cplx> a(10), d(10);
  for (auto& v : a) v = {nd(gen), nd(gen)};
  for (auto& v : d) v = {nd(gen), nd(gen)};
  double na = 0;
  for (auto& v : a) na += std::norm(v);
  for (auto& v : a) v /= std::sqrt(na);
  cplx proj{};
  for (std::size_t i = 0; i < 10; ++i) proj += std::conj(a[i]) * d[i];
  double nd2 = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    d[i] -= proj * a[i];
    nd2 += std::norm(d[i]);
  }
  for (auto& v : d) v /= std::sqrt(nd2);
  const double eps = 1e-5;
  std::vector<cplx> b(10);
  for (std::size_t i = 0; i < 10; ++i) b[i] = a[i] + eps * d[i];
  const CenteredSpectrum sa(m, Window{-5, 4}, a), sb(m, Window{-5, 4}, b);
  EXPECT_NEAR(compare_up_to_gauge(sb, sa).spectral_error, eps, 1e-9);
}

TEST(CompareUpToGauge, ZeroOverlapFallsBack) {
  CenteredSpectrum a(3, Window{-1, 0}), b(3, Window{-1, 0});
  a.set(0, 1.0);
  b.set(-1, 1.0);
  const auto m = compare_up_to_gauge(b, a);
  EXPECT_TRUE(m.zero_overlap);
  EXPECT_EQ(m.gauge, 0.0);
}

TEST(BruteForce, SingleFreePhase) {
  const auto g = generate(spec_of(GeneratorKind::random_uniform, 2, 6));
  const auto bf = brute_force_solve(g.instance, 64);
  EXPECT_LE(compare_up_to_gauge(bf.best, g.truth).spectral_error, 2 * kPi / 64);
}

TEST(BruteForce, EngineMatchesOracleOnTinySupports) {
  constexpr int kGrid = 32;
  for (int s : {3, 4}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto g = generate(spec_of(GeneratorKind::random_uniform, s, seed));
      const auto bf = brute_force_solve(g.instance, kGrid);
      const auto rep = solve_1d(g.instance);
      const double eng = compare_up_to_gauge(rep.recovered, g.truth).spectral_error;
      const double brute = compare_up_to_gauge(bf.best, g.truth).spectral_error;
      EXPECT_LE(eng, brute + 2 * kPi / kGrid) << "S=" << s << " seed=" << seed;
      EXPECT_LE(rep.final_residual, bf.residual + 1e-12);
    }
  }
}

TEST(BruteForce, FinerGridsApproachZeroResidual) {
  const auto g = generate(spec_of(GeneratorKind::random_uniform, 3, 11));
  double last = std::numeric_limits<double>::infinity();
  for (int grid : {8, 32, 128, 512}) {
    const double r = brute_force_solve(g.instance, grid).residual;
    EXPECT_LE(r, last * 1.0001);
    last = r;
  }
  EXPECT_LT(last, 1e-3);
}

TEST(BruteForce, BudgetGate) {
  const auto g = generate(spec_of(GeneratorKind::random_uniform, 8, 0));
  EXPECT_THROW(brute_force_solve(g.instance, 64), TooLarge);
}

TEST(Evaluate, NoiselessRecoveryScoresZero) {
  const auto g = generate(spec_of(GeneratorKind::random_smooth, 16, 2));
  const auto rep = solve_1d(g.instance);
  const auto m = evaluate(g.instance, rep.recovered, &g.truth);
  EXPECT_LE(m.spectral_error, 1e-10);
  EXPECT_LE(m.field_magnitude_error, 1e-10);
  EXPECT_LE(m.residual, 1e-18);
}

TEST(Generate2D, ShapeAndDeterminism) {
  GeneratorSpec2D s;
  s.order = 2;
  s.seed = 4;
  const auto a = generate_2d(s);
  const auto b = generate_2d(s);
  EXPECT_EQ(a.instance.grid_len, 9);
  EXPECT_EQ(a.truth, b.truth);
  for (double m : a.instance.coeff_magnitudes) EXPECT_GE(m, 0.3);
}
