#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "phaseret/spectral.hpp"

using namespace phaseret;

namespace {

constexpr double kPi = std::numbers::pi;

CenteredSpectrum random_coeffs(int m, Window w, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  CenteredSpectrum s(m, w);
  for (int l = w.lo; l <= w.hi; ++l) s.set(l, {nd(gen), nd(gen)});
  return s;
}

// Independent textbook autocorrelation: b_L = sum_j a_j conj(a_{j-L}).
cplx naive_autocorr(const CenteredSpectrum& a, int lag) {
  cplx acc{};
  const Window w = a.support();
  for (int j = w.lo; j <= w.hi; ++j) {
    if (w.contains(j - lag)) acc += a[j] * std::conj(a[j - lag]);
  }
  return acc;
}

}  // namespace

TEST(GridIndexing, OddAndEvenRanges) {
  EXPECT_EQ(grid_lo(3), -1);
  EXPECT_EQ(grid_hi(3), 1);
  EXPECT_EQ(grid_lo(4), -2);
  EXPECT_EQ(grid_hi(4), 1);
  EXPECT_EQ(grid_offset(-1, 3), 0u);
  EXPECT_EQ(grid_offset(1, 3), 2u);
  EXPECT_EQ(grid_offset(-2, 4), 0u);
  EXPECT_TRUE(on_grid(-199, 399));
  EXPECT_FALSE(on_grid(200, 399));
}

TEST(CenteredSpectrumType, RejectsBadSupport) {
  EXPECT_THROW(CenteredSpectrum(3, Window{-2, 0}), std::invalid_argument);
  EXPECT_THROW(CenteredSpectrum(3, Window{1, 0}), std::invalid_argument);
  EXPECT_THROW(CenteredSpectrum(0, Window{0, 0}), std::invalid_argument);
  CenteredSpectrum s(5, Window{-1, 0});
  EXPECT_THROW(s.set(1, 1.0), std::out_of_range);
  EXPECT_EQ(s[2], cplx{});
}

TEST(ForwardDft, DeltaIsConstant) {
  CenteredSpectrum a(3, Window{0, 0});
  a.set(0, 1.0);
  const auto f = forward_dft(a);
  for (int k = -1; k <= 1; ++k) EXPECT_NEAR(std::abs(f.at(k) - cplx{1.0}), 0.0, 1e-15);
}

TEST(ForwardDft, TwoCoefficientsByHand) {
  CenteredSpectrum a(3, Window{-1, 0});
  a.set(-1, 1.0);
  a.set(0, 2.0);
  const auto f = forward_dft(a);
  for (int k = -1; k <= 1; ++k) {
    const cplx expected = 2.0 + std::polar(1.0, -2.0 * kPi * k / 3.0);
    EXPECT_NEAR(std::abs(f.at(k) - expected), 0.0, 1e-14) << "k=" << k;
  }
}

class RoundTrip : public ::testing::TestWithParam<int> {};

TEST_P(RoundTrip, InverseOfForward) {
  const int m = GetParam();
  std::mt19937_64 gen(static_cast<unsigned>(m));
  const Window w{grid_lo(m), grid_hi(m)};
  const auto a = random_coeffs(m, w, gen);
  const auto back = inverse_dft(forward_dft(a), w);
  for (int l = w.lo; l <= w.hi; ++l) EXPECT_NEAR(std::abs(back[l] - a[l]), 0.0, 1e-12) << "l=" << l;
}

INSTANTIATE_TEST_SUITE_P(Grids, RoundTrip, ::testing::Values(3, 7, 399, 8));

TEST(InverseDft, ConstantFieldIsDelta) {
  SampledField f{3, {1.0, 1.0, 1.0}};
  const auto a = inverse_dft(f, Window{0, 0});
  EXPECT_NEAR(std::abs(a[0] - cplx{1.0}), 0.0, 1e-15);
}

TEST(InverseDft, RecoversHandComputedPair) {
  SampledField f{3, {}};
  for (int k = -1; k <= 1; ++k) f.values.push_back(2.0 + std::polar(1.0, -2.0 * kPi * k / 3.0));
  const auto a = inverse_dft(f, Window{-1, 0});
  EXPECT_NEAR(std::abs(a[-1] - cplx{1.0}), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(a[0] - cplx{2.0}), 0.0, 1e-14);
}

TEST(InverseDft, EnergyOutsideWindowIsReported) {
  SampledField f{3, {1.0, 1.0, 1.0}};
  try {
    (void)inverse_dft(f, Window{1, 1});
    FAIL() << "expected SupportViolation";
  } catch (const SupportViolation& e) {
    EXPECT_EQ(e.index(), 0);
  }
}

TEST(Autocorr, ConstantMagnitude) {
  const std::vector<double> mag_sq(3, 4.0);
  const auto b = autocorr_from_magnitude(mag_sq);
  EXPECT_NEAR(std::abs(b.at(0) - cplx{4.0}), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(b.at(1)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(b.at(-1)), 0.0, 1e-14);
}

TEST(Autocorr, HandExpandedPair) {
  std::vector<double> mag_sq;
  for (int k = -1; k <= 1; ++k) mag_sq.push_back(std::norm(2.0 + std::polar(1.0, -2.0 * kPi * k / 3.0)));
  const auto b = autocorr_from_magnitude(mag_sq);
  EXPECT_NEAR(std::abs(b.at(1) - cplx{2.0}), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(b.at(0) - cplx{5.0}), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(b.at(-1) - cplx{2.0}), 0.0, 1e-14);
}

TEST(Autocorr, RejectsNegativeSquaredMagnitude) {
  const std::vector<double> mag_sq{1.0, -1.0, 1.0};
  EXPECT_THROW((void)autocorr_from_magnitude(mag_sq), std::invalid_argument);
}

TEST(ConvolveDirect, SingleCoefficient) {
  CenteredSpectrum a(3, Window{0, 0});
  a.set(0, 2.0);
  const auto b = convolve_direct(a);
  EXPECT_EQ(b.at(0), cplx{4.0});
  EXPECT_EQ(b.at(1), cplx{});
  EXPECT_EQ(b.at(-1), cplx{});
}

TEST(ConvolveDirect, HandExpandedPair) {
  CenteredSpectrum a(3, Window{-1, 0});
  a.set(-1, 1.0);
  a.set(0, 2.0);
  const auto b = convolve_direct(a);
  EXPECT_EQ(b.at(-1), cplx{2.0});
  EXPECT_EQ(b.at(0), cplx{5.0});
  EXPECT_EQ(b.at(1), cplx{2.0});
}

TEST(ConvolveDirect, TopLagIsEndpointProduct) {
  std::mt19937_64 gen(5);
  const auto a = random_coeffs(15, Window{-3, 4}, gen);
  const auto b = convolve_direct(a);
  EXPECT_NEAR(std::abs(b.at(7) - a[4] * std::conj(a[-3])), 0.0, 1e-14);
  EXPECT_EQ(b.at(-8), cplx{});
}

TEST(ConvolveDirect, MatchesNaiveSum) {
  std::mt19937_64 gen(11);
  const auto a = random_coeffs(21, Window{-5, 5}, gen);
  const auto b = convolve_direct(a);
  for (int lag = -10; lag <= 10; ++lag) EXPECT_NEAR(std::abs(b.at(lag) - naive_autocorr(a, lag)), 0.0, 1e-12);
}

TEST(SpectralProperties, AliasFreeAutocorrelation) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int s = 1 + trial % 16;
    const int m = 2 * s - 1 + trial % 3;
    const auto a = random_coeffs(m, Window{-(s / 2), s - 1 - s / 2}, gen);
    const auto b = autocorr_from_magnitude(squared_magnitude(forward_dft(a)));
    for (int lag = grid_lo(m); lag <= grid_hi(m); ++lag) {
      EXPECT_NEAR(std::abs(b.at(lag) - naive_autocorr(a, lag)), 0.0, 1e-10) << "S=" << s << " lag=" << lag;
    }
  }
}

TEST(SpectralProperties, RandomM31MatchesConvolution) {
  std::mt19937_64 gen(3);
  const auto a = random_coeffs(31, Window{-8, 7}, gen);
  const auto b = autocorr_from_magnitude(squared_magnitude(forward_dft(a)));
  const auto c = convolve_direct(a);
  for (int lag = -15; lag <= 15; ++lag) EXPECT_NEAR(std::abs(b.at(lag) - c.at(lag)), 0.0, 1e-10);
}

TEST(SpectralProperties, Parseval) {
  std::mt19937_64 gen(17);
  for (int m : {5, 16, 101}) {
    const auto a = random_coeffs(m, Window{grid_lo(m), grid_hi(m)}, gen);
    const auto f = forward_dft(a);
    double lhs = 0.0, rhs = 0.0;
    for (const auto& v : f.values) lhs += std::norm(v);
    for (const auto& v : a.in_support()) rhs += std::norm(v);
    EXPECT_NEAR(lhs, m * rhs, 1e-10 * lhs);
  }
}

TEST(SpectralProperties, ConjugateSymmetry) {
  std::mt19937_64 gen(23);
  const auto a = random_coeffs(41, Window{-10, 10}, gen);
  const auto b = autocorr_from_magnitude(squared_magnitude(forward_dft(a)));
  for (int j = 0; j <= 20; ++j) EXPECT_NEAR(std::abs(b.at(-j) - std::conj(b.at(j))), 0.0, 1e-12);
}

TEST(Twiddles, ExactReduction) {
  const Twiddles w(7);
  EXPECT_EQ(w(3), w(10));
  EXPECT_EQ(w(-4), w(3));
  EXPECT_EQ(w(0), cplx{1.0});
}
