#pragma once

// Ground truth for the solvers: seeded forward problems, the reference test
// waveform, up-to-gauge error metrics and an exhaustive phase-grid search.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phaseret/engine1d.hpp"
#include "phaseret/engine2d.hpp"
#include "phaseret/error.hpp"
#include "phaseret/spectral.hpp"
#include "phaseret/triangle.hpp"

namespace phaseret {

/// Seeded uniform source. The double conversion is spelled out so streams
/// are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double phase() { return kTwoPi * uniform(); }

 private:
  std::mt19937_64 engine_;
};

enum class GeneratorKind { paper_h, random_smooth, random_uniform, one_sided, custom_coeffs };

inline std::string_view to_string(GeneratorKind k) noexcept {
  switch (k) {
    case GeneratorKind::paper_h: return "paper_h";
    case GeneratorKind::random_smooth: return "random_smooth";
    case GeneratorKind::random_uniform: return "random_uniform";
    case GeneratorKind::one_sided: return "one_sided";
    case GeneratorKind::custom_coeffs: return "custom_coeffs";
  }
  return "unknown";
}

/// Accepts both snake_case and kebab-case names.
inline GeneratorKind parse_generator_kind(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '-', '_');
  for (auto k : {GeneratorKind::paper_h, GeneratorKind::random_smooth, GeneratorKind::random_uniform,
                 GeneratorKind::one_sided, GeneratorKind::custom_coeffs}) {
    if (s == to_string(k)) return k;
  }
  if (s == "custom") return GeneratorKind::custom_coeffs;
  throw std::invalid_argument("unknown generator kind '" + std::string(name) + "'");
}

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::random_uniform;
  /// Support length S (ignored by paper_h and custom_coeffs).
  int size = 8;
  /// Grid length; 0 picks the kind's default.
  int grid_len = 0;
  std::uint64_t seed = 0;
  double noise_amplitude = 0.0;
  /// Lower bound of generated coefficient moduli.
  double min_modulus = 0.1;
  /// custom_coeffs only.
  Window custom_support{};
  std::vector<cplx> custom_coeffs;
};

struct Generated1D {
  CenteredSpectrum truth;
  ProblemInstance1D instance;
};

/// Reference waveform sampling parameters: 399 samples, t = 0 .. 3.98.
inline constexpr int kTestSamples = 399;
inline constexpr double kTestStep = 0.01;
inline constexpr int kTestSupport = 200;

/// sin(x)/x with sinc(0) = 1.
inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

/// h(t) = 2 exp(-(t-2)^2/0.6 + 2it + 0.2(it-1)^2)
///        * (1.5 + 2 sin(5 pi t) + 0.5i sin(2 pi t) + sinc(t - pi) + 3i sinc(t - 2))
///        + sin(t^2)
inline cplx paper_h(double t) {
  using namespace std::complex_literals;
  const double pi = std::numbers::pi;
  const cplx it = 1i * t;
  const cplx envelope = 2.0 * std::exp(-(t - 2.0) * (t - 2.0) / 0.6 + 2.0 * it + 0.2 * (it - 1.0) * (it - 1.0));
  const cplx carrier = 1.5 + 2.0 * std::sin(5.0 * pi * t) + 0.5i * std::sin(2.0 * pi * t) + sinc(t - pi) +
                       3.0i * sinc(t - 2.0);
  return envelope * carrier + std::sin(t * t);
}

namespace detail {

inline Window centered_window(int size) { return Window{-(size / 2), -(size / 2) + size - 1}; }

inline CenteredSpectrum truncated_test_spectrum() {
  const int m = kTestSamples;
  SampledField field{m, std::vector<cplx>(static_cast<std::size_t>(m))};
  for (int n = 0; n < m; ++n) field.values[static_cast<std::size_t>(n)] = paper_h(kTestStep * n);
  const CenteredSpectrum full = inverse_dft(field);
  const Window keep = centered_window(kTestSupport);
  CenteredSpectrum out(m, keep);
  for (int l = keep.lo; l <= keep.hi; ++l) out.set(l, full[l]);
  return out;
}

inline CenteredSpectrum random_spectrum(int grid_len, Window support, Rng& rng, double min_modulus,
                                        bool smooth) {
  CenteredSpectrum out(grid_len, support);
  const double width = std::max(1.0, 0.35 * support.size());
  const double center = 0.5 * (support.lo + support.hi);
  for (int l = support.lo; l <= support.hi; ++l) {
    double modulus = rng.uniform(min_modulus, 1.0);
    if (smooth) {
      const double x = (l - center) / width;
      modulus = min_modulus + (1.0 - min_modulus) * std::exp(-x * x) * (0.75 + 0.25 * rng.uniform());
    }
    out.set(l, std::polar(modulus, rng.phase()));
  }
  return out;
}

}  // namespace detail

/// Forward problem from a known spectrum: |F| is measured from the synthesised
/// field (plus optional uniform real noise on each sample), |a_l| from the same
/// field restricted to the support.
inline ProblemInstance1D measure_instance(const CenteredSpectrum& truth, double noise, Rng& rng) {
  SampledField field = forward_dft(truth);
  ProblemInstance1D inst;
  inst.grid_len = truth.grid_len();
  inst.support = truth.support();
  if (noise > 0.0) {
    for (auto& v : field.values) v += noise * rng.uniform();
    const CenteredSpectrum noisy = inverse_dft(field);
    for (int l = inst.support.lo; l <= inst.support.hi; ++l) inst.coeff_magnitudes.push_back(std::abs(noisy[l]));
  } else {
    for (const auto& a : truth.in_support()) inst.coeff_magnitudes.push_back(std::abs(a));
  }
  inst.field_magnitude.reserve(field.values.size());
  for (const auto& v : field.values) inst.field_magnitude.push_back(std::abs(v));
  return inst;
}

inline Generated1D generate(const GeneratorSpec& spec) {
  if (spec.noise_amplitude < 0.0 || !std::isfinite(spec.noise_amplitude)) {
    throw std::invalid_argument("noise amplitude must be finite and nonnegative");
  }
  Rng rng(spec.seed);
  CenteredSpectrum truth;
  InstanceMeta meta;
  meta.kind = std::string(to_string(spec.kind));
  meta.seed = spec.seed;
  meta.noise = spec.noise_amplitude;

  const auto need_size = [&] {
    if (spec.size < 1) throw std::invalid_argument("support size must be positive");
  };
  switch (spec.kind) {
    case GeneratorKind::paper_h:
      truth = detail::truncated_test_spectrum();
      meta.t0 = 0.0;
      meta.dt = kTestStep;
      break;
    case GeneratorKind::random_uniform:
    case GeneratorKind::random_smooth: {
      need_size();
      const int m = spec.grid_len > 0 ? spec.grid_len : 2 * spec.size - 1;
      truth = detail::random_spectrum(m, detail::centered_window(spec.size), rng, spec.min_modulus,
                                      spec.kind == GeneratorKind::random_smooth);
      break;
    }
    case GeneratorKind::one_sided: {
      need_size();
      // Nonnegative frequencies only; more than half of the grid is empty.
      const int m = spec.grid_len > 0 ? spec.grid_len : 2 * spec.size + 1;
      truth = detail::random_spectrum(m, Window{0, spec.size - 1}, rng, spec.min_modulus, false);
      break;
    }
    case GeneratorKind::custom_coeffs: {
      const int s = spec.custom_support.size();
      const int m = spec.grid_len > 0 ? spec.grid_len : 2 * s - 1;
      truth = CenteredSpectrum(m, spec.custom_support, spec.custom_coeffs);
      break;
    }
  }
  Generated1D out{truth, measure_instance(truth, spec.noise_amplitude, rng)};
  out.instance.meta = meta;
  out.instance.validate();
  return out;
}

struct ErrorMetrics {
  /// min over a global phase of ||recovered e^{i phi} - truth|| / ||truth||.
  double spectral_error = 0.0;
  /// Relative RMS between |f_recovered| and the reference |f|.
  double field_magnitude_error = 0.0;
  /// ||c - b||^2 over the autocorrelation rows.
  double residual = 0.0;
  /// sum conj(recovered) truth vanished; phi = 0 was used.
  bool zero_overlap = false;
  /// The aligning phase phi.
  double gauge = 0.0;
};

namespace detail {

inline ErrorMetrics spectral_distance(std::span<const cplx> recovered, std::span<const cplx> truth) {
  if (recovered.size() != truth.size()) throw std::invalid_argument("spectra differ in length");
  cplx overlap{};
  double norm_truth = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    overlap += std::conj(recovered[i]) * truth[i];
    norm_truth += std::norm(truth[i]);
  }
  ErrorMetrics m;
  m.zero_overlap = std::abs(overlap) == 0.0;
  m.gauge = m.zero_overlap ? 0.0 : std::arg(overlap);
  const cplx rot = std::polar(1.0, m.gauge);
  double dist = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) dist += std::norm(recovered[i] * rot - truth[i]);
  m.spectral_error = norm_truth > 0.0 ? std::sqrt(dist / norm_truth) : std::sqrt(dist);
  return m;
}

inline CenteredSpectrum widen(const CenteredSpectrum& spec, Window w) {
  CenteredSpectrum out(spec.grid_len(), w);
  for (int l = w.lo; l <= w.hi; ++l) out.set(l, spec[l]);
  return out;
}

inline double relative_rms(std::span<const double> got, std::span<const double> want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline std::vector<double> field_moduli(const CenteredSpectrum& spec) {
  const auto f = forward_dft(spec);
  std::vector<double> out;
  out.reserve(f.values.size());
  for (const auto& v : f.values) out.push_back(std::abs(v));
  return out;
}

}  // namespace detail

/// Compare a recovered spectrum with the truth after removing the optimal
/// global phase phi = arg(sum conj(recovered) truth). The field error and
/// residual are measured against the truth's own field and autocorrelation.
inline ErrorMetrics compare_up_to_gauge(const CenteredSpectrum& recovered, const CenteredSpectrum& truth) {
  if (recovered.grid_len() != truth.grid_len()) throw std::invalid_argument("spectra live on different grids");
  ErrorMetrics m = detail::spectral_distance(recovered.dense(), truth.dense());
  m.field_magnitude_error = detail::relative_rms(detail::field_moduli(recovered), detail::field_moduli(truth));
  const Window w{std::min(recovered.support().lo, truth.support().lo),
                 std::max(recovered.support().hi, truth.support().hi)};
  const auto cr = convolve_direct(detail::widen(recovered, w));
  const auto ct = convolve_direct(detail::widen(truth, w));
  for (int lag = 0; lag < w.size(); ++lag) m.residual += std::norm(cr.at(lag) - ct.at(lag));
  return m;
}

/// Metrics of a recovered spectrum against an instance: field error against
/// the given |f|, residual against the measured autocorrelation, and spectral
/// error against `truth` when one is supplied.
inline ErrorMetrics evaluate(const ProblemInstance1D& inst, const CenteredSpectrum& recovered,
                             const CenteredSpectrum* truth = nullptr) {
  ErrorMetrics m;
  if (truth != nullptr) m = detail::spectral_distance(recovered.dense(), truth->dense());
  m.field_magnitude_error = detail::relative_rms(detail::field_moduli(recovered), inst.field_magnitude);
  std::vector<double> mag_sq;
  for (double v : inst.field_magnitude) mag_sq.push_back(v * v);
  const auto b = autocorr_from_magnitude(mag_sq);
  const auto c = convolve_direct(recovered);
  m.residual = 0.0;
  for (int lag = 0; lag < recovered.support().size(); ++lag) m.residual += std::norm(c.at(lag) - b.at(lag));
  return m;
}

struct BruteForceResult {
  CenteredSpectrum best;
  double residual = 0.0;
  std::uint64_t evaluated = 0;
};

inline constexpr std::uint64_t kBruteForceBudget = std::uint64_t{1} << 30;

/// Exhaustive search over a G-point phase grid for every coefficient except
/// the top one, whose phase is the gauge. Minimises sum_{L >= 0} |c_L - b_L|^2.
/// Ties keep the first grid point in lexicographic order.
inline BruteForceResult brute_force_solve(const ProblemInstance1D& raw, int grid_points,
                                          std::uint64_t budget = kBruteForceBudget) {
  if (grid_points < 1) throw std::invalid_argument("grid must have at least one point per phase");
  const ProblemInstance1D inst = trim_support(raw);
  const std::size_t s = static_cast<std::size_t>(inst.support.size());
  const std::size_t free = s - 1;

  double cost = 1.0;
  for (std::size_t i = 0; i < free; ++i) cost *= grid_points;
  if (cost > static_cast<double>(budget)) {
    throw TooLarge("phase grid of " + std::to_string(grid_points) + "^" + std::to_string(free) +
                   " points exceeds the search budget");
  }

  std::vector<double> mag_sq;
  for (double v : inst.field_magnitude) mag_sq.push_back(v * v);
  const auto b_full = autocorr_from_magnitude(mag_sq);
  std::vector<cplx> b(s);
  for (std::size_t lag = 0; lag < s; ++lag) b[lag] = b_full.at(static_cast<int>(lag));

  const auto g = static_cast<std::size_t>(grid_points);
  std::vector<cplx> unit(g), unit2(g);
  for (std::size_t k = 0; k < g; ++k) {
    unit[k] = std::polar(1.0, kTwoPi * static_cast<double>(k) / grid_points);
    unit2[k] = unit[k] * unit[k];
  }

  const cplx gauge = raw.gauge_phase / std::abs(raw.gauge_phase);
  std::vector<cplx> a(s);
  for (std::size_t i = 0; i < s; ++i) a[i] = inst.coeff_magnitudes[i] * gauge;
  std::vector<std::size_t> choice(s, 0), best_choice(s, 0);

  BruteForceResult out;
  double best = std::numeric_limits<double>::infinity();

  const auto full_residual = [&] {
    double d = 0.0;
    for (std::size_t lag = 0; lag < s; ++lag) {
      cplx c{};
      for (std::size_t j = lag; j < s; ++j) c += a[j] * std::conj(a[j - lag]);
      d += std::norm(c - b[lag]);
    }
    return d;
  };

  if (free == 0) {
    out.residual = full_residual();
    out.evaluated = 1;
  } else {
    // Free coefficients are positions 0..S-2; the innermost one, p = S-2, is
    // swept analytically: d(alpha) = K0 + 2 Re(K1 e^{i alpha}) + 2 Re(K2 e^{2 i alpha}).
    const std::size_t p = s - 2;
    const double r = inst.coeff_magnitudes[p];
    const auto sweep_innermost = [&] {
      double k0 = 0.0;
      cplx k1{}, k2{};
      for (std::size_t lag = 0; lag < s; ++lag) {
        cplx rest{}, u{}, v{};
        for (std::size_t j = lag; j < s; ++j) {
          const std::size_t q = j - lag;
          if (lag == 0 && j == p) {
            rest += r * r;
          } else if (j == p) {
            u += r * std::conj(a[q]);
          } else if (q == p) {
            v += a[j] * r;
          } else {
            rest += a[j] * std::conj(a[q]);
          }
        }
        const cplx e = rest - b[lag];
        k0 += std::norm(e) + std::norm(u) + std::norm(v);
        k1 += std::conj(e) * u + e * std::conj(v);
        k2 += u * std::conj(v);
      }
      for (std::size_t k = 0; k < g; ++k) {
        const double d = k0 + 2.0 * (k1 * unit[k]).real() + 2.0 * (k2 * unit2[k]).real();
        if (d < best) {
          best = d;
          choice[p] = k;
          best_choice = choice;
        }
      }
      out.evaluated += g;
    };

    const auto descend = [&](auto&& self, std::size_t level) -> void {
      if (level == p) {
        sweep_innermost();
        return;
      }
      for (std::size_t k = 0; k < g; ++k) {
        choice[level] = k;
        a[level] = inst.coeff_magnitudes[level] * gauge * unit[k];
        self(self, level + 1);
      }
    };
    descend(descend, 0);

    for (std::size_t i = 0; i < free; ++i) a[i] = inst.coeff_magnitudes[i] * gauge * unit[best_choice[i]];
    out.residual = full_residual();
  }

  CenteredSpectrum spec(raw.grid_len, raw.support);
  for (int l = raw.support.lo; l <= raw.support.hi; ++l) {
    if (inst.support.contains(l)) {
      spec.set(l, a[static_cast<std::size_t>(l - inst.support.lo)]);
    } else {
      spec.set(l, raw.modulus(l) * gauge);
    }
  }
  out.best = std::move(spec);
  return out;
}

struct GeneratorSpec2D {
  int order = 1;
  /// Grid length per axis; 0 picks 4N+1.
  int grid_len = 0;
  std::uint64_t seed = 0;
  double noise_amplitude = 0.0;
  double min_modulus = 0.3;
};

struct Generated2D {
  Spectrum2D truth;
  ProblemInstance2D instance;
};

/// 2D forward problem from a known square of coefficients; noise as in 1D.
inline ProblemInstance2D measure_instance_2d(const Spectrum2D& truth, double noise, Rng& rng) {
  Field2D field = forward_dft_2d(truth);
  ProblemInstance2D inst;
  inst.order = truth.order();
  inst.grid_len = truth.grid_len();
  if (noise > 0.0) {
    for (auto& v : field.values) v += noise * rng.uniform();
    const Spectrum2D noisy = inverse_dft_2d(field, truth.order(), false);
    for (int n1 = -inst.order; n1 <= inst.order; ++n1) {
      for (int n2 = -inst.order; n2 <= inst.order; ++n2) inst.coeff_magnitudes.push_back(std::abs(noisy(n1, n2)));
    }
  } else {
    for (const auto& a : truth.values()) inst.coeff_magnitudes.push_back(std::abs(a));
  }
  for (const auto& v : field.values) inst.field_magnitude.push_back(std::abs(v));
  return inst;
}

/// Random square with moduli uniform in [min_modulus, 1] and uniform phases.
inline Generated2D generate_2d(const GeneratorSpec2D& spec) {
  if (spec.order < 0) throw std::invalid_argument("coefficient order must be nonnegative");
  if (spec.noise_amplitude < 0.0 || !std::isfinite(spec.noise_amplitude)) {
    throw std::invalid_argument("noise amplitude must be finite and nonnegative");
  }
  Rng rng(spec.seed);
  const int m = spec.grid_len > 0 ? spec.grid_len : 4 * spec.order + 1;
  Spectrum2D truth(m, spec.order);
  for (int n1 = -spec.order; n1 <= spec.order; ++n1) {
    for (int n2 = -spec.order; n2 <= spec.order; ++n2) {
      const double modulus = rng.uniform(spec.min_modulus, 1.0);
      truth.set(n1, n2, std::polar(modulus, rng.phase()));
    }
  }
  Generated2D out{truth, measure_instance_2d(truth, spec.noise_amplitude, rng)};
  out.instance.meta.kind = "random_uniform";
  out.instance.meta.seed = spec.seed;
  out.instance.meta.noise = spec.noise_amplitude;
  out.instance.validate();
  return out;
}

namespace detail {

inline std::vector<double> field_moduli(const Spectrum2D& spec) {
  const auto f = forward_dft_2d(spec);
  std::vector<double> out;
  out.reserve(f.values.size());
  for (const auto& v : f.values) out.push_back(std::abs(v));
  return out;
}

inline double row_residual_2d(const Autocorr2D& c, const Autocorr2D& b, int order) {
  const Lattice2D lat(order);
  double d = 0.0;
  for (std::size_t k = 0; k < lat.lag_count(); ++k) {
    const auto [l1, l2] = lat.lag(k);
    d += std::norm(c.at(l1, l2) - b.at(l1, l2));
  }
  return d;
}

}  // namespace detail

inline ErrorMetrics compare_up_to_gauge(const Spectrum2D& recovered, const Spectrum2D& truth) {
  if (recovered.grid_len() != truth.grid_len() || recovered.order() != truth.order()) {
    throw std::invalid_argument("spectra differ in grid or order");
  }
  ErrorMetrics m = detail::spectral_distance(recovered.values(), truth.values());
  m.field_magnitude_error = detail::relative_rms(detail::field_moduli(recovered), detail::field_moduli(truth));
  m.residual = detail::row_residual_2d(convolve_direct_2d(recovered), convolve_direct_2d(truth), truth.order());
  return m;
}

inline ErrorMetrics evaluate(const ProblemInstance2D& inst, const Spectrum2D& recovered,
                             const Spectrum2D* truth = nullptr) {
  ErrorMetrics m;
  if (truth != nullptr) m = detail::spectral_distance(recovered.values(), truth->values());
  m.field_magnitude_error = detail::relative_rms(detail::field_moduli(recovered), inst.field_magnitude);
  std::vector<double> mag_sq;
  for (double v : inst.field_magnitude) mag_sq.push_back(v * v);
  m.residual = detail::row_residual_2d(convolve_direct_2d(recovered), autocorr2d(mag_sq, inst.grid_len), inst.order);
  return m;
}

}  // namespace phaseret
