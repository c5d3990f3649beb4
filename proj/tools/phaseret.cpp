// phaseret: generate, solve, verify and benchmark phase-recovery instances.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phaseret/phaseret.hpp"

namespace {

using namespace phaseret;

// Exit codes: 0 ok, 1 bad input file or I/O failure, 2 usage.
constexpr int kExitInput = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw std::runtime_error("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AnyInstance load_instance(const std::string& path) {
  std::istringstream in(slurp(path));
  return read_instance(in);
}

AnySpectrum load_spectrum(const std::string& path) {
  std::istringstream in(slurp(path));
  return read_spectrum(in);
}

// A spectrum file, or the recovered coefficients of a report file.
AnySpectrum load_coefficients(const std::string& path) {
  const std::string text = slurp(path);
  bool is_report = text.rfind("phaseret-report", 0) == 0;
  if (!is_report && text.find_first_not_of(" \t\r\n") != std::string::npos &&
      text[text.find_first_not_of(" \t\r\n")] == '{') {
    is_report = nlohmann::json::parse(text, nullptr, false).value("format", std::string{}) == "phaseret-report";
  }
  std::istringstream in(text);
  if (!is_report) return read_spectrum(in);
  const ReportDoc doc = read_report(in);
  return std::visit([](const auto& rep) -> AnySpectrum { return rep.recovered; }, doc.report);
}

// generate

struct GenerateArgs {
  std::string kind = "random-uniform";
  std::string mode = "1d";
  int size = 8;
  int grid = 0;
  std::uint64_t seed = 0;
  double noise = 0.0;
  double min_modulus = -1.0;
  std::string coeffs;
  std::string out;
  std::string truth_out;
  std::string format = "text";
};

int run_generate(const GenerateArgs& a) {
  const Format fmt = parse_format(a.format);
  if (a.noise < 0.0) throw UsageError("--noise must be nonnegative");
  if (a.mode == "2d") {
    if (a.kind != "random-uniform" && a.kind != "random_uniform") {
      throw UsageError("2d instances support only --kind random-uniform");
    }
    GeneratorSpec2D spec;
    spec.order = a.size;
    spec.grid_len = a.grid;
    spec.seed = a.seed;
    spec.noise_amplitude = a.noise;
    if (a.min_modulus >= 0.0) spec.min_modulus = a.min_modulus;
    if (spec.order < 0) throw UsageError("--size (coefficient order N) must be nonnegative");
    const auto gen = generate_2d(spec);
    Output out(a.out);
    write_instance(out.stream(), gen.instance, fmt);
    out.finish();
    if (!a.truth_out.empty()) {
      Output truth(a.truth_out);
      write_spectrum(truth.stream(), gen.truth, fmt);
      truth.finish();
    }
    return 0;
  }
  if (a.mode != "1d") throw UsageError("--mode must be 1d or 2d");

  GeneratorSpec spec;
  try {
    spec.kind = parse_generator_kind(a.kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  spec.size = a.size;
  spec.grid_len = a.grid;
  spec.seed = a.seed;
  spec.noise_amplitude = a.noise;
  if (a.min_modulus >= 0.0) spec.min_modulus = a.min_modulus;
  if (spec.kind == GeneratorKind::custom_coeffs) {
    if (a.coeffs.empty()) throw UsageError("--kind custom needs --coeffs <spectrum file>");
    const auto s = load_spectrum(a.coeffs);
    const auto* s1 = std::get_if<CenteredSpectrum>(&s);
    if (s1 == nullptr) throw UsageError("--coeffs must hold a 1d spectrum");
    spec.custom_support = s1->support();
    spec.custom_coeffs.assign(s1->in_support().begin(), s1->in_support().end());
    if (a.grid == 0) spec.grid_len = s1->grid_len();
  } else if (!a.coeffs.empty()) {
    throw UsageError("--coeffs is only valid with --kind custom");
  } else if (spec.kind != GeneratorKind::paper_h && spec.size < 1) {
    throw UsageError("--size must be positive");
  }
  const auto gen = generate(spec);
  Output out(a.out);
  write_instance(out.stream(), gen.instance, fmt);
  out.finish();
  if (!a.truth_out.empty()) {
    Output truth(a.truth_out);
    write_spectrum(truth.stream(), gen.truth, fmt);
    truth.finish();
  }
  return 0;
}

// solve

struct SolveArgs {
  std::string instance;
  std::string out;
  std::string format = "text";
  std::optional<double> gauge;
  std::string priors;
  std::string truth;
  std::string selector = "incremental";
  std::string search = "backtracking";
  std::string placeholder = "zero";
  std::string emit_curves;
};

template <class Options>
Options solve_options(const SolveArgs& a) {
  Options o;
  o.selector = a.selector == "full" ? Selector::full : Selector::incremental;
  o.search = a.search == "greedy" ? Search::greedy : Search::backtracking;
  o.placeholder = a.placeholder == "unit" ? Placeholder::unit : Placeholder::zero;
  return o;
}

template <class F>
double timed(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int run_solve(const SolveArgs& a) {
  const Format fmt = parse_format(a.format);
  AnyInstance any = load_instance(a.instance);
  std::optional<AnySpectrum> priors, truth;
  if (!a.priors.empty()) priors = load_coefficients(a.priors);
  if (!a.truth.empty()) truth = load_coefficients(a.truth);

  ReportDoc doc;
  if (auto* inst = std::get_if<ProblemInstance1D>(&any)) {
    if (a.gauge) inst->gauge_phase = std::polar(1.0, *a.gauge);
    if (priors) {
      const auto* p = std::get_if<CenteredSpectrum>(&*priors);
      if (p == nullptr) throw UsageError("--priors must match the instance mode (1d)");
      for (int l = p->support().lo; l <= p->support().hi; ++l) {
        if (std::abs((*p)[l]) > 0.0 && inst->support.contains(l)) inst->priors[l] = (*p)[l];
      }
    }
    const CenteredSpectrum* t = nullptr;
    if (truth) {
      t = std::get_if<CenteredSpectrum>(&*truth);
      if (t == nullptr) throw UsageError("--truth must match the instance mode (1d)");
    }
    SolveReport rep;
    doc.timing_seconds = timed([&] { rep = solve_1d(*inst, solve_options<SolveOptions1D>(a)); });
    doc.metrics = evaluate(*inst, rep.recovered, t);
    doc.has_truth = t != nullptr;
    if (!a.emit_curves.empty()) {
      Output field(a.emit_curves + "_field.txt");
      write_field_curve(field.stream(), *inst, rep.recovered);
      field.finish();
      Output spectrum(a.emit_curves + "_spectrum.txt");
      write_spectrum_curve(spectrum.stream(), *inst, rep.recovered);
      spectrum.finish();
    }
    doc.report = std::move(rep);
  } else {
    auto& inst2 = std::get<ProblemInstance2D>(any);
    if (a.gauge) inst2.gauge_phase = std::polar(1.0, *a.gauge);
    if (priors) {
      const auto* p = std::get_if<Spectrum2D>(&*priors);
      if (p == nullptr) throw UsageError("--priors must match the instance mode (2d)");
      for (int n1 = -p->order(); n1 <= p->order(); ++n1) {
        for (int n2 = -p->order(); n2 <= p->order(); ++n2) {
          if (std::abs((*p)(n1, n2)) > 0.0 && std::abs(n1) <= inst2.order && std::abs(n2) <= inst2.order) {
            inst2.priors[{n1, n2}] = (*p)(n1, n2);
          }
        }
      }
    }
    const Spectrum2D* t = nullptr;
    if (truth) {
      t = std::get_if<Spectrum2D>(&*truth);
      if (t == nullptr) throw UsageError("--truth must match the instance mode (2d)");
    }
    if (!a.emit_curves.empty()) throw UsageError("--emit-curves is only available for 1d instances");
    SolveReport2D rep;
    doc.timing_seconds = timed([&] { rep = solve_2d(inst2, solve_options<SolveOptions2D>(a)); });
    doc.metrics = evaluate(inst2, rep.recovered, t);
    doc.has_truth = t != nullptr;
    doc.report = std::move(rep);
  }
  Output out(a.out);
  write_report(out.stream(), doc, fmt);
  out.finish();
  return 0;
}

// verify

struct VerifyArgs {
  std::string candidate;
  std::string truth;
  std::string instance;
  std::string out;
  std::string format = "text";
};

int run_verify(const VerifyArgs& a) {
  const Format fmt = parse_format(a.format);
  const AnySpectrum cand = load_coefficients(a.candidate);
  const AnySpectrum truth = load_coefficients(a.truth);
  if (cand.index() != truth.index()) throw UsageError("candidate and truth differ in mode");
  ErrorMetrics m;
  if (!a.instance.empty()) {
    const AnyInstance inst = load_instance(a.instance);
    if (inst.index() != cand.index()) throw UsageError("instance and spectra differ in mode");
    if (const auto* i1 = std::get_if<ProblemInstance1D>(&inst)) {
      m = evaluate(*i1, std::get<CenteredSpectrum>(cand), &std::get<CenteredSpectrum>(truth));
    } else {
      m = evaluate(std::get<ProblemInstance2D>(inst), std::get<Spectrum2D>(cand), &std::get<Spectrum2D>(truth));
    }
  } else if (const auto* c1 = std::get_if<CenteredSpectrum>(&cand)) {
    const auto& t1 = std::get<CenteredSpectrum>(truth);
    if (c1->grid_len() != t1.grid_len()) throw UsageError("candidate and truth live on different grids");
    m = compare_up_to_gauge(*c1, t1);
  } else {
    m = compare_up_to_gauge(std::get<Spectrum2D>(cand), std::get<Spectrum2D>(truth));
  }
  Output out(a.out);
  if (fmt == Format::json) {
    nlohmann::json j = {{"spectral_error", m.spectral_error},
                        {"field_magnitude_error", m.field_magnitude_error},
                        {"residual", m.residual},
                        {"gauge", m.gauge},
                        {"zero_overlap", m.zero_overlap}};
    out.stream() << j.dump(1) << '\n';
  } else {
    out.stream() << "spectral_error " << format_double(m.spectral_error) << '\n'
                 << "field_magnitude_error " << format_double(m.field_magnitude_error) << '\n'
                 << "residual " << format_double(m.residual) << '\n'
                 << "gauge " << format_double(m.gauge) << '\n'
                 << "zero_overlap " << (m.zero_overlap ? 1 : 0) << '\n';
  }
  out.finish();
  return 0;
}

// bench

struct BenchArgs {
  std::vector<int> sizes;
  int trials = 10;
  std::string kind = "random-smooth";
  std::uint64_t seed = 0;
  std::string selector = "incremental";
  std::string search = "backtracking";
  std::string placeholder = "zero";
  double min_seconds = 0.02;
  std::string out;
  std::string format = "text";
};

int run_bench_cmd(const BenchArgs& a) {
  const Format fmt = parse_format(a.format);
  if (a.sizes.empty()) throw UsageError("--sizes needs at least one size");
  BenchOptions o;
  o.sizes = a.sizes;
  o.trials = a.trials;
  o.seed = a.seed;
  o.min_seconds = a.min_seconds;
  try {
    o.kind = parse_generator_kind(a.kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (o.kind == GeneratorKind::paper_h || o.kind == GeneratorKind::custom_coeffs) {
    throw UsageError("bench needs a sized generator kind");
  }
  SolveArgs sa;
  sa.selector = a.selector;
  sa.search = a.search;
  sa.placeholder = a.placeholder;
  o.solve = solve_options<SolveOptions1D>(sa);
  if (a.trials < 1) throw UsageError("--trials must be positive");
  for (int s : a.sizes) {
    if (s < 1) throw UsageError("--sizes entries must be positive");
  }
  const auto rows = run_bench(o);
  Output out(a.out);
  if (fmt == Format::json) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
      j.push_back({{"size", r.size},
                   {"mean_seconds", r.mean_seconds},
                   {"median_seconds", r.median_seconds},
                   {"mean_spectral_error", r.mean_spectral_error},
                   {"success_rate", r.success_rate}});
    }
    out.stream() << j.dump(1) << '\n';
  } else {
    out.stream() << "size mean_seconds median_seconds mean_spectral_error success_rate\n";
    for (const auto& r : rows) {
      out.stream() << r.size << ' ' << format_double(r.mean_seconds) << ' ' << format_double(r.median_seconds)
                   << ' ' << format_double(r.mean_spectral_error) << ' ' << format_double(r.success_rate) << '\n';
    }
  }
  out.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive phase recovery from field and coefficient moduli"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  const auto formats = CLI::IsMember({"text", "json"});

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Write a seeded instance (and optionally its truth)");
  gen->add_option("--kind", ga.kind, "paper-h | random-smooth | random-uniform | one-sided | custom")
      ->capture_default_str();
  gen->add_option("--mode", ga.mode, "1d | 2d")->check(CLI::IsMember({"1d", "2d"}))->capture_default_str();
  gen->add_option("--size", ga.size, "support length S (1d) or coefficient order N (2d)")->capture_default_str();
  gen->add_option("--grid", ga.grid, "grid length M per axis; 0 picks the kind's default")->capture_default_str();
  gen->add_option("--seed", ga.seed)->capture_default_str();
  gen->add_option("--noise", ga.noise, "uniform [0,1] real noise amplitude per field sample")->capture_default_str();
  gen->add_option("--min-modulus", ga.min_modulus, "lower bound of random coefficient moduli");
  gen->add_option("--coeffs", ga.coeffs, "spectrum file for --kind custom");
  gen->add_option("--out", ga.out, "instance file (default stdout)");
  gen->add_option("--truth-out", ga.truth_out, "write the true spectrum here");
  gen->add_option("--format", ga.format)->check(formats)->capture_default_str();

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Recover coefficient phases and write a report");
  solve->add_option("instance", sa.instance, "instance file")->required();
  solve->add_option("--out", sa.out, "report file (default stdout)");
  solve->add_option("--format", sa.format)->check(formats)->capture_default_str();
  solve->add_option("--gauge", sa.gauge, "global phase (radians) given to the anchor coefficient");
  solve->add_option("--priors", sa.priors, "spectrum or report whose phases seed unresolved coefficients");
  solve->add_option("--truth", sa.truth, "true spectrum; adds spectral_error to the report");
  solve->add_option("--selector", sa.selector)->check(CLI::IsMember({"incremental", "full"}))->capture_default_str();
  solve->add_option("--search", sa.search)->check(CLI::IsMember({"backtracking", "greedy"}))->capture_default_str();
  solve->add_option("--placeholder", sa.placeholder)->check(CLI::IsMember({"zero", "unit"}))->capture_default_str();
  solve->add_option("--emit-curves", sa.emit_curves,
                    "write PREFIX_field.txt (t, |f| given, |f| recovered) and PREFIX_spectrum.txt (k, |a| given, "
                    "|a| recovered)");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Compare a spectrum or report with the truth up to a global phase");
  verify->add_option("candidate", va.candidate, "spectrum or report file")->required();
  verify->add_option("--truth", va.truth, "true spectrum")->required();
  verify->add_option("--instance", va.instance, "measure the field error against this instance instead");
  verify->add_option("--out", va.out, "metrics file (default stdout)");
  verify->add_option("--format", va.format)->check(formats)->capture_default_str();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Runtime and accuracy over support sizes");
  bench->add_option("--sizes", ba.sizes, "comma separated support sizes")->delimiter(',')->required();
  bench->add_option("--trials", ba.trials)->capture_default_str();
  bench->add_option("--kind", ba.kind)->capture_default_str();
  bench->add_option("--seed", ba.seed)->capture_default_str();
  bench->add_option("--selector", ba.selector)->check(CLI::IsMember({"incremental", "full"}))->capture_default_str();
  bench->add_option("--search", ba.search)->check(CLI::IsMember({"backtracking", "greedy"}))->capture_default_str();
  bench->add_option("--placeholder", ba.placeholder)->check(CLI::IsMember({"zero", "unit"}))->capture_default_str();
  bench->add_option("--min-seconds", ba.min_seconds, "minimum timing window per solve")->capture_default_str();
  bench->add_option("--out", ba.out, "table file (default stdout)");
  bench->add_option("--format", ba.format)->check(formats)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return run_generate(ga);
    if (*solve) return run_solve(sa);
    if (*verify) return run_verify(va);
    if (*bench) return run_bench_cmd(ba);
  } catch (const UsageError& e) {
    std::cerr << "phaseret: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "phaseret: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitUsage;
}
