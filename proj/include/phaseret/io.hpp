#pragma once

// Instance, spectrum and report files.
//
// Text files are line oriented: a "<format> <version>" header, one keyword
// per line, counted blocks of values, and a closing "end". Every double is
// written with 17 significant digits so files round-trip exactly. JSON
// files carry the same fields; readers accept either and detect JSON by a
// leading '{'.

#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <istream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "phaseret/engine1d.hpp"
#include "phaseret/engine2d.hpp"
#include "phaseret/error.hpp"
#include "phaseret/oracle.hpp"
#include "phaseret/recursion.hpp"

namespace phaseret {

inline constexpr const char* kToolVersion = "phaseret 0.1.0";
inline constexpr int kFileVersion = 1;

enum class Format { text, json };

inline Format parse_format(std::string_view name) {
  if (name == "text") return Format::text;
  if (name == "json") return Format::json;
  throw std::invalid_argument("unknown format '" + std::string(name) + "' (expected text or json)");
}

/// Decimal form with 17 significant digits.
inline std::string format_double(double v) {
  if (!std::isfinite(v)) {
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw FormatError("expected a number, found '" + std::string(s) + "'");
  }
  return v;
}

inline long long parse_integer(std::string_view s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw FormatError("expected an integer, found '" + std::string(s) + "'");
  }
  return v;
}

using AnyInstance = std::variant<ProblemInstance1D, ProblemInstance2D>;
using AnySpectrum = std::variant<CenteredSpectrum, Spectrum2D>;

/// A solve result as stored on disk.
struct ReportDoc {
  std::variant<SolveReport, SolveReport2D> report;
  /// Metrics against the instance (and the truth, when one was supplied).
  ErrorMetrics metrics;
  bool has_truth = false;
  double timing_seconds = 0.0;
  std::string tool = kToolVersion;
};

namespace detail {

// Whitespace-separated tokens, one logical line at a time.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-empty line split into tokens; `rest` keeps the raw text after
  /// the first `keep` tokens.
  std::vector<std::string> next(std::size_t keep = 0, std::string* rest = nullptr) {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::vector<std::string> tokens;
      std::size_t pos = 0;
      while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
        if (pos >= line.size()) break;
        if (rest != nullptr && keep > 0 && tokens.size() == keep) {
          *rest = line.substr(pos);
          break;
        }
        std::size_t end = pos;
        while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
        tokens.push_back(line.substr(pos, end - pos));
        pos = end;
      }
      if (!tokens.empty()) return tokens;
    }
    throw FormatError("unexpected end of file after line " + std::to_string(number_));
  }

  std::vector<std::string> expect(std::string_view key, std::size_t count) {
    auto t = next();
    if (t[0] != key || t.size() != count + 1) {
      throw FormatError("line " + std::to_string(number_) + ": expected '" + std::string(key) + "' with " +
                        std::to_string(count) + " value(s)");
    }
    return t;
  }

  std::size_t block(std::string_view key) {
    const auto t = expect(key, 1);
    const auto n = parse_integer(t[1]);
    if (n < 0) throw FormatError("line " + std::to_string(number_) + ": negative count");
    return static_cast<std::size_t>(n);
  }

  std::vector<double> values(std::size_t n) {
    std::vector<double> out;
    out.reserve(n);
    while (out.size() < n) {
      for (const auto& tok : next()) {
        if (out.size() == n) throw FormatError("line " + std::to_string(number_) + ": too many values");
        out.push_back(parse_double(tok));
      }
    }
    return out;
  }

  int line() const noexcept { return number_; }

 private:
  std::istream& in_;
  int number_ = 0;
};

inline void header(std::ostream& out, std::string_view kind) { out << kind << ' ' << kFileVersion << '\n'; }

inline std::string read_header(LineReader& r, std::string_view kind) {
  const auto t = r.next();
  if (t.size() != 2 || t[0] != kind) throw FormatError("not a " + std::string(kind) + " file");
  if (parse_integer(t[1]) != kFileVersion) throw FormatError("unsupported " + std::string(kind) + " version " + t[1]);
  return t[1];
}

inline void write_values(std::ostream& out, std::string_view key, const std::vector<double>& v) {
  out << key << ' ' << v.size() << '\n';
  for (double x : v) out << format_double(x) << '\n';
}

inline std::string cplx_text(cplx v) { return format_double(v.real()) + ' ' + format_double(v.imag()); }

inline bool looks_like_json(std::istream& in) {
  while (in && std::isspace(in.peek())) in.get();
  return in.peek() == '{';
}

inline nlohmann::json cplx_json(cplx v) { return nlohmann::json::array({v.real(), v.imag()}); }

inline cplx json_cplx(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw FormatError("complex value must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline void check_json_header(const nlohmann::json& j, std::string_view kind) {
  if (j.value("format", std::string{}) != kind) throw FormatError("not a " + std::string(kind) + " document");
  if (j.value("version", 0) != kFileVersion) throw FormatError("unsupported " + std::string(kind) + " version");
}

inline nlohmann::json meta_json(const InstanceMeta& m) {
  return {{"kind", m.kind}, {"seed", m.seed}, {"noise", m.noise}, {"sinc", m.sinc}, {"t0", m.t0}, {"dt", m.dt}};
}

inline InstanceMeta json_meta(const nlohmann::json& j) {
  InstanceMeta m;
  m.kind = j.value("kind", m.kind);
  m.seed = j.value("seed", m.seed);
  m.noise = j.value("noise", m.noise);
  m.sinc = j.value("sinc", m.sinc);
  m.t0 = j.value("t0", m.t0);
  m.dt = j.value("dt", m.dt);
  return m;
}

inline void write_meta(std::ostream& out, const InstanceMeta& m) {
  out << "meta kind " << m.kind << '\n';
  out << "meta seed " << m.seed << '\n';
  out << "meta noise " << format_double(m.noise) << '\n';
  out << "meta sinc " << m.sinc << '\n';
  out << "meta t0 " << format_double(m.t0) << '\n';
  out << "meta dt " << format_double(m.dt) << '\n';
}

// Reads "meta" lines until another keyword appears; returns that line.
inline std::vector<std::string> read_meta(LineReader& r, InstanceMeta& m) {
  while (true) {
    auto t = r.next();
    if (t[0] != "meta") return t;
    if (t.size() != 3) throw FormatError("line " + std::to_string(r.line()) + ": meta needs a key and a value");
    const auto& key = t[1];
    const auto& val = t[2];
    if (key == "kind") m.kind = val;
    else if (key == "seed") m.seed = static_cast<unsigned long long>(parse_integer(val));
    else if (key == "noise") m.noise = parse_double(val);
    else if (key == "sinc") m.sinc = val;
    else if (key == "t0") m.t0 = parse_double(val);
    else if (key == "dt") m.dt = parse_double(val);
    else throw FormatError("line " + std::to_string(r.line()) + ": unknown meta key '" + key + "'");
  }
}

inline void expect_end(LineReader& r) {
  const auto t = r.next();
  if (t.size() != 1 || t[0] != "end") throw FormatError("line " + std::to_string(r.line()) + ": expected 'end'");
}

inline int read_int_field(LineReader& r, std::string_view key) {
  return static_cast<int>(parse_integer(r.expect(key, 1)[1]));
}

}  // namespace detail

// Instances.

inline void write_instance(std::ostream& out, const ProblemInstance1D& inst, Format fmt = Format::text) {
  if (fmt == Format::json) {
    nlohmann::json priors = nlohmann::json::array();
    for (const auto& [l, v] : inst.priors) priors.push_back({l, v.real(), v.imag()});
    nlohmann::json j = {{"format", "phaseret-instance"},
                        {"version", kFileVersion},
                        {"mode", "1d"},
                        {"grid", inst.grid_len},
                        {"support", {inst.support.lo, inst.support.hi}},
                        {"gauge", detail::cplx_json(inst.gauge_phase)},
                        {"meta", detail::meta_json(inst.meta)},
                        {"field", inst.field_magnitude},
                        {"moduli", inst.coeff_magnitudes},
                        {"priors", priors}};
    out << j.dump(1) << '\n';
    return;
  }
  detail::header(out, "phaseret-instance");
  out << "mode 1d\n";
  out << "grid " << inst.grid_len << '\n';
  out << "support " << inst.support.lo << ' ' << inst.support.hi << '\n';
  out << "gauge " << detail::cplx_text(inst.gauge_phase) << '\n';
  detail::write_meta(out, inst.meta);
  detail::write_values(out, "field", inst.field_magnitude);
  detail::write_values(out, "moduli", inst.coeff_magnitudes);
  out << "priors " << inst.priors.size() << '\n';
  for (const auto& [l, v] : inst.priors) out << l << ' ' << detail::cplx_text(v) << '\n';
  out << "end\n";
}

inline void write_instance(std::ostream& out, const ProblemInstance2D& inst, Format fmt = Format::text) {
  if (fmt == Format::json) {
    nlohmann::json priors = nlohmann::json::array();
    for (const auto& [idx, v] : inst.priors) priors.push_back({idx[0], idx[1], v.real(), v.imag()});
    nlohmann::json j = {{"format", "phaseret-instance"},
                        {"version", kFileVersion},
                        {"mode", "2d"},
                        {"grid", inst.grid_len},
                        {"order", inst.order},
                        {"gauge", detail::cplx_json(inst.gauge_phase)},
                        {"meta", detail::meta_json(inst.meta)},
                        {"field", inst.field_magnitude},
                        {"moduli", inst.coeff_magnitudes},
                        {"priors", priors}};
    out << j.dump(1) << '\n';
    return;
  }
  detail::header(out, "phaseret-instance");
  out << "mode 2d\n";
  out << "grid " << inst.grid_len << '\n';
  out << "order " << inst.order << '\n';
  out << "gauge " << detail::cplx_text(inst.gauge_phase) << '\n';
  detail::write_meta(out, inst.meta);
  detail::write_values(out, "field", inst.field_magnitude);
  detail::write_values(out, "moduli", inst.coeff_magnitudes);
  out << "priors " << inst.priors.size() << '\n';
  for (const auto& [idx, v] : inst.priors) out << idx[0] << ' ' << idx[1] << ' ' << detail::cplx_text(v) << '\n';
  out << "end\n";
}

namespace detail {

inline AnyInstance instance_from_json(const nlohmann::json& j) {
  check_json_header(j, "phaseret-instance");
  const std::string mode = j.at("mode").get<std::string>();
  const cplx gauge = j.contains("gauge") ? json_cplx(j.at("gauge")) : cplx{1.0, 0.0};
  if (mode == "1d") {
    ProblemInstance1D inst;
    inst.grid_len = j.at("grid").get<int>();
    inst.support = Window{j.at("support").at(0).get<int>(), j.at("support").at(1).get<int>()};
    inst.gauge_phase = gauge;
    if (j.contains("meta")) inst.meta = json_meta(j.at("meta"));
    inst.field_magnitude = j.at("field").get<std::vector<double>>();
    inst.coeff_magnitudes = j.at("moduli").get<std::vector<double>>();
    for (const auto& p : j.value("priors", nlohmann::json::array())) {
      inst.priors[p.at(0).get<int>()] = {p.at(1).get<double>(), p.at(2).get<double>()};
    }
    return inst;
  }
  if (mode == "2d") {
    ProblemInstance2D inst;
    inst.grid_len = j.at("grid").get<int>();
    inst.order = j.at("order").get<int>();
    inst.gauge_phase = gauge;
    if (j.contains("meta")) inst.meta = json_meta(j.at("meta"));
    inst.field_magnitude = j.at("field").get<std::vector<double>>();
    inst.coeff_magnitudes = j.at("moduli").get<std::vector<double>>();
    for (const auto& p : j.value("priors", nlohmann::json::array())) {
      inst.priors[{p.at(0).get<int>(), p.at(1).get<int>()}] = {p.at(2).get<double>(), p.at(3).get<double>()};
    }
    return inst;
  }
  throw FormatError("unknown mode '" + mode + "'");
}

inline AnyInstance instance_from_text(std::istream& in) {
  LineReader r(in);
  read_header(r, "phaseret-instance");
  const auto mode = r.expect("mode", 1)[1];
  if (mode != "1d" && mode != "2d") throw FormatError("unknown mode '" + mode + "'");
  const int grid = read_int_field(r, "grid");
  Window support;
  int order = 0;
  if (mode == "1d") {
    const auto t = r.expect("support", 2);
    support = Window{static_cast<int>(parse_integer(t[1])), static_cast<int>(parse_integer(t[2]))};
  } else {
    order = read_int_field(r, "order");
  }
  const auto g = r.expect("gauge", 2);
  const cplx gauge{parse_double(g[1]), parse_double(g[2])};
  InstanceMeta meta;
  auto t = read_meta(r, meta);
  if (t[0] != "field" || t.size() != 2) throw FormatError("line " + std::to_string(r.line()) + ": expected 'field'");
  auto field = r.values(static_cast<std::size_t>(parse_integer(t[1])));
  auto moduli = r.values(r.block("moduli"));
  const std::size_t priors = r.block("priors");

  if (mode == "1d") {
    ProblemInstance1D inst;
    inst.grid_len = grid;
    inst.support = support;
    inst.gauge_phase = gauge;
    inst.meta = meta;
    inst.field_magnitude = std::move(field);
    inst.coeff_magnitudes = std::move(moduli);
    for (std::size_t i = 0; i < priors; ++i) {
      const auto p = r.next();
      if (p.size() != 3) throw FormatError("line " + std::to_string(r.line()) + ": prior needs index re im");
      inst.priors[static_cast<int>(parse_integer(p[0]))] = {parse_double(p[1]), parse_double(p[2])};
    }
    expect_end(r);
    return inst;
  }
  ProblemInstance2D inst;
  inst.grid_len = grid;
  inst.order = order;
  inst.gauge_phase = gauge;
  inst.meta = meta;
  inst.field_magnitude = std::move(field);
  inst.coeff_magnitudes = std::move(moduli);
  for (std::size_t i = 0; i < priors; ++i) {
    const auto p = r.next();
    if (p.size() != 4) throw FormatError("line " + std::to_string(r.line()) + ": prior needs n1 n2 re im");
    inst.priors[{static_cast<int>(parse_integer(p[0])), static_cast<int>(parse_integer(p[1]))}] = {
        parse_double(p[2]), parse_double(p[3])};
  }
  expect_end(r);
  return inst;
}

template <class F>
auto parse_guarded(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace detail

/// Reads either format and validates the result.
inline AnyInstance read_instance(std::istream& in) {
  AnyInstance inst = detail::parse_guarded([&] {
    if (detail::looks_like_json(in)) return detail::instance_from_json(nlohmann::json::parse(in));
    return detail::instance_from_text(in);
  });
  try {
    std::visit([](const auto& i) { i.validate(); }, inst);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid instance: ") + e.what());
  }
  return inst;
}

// Spectra (truth files and recovered coefficients).

namespace detail {

inline nlohmann::json spectrum_json(const CenteredSpectrum& s) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& v : s.in_support()) coeffs.push_back(cplx_json(v));
  return {{"mode", "1d"}, {"grid", s.grid_len()}, {"support", {s.support().lo, s.support().hi}}, {"coeffs", coeffs}};
}

inline nlohmann::json spectrum_json(const Spectrum2D& s) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& v : s.values()) coeffs.push_back(cplx_json(v));
  return {{"mode", "2d"}, {"grid", s.grid_len()}, {"order", s.order()}, {"coeffs", coeffs}};
}

inline AnySpectrum json_spectrum(const nlohmann::json& j) {
  std::vector<cplx> coeffs;
  for (const auto& c : j.at("coeffs")) coeffs.push_back(json_cplx(c));
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "1d") {
    const Window w{j.at("support").at(0).get<int>(), j.at("support").at(1).get<int>()};
    if (coeffs.size() != static_cast<std::size_t>(w.size())) throw FormatError("coefficient count differs from support");
    return CenteredSpectrum(j.at("grid").get<int>(), w, coeffs);
  }
  if (mode == "2d") return Spectrum2D(j.at("grid").get<int>(), j.at("order").get<int>(), coeffs);
  throw FormatError("unknown mode '" + mode + "'");
}

inline void write_spectrum_text(std::ostream& out, const CenteredSpectrum& s) {
  out << "mode 1d\n";
  out << "grid " << s.grid_len() << '\n';
  out << "support " << s.support().lo << ' ' << s.support().hi << '\n';
  out << "coeffs " << s.support().size() << '\n';
  for (int l = s.support().lo; l <= s.support().hi; ++l) out << l << ' ' << cplx_text(s[l]) << '\n';
}

inline void write_spectrum_text(std::ostream& out, const Spectrum2D& s) {
  out << "mode 2d\n";
  out << "grid " << s.grid_len() << '\n';
  out << "order " << s.order() << '\n';
  out << "coeffs " << s.values().size() << '\n';
  for (int n1 = -s.order(); n1 <= s.order(); ++n1) {
    for (int n2 = -s.order(); n2 <= s.order(); ++n2) out << n1 << ' ' << n2 << ' ' << cplx_text(s(n1, n2)) << '\n';
  }
}

inline AnySpectrum read_spectrum_text(LineReader& r) {
  const auto mode = r.expect("mode", 1)[1];
  const int grid = read_int_field(r, "grid");
  if (mode == "1d") {
    const auto t = r.expect("support", 2);
    const Window w{static_cast<int>(parse_integer(t[1])), static_cast<int>(parse_integer(t[2]))};
    const std::size_t n = r.block("coeffs");
    if (n != static_cast<std::size_t>(w.size())) throw FormatError("coefficient count differs from support");
    CenteredSpectrum s(grid, w);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = r.next();
      if (p.size() != 3) throw FormatError("line " + std::to_string(r.line()) + ": coefficient needs index re im");
      const int l = static_cast<int>(parse_integer(p[0]));
      if (l != w.lo + static_cast<int>(i)) throw FormatError("line " + std::to_string(r.line()) + ": index out of order");
      s.set(l, {parse_double(p[1]), parse_double(p[2])});
    }
    return s;
  }
  if (mode == "2d") {
    const int order = read_int_field(r, "order");
    Spectrum2D s(grid, order);
    const std::size_t n = r.block("coeffs");
    if (n != s.values().size()) throw FormatError("coefficient count differs from (2N+1)^2");
    for (int n1 = -order; n1 <= order; ++n1) {
      for (int n2 = -order; n2 <= order; ++n2) {
        const auto p = r.next();
        if (p.size() != 4) throw FormatError("line " + std::to_string(r.line()) + ": coefficient needs n1 n2 re im");
        if (parse_integer(p[0]) != n1 || parse_integer(p[1]) != n2) {
          throw FormatError("line " + std::to_string(r.line()) + ": index out of order");
        }
        s.set(n1, n2, {parse_double(p[2]), parse_double(p[3])});
      }
    }
    return s;
  }
  throw FormatError("unknown mode '" + mode + "'");
}

}  // namespace detail

template <class Spectrum>
void write_spectrum(std::ostream& out, const Spectrum& s, Format fmt = Format::text) {
  if (fmt == Format::json) {
    auto j = detail::spectrum_json(s);
    j["format"] = "phaseret-spectrum";
    j["version"] = kFileVersion;
    out << j.dump(1) << '\n';
    return;
  }
  detail::header(out, "phaseret-spectrum");
  detail::write_spectrum_text(out, s);
  out << "end\n";
}

inline AnySpectrum read_spectrum(std::istream& in) {
  return detail::parse_guarded([&]() -> AnySpectrum {
    if (detail::looks_like_json(in)) {
      const auto j = nlohmann::json::parse(in);
      detail::check_json_header(j, "phaseret-spectrum");
      return detail::json_spectrum(j);
    }
    detail::LineReader r(in);
    detail::read_header(r, "phaseret-spectrum");
    auto s = detail::read_spectrum_text(r);
    detail::expect_end(r);
    return s;
  });
}

// Reports.

namespace detail {

inline std::string index_text(int i) { return std::to_string(i); }
inline std::string index_text(const Index2D& i) { return std::to_string(i[0]) + ' ' + std::to_string(i[1]); }
inline nlohmann::json index_json(int i) { return i; }
inline nlohmann::json index_json(const Index2D& i) { return {i[0], i[1]}; }

inline void read_index(const nlohmann::json& j, int& out) { out = j.get<int>(); }
inline void read_index(const nlohmann::json& j, Index2D& out) { out = {j.at(0).get<int>(), j.at(1).get<int>()}; }

template <class Index>
constexpr std::size_t index_width() {
  return std::is_same_v<Index, int> ? 1 : 2;
}

template <class Index>
Index parse_index(const std::vector<std::string>& t, std::size_t at) {
  if constexpr (std::is_same_v<Index, int>) {
    return static_cast<int>(parse_integer(t[at]));
  } else {
    return Index2D{static_cast<int>(parse_integer(t[at])), static_cast<int>(parse_integer(t[at + 1]))};
  }
}

struct MetricField {
  const char* name;
  double ErrorMetrics::*member;
};

inline constexpr MetricField kMetricFields[] = {
    {"spectral_error", &ErrorMetrics::spectral_error},
    {"field_magnitude_error", &ErrorMetrics::field_magnitude_error},
    {"residual", &ErrorMetrics::residual},
    {"gauge", &ErrorMetrics::gauge},
};

inline bool truth_only(std::string_view name) { return name == "spectral_error" || name == "gauge"; }

template <class Spectrum, class Index>
void write_report_text(std::ostream& out, const BasicSolveReport<Spectrum, Index>& rep, const ReportDoc& doc) {
  header(out, "phaseret-report");
  out << "tool " << doc.tool << '\n';
  write_spectrum_text(out, rep.recovered);
  out << "branches " << rep.branch_log.size() << '\n';
  for (const auto& b : rep.branch_log) {
    out << b.step << ' ' << index_text(b.upper) << ' ' << index_text(b.lower) << ' ' << b.choice << ' '
        << format_double(b.gap) << '\n';
  }
  out << "flags " << rep.flags.size() << '\n';
  for (const auto& f : rep.flags) out << to_string(f.kind) << ' ' << f.step << ' ' << f.detail << '\n';
  out << "final_residual " << format_double(rep.final_residual) << '\n';
  out << "search_nodes " << rep.search_nodes << '\n';
  for (const auto& m : kMetricFields) {
    if (truth_only(m.name) && !doc.has_truth) continue;
    out << "metric " << m.name << ' ' << format_double(doc.metrics.*m.member) << '\n';
  }
  if (doc.has_truth) out << "metric zero_overlap " << (doc.metrics.zero_overlap ? 1 : 0) << '\n';
  out << "timing_seconds " << format_double(doc.timing_seconds) << '\n';
  out << "end\n";
}

template <class Spectrum, class Index>
nlohmann::json report_json(const BasicSolveReport<Spectrum, Index>& rep, const ReportDoc& doc) {
  nlohmann::json j = spectrum_json(rep.recovered);
  j["format"] = "phaseret-report";
  j["version"] = kFileVersion;
  j["tool"] = doc.tool;
  nlohmann::json log = nlohmann::json::array();
  for (const auto& b : rep.branch_log) {
    log.push_back({{"step", b.step},
                   {"upper", index_json(b.upper)},
                   {"lower", index_json(b.lower)},
                   {"choice", b.choice},
                   {"gap", b.gap}});
  }
  j["branch_log"] = log;
  nlohmann::json flags = nlohmann::json::array();
  for (const auto& f : rep.flags) flags.push_back({{"kind", to_string(f.kind)}, {"step", f.step}, {"detail", f.detail}});
  j["flags"] = flags;
  j["final_residual"] = rep.final_residual;
  j["search_nodes"] = rep.search_nodes;
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& m : kMetricFields) {
    if (truth_only(m.name) && !doc.has_truth) continue;
    metrics[m.name] = doc.metrics.*m.member;
  }
  if (doc.has_truth) metrics["zero_overlap"] = doc.metrics.zero_overlap;
  j["metrics"] = metrics;
  j["timing_seconds"] = doc.timing_seconds;
  return j;
}

template <class Index>
BranchDecision<Index> json_branch(const nlohmann::json& j) {
  BranchDecision<Index> b;
  b.step = j.at("step").get<int>();
  read_index(j.at("upper"), b.upper);
  read_index(j.at("lower"), b.lower);
  b.choice = j.at("choice").get<int>();
  b.gap = j.at("gap").get<double>();
  return b;
}

template <class Spectrum, class Index>
ReportDoc report_from_json(const nlohmann::json& j, Spectrum recovered) {
  BasicSolveReport<Spectrum, Index> rep;
  rep.recovered = std::move(recovered);
  for (const auto& b : j.at("branch_log")) rep.branch_log.push_back(json_branch<Index>(b));
  for (const auto& f : j.at("flags")) {
    rep.flags.push_back({parse_flag_kind(f.at("kind").get<std::string>()), f.at("step").get<int>(),
                         f.at("detail").get<std::string>()});
  }
  rep.final_residual = j.at("final_residual").get<double>();
  rep.search_nodes = j.at("search_nodes").get<long>();
  ReportDoc doc;
  const auto& metrics = j.at("metrics");
  for (const auto& m : kMetricFields) {
    if (metrics.contains(m.name)) doc.metrics.*m.member = metrics.at(m.name).get<double>();
  }
  doc.has_truth = metrics.contains("spectral_error");
  doc.metrics.zero_overlap = metrics.value("zero_overlap", false);
  doc.timing_seconds = j.at("timing_seconds").get<double>();
  doc.tool = j.at("tool").get<std::string>();
  doc.report = std::move(rep);
  return doc;
}

template <class Spectrum, class Index>
ReportDoc report_from_text(LineReader& r, Spectrum recovered, std::string tool) {
  BasicSolveReport<Spectrum, Index> rep;
  rep.recovered = std::move(recovered);
  constexpr std::size_t w = index_width<Index>();
  const std::size_t nb = r.block("branches");
  for (std::size_t i = 0; i < nb; ++i) {
    const auto t = r.next();
    if (t.size() != 3 + 2 * w) throw FormatError("line " + std::to_string(r.line()) + ": malformed branch entry");
    BranchDecision<Index> b;
    b.step = static_cast<int>(parse_integer(t[0]));
    b.upper = parse_index<Index>(t, 1);
    b.lower = parse_index<Index>(t, 1 + w);
    b.choice = static_cast<int>(parse_integer(t[1 + 2 * w]));
    b.gap = parse_double(t[2 + 2 * w]);
    rep.branch_log.push_back(b);
  }
  const std::size_t nf = r.block("flags");
  for (std::size_t i = 0; i < nf; ++i) {
    std::string detail;
    const auto t = r.next(2, &detail);
    if (t.size() < 2) throw FormatError("line " + std::to_string(r.line()) + ": malformed flag entry");
    rep.flags.push_back({parse_flag_kind(t[0]), static_cast<int>(parse_integer(t[1])), detail});
  }
  rep.final_residual = parse_double(r.expect("final_residual", 1)[1]);
  rep.search_nodes = static_cast<long>(parse_integer(r.expect("search_nodes", 1)[1]));
  ReportDoc doc;
  doc.tool = std::move(tool);
  while (true) {
    const auto t = r.next();
    if (t[0] == "timing_seconds" && t.size() == 2) {
      doc.timing_seconds = parse_double(t[1]);
      break;
    }
    if (t[0] != "metric" || t.size() != 3) throw FormatError("line " + std::to_string(r.line()) + ": expected 'metric'");
    if (t[1] == "zero_overlap") {
      doc.metrics.zero_overlap = parse_integer(t[2]) != 0;
      continue;
    }
    bool known = false;
    for (const auto& m : kMetricFields) {
      if (t[1] == m.name) {
        doc.metrics.*m.member = parse_double(t[2]);
        known = true;
      }
    }
    if (!known) throw FormatError("line " + std::to_string(r.line()) + ": unknown metric '" + t[1] + "'");
    if (t[1] == "spectral_error") doc.has_truth = true;
  }
  expect_end(r);
  doc.report = std::move(rep);
  return doc;
}

}  // namespace detail

inline void write_report(std::ostream& out, const ReportDoc& doc, Format fmt = Format::text) {
  std::visit(
      [&](const auto& rep) {
        if (fmt == Format::json) {
          out << detail::report_json(rep, doc).dump(1) << '\n';
        } else {
          detail::write_report_text(out, rep, doc);
        }
      },
      doc.report);
}

inline ReportDoc read_report(std::istream& in) {
  return detail::parse_guarded([&]() -> ReportDoc {
    if (detail::looks_like_json(in)) {
      const auto j = nlohmann::json::parse(in);
      detail::check_json_header(j, "phaseret-report");
      auto spec = detail::json_spectrum(j);
      if (auto* s1 = std::get_if<CenteredSpectrum>(&spec)) {
        return detail::report_from_json<CenteredSpectrum, int>(j, std::move(*s1));
      }
      return detail::report_from_json<Spectrum2D, Index2D>(j, std::get<Spectrum2D>(std::move(spec)));
    }
    detail::LineReader r(in);
    detail::read_header(r, "phaseret-report");
    std::string tool;
    const auto t = r.next(1, &tool);
    if (t[0] != "tool") throw FormatError("line " + std::to_string(r.line()) + ": expected 'tool'");
    auto spec = detail::read_spectrum_text(r);
    if (auto* s1 = std::get_if<CenteredSpectrum>(&spec)) {
      return detail::report_from_text<CenteredSpectrum, int>(r, std::move(*s1), tool);
    }
    return detail::report_from_text<Spectrum2D, Index2D>(r, std::get<Spectrum2D>(std::move(spec)), tool);
  });
}

/// Column text for external plotting: "t |f_given| |f_recovered|" per sample.
inline void write_field_curve(std::ostream& out, const ProblemInstance1D& inst, const CenteredSpectrum& recovered) {
  const auto f = forward_dft(recovered);
  out << "# t given recovered\n";
  for (int k = grid_lo(inst.grid_len); k <= grid_hi(inst.grid_len); ++k) {
    const double t = inst.meta.t0 + inst.meta.dt * (k - grid_lo(inst.grid_len));
    out << format_double(t) << ' ' << format_double(inst.field_magnitude[grid_offset(k, inst.grid_len)]) << ' '
        << format_double(std::abs(f.at(k))) << '\n';
  }
}

/// Column text "k |a_k| given, |a_k| recovered" over the support.
inline void write_spectrum_curve(std::ostream& out, const ProblemInstance1D& inst, const CenteredSpectrum& recovered) {
  out << "# k given recovered\n";
  for (int l = inst.support.lo; l <= inst.support.hi; ++l) {
    out << l << ' ' << format_double(inst.modulus(l)) << ' ' << format_double(std::abs(recovered[l])) << '\n';
  }
}

}  // namespace phaseret
