#pragma once

// Command-line front end. parse_args() builds a RunConfig, run() executes it
// and writes exactly one document to `out`; diagnostics go to `err`.

#include <algorithm>
#include <cmath>
#include <charconv>
#include <filesystem>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptheta/ptheta.hpp"

namespace ptheta::cli {

inline constexpr int schema_version = 1;

enum class Subcommand { eval, zeros, spectrum, verify, sweep };
enum class OutputFormat { json, csv };
enum class SweepReport { alternation, pairs };

enum ExitCode : int { ok = 0, internal_error = 1, domain_error = 2, budget_error = 3, certification_error = 4 };

struct RunConfig {
  Subcommand subcommand = Subcommand::eval;
  cplx q{0.0, 0.0};
  cplx x{0.0, 0.0};
  int dx = 0;
  int dq = 0;
  std::optional<double> radius;
  std::optional<int> radius_exp;
  int j_max = 1;
  double tol = 1e-12;
  OutputFormat format = OutputFormat::json;
  std::optional<std::filesystem::path> cache_path;
  double q_from = 0.0;
  double q_to = 0.0;
  int steps = 2;
  SweepReport report = SweepReport::pairs;
  std::optional<int> k_max;
  int jobs = 1;
  bool deterministic = false;
};

/// Thrown for malformed command lines; maps to the domain-error exit code.
class UsageError : public DomainError {
 public:
  using DomainError::DomainError;
};

namespace detail {

inline void validate(RunConfig& c) {
  auto check_q = [](cplx q) {
    if (!std::isfinite(q.real()) || !std::isfinite(q.imag())) throw UsageError("q must be finite");
    if (!(std::abs(q) < 1.0)) throw UsageError("|q| must be < 1");
  };
  if (c.subcommand != Subcommand::sweep && c.subcommand != Subcommand::spectrum) check_q(c.q);
  if (!(c.tol > 0.0) || !std::isfinite(c.tol)) throw UsageError("--tol must be positive");
  if (c.format == OutputFormat::csv && c.subcommand != Subcommand::sweep)
    throw UsageError("csv output is only available for sweep");
  if (c.dx < 0 || c.dx > 4 || c.dq < 0 || c.dq > 1) throw UsageError("supported derivative orders: --dx 0..4, --dq 0..1");
  if (c.subcommand == Subcommand::zeros) {
    if (c.radius && c.radius_exp) throw UsageError("give --radius or --radius-exp, not both");
    if (c.radius && !(*c.radius >= 1.0)) throw UsageError("--radius must be >= 1");
    if (c.radius_exp && *c.radius_exp < 0) throw UsageError("--radius-exp must be >= 0");
  }
  if (c.subcommand == Subcommand::spectrum && c.j_max < 1) throw UsageError("--j-max must be >= 1");
  if (c.subcommand == Subcommand::sweep) {
    if (c.steps < 1) throw UsageError("--steps must be >= 1");
    check_q(c.q_from);
    check_q(c.q_to);
    if (c.report == SweepReport::alternation && !(c.q_from < 0.0 && c.q_to < 0.0))
      throw UsageError("alternation sweeps need q in (-1, 0)");
    if (c.report == SweepReport::pairs && !(c.q_from > 0.0 && c.q_to > 0.0))
      throw UsageError("pairs sweeps need q in (0, 1)");
  }
  if (c.jobs < 1) throw UsageError("--jobs must be >= 1");
  if (c.deterministic) c.jobs = 1;
}

}  // namespace detail

/// Parses argv; throws UsageError on bad input. Returns nullopt when help was printed.
inline std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out) {
  RunConfig c;
  CLI::App app{"partial theta function: evaluation, zeros, spectrum and structure checks", "ptheta"};
  app.require_subcommand(1, 1);
  std::string format = "json";
  double q_re = 0.0, q_im = 0.0, x_re = 0.0, x_im = 0.0;
  std::string cache;
  std::string report = "pairs";

  auto add_q = [&](CLI::App* s) {
    s->add_option("--q", q_re, "real part of q")->required();
    s->add_option("--q-im", q_im, "imaginary part of q");
  };
  auto add_common = [&](CLI::App* s) {
    s->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    s->add_flag("--deterministic", c.deterministic, "single-threaded, fixed iteration order");
  };

  auto* ev = app.add_subcommand("eval", "evaluate θ(q,x) or a derivative");
  add_q(ev);
  ev->add_option("--x", x_re, "real part of x")->required();
  ev->add_option("--x-im", x_im, "imaginary part of x");
  ev->add_option("--dx", c.dx, "order of the x-derivative (0..4)");
  ev->add_option("--dq", c.dq, "order of the q-derivative (0..1)");
  ev->add_option("--tol", c.tol, "absolute truncation target");
  add_common(ev);

  auto* zs = app.add_subcommand("zeros", "certified zeros in a disk");
  add_q(zs);
  zs->add_option("--radius", c.radius, "disk radius (>= 1)");
  zs->add_option("--radius-exp", c.radius_exp, "disk radius |q|^-(m+1/2)");
  zs->add_option("--tol", c.tol, "relative Newton tolerance");
  add_common(zs);

  auto* sp = app.add_subcommand("spectrum", "spectral values q̃_1..q̃_j");
  sp->add_option("--j-max", c.j_max, "number of spectral values")->required();
  sp->add_option("--cache", cache, "cache file (default: $" + std::string(spectrum_cache_env) + ")");
  sp->add_option("--tol", c.tol, "bracket width in q");
  add_common(sp);

  auto* vf = app.add_subcommand("verify", "structure checks at one q");
  add_q(vf);
  vf->add_option("--k-max", c.k_max, "index range for the coefficient / alternation checks");
  add_common(vf);

  auto* sw = app.add_subcommand("sweep", "structure reports over a grid of real q");
  sw->add_option("--q-from", c.q_from)->required();
  sw->add_option("--q-to", c.q_to)->required();
  sw->add_option("--steps", c.steps)->required();
  sw->add_option("--report", report, "alternation (q < 0) or pairs (q > 0)")
      ->check(CLI::IsMember({"alternation", "pairs"}));
  sw->add_option("--k-max", c.k_max, "index range for alternation reports");
  sw->add_option("--jobs", c.jobs, "concurrent sweep points");
  add_common(sw);
  // Sweep output defaults to CSV.
  bool sweep_format_given = false;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  if (ev->parsed()) c.subcommand = Subcommand::eval;
  if (zs->parsed()) c.subcommand = Subcommand::zeros;
  if (sp->parsed()) c.subcommand = Subcommand::spectrum;
  if (vf->parsed()) c.subcommand = Subcommand::verify;
  if (sw->parsed()) {
    c.subcommand = Subcommand::sweep;
    sweep_format_given = sw->count("--format") > 0;
  }
  c.q = {q_re, q_im};
  c.x = {x_re, x_im};
  c.format = format == "csv" ? OutputFormat::csv : OutputFormat::json;
  if (c.subcommand == Subcommand::sweep && !sweep_format_given) c.format = OutputFormat::csv;
  c.report = report == "alternation" ? SweepReport::alternation : SweepReport::pairs;
  if (!cache.empty()) c.cache_path = cache;
  else if (c.subcommand == Subcommand::spectrum) c.cache_path = default_cache_path();
  detail::validate(c);
  return c;
}

namespace detail {

using nlohmann::json;

inline json cjson(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline json zero_json(const Zero& z) {
  return {{"re", z.location.real()},
          {"im", z.location.imag()},
          {"multiplicity", z.multiplicity},
          {"residual", z.residual},
          {"certified", z.certified},
          {"cert_radius", z.cert_radius},
          {"kind", z.location.imag() == 0.0 ? "real" : "complex"}};
}

inline json header(const char* command) { return {{"schema_version", schema_version}, {"command", command}}; }

struct Outcome {
  json doc;
  int code = ExitCode::ok;
  std::string csv;
};

inline Outcome run_eval(const RunConfig& c) {
  const auto q = QParam::make(c.q);
  const auto r = eval_theta_derivative(q, c.x, c.dx, c.dq, c.tol);
  auto doc = header("eval");
  doc["q"] = cjson(c.q);
  doc["x"] = cjson(c.x);
  doc["dx"] = c.dx;
  doc["dq"] = c.dq;
  doc["tol"] = c.tol;
  doc["value"] = cjson(r.value);
  doc["error_bound"] = r.error_bound;
  doc["terms_used"] = r.terms_used;
  return {doc};
}

inline Outcome run_zeros(const RunConfig& c) {
  const auto q = QParam::make(c.q);
  q.require_nonzero();
  double radius = 1.0 / q.modulus();
  if (c.radius) radius = *c.radius;
  if (c.radius_exp) radius = ladder_radius(q, *c.radius_exp);
  const auto zs = find_zeros_in_disk(q, radius, std::min(c.tol, 1e-12));
  auto doc = header("zeros");
  doc["q"] = cjson(c.q);
  doc["requested_radius"] = zs.requested_radius;
  doc["disk_radius"] = zs.disk_radius;
  doc["winding"] = zs.winding;
  doc["tail_start_k"] = zs.tail_start_k;
  json arr = json::array();
  int pairs = 0;
  for (const auto& z : zs.zeros) {
    arr.push_back(zero_json(z));
    if (q.is_real() && z.location.imag() > 0.0) pairs += z.multiplicity;
  }
  doc["zeros"] = arr;
  if (q.is_real()) doc["complex_pair_count"] = pairs;
  return {doc};
}

inline json spectral_json(const SpectralValue& sv) {
  return {{"j", sv.index},
          {"q", sv.q_value},
          {"x", sv.double_zero_x},
          {"res_theta", sv.residuals.first},
          {"res_dtheta", sv.residuals.second}};
}

inline Outcome run_spectrum(const RunConfig& c, std::ostream& err) {
  SpectrumScanOptions opt;
  opt.tol_q = c.tol;
  std::vector<std::string> notes;
  const auto table = spectrum_table(c.j_max, c.cache_path, opt, &notes);
  for (const auto& n : notes) err << "spectrum cache: " << n << "; recomputing\n";
  auto doc = header("spectrum");
  doc["j_max"] = c.j_max;
  doc["tolerance"] = table.tolerance;
  doc["provenance"] = to_string(table.provenance);
  json arr = json::array();
  for (const auto& sv : table.entries) arr.push_back(spectral_json(sv));
  doc["entries"] = arr;
  doc["cutoff"] = table.cutoff ? json(*table.cutoff) : json(nullptr);
  doc["events"] = table.events;
  Outcome o{doc};
  if (table.cutoff) {
    err << "spectrum: " << *table.cutoff << '\n';
    o.code = ExitCode::budget_error;
  }
  return o;
}

inline json check(const std::string& name, bool ok, json detail) {
  return {{"name", name}, {"ok", ok}, {"detail", std::move(detail)}};
}

inline json neg_report_json(const NegativeQReport& r) {
  return {{"q", r.q},
          {"real_zeros_signed", r.real_zeros_signed},
          {"sign_alternation_ok", r.sign_alternation_ok},
          {"modulus_order_alternates", r.modulus_order_alternates},
          {"monotone_from", r.monotone_from},
          {"complex_pair_count", r.complex_pair_count},
          {"r_has_no_real_roots", r.r_has_no_real_roots},
          {"failure", r.failure.empty() ? json(nullptr) : json(r.failure)}};
}

inline Outcome run_verify(const RunConfig& c) {
  const auto q = QParam::make(c.q);
  q.require_nonzero();
  json checks = json::array();
  bool all_ok = true;
  auto record = [&](json j) {
    all_ok = all_ok && j["ok"].get<bool>();
    checks.push_back(std::move(j));
  };

  // Functional equation θ(q,x) = 1 + q x θ(q,qx) and Θ* two ways, on a circle.
  {
    double worst_fe = 0.0, worst_ts = 0.0;
    bool ok_fe = true, ok_ts = true;
    for (int i = 0; i < 16; ++i) {
      const cplx x = std::polar(1.5, 2.0 * M_PI * (i + 0.25) / 16.0);
      const auto a = eval_theta(q, x, 1e-15);
      const auto b = eval_theta(q, q.value() * x, 1e-15);
      const double res = std::abs(a.value - 1.0 - q.value() * x * b.value);
      const double bound = a.error_bound + std::abs(q.value() * x) * b.error_bound + 4 * DBL_EPSILON * (1.0 + std::abs(a.value));
      ok_fe = ok_fe && res <= bound;
      worst_fe = std::max(worst_fe, res / bound);
      const auto s1 = eval_jacobi_theta_star(q, x, 1e-15, ThetaStarMethod::bilateral_sum);
      const auto s2 = eval_jacobi_theta_star(q, x, 1e-15, ThetaStarMethod::triple_product);
      const double d = std::abs(s1.value - s2.value);
      const double bd = s1.error_bound + s2.error_bound;
      ok_ts = ok_ts && d <= bd;
      worst_ts = std::max(worst_ts, d / bd);
    }
    record(check("functional_equation", ok_fe, {{"worst_residual_over_bound", worst_fe}}));
    record(check("triple_product", ok_ts, {{"worst_difference_over_bound", worst_ts}}));
  }

  // Tail zeros k₀..k₀+5.
  {
    const int k0 = tail_start_policy(q);
    json rows = json::array();
    bool ok = true;
    std::string failure;
    try {
      double prev = INFINITY;
      for (int k = k0; k <= k0 + 5; ++k) {
        const auto t = certify_tail_zero(q, k);
        rows.push_back({{"k", k}, {"e_k", t.scaled_offset}});
        ok = ok && t.zero.multiplicity == 1 && t.scaled_offset < 1e-3 && t.scaled_offset <= prev;
        prev = t.scaled_offset;
      }
    } catch (const CertificationFailure& e) {
      ok = false;
      failure = e.what();
    }
    json d = {{"k0", k0}, {"zeros", rows}};
    if (!failure.empty()) d["error"] = failure;
    record(check("tail_zeros", ok, d));
  }

  if (q.kind() == QKind::positive_real) {
    const auto dec = decompose(q);
    const int pairs = complex_pair_count(q);
    bool disc_ok = dec.poly_coeffs.front() == 1.0;
    for (double d : dec.pair_discriminants()) disc_ok = disc_ok && d < 0.0;
    record(check("decomposition", disc_ok && pairs == static_cast<int>(dec.complex_pairs.size()),
                 {{"complex_pairs", dec.complex_pairs.size()},
                  {"complex_pair_count", pairs},
                  {"real_zeros", dec.real_zeros.size()},
                  {"poly_coeffs", dec.poly_coeffs}}));
    const auto lp = lp_bound_check(q, c.k_max.value_or(8));
    bool ok = lp.D_estimate > 0.0;
    for (std::size_t i = 0; i < lp.g_coeffs.size(); ++i)
      ok = ok && lp.g_certified[i] > 0.0 && lp.bound_margin[i] >= 1.0 - 1e-12;
    json lim = json::array();
    for (const auto& l : lp.limit) {
      lim.push_back({{"k", l.k}, {"xi_q_k", l.value}});
      ok = ok && std::abs(l.value - 1.0) <= 0.1;
    }
    record(check("coefficient_bounds", ok,
                 {{"class", to_string(lp.class_tag)},
                  {"D_estimate", lp.D_estimate},
                  {"g", lp.g_coeffs},
                  {"bound_margin", lp.bound_margin},
                  {"limit", lim}}));
  } else if (q.kind() == QKind::negative_real) {
    const auto r = negative_q_report(q, c.k_max.value_or(default_negative_k_max(q)));
    record(check("negative_q_structure", r.failure.empty() && r.r_has_no_real_roots,
                 neg_report_json(r)));
  }

  auto doc = header("verify");
  doc["q"] = cjson(c.q);
  doc["ok"] = all_ok;
  doc["checks"] = checks;
  Outcome o{doc};
  if (!all_ok) o.code = ExitCode::certification_error;
  return o;
}

struct SweepRow {
  double q = 0.0;
  json row;
};

inline SweepRow sweep_point(const RunConfig& c, double qv) {
  const auto q = QParam::real(qv);
  if (c.report == SweepReport::alternation) {
    const auto r = negative_q_report(q, c.k_max.value_or(default_negative_k_max(q)));
    return {qv, neg_report_json(r)};
  }
  return {qv, {{"q", qv}, {"complex_pair_count", complex_pair_count(q)}}};
}

inline std::string fmt_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline Outcome run_sweep(const RunConfig& c, std::ostream& err) {
  std::vector<double> grid;
  for (int i = 0; i < c.steps; ++i)
    grid.push_back(c.steps == 1 ? c.q_from : c.q_from + (c.q_to - c.q_from) * i / (c.steps - 1));
  std::vector<SweepRow> rows(grid.size());
  if (c.jobs <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) rows[i] = sweep_point(c, grid[i]);
  } else {
    // Windows of at most `jobs` points; results land at their input position.
    for (std::size_t start = 0; start < grid.size(); start += static_cast<std::size_t>(c.jobs)) {
      std::vector<std::future<SweepRow>> fs;
      const std::size_t stop = std::min(grid.size(), start + static_cast<std::size_t>(c.jobs));
      for (std::size_t i = start; i < stop; ++i) fs.push_back(std::async(std::launch::async, sweep_point, c, grid[i]));
      for (std::size_t i = start; i < stop; ++i) rows[i] = fs[i - start].get();
    }
  }

  Outcome o;
  if (c.report == SweepReport::alternation) {
    for (const auto& r : rows) {
      if (r.row["failure"].is_null()) continue;
      err << "sweep: q = " << fmt_double(r.q) << ": " << r.row["failure"].get<std::string>() << '\n';
      o.code = ExitCode::certification_error;
    }
  }
  auto doc = header("sweep");
  doc["report"] = c.report == SweepReport::alternation ? "alternation" : "pairs";
  json arr = json::array();
  for (const auto& r : rows) arr.push_back(r.row);
  doc["rows"] = arr;
  o.doc = doc;

  std::ostringstream csv;
  if (c.report == SweepReport::alternation) {
    csv << "q,real_zeros,alternation_ok,modulus_order_alternates,monotone_from,complex_pair_count,r_has_no_real_roots\n";
    for (const auto& r : rows)
      csv << fmt_double(r.q) << ',' << r.row["real_zeros_signed"].size() << ','
          << (r.row["sign_alternation_ok"].get<bool>() ? "true" : "false") << ','
          << (r.row["modulus_order_alternates"].get<bool>() ? "true" : "false") << ','
          << r.row["monotone_from"].get<int>() << ',' << r.row["complex_pair_count"].get<int>() << ','
          << (r.row["r_has_no_real_roots"].get<bool>() ? "true" : "false") << '\n';
  } else {
    csv << "q,complex_pair_count\n";
    for (const auto& r : rows) csv << fmt_double(r.q) << ',' << r.row["complex_pair_count"].get<int>() << '\n';
  }
  o.csv = csv.str();
  return o;
}

}  // namespace detail

/// Executes a validated config. Output is written only once the document is complete.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    detail::Outcome o;
    switch (c.subcommand) {
      case Subcommand::eval: o = detail::run_eval(c); break;
      case Subcommand::zeros: o = detail::run_zeros(c); break;
      case Subcommand::spectrum: o = detail::run_spectrum(c, err); break;
      case Subcommand::verify: o = detail::run_verify(c); break;
      case Subcommand::sweep: o = detail::run_sweep(c, err); break;
    }
    if (c.format == OutputFormat::csv)
      out << o.csv;
    else
      out << o.doc.dump(2) << '\n';
    return o.code;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return ExitCode::domain_error;
  } catch (const PrecisionBudgetExceeded& e) {
    err << "precision budget exceeded: " << e.what() << '\n';
    return ExitCode::budget_error;
  } catch (const CertificationFailure& e) {
    err << "certification failure: " << e.what() << '\n';
    return ExitCode::certification_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::internal_error;
  }
}

/// parse_args + run, with usage errors mapped to the domain-error exit code.
inline int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> c;
  try {
    c = parse_args(argc, argv, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return ExitCode::domain_error;
  }
  if (!c) return ExitCode::ok;
  return run(*c, out, err);
}

}  // namespace ptheta::cli
