#pragma once

// Command-line front end: gen, spectrum, rip, kls, bounds, verify, report.
//
// Exit status: 0 success, 2 invalid input (bad flag, failed precondition,
// malformed file), 3 resource cap refusal, 1 anything else. Output is staged
// in memory and written only on success; --out targets are written to a
// temporary file and renamed into place.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "htrip/bounds.hpp"
#include "htrip/errors.hpp"
#include "htrip/harness.hpp"
#include "htrip/sample_matrix.hpp"
#include "htrip/speclab.hpp"
#include "htrip/tailmodels.hpp"

namespace htrip::cli {

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct Options {
  std::string config;
  std::string out;
  std::string format = "text";
  std::string model = "kind=gaussian";
  std::string matrix;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t N = 0;
  std::size_t element_cap = GenerateOptions{}.element_cap;
  unsigned workers = 0;

  // spectrum / report
  std::string stat;
  std::size_t k = 0;
  std::size_t m = 0;
  bool normalize = false;
  std::string iset;
  std::uint64_t cap = EnumerationOptions{}.cap;
  bool fallback = false;
  std::uint64_t fallback_supports = EnumerationOptions{}.fallback_supports;
  std::size_t trials = 100;
  double threshold = kUnset;
  std::size_t kstart = 0;
  bool summary_only = false;

  // calculators
  std::string name;
  std::string regime = "poly";
  double p = kUnset, q = kUnset, sigma = kUnset, lambda = kUnset, alpha = kUnset, vartheta = 1.0, t = kUnset;
  double kk = kUnset, NN = kUnset, nn = kUnset, M = kUnset, M1 = kUnset, beta = kUnset, cphi = kUnset;
  double Ak = kUnset, theta = kUnset, eps = kUnset, s = kUnset, mm = kUnset, v = kUnset, A = kUnset, Z = kUnset;
  double x = kUnset, cut = kUnset, moment = kUnset;
  double c_small = 1.0, C_big = 1.0;

  // kls
  std::vector<std::size_t> Ns;

  // verify
  std::string kind;
  std::string construction;
  double param = kUnset;
  std::string source = "uniform";
  double constant = kUnset;
  std::uint64_t N_lo = 5, N_hi = 50;
};

namespace detail {

using htrip::detail::format_double;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

/// key=value per line, '#' starts a comment line, keys may carry leading dashes.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (int no = 1; std::getline(is, line); ++no) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config file line " + std::to_string(no) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    if (key.empty()) throw FormatError("config file line " + std::to_string(no) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

inline std::string sig(double x) { return format_sig(x, 12); }

inline std::string support_string(const std::vector<std::size_t>& s, const char* sep = ",") {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? sep : "") + std::to_string(s[i] + 1);
  return out + "}";
}

/// "1,3" (1-based) to {0,2}.
inline std::vector<std::size_t> parse_index_set(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      throw DomainError("index set: '" + item + "' is not a positive integer");
    }
    if (pos != item.size() || v == 0) throw DomainError("index set: '" + item + "' is not a positive integer");
    out.push_back(static_cast<std::size_t>(v - 1));
  }
  return out;
}

inline double need(const char* flag, double v) {
  if (std::isnan(v)) throw DomainError(std::string("missing required --") + flag);
  return v;
}

inline std::size_t need_count(const char* flag, std::size_t v) {
  if (v == 0) throw DomainError(std::string("--") + flag + " must be >= 1");
  return v;
}

/// The resolved configuration as comment lines: every option that was given
/// or carries a default.
inline void echo_config(const CLI::App& sub, std::ostream& os) {
  os << "# subcommand=" << sub.get_name() << "\n";
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string key = opt->get_lnames().front();
    if (key == "help" || key == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      if (opt->get_expected_min() == 0) {
        value = "true";
      } else {
        for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      }
    } else if (opt->get_expected_min() == 0) {
      value = "false";
    } else {
      value = opt->get_default_str();
    }
    if (!value.empty() && value != "nan") os << "# " << key << "=" << value << "\n";
  }
  os << "# generator_id=" << kGeneratorId << "\n";
}

inline EnumerationOptions enumeration_of(const Options& o) {
  EnumerationOptions e;
  e.cap = o.cap;
  e.allow_fallback = o.fallback;
  e.fallback_supports = o.fallback_supports;
  e.fallback_seed = o.seed;
  return e;
}

inline SampleMatrix acquire_matrix(const Options& o) {
  if (!o.matrix.empty()) return load_matrix(o.matrix);
  const ColumnModel model = parse_model_record(o.model);
  GenerateOptions g;
  g.element_cap = o.element_cap;
  return generate_matrix(model, need_count("n", o.n), need_count("N", o.N), o.seed, g);
}

inline bool csv(const Options& o) {
  if (o.format != "text" && o.format != "csv") throw DomainError("--format must be text or csv");
  return o.format == "csv";
}

// ---------------------------------------------------------------------------
// Subcommands. Each writes its artifact into `os`.

inline void run_gen(const Options& o, std::ostream& os, std::string& file_text) {
  if (o.out.empty()) throw DomainError("gen: --out is required");
  const SampleMatrix a = acquire_matrix(o);
  std::ostringstream file;
  write_matrix(file, a);
  file_text = file.str();
  os << "rows: " << a.rows() << "\ncols: " << a.cols() << "\n";
  os << "model: " << to_record(a.model()) << "\n";
  os << "master_seed: " << a.master_seed() << "\n";
  os << "M: " << sig(column_norm_max(a)) << "\n";
}

inline void run_spectrum(const Options& o, std::ostream& os) {
  const bool as_csv = csv(o);
  const SampleMatrix a = acquire_matrix(o);
  const auto eo = enumeration_of(o);
  std::optional<SparseExtremum> ext;
  double value = 0.0;
  std::size_t level = 0;
  const std::string& st = o.stat;
  if (st == "ak") {
    level = need_count("k", o.k);
    ext = exact_Ak(a, level, eo);
  } else if (st == "bksq") {
    level = need_count("k", o.k);
    ext = exact_Bk_sq(a, level, eo);
  } else if (st == "deltam") {
    level = need_count("m", o.m);
    ext = exact_delta_m(a, level, o.normalize, eo);
  } else if (st == "qk") {
    level = need_count("k", o.k);
    const auto iset = parse_index_set(o.iset);
    for (std::size_t i : iset) require(i < a.cols(), "qk: --iset index exceeds N");
    ext = exact_Qk(a, iset, level, eo);
  } else if (st == "deltam_bound") {
    level = need_count("m", o.m);
    value = delta_m_upper_from_Bm(a, level, eo);
  } else if (st == "m") {
    value = column_norm_max(a);
  } else if (st == "colnorm") {
    value = column_norm_deviation(a);
  } else if (st == "s") {
    SquareMatrix sigma = SquareMatrix::identity(a.rows());
    const double v = second_moment(a.model());
    for (std::size_t i = 0; i < a.rows(); ++i) sigma(i, i) = v;
    value = covariance_deviation_S(a, sigma);
  } else {
    throw DomainError("spectrum: unknown --stat '" + st + "' (ak, bksq, deltam, qk, deltam_bound, m, colnorm, s)");
  }
  if (ext) value = ext->value;
  if (as_csv) {
    os << "stat,level,value,support,lower_estimate,supports_visited,rip_violated\n";
    os << st << "," << level << "," << format_double(value) << ","
       << (ext ? support_string(ext->support, " ") : std::string()) << "," << (ext && ext->lower_estimate ? 1 : 0)
       << "," << (ext ? ext->supports_visited : 0) << "," << (ext && ext->rip_violated ? 1 : 0) << "\n";
    return;
  }
  os << "stat: " << st << "\n";
  if (level) os << "level: " << level << "\n";
  os << "value: " << sig(value) << "\n";
  if (ext) {
    os << "support: " << support_string(ext->support) << "\n";
    os << "supports_visited: " << ext->supports_visited << "\n";
    if (ext->lower_estimate) os << "note: randomized support sampling; value is a lower estimate\n";
    if (st == "deltam") os << "rip_violated: " << (ext->rip_violated ? "true" : "false") << "\n";
  }
}

inline RipParams rip_params_of(const Options& o) {
  RipParams r;
  if (o.regime == "poly") {
    r.regime = TailRegime::Polynomial;
    r.exponent = need("p", o.p);
    r.eps = need("eps", o.eps);
  } else if (o.regime == "exp") {
    r.regime = TailRegime::Exponential;
    r.exponent = need("alpha", o.alpha);
  } else {
    throw DomainError("--regime must be poly or exp");
  }
  r.theta = need("theta", o.theta);
  r.vartheta = o.vartheta;
  r.n = need("n", o.nn);
  r.N = need("N", o.NN);
  r.c_abs = o.c_small;
  r.C_abs = o.C_big;
  return r;
}

inline void print_rip(const RipSparsity& r, std::ostream& os) {
  os << "m: " << sig(r.m) << "\n";
  os << "m_raw: " << sig(r.m_raw) << "\n";
  os << "beta: " << sig(r.beta) << "\n";
  if (!std::isnan(r.C_theta_eps_p)) os << "C_theta_eps_p: " << sig(r.C_theta_eps_p) << "\n";
  os << "N_window: [" << sig(r.N_lower) << ", " << sig(r.N_upper) << "]\n";
  os << "in_window: " << (r.in_window ? "true" : "false") << "\n";
  if (!r.in_window) os << "warning: N lies outside the admissible window; the estimate is not asserted there\n";
}

inline void run_rip(const Options& o, std::ostream& os) {
  const auto r = rip_sparsity(rip_params_of(o));
  print_rip(r, os);
  if (!o.matrix.empty()) {
    const SampleMatrix a = load_matrix(o.matrix);
    if (r.m >= 1.0) {
      const auto d = exact_delta_m(a, static_cast<std::size_t>(r.m), true, enumeration_of(o));
      os << "delta_m: " << sig(d.value) << "\n";
      os << "delta_m_support: " << support_string(d.support) << "\n";
      os << "rip_violated: " << (d.rip_violated ? "true" : "false") << "\n";
    } else {
      os << "delta_m: skipped (m = 0)\n";
    }
  }
}

inline void run_kls(const Options& o, std::ostream& os) {
  const bool as_csv = csv(o);
  const ColumnModel model = parse_model_record(o.model);
  GenerateOptions g;
  g.element_cap = o.element_cap;
  const auto r =
      kls_scaling_experiment(model, need_count("n", o.n), o.Ns, need_count("trials", o.trials), o.seed, o.workers, g);
  if (as_csv) {
    os << "N,n_over_N,median_S,residual\n";
    for (std::size_t i = 0; i < r.N_list.size(); ++i)
      os << r.N_list[i] << "," << format_double(static_cast<double>(o.n) / static_cast<double>(r.N_list[i])) << ","
         << format_double(r.medians[i]) << "," << format_double(r.residuals[i]) << "\n";
    os << "# slope=" << format_double(r.slope) << "\n# intercept=" << format_double(r.intercept) << "\n";
    return;
  }
  for (std::size_t i = 0; i < r.N_list.size(); ++i)
    os << "N=" << r.N_list[i] << " median_S: " << sig(r.medians[i]) << " residual: " << sig(r.residuals[i]) << "\n";
  os << "slope: " << sig(r.slope) << "\n";
  os << "intercept: " << sig(r.intercept) << "\n";
  os << "strictly_decreasing: " << (r.strictly_decreasing ? "true" : "false") << "\n";
}

inline Case1Params case1_of(const Options& o) {
  return {need("p", o.p), need("sigma", o.sigma), need("lambda", o.lambda), o.vartheta, need("t", o.t),
          need("k", o.kk), need("N", o.NN)};
}

inline Case2Params case2_of(const Options& o) {
  return {need("alpha", o.alpha), need("lambda", o.lambda), o.vartheta, need("t", o.t), need("k", o.kk),
          need("N", o.NN), o.C_big};
}

inline void run_bounds(const Options& o, std::ostream& os) {
  auto line = [&](const std::string& k, double v) { os << k << ": " << sig(v) << "\n"; };
  auto prob = [&](const ProbabilityBound& b) {
    line("prob_floor_raw", b.raw);
    line("prob_floor", b.clipped);
  };
  const std::string& nm = o.name;
  if (nm == "c1") {
    line("c1", c1_sigma_lambda_p(need("sigma", o.sigma), need("lambda", o.lambda), need("p", o.p)));
  } else if (nm == "c2") {
    line("c2", c2_sigma_lambda(need("sigma", o.sigma), need("lambda", o.lambda)));
  } else if (nm == "c3") {
    line("c3", c3_sigma_lambda_p(need("sigma", o.sigma), need("lambda", o.lambda), need("p", o.p)));
  } else if (nm == "m1beta1" || nm == "m1beta2") {
    const auto r = nm == "m1beta1" ? m1_beta_case1(case1_of(o)) : m1_beta_case2(case2_of(o));
    line("M1", r.M1);
    line("beta", r.beta);
    os << "beta_below_1_32: " << (r.admissible ? "true" : "false") << "\n";
  } else if (nm == "akbk") {
    const auto r = ak_bk_upper(need("M", o.M), need("M1", o.M1), need("t", o.t), need("beta", o.beta),
                               std::isnan(o.cphi) ? kCphiPolynomial : o.cphi);
    line("A_bound", r.A_bound);
    line("Bsq_bound", r.Bsq_bound);
  } else if (nm == "qk1") {
    const auto r = qk_bound_case1(case1_of(o), need("M", o.M), need("Ak", o.Ak));
    line("Qk_bound", r.bound);
    prob(r.prob_floor);
  } else if (nm == "qk2") {
    const auto r = qk_bound_case2(case2_of(o), need("M", o.M), need("Ak", o.Ak));
    line("Qk_bound", r.bound);
    prob(r.prob_floor);
  } else if (nm == "rip") {
    print_rip(rip_sparsity(rip_params_of(o)), os);
  } else if (nm == "c_theta") {
    line("C_theta_eps_p", c_theta_eps_p(need("theta", o.theta), need("eps", o.eps), need("p", o.p), o.c_small));
  } else if (nm == "kls_mid") {
    const auto r = kls_bound_mid_p(need("p", o.p), need("eps", o.eps), need("n", o.nn), need("N", o.NN),
                                   need("M", o.M), o.C_big);
    line("S_bound", r.bound);
    line("C_p_eps", r.C_p_eps);
    line("gamma", r.gamma);
    prob(r.prob_floor);
  } else if (nm == "kls_high" || nm == "kls_exp") {
    const auto r = nm == "kls_high"
                       ? kls_bound_high_p(need("p", o.p), need("n", o.nn), need("N", o.NN), need("M", o.M), o.C_big)
                       : kls_bound_exponential(need("alpha", o.alpha), need("n", o.nn), need("N", o.NN),
                                               need("M", o.M), o.C_big);
    line("S_bound", r.bound);
    line("C_phi", r.C_phi);
    line("p0", r.p0);
    line("prob_floor", clip_probability(1.0 - r.p0));
    if (!r.in_window) os << "warning: N below the admissible range; the estimate is not asserted there\n";
  } else if (nm == "kls_decomp") {
    line("bound", kls_decomposition_bound(need("A", o.A), need("Z", o.Z), need("n", o.nn), need("cphi", o.cphi)));
  } else if (nm == "cphi_poly") {
    line("C_phi", decomposition_cphi_polynomial(need("p", o.p), o.vartheta, need("N", o.NN)));
  } else if (nm == "cphi_exp") {
    line("C_phi", decomposition_cphi_exponential(need("alpha", o.alpha), o.vartheta, need("N", o.NN)));
  } else if (nm == "c_alpha") {
    line("C_alpha", c_alpha(need("alpha", o.alpha)));
  } else if (nm == "desym") {
    line("threshold", desymmetrization_threshold(need("q", o.q), need("N", o.NN)));
  } else if (nm == "orderstats") {
    line("bound", order_stats_bound(need("q", o.q), need("s", o.s), need("k", o.kk), need("N", o.NN)));
  } else if (nm == "lower_tp") {
    const double p = need("p", o.p), m = need("m", o.mm), N = need("N", o.NN);
    line("threshold", lower_threshold_trunc_pareto(p, m, N));
    line("lambda", truncation_level_for(p, m, N));
  } else if (nm == "lower_pareto") {
    line("threshold", lower_threshold_pareto(need("q", o.q), need("m", o.mm), need("N", o.NN)));
  } else if (nm == "lower_weibull") {
    line("threshold", lower_threshold_weibull(need("alpha", o.alpha), need("m", o.mm), need("N", o.NN)));
  } else if (nm == "sharpness_cap") {
    os << "cap: " << rip_sharpness_cap(need("t", o.t), need("n", o.nn)) << "\n";
  } else if (nm == "binomial_median") {
    const double N = need("N", o.NN), m = need("m", o.mm);
    require(N >= 0 && m >= 0 && N == std::floor(N) && m == std::floor(m), "binomial_median: N and m must be integers");
    const auto r = binomial_median_check(static_cast<std::uint64_t>(N), need("v", o.v), static_cast<std::uint64_t>(m));
    os << "triggered: " << (r.triggered ? "true" : "false") << "\n";
    line("tail", r.tail);
    os << "holds: " << (r.holds() ? "true" : "false") << "\n";
  } else if (nm == "concentration") {
    const auto r = concentration_tail_bound(need("p", o.p), need("t", o.t), need("moment", o.moment), need("n", o.nn),
                                            need("N", o.NN), o.C_big);
    line("bound_raw", r.raw);
    line("bound", r.clipped);
  } else if (nm == "second_moment") {
    line("second_moment", second_moment(parse_model_record(o.model)));
  } else if (nm == "gamma") {
    line("gamma", gamma_function(need("x", o.x)));
  } else if (nm == "trunc_moment") {
    line("a_p", moment_p_truncated_pareto(need("p", o.p), need("cut", o.cut)));
  } else if (nm == "inverse_tail") {
    line("x", inverse_tail_truncated_pareto(need("p", o.p), need("cut", o.cut), need("v", o.v)));
  } else if (nm == "sigma_quarter") {
    line("sigma", sigma_preset_quarter(need("p", o.p)));
  } else if (nm == "sigma_near_two") {
    line("sigma", sigma_preset_near_two(need("p", o.p), need("eps", o.eps)));
  } else {
    throw DomainError("bounds: unknown --name '" + nm + "'");
  }
}

inline void run_verify(const Options& o, std::ostream& os) {
  const bool as_csv = csv(o);
  const std::size_t trials = o.trials;
  if (o.kind == "lower") {
    LowerBoundConstruction c{};
    if (o.construction == "tp") c.kind = Construction::TruncPareto;
    else if (o.construction == "pareto") c.kind = Construction::Pareto;
    else if (o.construction == "weibull") c.kind = Construction::Weibull;
    else throw DomainError("verify: --construction must be tp, pareto or weibull");
    c.parameter = need("param", o.param);
    const auto r = verify_lower_bound(c, need_count("m", o.m), need_count("n", o.n), need_count("N", o.N),
                                      need_count("trials", trials), o.seed, enumeration_of(o), o.workers);
    if (as_csv) {
      write_csv(os, r.summary);
      return;
    }
    os << "threshold: " << sig(r.threshold) << "\n";
    os << "exceed_count: " << r.exceed_count << "\n";
    os << "frequency: " << sig(r.frequency) << "\n";
    os << "std_error: " << sig(r.std_error) << "\n";
    const double floor = 0.5 - 3.0 * std::sqrt(0.25 / static_cast<double>(r.trials));
    os << "consistent_with_half: " << (r.frequency >= floor ? "true" : "false") << "\n";
    if (r.lower_estimate) os << "note: randomized support sampling was used (explicitly allowed)\n";
  } else if (o.kind == "orderstats") {
    const auto r = verify_order_stats(need("q", o.q), need("s", o.s), need_count("k", o.k), need_count("N", o.N),
                                      need_count("trials", trials), o.seed);
    if (as_csv) {
      os << "q,s,k,N,trials,bound,violations,expected_violations,max_observed\n";
      os << format_double(o.q) << "," << format_double(o.s) << "," << o.k << "," << o.N << "," << r.trials << ","
         << format_double(r.bound) << "," << r.violations << "," << format_double(r.expected_violations) << ","
         << format_double(r.max_observed) << "\n";
      return;
    }
    os << "bound: " << sig(r.bound) << "\n";
    os << "violations: " << r.violations << "\n";
    os << "expected_violations: " << sig(r.expected_violations) << "\n";
    os << "max_observed: " << sig(r.max_observed) << "\n";
  } else if (o.kind == "desym") {
    NonnegativeSource src;
    if (o.source == "uniform") src = NonnegativeSource::uniform01();
    else if (o.source == "model") src = NonnegativeSource::abs_of(parse_model_record(o.model));
    else if (o.source == "constant") src = NonnegativeSource::constant_value(need("const", o.constant));
    else throw DomainError("verify: --source must be uniform, model or constant");
    const auto r = verify_desymmetrization(src, need("q", o.q), need_count("N", o.N), need_count("trials", trials),
                                           o.seed);
    if (as_csv) {
      os << "source,q,N,trials,threshold,frequency,std_error,max_deviation\n";
      os << o.source << "," << format_double(o.q) << "," << o.N << "," << r.trials << "," << format_double(r.threshold)
         << "," << format_double(r.frequency) << "," << format_double(r.std_error) << ","
         << format_double(r.max_deviation) << "\n";
      return;
    }
    os << "threshold: " << sig(r.threshold) << "\n";
    os << "frequency: " << sig(r.frequency) << "\n";
    os << "std_error: " << sig(r.std_error) << "\n";
    os << "max_deviation: " << sig(r.max_deviation) << "\n";
  } else if (o.kind == "binomial") {
    require(o.N_lo >= 1 && o.N_hi >= o.N_lo, "verify: need 1 <= --Nlo <= --Nhi");
    const auto rep = verify_binomial_median(default_binomial_grid(o.N_lo, o.N_hi));
    if (as_csv) {
      os << "N,v,m,triggered,tail,holds\n";
      for (const auto& r : rep.rows)
        os << r.c.N << "," << format_double(r.c.v) << "," << r.c.m << "," << (r.triggered ? 1 : 0) << ","
           << format_double(r.tail) << "," << (r.holds ? 1 : 0) << "\n";
      return;
    }
    os << "cases: " << rep.rows.size() << "\n";
    os << "triggered: " << rep.triggered << "\n";
    os << "exceptions: " << rep.exceptions << "\n";
  } else {
    throw DomainError("verify: --kind must be lower, orderstats, desym or binomial");
  }
}

inline Statistic statistic_of(const Options& o) {
  const std::string& st = o.stat;
  if (st == "ak") return statistic::Ak{need_count("k", o.k)};
  if (st == "bksq") return statistic::BkSq{need_count("k", o.k)};
  if (st == "deltam") return statistic::DeltaM{need_count("m", o.m), o.normalize};
  if (st == "s") return statistic::S{};
  if (st == "m") return statistic::M{};
  if (st == "ptheta") return statistic::Ptheta{need("theta", o.theta)};
  if (st == "orderstat") return statistic::OrderStatSum{need("q", o.q), need_count("kstart", o.kstart)};
  if (st == "desym") return statistic::DesymDeviation{need("q", o.q)};
  throw DomainError("report: unknown --stat '" + st + "' (ak, bksq, deltam, s, m, ptheta, orderstat, desym)");
}

/// Plot-ready CSV of a generic experiment.
inline void run_report(const Options& o, std::ostream& os) {
  ExperimentSpec spec;
  spec.model = parse_model_record(o.model);
  spec.n = need_count("n", o.n);
  spec.N = need_count("N", o.N);
  spec.stat = statistic_of(o);
  spec.trials = need_count("trials", o.trials);
  spec.master_seed = o.seed;
  if (!std::isnan(o.threshold)) spec.threshold = o.threshold;
  spec.retain_values = !o.summary_only;
  spec.enumeration = enumeration_of(o);
  spec.generation.element_cap = o.element_cap;
  const auto s = run_experiment(spec, o.workers);
  os << "# spec=" << s.spec_text << "\n";
  os << "# median=" << format_double(s.quantiles.median) << "\n";
  if (s.threshold) os << "# frequency=" << format_double(s.frequency) << "\n";
  write_csv(os, s);
}

// ---------------------------------------------------------------------------

inline void add_common(CLI::App* sub, Options& o, bool with_format = true) {
  sub->add_option("--config", o.config, "key=value config file; flags override its values");
  sub->add_option("--out", o.out, "output path (written atomically)");
  if (with_format) sub->add_option("--format", o.format, "text or csv")->capture_default_str();
}

inline void add_matrix_source(CLI::App* sub, Options& o) {
  sub->add_option("--model", o.model, "column model record, e.g. kind=pareto;q=4;normalize=variance")
      ->capture_default_str();
  sub->add_option("--n", o.n, "rows");
  sub->add_option("--N", o.N, "columns");
  sub->add_option("--seed", o.seed, "master seed")->capture_default_str();
  sub->add_option("--element-cap", o.element_cap, "refuse to generate more than this many entries")
      ->capture_default_str();
}

inline void add_enumeration(CLI::App* sub, Options& o) {
  sub->add_option("--cap", o.cap, "largest C(N,k) enumerated exactly")->capture_default_str();
  sub->add_flag("--fallback", o.fallback, "sample supports when over the cap (lower estimates)");
  sub->add_option("--fallback-supports", o.fallback_supports, "supports sampled in fallback mode")
      ->capture_default_str();
}

inline void add_constants(CLI::App* sub, Options& o) {
  sub->add_option("--vartheta", o.vartheta, "tail hypothesis constant")->capture_default_str();
  sub->add_option("--c", o.c_small, "small absolute constant")->capture_default_str();
  sub->add_option("--C", o.C_big, "large absolute constant")->capture_default_str();
}

inline void build(CLI::App& app, Options& o) {
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate a sample matrix file");
  add_common(gen, o, false);
  add_matrix_source(gen, o);

  auto* spec = app.add_subcommand("spectrum", "exact sparse extrema of a matrix");
  add_common(spec, o);
  add_matrix_source(spec, o);
  add_enumeration(spec, o);
  spec->add_option("--matrix", o.matrix, "matrix file (instead of --model/--n/--N)");
  spec->add_option("--stat", o.stat, "ak, bksq, deltam, qk, deltam_bound, m, colnorm, s")->required();
  spec->add_option("--k", o.k, "sparsity for ak, bksq, qk");
  spec->add_option("--m", o.m, "sparsity for deltam");
  spec->add_flag("--normalize", o.normalize, "use A / sqrt(n) for deltam");
  spec->add_option("--iset", o.iset, "1-based index set I for qk, e.g. 1,3");

  auto* rip = app.add_subcommand("rip", "restricted isometry sparsity level (optionally with exact delta_m)");
  add_common(rip, o, false);
  add_constants(rip, o);
  add_enumeration(rip, o);
  rip->add_option("--regime", o.regime, "poly or exp")->capture_default_str();
  rip->add_option("--theta", o.theta);
  rip->add_option("--eps", o.eps);
  rip->add_option("--p", o.p);
  rip->add_option("--alpha", o.alpha);
  rip->add_option("--n", o.nn);
  rip->add_option("--N", o.NN);
  rip->add_option("--matrix", o.matrix, "matrix file to evaluate delta_m on at the computed m");
  rip->add_option("--seed", o.seed)->capture_default_str();

  auto* kls = app.add_subcommand("kls", "covariance approximation scaling experiment");
  add_common(kls, o);
  kls->add_option("--model", o.model)->capture_default_str();
  kls->add_option("--n", o.n);
  kls->add_option("--Ns", o.Ns, "strictly increasing list of N, e.g. 200,400,800")->delimiter(',')->required();
  kls->add_option("--trials", o.trials)->capture_default_str();
  kls->add_option("--seed", o.seed)->capture_default_str();
  kls->add_option("--workers", o.workers, "0 = hardware concurrency")->capture_default_str();
  kls->add_option("--element-cap", o.element_cap)->capture_default_str();

  auto* bounds = app.add_subcommand("bounds", "closed-form bound calculators");
  add_common(bounds, o, false);
  add_constants(bounds, o);
  bounds->add_option("--name", o.name, "calculator name")->required();
  bounds->add_option("--p", o.p);
  bounds->add_option("--q", o.q);
  bounds->add_option("--sigma", o.sigma);
  bounds->add_option("--lambda", o.lambda);
  bounds->add_option("--alpha", o.alpha);
  bounds->add_option("--t", o.t);
  bounds->add_option("--k", o.kk);
  bounds->add_option("--N", o.NN);
  bounds->add_option("--n", o.nn);
  bounds->add_option("--M", o.M);
  bounds->add_option("--M1", o.M1);
  bounds->add_option("--beta", o.beta);
  bounds->add_option("--cphi", o.cphi);
  bounds->add_option("--Ak", o.Ak);
  bounds->add_option("--theta", o.theta);
  bounds->add_option("--eps", o.eps);
  bounds->add_option("--s", o.s);
  bounds->add_option("--m", o.mm);
  bounds->add_option("--v", o.v);
  bounds->add_option("--A", o.A);
  bounds->add_option("--Z", o.Z);
  bounds->add_option("--x", o.x);
  bounds->add_option("--cut", o.cut, "truncation level of the truncated Pareto law");
  bounds->add_option("--moment", o.moment, "p-th moment for the concentration bound");
  bounds->add_option("--regime", o.regime, "poly or exp (rip)")->capture_default_str();
  bounds->add_option("--model", o.model)->capture_default_str();

  auto* verify = app.add_subcommand("verify", "Monte Carlo and exact checks of the probabilistic claims");
  add_common(verify, o);
  add_enumeration(verify, o);
  verify->add_option("--kind", o.kind, "lower, orderstats, desym, binomial")->required();
  verify->add_option("--construction", o.construction, "tp, pareto, weibull");
  verify->add_option("--param", o.param, "p, q or alpha of the construction");
  verify->add_option("--m", o.m);
  verify->add_option("--k", o.k);
  verify->add_option("--n", o.n);
  verify->add_option("--N", o.N);
  verify->add_option("--q", o.q);
  verify->add_option("--s", o.s);
  verify->add_option("--source", o.source, "uniform, model, constant")->capture_default_str();
  verify->add_option("--model", o.model)->capture_default_str();
  verify->add_option("--const", o.constant);
  verify->add_option("--Nlo", o.N_lo)->capture_default_str();
  verify->add_option("--Nhi", o.N_hi)->capture_default_str();
  verify->add_option("--trials", o.trials)->capture_default_str();
  verify->add_option("--seed", o.seed)->capture_default_str();
  verify->add_option("--workers", o.workers)->capture_default_str();

  auto* report = app.add_subcommand("report", "plot-ready CSV of a seeded experiment");
  add_common(report, o, false);
  add_matrix_source(report, o);
  add_enumeration(report, o);
  report->add_option("--stat", o.stat, "ak, bksq, deltam, s, m, ptheta, orderstat, desym")->required();
  report->add_option("--k", o.k);
  report->add_option("--m", o.m);
  report->add_flag("--normalize", o.normalize);
  report->add_option("--theta", o.theta);
  report->add_option("--q", o.q);
  report->add_option("--kstart", o.kstart);
  report->add_option("--trials", o.trials)->capture_default_str();
  report->add_option("--threshold", o.threshold);
  report->add_flag("--summary-only", o.summary_only, "one summary row instead of one row per trial");
  report->add_option("--workers", o.workers)->capture_default_str();
}

inline bool given_on_command_line(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  for (const auto& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

inline void write_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw FormatError("cannot open '" + tmp + "' for writing");
    os << content;
    if (!os.flush()) throw FormatError("write failed: '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw FormatError("cannot rename into '" + path + "'");
  }
}

}  // namespace detail

/// Runs one command line (without the program name).
inline int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"htrip: sparse submatrix norms and restricted isometry of heavy-tailed random matrices", "htrip"};
  detail::build(app, o);

  // merge the config file: its pairs go after the subcommand, skipping keys set on the command line
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (!config_path.empty()) {
    CLI::App* sub = nullptr;
    for (const auto& a : args)
      if (a.empty() || a.front() != '-') {
        sub = app.get_subcommand_no_throw(a);
        break;
      }
    try {
      if (!sub) throw FormatError("a subcommand must precede --config");
      std::vector<std::string> extra;
      for (const auto& [key, value] : detail::read_config_file(config_path)) {
        if (detail::given_on_command_line(args, key)) continue;
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (!opt) throw FormatError("config file: unknown key '" + key + "' for " + sub->get_name());
        if (opt->get_expected_min() == 0) {
          if (value == "true" || value == "1" || value == "yes") extra.push_back("--" + key);
          else if (value != "false" && value != "0" && value != "no")
            throw FormatError("config file: '" + key + "' expects true or false");
        } else {
          extra.push_back("--" + key + "=" + value);
        }
      }
      args.insert(args.end(), extra.begin(), extra.end());
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::ostringstream body;
  try {
    std::ostringstream payload;
    std::string matrix_text;
    const std::string name = sub->get_name();
    if (name == "gen") detail::run_gen(o, payload, matrix_text);
    else if (name == "spectrum") detail::run_spectrum(o, payload);
    else if (name == "rip") detail::run_rip(o, payload);
    else if (name == "kls") detail::run_kls(o, payload);
    else if (name == "bounds") detail::run_bounds(o, payload);
    else if (name == "verify") detail::run_verify(o, payload);
    else detail::run_report(o, payload);

    detail::echo_config(*sub, body);
    body << payload.str();
    if (name == "gen") {
      detail::write_atomically(o.out, matrix_text);
      out << body.str() << "wrote: " << o.out << "\n";
    } else if (!o.out.empty()) {
      detail::write_atomically(o.out, body.str());
      out << "wrote: " << o.out << "\n";
    } else {
      out << body.str();
    }
  } catch (const CapError& e) {
    err << "error (resource cap): " << e.what() << "\n";
    return 3;
  } catch (const DomainError& e) {
    err << "error (invalid input): " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    err << "error (invalid input): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace htrip::cli
