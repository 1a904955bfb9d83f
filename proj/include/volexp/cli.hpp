#pragma once

#include "volexp/config.hpp"
#include "volexp/expansion.hpp"
#include "volexp/identities.hpp"
#include "volexp/validation.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace volexp::cli {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_int(long long v) { return std::to_string(v); }

namespace detail {

struct LinearFit {
  double slope = 0.0;
};

inline LinearFit fit_loglog(const std::vector<double>& x,
                            const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return {(n * sxy - sx * sy) / (n * sxx - sx * sx)};
}

inline std::string subcommand_price(const RunConfig& cfg) {
  FullModelPricer::Options fo;
  fo.x0 = cfg.x0;
  FullModelPricer pricer(cfg.model, cfg.grid(), fo);
  const auto prices = pricer.price_sweep(cfg.payoff, cfg.eps, cfg.mc);
  std::string csv = "eps,price,stderr,n_paths,seed\n";
  for (size_t i = 0; i < cfg.eps.size(); ++i)
    csv += fmt(cfg.eps[i]) + "," + fmt(prices[i].mean) + "," +
           fmt(prices[i].stderror) + "," + fmt_int(static_cast<long long>(cfg.mc.n_paths)) +
           "," + fmt_int(static_cast<long long>(cfg.mc.seed)) + "\n";
  return csv;
}

inline std::string subcommand_expand(const RunConfig& cfg) {
  McParams mp{cfg.grid(), cfg.mc};
  const auto res = expand_price(cfg.model, cfg.payoff, cfg.T, cfg.eps, cfg.order,
                                cfg.mc_mode, &mp, cfg.x0);
  std::string csv = "record,i,k,l,eps,value,stderr\n";
  csv += "base,,,,," + fmt(res.base) + ",0\n";
  for (size_t l = 0; l < res.f.size(); ++l)
    csv += "f,,," + fmt_int(static_cast<long long>(l)) + ",," + fmt(res.f[l]) + ",0\n";
  for (const auto& t : res.terms)
    csv += "term," + fmt_int(t.i) + "," + fmt_int(t.k) + "," + fmt_int(t.l) + ",," +
           fmt(t.value) + "," + fmt(t.stderror) + "\n";
  for (size_t e = 0; e < res.eps.size(); ++e)
    csv += "price,,,," + fmt(res.eps[e]) + "," + fmt(res.price[e]) + "," +
           fmt(res.price_stderr[e]) + "\n";
  return csv;
}

inline std::string subcommand_coeffs(const RunConfig& cfg) {
  const int order = cfg.order > 2 ? 2 : cfg.order;
  const CoeffTable table = coeff_table(cfg.model, cfg.T, order);
  std::string csv = "name,order,quadrature,mc_estimate,mc_stderr,z_score\n";
  auto row = [&](const std::string& name, int ord, double quad, bool has_mc,
                 double mc, double se, double z) {
    csv += name + "," + fmt_int(ord) + "," + fmt(quad);
    if (has_mc)
      csv += "," + fmt(mc) + "," + fmt(se) + "," + fmt(z);
    else
      csv += ",,,";
    csv += "\n";
  };

  if (!cfg.cross_check) {
    row("c_xu", order, table.c_xu, false, 0, 0, 0);
    if (order == 2) {
      row("c_uu", order, table.c_uu, false, 0, 0, 0);
      row("c_mu", order, table.c_mu, false, 0, 0, 0);
    }
    for (const auto& [l, wv] : table.f_weights)
      row("w" + fmt_int(order) + "_f" + fmt_int(l), order, wv, false, 0, 0, 0);
    return csv;
  }

  const auto checks =
      coefficient_identity_checks(cfg.model, cfg.T, cfg.grid(), cfg.mc, order);
  // raw coefficients with their bracket-derived MC equivalents
  const auto& w1f2 = checks[0];
  row("c_xu", order, table.c_xu, true, -2.0 * w1f2.mc, 2.0 * w1f2.se,
      (-2.0 * w1f2.mc - table.c_xu) / (2.0 * w1f2.se));
  if (order == 2) {
    const auto& w2f2 = checks[2];
    const auto& w2f3 = checks[3];
    row("c_uu", order, table.c_uu, true, 4.0 * w2f2.mc, 4.0 * w2f2.se,
        (4.0 * w2f2.mc - table.c_uu) / (4.0 * w2f2.se));
    const double cmu_mc = -w2f3.mc - 0.5 * table.c_uu;
    row("c_mu", order, table.c_mu, true, cmu_mc, w2f3.se,
        (cmu_mc - table.c_mu) / w2f3.se);
  }
  for (const auto& c : checks)
    row(c.name, order, c.quadrature, true, c.mc, c.se, c.z());
  return csv;
}

inline std::string subcommand_skew(const RunConfig& cfg) {
  std::vector<double> psi;
  for (double T : cfg.t_grid) psi.push_back(atm_skew(cfg.model, T));
  const auto fit = fit_loglog(cfg.t_grid, psi);
  const double hurst = 0.5 + fit.slope;
  char note[32];
  std::snprintf(note, sizeof(note), "H~%.2f", hurst);
  std::string csv = "T,psi,fitted_exponent,hurst,note\n";
  for (size_t i = 0; i < cfg.t_grid.size(); ++i)
    csv += fmt(cfg.t_grid[i]) + "," + fmt(psi[i]) + "," + fmt(fit.slope) + "," +
           fmt(hurst) + "," + note + "\n";
  return csv;
}

inline std::string subcommand_converge(const RunConfig& cfg, bool& inconclusive) {
  McParams mp{cfg.grid(), cfg.mc};
  const auto study = convergence_study(cfg.model, cfg.payoff, cfg.T, cfg.eps_grid,
                                       cfg.order, mp, cfg.mc_mode, cfg.x0);
  inconclusive = !study.conclusive;
  const std::string status = study.conclusive ? "ok" : "inconclusive";
  std::string csv =
      "eps,mc_price,mc_stderr,expansion_price,abs_error,used_in_fit,slope,status\n";
  for (const auto& r : study.rows)
    csv += fmt(r.eps) + "," + fmt(r.mc_price) + "," + fmt(r.mc_stderr) + "," +
           fmt(r.expansion_price) + "," + fmt(r.abs_error) + "," +
           (r.used_in_fit ? "1" : "0") + "," + fmt(study.slope) + "," + status + "\n";
  return csv;
}

inline std::string subcommand_validate(const RunConfig& cfg, bool& any_fail) {
  const auto checks = run_validation_suite(cfg);
  any_fail = false;
  std::string csv = "suite,check,status,metric,limit\n";
  for (const auto& c : checks) {
    if (!c.pass) any_fail = true;
    csv += c.suite + "," + c.name + "," + (c.pass ? "PASS" : "FAIL") + "," +
           fmt(c.metric) + "," + fmt(c.limit) + "\n";
  }
  return csv;
}

}  // namespace detail

// Batch front-end. Returns the process exit code: 0 success (including an
// inconclusive convergence study), 1 failed validation, 2 configuration
// error, 3 numerical failure.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"forward-variance vol-of-vol expansion toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  int threads = 0;
  long long seed_override = -1;
  long long paths_override = -1;

  const std::vector<std::string> names = {"price",    "expand",  "coeffs",
                                          "skew",     "converge", "validate"};
  const std::vector<std::string> descr = {
      "full-model Monte Carlo price",
      "assembled expansion price and coefficient table",
      "deterministic coefficient table with MC cross-check",
      "ATM skew term structure with power-law fit",
      "eps-convergence study of the expansion error",
      "run the invariant suite"};
  for (size_t i = 0; i < names.size(); ++i) {
    auto* sub = app.add_subcommand(names[i], descr[i]);
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--out", out_path, "write CSV here instead of stdout");
    sub->add_option("--threads", threads, "worker threads (0: auto)");
    sub->add_option("--seed", seed_override, "override mc.seed");
    sub->add_option("--paths", paths_override, "override mc.n_paths");
  }

  std::vector<const char*> argv;
  argv.push_back("volexp");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg;
    if (!config_path.empty())
      cfg = load_config(config_path);
    else if (sub != "validate")
      throw ConfigError("config", "--config is required for this subcommand");
    if (threads > 0) cfg.mc.threads = threads;
    if (seed_override >= 0) cfg.mc.seed = static_cast<uint64_t>(seed_override);
    if (paths_override > 0) cfg.mc.n_paths = static_cast<uint64_t>(paths_override);
    for (const auto& w : cfg.warnings) err << "warning: " << w << "\n";

    std::string csv;
    int code = 0;
    if (sub == "price") {
      csv = detail::subcommand_price(cfg);
    } else if (sub == "expand") {
      csv = detail::subcommand_expand(cfg);
    } else if (sub == "coeffs") {
      csv = detail::subcommand_coeffs(cfg);
    } else if (sub == "skew") {
      csv = detail::subcommand_skew(cfg);
    } else if (sub == "converge") {
      bool inconclusive = false;
      csv = detail::subcommand_converge(cfg, inconclusive);
    } else if (sub == "validate") {
      bool any_fail = false;
      csv = detail::subcommand_validate(cfg, any_fail);
      if (any_fail) code = 1;
    }

    if (!out_path.empty()) {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw ConfigError("out", "cannot open '" + out_path + "' for writing");
      f << csv;
    } else {
      out << csv;
    }
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace volexp::cli
