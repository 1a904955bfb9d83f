#pragma once

#include "volexp/errors.hpp"
#include "volexp/grid.hpp"
#include "volexp/model.hpp"
#include "volexp/parallel.hpp"
#include "volexp/payoff.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace volexp {

// Parsed and validated run configuration. Field names are rejected unless
// explicitly allowed, so typos surface as config errors with a field path
// instead of silently running defaults.
struct RunConfig {
  ModelSpec model = ModelSpec::bergomi(Kernel::exponential(1.5, 1.0),
                                       Curve::flat(0.04), -0.7);
  Payoff payoff = Payoff::call(1.0);
  double T = 1.0;
  int n_steps = 0;  // 0: default 512, or 1024 for singular kernels
  double x0 = 0.0;
  MCRunConfig mc;

  // run block (subcommand parameters)
  std::vector<double> eps = {0.3};
  std::vector<double> eps_grid = {0.05, 0.1, 0.2, 0.3, 0.4};
  std::vector<double> t_grid = {0.1, 0.2, 0.5, 1.0, 2.0};
  int order = 2;
  bool mc_mode = false;
  bool cross_check = true;

  std::vector<std::string> warnings;

  int resolved_steps() const {
    if (n_steps > 0) return n_steps;
    return model.kernel().singular_at_zero() ? 1024 : 512;
  }
  PathGrid grid() const { return PathGrid(T, resolved_steps()); }
};

namespace cfgdetail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& path,
                       const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw ConfigError(path + "." + item.key(), "unknown key");
}

inline double get_num(const json& j, const std::string& path, const std::string& key,
                      std::optional<double> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(path + "." + key, "missing required number");
  }
  if (!j[key].is_number()) throw ConfigError(path + "." + key, "expected a number");
  return j[key].get<double>();
}

inline bool get_bool(const json& j, const std::string& path, const std::string& key,
                     bool def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_boolean()) throw ConfigError(path + "." + key, "expected a boolean");
  return j[key].get<bool>();
}

inline std::string get_str(const json& j, const std::string& path,
                           const std::string& key,
                           std::optional<std::string> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(path + "." + key, "missing required string");
  }
  if (!j[key].is_string()) throw ConfigError(path + "." + key, "expected a string");
  return j[key].get<std::string>();
}

inline std::vector<double> get_num_list(const json& j, const std::string& path,
                                        const std::string& key) {
  if (!j[key].is_array()) throw ConfigError(path + "." + key, "expected an array");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw ConfigError(path + "." + key, "expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline Kernel parse_kernel(const json& j, const std::string& path) {
  const std::string type = get_str(j, path, "type");
  if (type == "exponential") {
    check_keys(j, path, {"type", "phi", "b"});
    return Kernel::exponential(get_num(j, path, "phi"), get_num(j, path, "b"));
  }
  if (type == "power") {
    check_keys(j, path, {"type", "phi", "gamma"});
    return Kernel::power(get_num(j, path, "phi"), get_num(j, path, "gamma"));
  }
  if (type == "expsum") {
    check_keys(j, path, {"type", "terms"});
    if (!j.contains("terms") || !j["terms"].is_array())
      throw ConfigError(path + ".terms", "expected an array of [weight, rate] pairs");
    std::vector<std::pair<double, double>> terms;
    for (const auto& t : j["terms"]) {
      if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number())
        throw ConfigError(path + ".terms", "expected [weight, rate] pairs");
      terms.emplace_back(t[0].get<double>(), t[1].get<double>());
    }
    return Kernel::exp_sum(std::move(terms));
  }
  if (type == "tabulated") {
    check_keys(j, path, {"type", "grid", "values", "singular_at_zero"});
    return Kernel::tabulated(get_num_list(j, path, "grid"),
                             get_num_list(j, path, "values"),
                             get_bool(j, path, "singular_at_zero", false));
  }
  throw ConfigError(path + ".type", "unknown kernel type '" + type + "'");
}

inline Curve parse_curve(const json& j, const std::string& path) {
  const std::string type = get_str(j, path, "type");
  if (type == "flat") {
    check_keys(j, path, {"type", "level", "t_max"});
    return Curve::flat(get_num(j, path, "level"), get_num(j, path, "t_max", 100.0));
  }
  if (type == "piecewise") {
    check_keys(j, path, {"type", "knots", "t_max"});
    if (!j.contains("knots") || !j["knots"].is_array())
      throw ConfigError(path + ".knots", "expected an array of [time, variance]");
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : j["knots"]) {
      if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number())
        throw ConfigError(path + ".knots", "expected [time, variance] pairs");
      knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
    return Curve::piecewise_linear(std::move(knots), get_num(j, path, "t_max", 100.0));
  }
  throw ConfigError(path + ".type", "unknown curve type '" + type + "'");
}

inline ModelSpec parse_model(const json& j) {
  check_keys(j, "model", {"class", "sigma_tilde", "kernel", "curve", "rho"});
  const std::string cls = get_str(j, "model", "class");
  if (!j.contains("kernel")) throw ConfigError("model.kernel", "missing kernel block");
  if (!j.contains("curve")) throw ConfigError("model.curve", "missing curve block");
  Kernel kernel = parse_kernel(j["kernel"], "model.kernel");
  Curve curve = parse_curve(j["curve"], "model.curve");
  const double rho = get_num(j, "model", "rho");
  if (cls == "bergomi") {
    if (j.contains("sigma_tilde"))
      throw ConfigError("model.sigma_tilde", "not applicable to the bergomi class");
    return ModelSpec::bergomi(std::move(kernel), std::move(curve), rho);
  }
  if (cls == "affine") {
    const std::string st = get_str(j, "model", "sigma_tilde", "sqrt");
    if (st == "sqrt")
      return ModelSpec::affine(SigmaTilde::sqrt_vol(), std::move(kernel),
                               std::move(curve), rho);
    if (st == "linear")
      return ModelSpec::affine(SigmaTilde::linear(), std::move(kernel),
                               std::move(curve), rho);
    throw ConfigError("model.sigma_tilde", "must be 'sqrt' or 'linear'");
  }
  throw ConfigError("model.class", "must be 'bergomi' or 'affine'");
}

inline Payoff parse_payoff(const json& j) {
  check_keys(j, "payoff", {"type", "strike"});
  const std::string type = get_str(j, "payoff", "type");
  const double strike = get_num(j, "payoff", "strike", 1.0);
  if (type == "call") return Payoff::call(strike);
  if (type == "put") return Payoff::put(strike);
  if (type == "digital") return Payoff::digital(strike);
  throw ConfigError("payoff.type", "must be 'call', 'put' or 'digital'");
}

}  // namespace cfgdetail

inline RunConfig parse_config(const nlohmann::json& j) {
  using namespace cfgdetail;
  check_keys(j, "config", {"model", "payoff", "grid", "mc", "run"});
  RunConfig cfg;
  if (j.contains("model")) cfg.model = parse_model(j["model"]);
  if (j.contains("payoff")) cfg.payoff = parse_payoff(j["payoff"]);
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    check_keys(g, "grid", {"T", "n_steps", "x0"});
    cfg.T = get_num(g, "grid", "T", 1.0);
    if (!(cfg.T > 0.0)) throw ConfigError("grid.T", "must be > 0");
    const double ns = get_num(g, "grid", "n_steps", 0.0);
    if (ns < 0 || ns != static_cast<int>(ns))
      throw ConfigError("grid.n_steps", "must be a non-negative integer");
    cfg.n_steps = static_cast<int>(ns);
    cfg.x0 = get_num(g, "grid", "x0", 0.0);
  }
  if (j.contains("mc")) {
    const auto& m = j["mc"];
    check_keys(m, "mc", {"n_paths", "seed", "antithetic", "chunk_size"});
    const double np = get_num(m, "mc", "n_paths", 65536.0);
    if (!(np >= 2) || np != static_cast<uint64_t>(np))
      throw ConfigError("mc.n_paths", "must be an integer >= 2");
    cfg.mc.n_paths = static_cast<uint64_t>(np);
    const double seed = get_num(m, "mc", "seed", 42.0);
    if (seed < 0 || seed != static_cast<uint64_t>(seed))
      throw ConfigError("mc.seed", "must be a non-negative integer");
    cfg.mc.seed = static_cast<uint64_t>(seed);
    cfg.mc.antithetic = get_bool(m, "mc", "antithetic", true);
    const double chunk = get_num(m, "mc", "chunk_size", 4096.0);
    if (!(chunk >= 2) || chunk != static_cast<uint64_t>(chunk))
      throw ConfigError("mc.chunk_size", "must be an integer >= 2");
    cfg.mc.chunk_size = static_cast<uint64_t>(chunk);
  }
  if (j.contains("run")) {
    const auto& r = j["run"];
    check_keys(r, "run",
               {"eps", "eps_grid", "T_grid", "order", "mode", "cross_check"});
    if (r.contains("eps")) {
      if (r["eps"].is_number())
        cfg.eps = {r["eps"].get<double>()};
      else
        cfg.eps = get_num_list(r, "run", "eps");
    }
    if (r.contains("eps_grid")) cfg.eps_grid = get_num_list(r, "run", "eps_grid");
    if (r.contains("T_grid")) cfg.t_grid = get_num_list(r, "run", "T_grid");
    const double order = get_num(r, "run", "order", 2.0);
    if (order < 1 || order > 4 || order != static_cast<int>(order))
      throw ConfigError("run.order", "must be an integer in 1..4");
    cfg.order = static_cast<int>(order);
    const std::string mode = get_str(r, "run", "mode", "quadrature");
    if (mode == "mc")
      cfg.mc_mode = true;
    else if (mode != "quadrature")
      throw ConfigError("run.mode", "must be 'quadrature' or 'mc'");
    cfg.cross_check = get_bool(r, "run", "cross_check", true);
  }
  if (cfg.mc_mode == false && cfg.order > 2) cfg.mc_mode = true;

  if (cfg.payoff.kind() == Payoff::Kind::digital && cfg.model.is_rough())
    cfg.warnings.push_back(
        "digital payoff with a singular kernel: the expansion's validity "
        "conditions require a Lipschitz payoff here; results may be unreliable");
  for (double e : cfg.eps)
    if (!(std::abs(e) <= 1.0)) throw ConfigError("run.eps", "must satisfy |eps| <= 1");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config", std::string("JSON parse failure: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace volexp
