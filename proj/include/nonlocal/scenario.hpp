#pragma once

// Scenario files (TOML), presets for the two traffic examples, parameter
// sweeps, and the CSV / JSON writers.

#include <nonlocal/diagnostics.hpp>
#include <nonlocal/error.hpp>
#include <nonlocal/grid.hpp>
#include <nonlocal/kernel.hpp>
#include <nonlocal/solver.hpp>
#include <nonlocal/velocity.hpp>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nonlocal {

namespace presets {

inline constexpr std::string_view kFig1 = R"(
name = "paper-fig1"
dx = 1e-3
T = 0.5
snapshots = [0.5]
path = "naive"
diagnostics = true
lambda = { policy = "paper" }
domain = { x_min = -2.0, x_max = 3.0 }
kernel = { kind = "linear_decreasing", eta = 0.5 }
initial = { kind = "piecewise", breaks = [-0.5, 0.5], values = [0.25, 0.75, 0.25] }
V1 = { kind = "greenshields_squared" }
V2 = { kind = "estimation", eps = 0.0 }
sweep = { key = "eps", values = [-0.5, 0.0, 0.5] }
)";

inline constexpr std::string_view kFig2 = R"(
name = "paper-fig2"
dx = 1e-3
T = 0.5
snapshots = [0.5]
path = "naive"
diagnostics = true
lambda = { policy = "paper" }
domain = { x_min = -2.0, x_max = 3.0 }
kernel = { kind = "linear_decreasing", eta = 0.5 }
initial = { kind = "piecewise", breaks = [-0.5, 0.5], values = [0.25, 0.75, 0.25] }
V1 = { kind = "quadratic_free" }
V2 = { kind = "preference", alpha = 0.5, q_max = 1.0, v_max = 1.0, inner = { kind = "greenshields_squared" } }
sweep = { key = "alpha", values = [0.0, 0.25, 0.5, 0.75, 1.0] }
)";

inline std::vector<std::string> names() {
  return {"paper-fig1", "paper-fig2", "paper-fig1-coarse", "paper-fig2-coarse"};
}

inline toml::table expand(std::string_view name) {
  const bool coarse = name.ends_with("-coarse");
  const std::string_view base = coarse ? name.substr(0, name.size() - 7) : name;
  toml::table t;
  if (base == "paper-fig1")
    t = toml::parse(kFig1);
  else if (base == "paper-fig2")
    t = toml::parse(kFig2);
  else
    throw ValidationError("unknown preset '" + std::string(name) + "'");
  if (coarse) {
    t.insert_or_assign("name", std::string(name));
    t.insert_or_assign("dx", 4e-3);
  }
  return t;
}

}  // namespace presets

namespace detail {

// Parameter shorthands accepted at top level and as sweep keys.
inline std::string resolve_alias(std::string_view key) {
  if (key == "eps") return "V2.eps";
  if (key == "alpha") return "V2.alpha";
  return std::string(key);
}

inline std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    out.emplace_back(path.substr(start, dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return out;
}

inline void set_path(toml::table& t, std::string_view path, double value) {
  const auto parts = split_path(path);
  toml::table* cur = &t;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    auto* next = cur->get_as<toml::table>(parts[i]);
    if (!next) {
      cur->insert_or_assign(parts[i], toml::table{});
      next = cur->get_as<toml::table>(parts[i]);
    }
    cur = next;
  }
  cur->insert_or_assign(parts.back(), value);
}

inline void merge_into(toml::table& base, const toml::table& over) {
  for (const auto& [k, v] : over) {
    auto* bt = base.get_as<toml::table>(k.str());
    if (bt && v.is_table())
      merge_into(*bt, *v.as_table());
    else
      base.insert_or_assign(k.str(), v);
  }
}

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s == "-0") s = "0";
  return s;
}

inline std::string path_of(std::string_view parent, std::string_view key) {
  return parent.empty() ? std::string(key) : std::string(parent) + "." + std::string(key);
}

inline void collect_unknown(const toml::table& t, const std::set<std::string>& allowed, std::string_view where,
                            std::vector<std::string>& unknown) {
  for (const auto& [k, v] : t)
    if (!allowed.count(std::string(k.str()))) unknown.push_back(path_of(where, k.str()));
}

inline std::string kind_of(const toml::table& t, std::string_view where) {
  const auto kind = t["kind"].value<std::string>();
  if (!kind) throw ValidationError(std::string(where) + ": missing 'kind'");
  return *kind;
}

inline void check_velocity_keys(const toml::table& t, std::string_view where, std::vector<std::string>& unknown) {
  const std::string kind = kind_of(t, where);
  std::set<std::string> allowed{"kind"};
  if (kind == "estimation") allowed.insert("eps");
  if (kind == "preference") allowed.insert({"alpha", "q_max", "v_max", "inner"});
  collect_unknown(t, allowed, where, unknown);
  if (const auto* inner = t.get_as<toml::table>("inner")) check_velocity_keys(*inner, path_of(where, "inner"), unknown);
}

inline void check_keys(const toml::table& t, std::vector<std::string>& unknown) {
  collect_unknown(t,
                  {"name", "dx", "T", "snapshots", "path", "compare_tol", "diagnostics", "lambda", "domain",
                   "kernel", "initial", "V1", "V2", "sweep"},
                  "", unknown);
  if (const auto* s = t.get_as<toml::table>("lambda")) collect_unknown(*s, {"policy", "value"}, "lambda", unknown);
  if (const auto* s = t.get_as<toml::table>("domain")) collect_unknown(*s, {"x_min", "x_max"}, "domain", unknown);
  if (const auto* s = t.get_as<toml::table>("sweep")) collect_unknown(*s, {"key", "values"}, "sweep", unknown);
  if (const auto* s = t.get_as<toml::table>("kernel")) {
    const std::string kind = kind_of(*s, "kernel");
    collect_unknown(*s, kind == "piecewise" ? std::set<std::string>{"kind", "pieces", "eta"}
                                            : std::set<std::string>{"kind", "eta"},
                    "kernel", unknown);
    if (const auto* pieces = s->get_as<toml::array>("pieces"))
      for (std::size_t i = 0; i < pieces->size(); ++i)
        if (const auto* p = pieces->get_as<toml::table>(i))
          collect_unknown(*p, {"a", "b", "coeffs"}, "kernel.pieces[" + std::to_string(i) + "]", unknown);
  }
  if (const auto* s = t.get_as<toml::table>("initial")) {
    const std::string kind = kind_of(*s, "initial");
    std::set<std::string> allowed{"kind"};
    if (kind == "piecewise") allowed.insert({"breaks", "values"});
    if (kind == "constant") allowed.insert("value");
    if (kind == "sigmoid") allowed.insert({"left", "right", "center", "width"});
    if (kind == "gaussian") allowed.insert({"base", "height", "center", "width"});
    collect_unknown(*s, allowed, "initial", unknown);
  }
  for (const char* v : {"V1", "V2"})
    if (const auto* s = t.get_as<toml::table>(v)) check_velocity_keys(*s, v, unknown);
}

inline double number(const toml::table& t, std::string_view key, std::string_view where) {
  const auto v = t[key].value<double>();
  if (!v) throw ValidationError(path_of(where, key) + ": number required");
  return *v;
}

inline double number_or(const toml::table& t, std::string_view key, double fallback, std::string_view where) {
  if (!t.contains(key)) return fallback;
  return number(t, key, where);
}

inline const toml::table& section(const toml::table& t, std::string_view key) {
  const auto* s = t.get_as<toml::table>(key);
  if (!s) throw ValidationError("missing section '" + std::string(key) + "'");
  return *s;
}

inline std::vector<double> numbers(const toml::table& t, std::string_view key, std::string_view where) {
  const auto* arr = t.get_as<toml::array>(key);
  if (!arr) throw ValidationError(path_of(where, key) + ": array of numbers required");
  std::vector<double> out;
  for (const auto& node : *arr) {
    const auto v = node.value<double>();
    if (!v) throw ValidationError(path_of(where, key) + ": array of numbers required");
    out.push_back(*v);
  }
  return out;
}

inline VelocityModel build_velocity(const toml::table& t, std::string_view where) {
  const std::string kind = kind_of(t, where);
  if (kind == "identity") return VelocityModel::identity();
  if (kind == "greenshields_squared") return VelocityModel::greenshields_squared();
  if (kind == "quadratic_free") return VelocityModel::quadratic_free();
  if (kind == "estimation") return VelocityModel::estimation(number_or(t, "eps", 0.0, where));
  if (kind == "preference") {
    const auto* inner = t.get_as<toml::table>("inner");
    VelocityModel v = inner ? build_velocity(*inner, path_of(where, "inner")) : VelocityModel::greenshields_squared();
    return VelocityModel::preference(number(t, "alpha", where), number_or(t, "q_max", 1.0, where),
                                     number_or(t, "v_max", 1.0, where), std::move(v));
  }
  throw ValidationError(std::string(where) + ": unknown velocity kind '" + kind + "'");
}

inline Kernel build_kernel(const toml::table& t) {
  const std::string kind = kind_of(t, "kernel");
  if (kind == "linear_decreasing") return Kernel::linear_decreasing(number(t, "eta", "kernel"));
  if (kind == "constant") return Kernel::constant(number(t, "eta", "kernel"));
  if (kind == "piecewise") {
    const auto* arr = t.get_as<toml::array>("pieces");
    if (!arr || arr->empty()) throw ValidationError("kernel.pieces: non-empty array required");
    std::vector<KernelPiece> pieces;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto* p = arr->get_as<toml::table>(i);
      const std::string where = "kernel.pieces[" + std::to_string(i) + "]";
      if (!p) throw ValidationError(where + ": table required");
      const auto c = numbers(*p, "coeffs", where);
      if (c.empty() || c.size() > 4) throw ValidationError(where + ".coeffs: 1 to 4 coefficients required");
      KernelPiece piece{number(*p, "a", where), number(*p, "b", where), {}};
      std::copy(c.begin(), c.end(), piece.coeffs.begin());
      pieces.push_back(piece);
    }
    return Kernel::piecewise(std::move(pieces));
  }
  throw ValidationError("kernel: unknown kind '" + kind + "'");
}

inline InitialDatum build_initial(const toml::table& t) {
  const std::string kind = kind_of(t, "initial");
  if (kind == "piecewise")
    return InitialDatum::piecewise_constant(numbers(t, "breaks", "initial"), numbers(t, "values", "initial"));
  if (kind == "constant") return InitialDatum::constant(number(t, "value", "initial"));
  if (kind == "sigmoid") {
    const double l = number(t, "left", "initial"), r = number(t, "right", "initial");
    const double c = number_or(t, "center", 0.0, "initial"), w = number(t, "width", "initial");
    if (!(w > 0.0)) throw ValidationError("initial.width must be > 0");
    return InitialDatum::callable([=](double x) { return l + (r - l) / (1.0 + std::exp(-(x - c) / w)); });
  }
  if (kind == "gaussian") {
    const double b = number(t, "base", "initial"), h = number(t, "height", "initial");
    const double c = number_or(t, "center", 0.0, "initial"), w = number(t, "width", "initial");
    if (!(w > 0.0)) throw ValidationError("initial.width must be > 0");
    return InitialDatum::callable([=](double x) {
      const double z = (x - c) / w;
      return b + h * std::exp(-z * z);
    });
  }
  throw ValidationError("initial: unknown kind '" + kind + "'");
}

inline NonlocalPath parse_path(std::string_view s) {
  if (s == "naive") return NonlocalPath::Naive;
  if (s == "fast") return NonlocalPath::Fast;
  if (s == "both") return NonlocalPath::Both;
  throw ValidationError("path must be naive, fast or both (got '" + std::string(s) + "')");
}

}  // namespace detail

// Solver configuration from a fully expanded table.
inline SolverConfig build_config(const toml::table& t) {
  std::vector<std::string> unknown;
  detail::check_keys(t, unknown);
  if (!unknown.empty()) {
    std::string msg = "unknown configuration keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ValidationError(msg);
  }
  if (!t.contains("kernel")) throw ValidationError("missing section 'kernel'");
  const double dx = detail::number(t, "dx", "");
  Kernel kernel = detail::build_kernel(detail::section(t, "kernel"));
  const double eta = detail::number_or(detail::section(t, "kernel"), "eta", kernel.support_end(), "kernel");
  (void)weights(kernel, dx, eta);  // rejects kernels the grid cannot resolve

  const auto& domain = detail::section(t, "domain");
  Grid1D grid(detail::number(domain, "x_min", "domain"), detail::number(domain, "x_max", "domain"), dx);

  LambdaPolicy lambda = LambdaPolicy::cfl();
  if (const auto* l = t.get_as<toml::table>("lambda")) {
    const std::string policy = (*l)["policy"].value_or(std::string("cfl"));
    if (policy == "cfl")
      lambda = LambdaPolicy::cfl();
    else if (policy == "paper")
      lambda = LambdaPolicy::paper_preset();
    else if (policy == "fixed")
      lambda = LambdaPolicy::fixed(detail::number(*l, "value", "lambda"));
    else
      throw ValidationError("lambda.policy must be cfl, paper or fixed");
  }

  const double T = detail::number(t, "T", "");
  std::vector<double> snaps = t.contains("snapshots") ? detail::numbers(t, "snapshots", "") : std::vector<double>{T};

  SolverConfig c{
      .grid = grid,
      .kernel = std::move(kernel),
      .v1 = detail::build_velocity(detail::section(t, "V1"), "V1"),
      .v2 = detail::build_velocity(detail::section(t, "V2"), "V2"),
      .initial = detail::build_initial(detail::section(t, "initial")),
      .final_time = T,
      .lambda = lambda,
      .snapshot_times = std::move(snaps),
      .path = detail::parse_path(t["path"].value_or(std::string("naive"))),
      .compare_tol = detail::number_or(t, "compare_tol", 1e-12, ""),
      .diagnostics = t["diagnostics"].value_or(true),
      .eta = eta,
  };
  return c;
}

struct Sweep {
  std::string key;  // as written, e.g. "eps" or "V2.alpha"
  std::vector<double> values;
};

struct Scenario {
  std::string name;
  toml::table table;  // fully expanded configuration (no preset key)
  std::optional<Sweep> sweep;

  // Number of runs the scenario expands to.
  std::size_t size() const { return sweep && !sweep->values.empty() ? sweep->values.size() : 1; }

  std::string tag(std::size_t i) const {
    if (!sweep || sweep->values.empty()) return name;
    const auto parts = detail::split_path(sweep->key);
    return parts.back() + detail::format_number(sweep->values[i]);
  }

  toml::table table_for(std::size_t i) const {
    toml::table t = table;
    t.erase("sweep");
    if (sweep && !sweep->values.empty()) detail::set_path(t, detail::resolve_alias(sweep->key), sweep->values[i]);
    return t;
  }

  SolverConfig config(std::size_t i) const { return build_config(table_for(i)); }

  std::string to_toml() const {
    std::ostringstream os;
    os << table;
    return os.str();
  }
};

// Preset expansion, shorthand resolution and validation of every run.
inline Scenario make_scenario(const toml::table& user) {
  toml::table t;
  toml::table over = user;
  if (const auto preset = over["preset"].value<std::string>()) {
    t = presets::expand(*preset);
    over.erase("preset");
  } else if (over.contains("preset")) {
    throw ValidationError("preset must be a string");
  }
  // Explicitly set sweep parameters pin the value and drop the preset sweep.
  for (const char* alias : {"eps", "alpha"}) {
    if (const auto v = over[alias].value<double>()) {
      detail::set_path(over, detail::resolve_alias(alias), *v);
      over.erase(alias);
    }
  }
  if (const auto* sw = t.get_as<toml::table>("sweep"); sw && !over.contains("sweep")) {
    const auto key = detail::resolve_alias((*sw)["key"].value_or(std::string()));
    const auto parts = detail::split_path(key);
    const toml::table* cur = &over;
    for (std::size_t i = 0; cur && i + 1 < parts.size(); ++i) cur = cur->get_as<toml::table>(parts[i]);
    if (cur && cur->contains(parts.back())) t.erase("sweep");
  }
  if (over.contains("sweep")) t.erase("sweep");
  detail::merge_into(t, over);

  Scenario s;
  s.name = t["name"].value_or(std::string("run"));
  if (const auto* sw = t.get_as<toml::table>("sweep")) {
    Sweep sweep;
    const auto key = (*sw)["key"].value<std::string>();
    if (!key || key->empty()) throw ValidationError("sweep.key: string required");
    sweep.key = *key;
    sweep.values = sw->contains("values") ? detail::numbers(*sw, "values", "sweep") : std::vector<double>{};
    s.sweep = std::move(sweep);
  }
  s.table = std::move(t);
  for (std::size_t i = 0; i < s.size(); ++i) (void)prepare(s.config(i));
  return s;
}

inline Scenario parse_config_string(std::string_view text) {
  try {
    return make_scenario(toml::parse(text));
  } catch (const toml::parse_error& e) {
    throw ValidationError(std::string("config parse error: ") + std::string(e.description()));
  }
}

inline Scenario parse_config(const std::filesystem::path& path) {
  try {
    return make_scenario(toml::parse_file(path.string()));
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << path.string() << ":" << e.source().begin.line << ": " << e.description();
    throw ValidationError(os.str());
  }
}

// Applies "key=v1,v2,..." to a scenario, replacing any previous sweep.
inline Scenario with_sweep(const Scenario& s, std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ValidationError("sweep must look like key=v1,v2,...");
  Sweep sweep{std::string(text.substr(0, eq)), {}};
  std::string_view rest = text.substr(eq + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string item(rest.substr(0, comma));
    double v = 0.0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (r.ec != std::errc() || r.ptr != item.data() + item.size())
      throw ValidationError("sweep value '" + item + "' is not a number");
    sweep.values.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  Scenario out = s;
  toml::array values;
  for (double v : sweep.values) values.push_back(v);
  out.table.insert_or_assign("sweep", toml::table{{"key", sweep.key}, {"values", std::move(values)}});
  out.sweep = std::move(sweep);
  for (std::size_t i = 0; i < out.size(); ++i) (void)prepare(out.config(i));
  return out;
}

struct RunResult {
  std::string tag;
  std::optional<double> sweep_value;
  toml::table table;
  RunReport report;
};

// Independent runs, one per sweep value, executed concurrently.
inline std::vector<RunResult> run_scenario(const Scenario& s) {
  std::vector<std::future<RunResult>> jobs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&s, i] {
      RunResult r;
      r.tag = s.tag(i);
      if (s.sweep && !s.sweep->values.empty()) r.sweep_value = s.sweep->values[i];
      r.table = s.table_for(i);
      try {
        r.report = run(build_config(r.table));
      } catch (const Error& e) {
        throw Error("run '" + r.tag + "': " + e.what());
      }
      r.report.tag = r.tag;
      return r;
    }));
  }
  std::vector<RunResult> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

struct DiagnosticSummary {
  bool enabled = false;
  bool max_principle_applicable = false;
  MaxPrincipleResult max_principle;
  double velocity_residual = 0.0;
  bool velocity_pass = true;
  double mass_residual = 0.0;
  bool mass_pass = true;
  double path_deviation = 0.0;
  bool path_pass = true;

  bool pass() const { return max_principle.pass && velocity_pass && mass_pass && path_pass; }
};

// Tolerances: range and velocity-difference bounds 1e-12, mass balance 1e-10.
inline DiagnosticSummary summarize(const RunReport& r, double compare_tol = 1e-12) {
  DiagnosticSummary d;
  d.enabled = !r.trace.empty();
  d.path_deviation = r.max_path_deviation;
  d.path_pass = r.path != "both" || r.max_path_deviation <= compare_tol;
  if (!d.enabled) return d;
  d.max_principle_applicable = r.sign_condition && r.kernel_monotone;
  if (d.max_principle_applicable) {
    d.max_principle = check_max_principle(r, r.q_min(), r.q_max(), 1e-12);
    d.velocity_residual = max_velocity_residual(r);
    d.velocity_pass = d.velocity_residual <= 1e-12;
  }
  d.mass_residual = mass_balance(r);
  d.mass_pass = d.mass_residual < 1e-10;
  return d;
}

namespace detail {

inline nlohmann::json to_json(const toml::table& t) {
  std::ostringstream os;
  os << toml::json_formatter{t};
  return nlohmann::json::parse(os.str());
}

inline void write_csv_value(std::ostream& os, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  os.write(buf, res.ptr - buf);
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw Error("cannot open '" + p.string() + "' for writing");
  f.exceptions(std::ios::failbit | std::ios::badbit);
  return f;
}

inline std::string time_label(double t) { return format_number(t); }

}  // namespace detail

inline nlohmann::json report_json(const RunResult& res, double compare_tol = 1e-12) {
  const RunReport& r = res.report;
  const DiagnosticSummary d = summarize(r, compare_tol);
  nlohmann::json j;
  j["tag"] = res.tag;
  if (res.sweep_value) j["sweep_value"] = *res.sweep_value;
  j["config"] = detail::to_json(res.table);
  j["grid"] = {{"x_min", r.x_min}, {"dx", r.dx}, {"n_cells", r.n_cells}};
  j["lambda"] = r.lambda;
  j["dt"] = r.dt;
  j["gamma_0"] = r.gamma_0;
  j["N_eta"] = r.n_eta;
  j["eta"] = r.eta;
  j["weight_total"] = r.weight_total;
  j["steps"] = r.steps;
  j["final_time"] = r.final_time;
  j["path"] = r.path;
  j["far_field"] = "constant extension of the initial tail values";
  j["cfl"] = {{"q_min", r.cfl.density.lo},     {"q_max", r.cfl.density.hi},
              {"nonlocal_lo", r.cfl.nonlocal.lo}, {"nonlocal_hi", r.cfl.nonlocal.hi},
              {"sup_V1", r.cfl.sup_v1},        {"sup_dV1", r.cfl.sup_dv1},
              {"sup_dV2", r.cfl.sup_dv2},      {"lambda_max", r.cfl.lambda_max},
              {"approximate", r.cfl.nonlocal.approximate}};
  j["sign_condition"] = r.sign_condition;
  j["kernel_monotone"] = r.kernel_monotone;

  nlohmann::json diag;
  diag["enabled"] = d.enabled;
  if (d.enabled) {
    diag["max_principle"] = {{"applicable", d.max_principle_applicable}, {"pass", d.max_principle.pass}};
    if (d.max_principle.first) {
      const auto& v = *d.max_principle.first;
      diag["max_principle"]["violation"] = {{"step", v.step}, {"cell", v.cell}, {"value", v.value}};
    }
    diag["velocity_difference"] = {{"max_residual", d.velocity_residual}, {"pass", d.velocity_pass}};
    diag["mass_balance"] = {{"residual", d.mass_residual}, {"pass", d.mass_pass},
                            {"initial_mass", r.initial_mass}, {"final_mass", r.final_mass},
                            {"inflow", r.inflow},             {"outflow", r.outflow}};
    const auto& first = r.trace.front();
    const auto& last = r.trace.back();
    diag["total_variation"] = {{"initial", first.total_variation}, {"final", last.total_variation}};
    diag["monotonicity"] = {{"initial", to_string(first.monotonicity)}, {"final", to_string(last.monotonicity)}};
    nlohmann::json trace = {{"time", nlohmann::json::array()}, {"min", nlohmann::json::array()},
                            {"max", nlohmann::json::array()},  {"tv", nlohmann::json::array()},
                            {"mass", nlohmann::json::array()}, {"velocity_residual", nlohmann::json::array()}};
    for (const auto& e : r.trace) {
      trace["time"].push_back(e.time);
      trace["min"].push_back(e.min);
      trace["max"].push_back(e.max);
      trace["tv"].push_back(e.total_variation);
      trace["mass"].push_back(e.mass);
      trace["velocity_residual"].push_back(e.velocity_residual);
    }
    diag["trace"] = std::move(trace);
  }
  diag["path_deviation"] = {{"max", d.path_deviation}, {"pass", d.path_pass}};
  diag["pass"] = d.pass();
  j["diagnostics"] = std::move(diag);

  nlohmann::json snaps = nlohmann::json::array();
  for (const auto& s : r.snapshots)
    snaps.push_back({{"requested", s.requested},
                     {"time", s.time},
                     {"file", "solution_" + res.tag + "_" + detail::time_label(s.requested) + ".csv"}});
  j["snapshots"] = std::move(snaps);
  j["warnings"] = r.warnings;
  return j;
}

// solution_<tag>_<time>.csv per snapshot, report_<tag>.json per run, and
// comparison_<time>.csv across runs when there is more than one.
inline std::vector<std::filesystem::path> write_outputs(const std::vector<RunResult>& results,
                                                        const std::filesystem::path& out_dir,
                                                        double compare_tol = 1e-12) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create '" + out_dir.string() + "': " + ec.message());
  std::vector<fs::path> written;
  for (const auto& res : results) {
    const RunReport& r = res.report;
    for (const auto& s : r.snapshots) {
      const fs::path p = out_dir / ("solution_" + res.tag + "_" + detail::time_label(s.requested) + ".csv");
      auto f = detail::open_out(p);
      f << "x,q\n";
      for (std::size_t j = 0; j < s.q.size(); ++j) {
        detail::write_csv_value(f, r.x_min + (static_cast<double>(j) + 0.5) * r.dx);
        f << ',';
        detail::write_csv_value(f, s.q[j]);
        f << '\n';
      }
      written.push_back(p);
    }
    const fs::path p = out_dir / ("report_" + res.tag + ".json");
    auto f = detail::open_out(p);
    f << report_json(res, compare_tol).dump(2) << '\n';
    written.push_back(p);
  }
  if (results.size() > 1) {
    const RunReport& first = results.front().report;
    for (const auto& s : first.snapshots) {
      const fs::path p = out_dir / ("comparison_" + detail::time_label(s.requested) + ".csv");
      auto f = detail::open_out(p);
      f << "x";
      std::vector<const Snapshot*> cols;
      for (const auto& res : results) {
        const Snapshot* c = res.report.snapshot_at(s.requested);
        if (!c || c->q.size() != s.q.size()) throw Error("comparison: runs do not share grid and snapshot times");
        cols.push_back(c);
        f << ",q_" << res.tag;
      }
      f << '\n';
      for (std::size_t j = 0; j < s.q.size(); ++j) {
        detail::write_csv_value(f, first.x_min + (static_cast<double>(j) + 0.5) * first.dx);
        for (const auto* c : cols) {
          f << ',';
          detail::write_csv_value(f, c->q[j]);
        }
        f << '\n';
      }
      written.push_back(p);
    }
  }
  return written;
}

}  // namespace nonlocal
