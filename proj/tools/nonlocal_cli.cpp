// Command line front end: simulate scenarios, run refinement studies, and
// print expanded configurations.

#include <nonlocal/scenario.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

nonlocal::Scenario load(const std::string& config_path, const std::string& preset) {
  toml::table user;
  if (!config_path.empty()) {
    try {
      user = toml::parse_file(config_path);
    } catch (const toml::parse_error& e) {
      throw nonlocal::ValidationError(config_path + ": " + std::string(e.description()));
    }
  }
  if (!preset.empty()) user.insert_or_assign("preset", preset);
  if (config_path.empty() && preset.empty())
    throw nonlocal::ValidationError("either a config file or --preset is required");
  return nonlocal::make_scenario(user);
}

void override_path(nonlocal::Scenario& s, const std::string& path, const std::string& diag) {
  if (!path.empty()) s.table.insert_or_assign("path", path);
  if (diag == "off") s.table.insert_or_assign("diagnostics", false);
  if (diag == "all") s.table.insert_or_assign("diagnostics", true);
}

int simulate(const std::string& config, const std::string& preset, const std::string& sweep,
             const std::string& out, const std::string& path, const std::string& diag) {
  nonlocal::Scenario s = load(config, preset);
  override_path(s, path, diag);
  if (!sweep.empty()) s = nonlocal::with_sweep(s, sweep);
  const double compare_tol = s.table["compare_tol"].value_or(1e-12);

  const auto results = nonlocal::run_scenario(s);
  nonlocal::write_outputs(results, out, compare_tol);
  bool ok = true;
  for (const auto& r : results) {
    const auto d = nonlocal::summarize(r.report, compare_tol);
    std::cout << r.tag << ": steps=" << r.report.steps << " lambda=" << r.report.lambda
              << " gamma_0=" << r.report.gamma_0 << " N_eta=" << r.report.n_eta;
    if (d.enabled) {
      std::cout << " max_principle=" << (d.max_principle_applicable ? (d.max_principle.pass ? "pass" : "FAIL") : "n/a")
                << " velocity_residual=" << d.velocity_residual << " mass_residual=" << d.mass_residual;
    }
    if (r.report.path == "both") std::cout << " path_deviation=" << d.path_deviation;
    std::cout << (d.pass() ? "" : "  [diagnostics FAILED]") << '\n';
    for (const auto& w : r.report.warnings) std::cerr << "warning (" << r.tag << "): " << w << '\n';
    ok = ok && d.pass();
  }
  std::cout << "outputs written to " << out << '\n';
  return ok ? 0 : 1;
}

int run_eoc(const std::string& config, const std::string& preset, int levels, double t_star,
            const std::string& path) {
  if (levels < 3) throw nonlocal::ValidationError("--levels must be at least 3");
  nonlocal::Scenario s = load(config, preset);
  override_path(s, path, "");
  for (std::size_t i = 0; i < s.size(); ++i) {
    toml::table base = s.table_for(i);
    const double T = std::isnan(t_star) ? base["T"].value_or(0.0) : t_star;
    const double dx0 = base["dx"].value_or(0.0);
    std::vector<nonlocal::RunReport> runs;
    for (int l = 0; l < levels; ++l) {
      toml::table t = base;
      t.insert_or_assign("dx", dx0 / std::pow(2.0, l));
      t.insert_or_assign("T", T);
      t.insert_or_assign("snapshots", toml::array{T});
      runs.push_back(nonlocal::run(nonlocal::build_config(t)));
      std::cout << s.tag(i) << ": dx=" << runs.back().dx << " steps=" << runs.back().steps << '\n';
    }
    for (int l = 0; l + 2 < levels; ++l) {
      const double order = nonlocal::eoc(runs[l], runs[l + 1], runs[l + 2], T);
      std::cout << s.tag(i) << ": eoc(dx=" << runs[l].dx << ") = " << order << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-volume solver for nonlocal traffic conservation laws"};
  app.require_subcommand(1);

  std::string config, preset, sweep, path, diag = "all", out = "out";
  auto* sim = app.add_subcommand("simulate", "run a scenario and write CSV/JSON outputs");
  sim->add_option("config", config, "scenario file (TOML)");
  sim->add_option("--preset", preset, "preset name")
      ->check(CLI::IsMember(nonlocal::presets::names()));
  sim->add_option("--sweep", sweep, "parameter sweep, key=v1,v2,...");
  sim->add_option("--out", out, "output directory");
  sim->add_option("--path", path, "nonlocal sum evaluation")->check(CLI::IsMember({"naive", "fast", "both"}));
  sim->add_option("--diag", diag, "diagnostics")->check(CLI::IsMember({"all", "off"}));

  int levels = 3;
  double t_star = std::nan("");
  std::string eoc_config, eoc_preset, eoc_path;
  auto* eoc = app.add_subcommand("eoc", "experimental order of convergence under grid halving");
  eoc->add_option("config", eoc_config, "scenario file (TOML)");
  eoc->add_option("--preset", eoc_preset, "preset name")->check(CLI::IsMember(nonlocal::presets::names()));
  eoc->add_option("--levels", levels, "number of grids (>= 3)");
  eoc->add_option("--time", t_star, "comparison time (defaults to T)");
  eoc->add_option("--path", eoc_path, "nonlocal sum evaluation")->check(CLI::IsMember({"naive", "fast", "both"}));

  std::string show_config, show_preset;
  auto* show = app.add_subcommand("show-config", "print the fully expanded scenario");
  show->add_option("config", show_config, "scenario file (TOML)");
  show->add_option("--preset", show_preset, "preset name")->check(CLI::IsMember(nonlocal::presets::names()));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return simulate(config, preset, sweep, out, path, diag);
    if (*eoc) return run_eoc(eoc_config, eoc_preset, levels, t_star, eoc_path);
    if (*show) {
      std::cout << load(show_config, show_preset).to_toml() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
