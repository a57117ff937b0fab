#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ilpc/checks.hpp"
#include "ilpc/output.hpp"
#include "ilpc/scenario_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kConfigExit = 1;
constexpr int kSolverExit = 2;
constexpr int kAcceptanceExit = 3;

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ilpc::ConfigError("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ilpc::ConfigError(path + ": " + e.what());
  }
}

struct RunArgs {
  std::string scenario = "batch_process";
  std::string config;
  std::string mode = "ilpc";
  int iterations = 49;
  std::uint64_t seed = 1;
  std::string solver = "binary";
  std::string out;
  bool allow_relaxed_nonaffine = false;
};

int cmd_run(const RunArgs& a, const CLI::App& sub) {
  ilpc::Scenario sc;
  ilpc::RunConfig cfg;
  if (!a.config.empty()) {
    // A config echo carries both the scenario and the run settings; explicit
    // flags still override the run settings.
    const json echo = read_json(a.config);
    if (!echo.contains("scenario") || !echo.contains("run"))
      throw ilpc::ConfigError(a.config + ": expected keys scenario and run");
    const json& s = echo["scenario"];
    sc = s.is_string() ? ilpc::resolve_scenario(s.get<std::string>())
                       : ilpc::parse_scenario(s.dump(), a.config);
    cfg = ilpc::run_config_from_json(echo["run"]);
  } else {
    sc = ilpc::resolve_scenario(a.scenario);
    cfg.iterations = sc.iterations;
    cfg.seed = sc.seed;
  }
  if (a.config.empty() || sub.count("--mode")) cfg.mode = ilpc::parse_mode(a.mode);
  if (sub.count("--iterations")) cfg.iterations = a.iterations;
  if (sub.count("--seed")) cfg.seed = a.seed;
  if (a.config.empty() || sub.count("--ilc-solver"))
    cfg.ilc.mode = a.solver == "relaxed" ? ilpc::IlcMode::Relaxed : ilpc::IlcMode::Binary;
  if (sub.count("--allow-relaxed-nonaffine")) cfg.allow_relaxed_nonaffine = true;

  const ilpc::RunResult res = ilpc::run(sc, cfg);
  const ilpc::RunAudit audit = ilpc::audit_run(sc, res);
  ilpc::write_run_bundle(a.out, sc, res, audit);
  const auto& last = res.logs.back();
  std::printf("%s %s seed %llu: initial %.6g, final closed-loop %.6g, nominal %.6g\n",
              sc.name.c_str(), ilpc::to_string(cfg.mode),
              static_cast<unsigned long long>(cfg.seed), res.logs.front().closed_cost,
              last.closed_cost, last.nominal_cost);
  std::printf("wrote %s\n", a.out.c_str());
  return 0;
}

int cmd_check(const std::string& which) {
  const ilpc::Scenario sc = ilpc::resolve_scenario(which);
  const ilpc::ControlContext ctx = ilpc::ControlContext::from_scenario(sc);
  const auto& sys = ctx.sys;
  std::printf("scenario %s\n", sc.name.c_str());
  std::printf("states %d (t = 0..%d), nx %d, nu %d\n", sys.num_states(), sys.steps(), sys.nx(),
              sys.nu());
  std::printf("stage rows %d, terminal rows %d\n", ctx.cons.stage_rows(),
              ctx.cons.terminal_rows());

  double lo = sys.m_bar(0), hi = lo;
  for (int t = 1; t < sys.steps(); ++t) {
    lo = std::min(lo, sys.m_bar(t));
    hi = std::max(hi, sys.m_bar(t));
  }
  if (hi - lo < 1e-12)
    std::printf("m_bar %.4f\n", lo);
  else
    std::printf("m_bar in [%.4f, %.4f]\n", lo, hi);
  std::printf("initial gain K0 = [%s]\n", [&] {
    std::ostringstream os;
    for (int j = 0; j < sc.K0.cols(); ++j) os << (j ? " " : "") << sc.K0(0, j);
    return os.str();
  }().c_str());

  const auto lip = ilpc::sample_lipschitz(sys, sc.dist, sc.cons, 2000, sc.seed);
  std::printf("lipschitz sample: worst ratio %.4f at t=%d%s\n", lip.worst_ratio, lip.worst_t,
              lip.ok() ? "" : " (warning: exceeds the stated bound)");

  std::mt19937_64 rng(sc.seed);
  const auto init = ilpc::generate_initial_trajectory(sc, ctx, rng);
  std::printf("initial trajectory (seed %llu): worst tightened margin %.6g at t=%d row %d\n",
              static_cast<unsigned long long>(sc.seed), init.check.margin, init.check.t,
              init.check.row);
  std::printf("initial trajectory admissible: %s\n", init.check.ok ? "true" : "false");
  return init.check.ok ? 0 : kConfigExit;
}

double reference_table_error(const ilpc::Scenario& sc) {
  const json j = json::parse(sc.source);
  if (!j.contains("reference")) return std::nan("");
  const ilpc::Trajectory r = ilpc::build_reference(sc.sys, sc.u_bar);
  const auto& table = j["reference"];
  if (table.size() != r.size()) return std::numeric_limits<double>::infinity();
  double err = 0.0;
  for (std::size_t t = 0; t < r.size(); ++t)
    for (int i = 0; i < r[t].size(); ++i)
      err = std::max(err, std::abs(table[t][i].get<double>() - r[t][i]));
  return err;
}

int cmd_reproduce(const std::string& out, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const ilpc::Scenario sc = ilpc::builtin_scenario();
  const std::array<ilpc::RunMode, 3> modes = {ilpc::RunMode::Ilpc, ilpc::RunMode::IlcOpenLoop,
                                              ilpc::RunMode::MpcKnown};
  std::array<ilpc::RunResult, 3> res;
  std::array<ilpc::RunAudit, 3> audit;
  ilpc::parallel_for(3, [&](int m) {
    ilpc::RunConfig cfg;
    cfg.mode = modes[m];
    cfg.iterations = 49;
    cfg.seed = seed;
    res[m] = ilpc::run(sc, cfg);
    audit[m] = ilpc::audit_run(sc, res[m]);
  });
  for (int m = 0; m < 3; ++m)
    ilpc::write_run_bundle((fs::path(out) / ilpc::to_string(modes[m])).string(), sc, res[m],
                           audit[m]);

  {
    std::ofstream f(fs::path(out) / "costs.csv");
    f << "k";
    for (const char* kind : {"closed_loop", "nominal"})
      for (auto m : modes) {
        std::string name = ilpc::to_string(m);
        for (auto& c : name)
          if (c == '-') c = '_';
        f << ',' << name << '_' << kind;
      }
    f << '\n';
    for (std::size_t k = 0; k < res[0].logs.size(); ++k) {
      f << k;
      for (int m = 0; m < 3; ++m) f << ',' << ilpc::fmt(res[m].logs[k].closed_cost);
      for (int m = 0; m < 3; ++m) f << ',' << ilpc::fmt(res[m].logs[k].nominal_cost);
      f << '\n';
    }
  }

  std::vector<ilpc::Verdict> verdicts = ilpc::sweep_verdicts(
      {ilpc::summarize_seed(seed, audit, {&res[0], &res[1], &res[2]})});
  const double ref_err = reference_table_error(sc);
  verdicts.push_back({14, "reference regression", ref_err <= 1e-9,
                      "max error " + ilpc::fmt(ref_err)});
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  verdicts.push_back({15, "runtime", secs < 300.0, ilpc::fmt(secs) + " s, limit 300 s"});

  bool all = true;
  std::ofstream vf(fs::path(out) / "verdicts.csv");
  vf << "criterion,name,pass,detail\n";
  for (const auto& v : verdicts) {
    all = all && v.pass;
    std::printf("%-4d %-4s %-26s %s\n", v.id, v.pass ? "PASS" : "FAIL", v.name.c_str(),
                v.detail.c_str());
    vf << v.id << ',' << v.name << ',' << (v.pass ? "pass" : "fail") << ",\"" << v.detail
       << "\"\n";
  }
  std::printf("wrote %s\n", out.c_str());
  return all ? 0 : kAcceptanceExit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative learning predictive control simulator"};
  app.set_version_flag("--version", std::string(ilpc::build_version()));
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run one mode and write an output bundle");
  run->add_option("--scenario", ra.scenario, "Builtin name or scenario file")
      ->capture_default_str();
  run->add_option("--config", ra.config, "Repeat a run from its config_echo.json");
  run->add_option("--mode", ra.mode)
      ->check(CLI::IsMember({"ilpc", "ilc", "mpc-known"}))
      ->capture_default_str();
  run->add_option("--iterations", ra.iterations, "Learning iterations after k = 0")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", ra.seed);
  run->add_option("--ilc-solver", ra.solver)
      ->check(CLI::IsMember({"binary", "relaxed"}))
      ->capture_default_str();
  run->add_option("--out", ra.out, "Output directory")->required();
  run->add_flag("--allow-relaxed-nonaffine", ra.allow_relaxed_nonaffine);
  run->get_option("--config")->excludes("--scenario");

  std::string check_target;
  auto* check = app.add_subcommand("check-scenario", "Report dimensions and admissibility");
  check->add_option("scenario", check_target, "Builtin name or scenario file")->required();

  std::string repro_out;
  std::uint64_t repro_seed = 1;
  auto* repro = app.add_subcommand("reproduce-paper",
                                   "Run the batch scenario in all three modes and check it");
  repro->add_option("--out", repro_out, "Output directory")->required();
  repro->add_option("--seed", repro_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*run) return cmd_run(ra, *run);
    if (*check) return cmd_check(check_target);
    if (*repro) return cmd_reproduce(repro_out, repro_seed);
  } catch (const ilpc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolverExit;
  }
  return 0;
}
