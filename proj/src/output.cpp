#include "ilpc/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ilpc/scenario_io.hpp"

namespace ilpc {

using nlohmann::json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// Doubles as strings keep full precision in JSON and allow nan.
json num(double v) {
  if (!std::isfinite(v)) return fmt(v);
  return v;
}

json tally_json(const Tally& t) {
  return {{"checked", t.checked},
          {"violations", t.violations},
          {"worst", t.checked ? num(t.worst) : json(nullptr)},
          {"ok", t.ok()}};
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

void put_vec(std::ostream& os, int k, int t, const char* name, const Vec& v) {
  for (int i = 0; i < v.size(); ++i)
    os << k << ',' << t << ',' << name << ',' << i << ',' << fmt(v[i]) << '\n';
}

void put_scalar(std::ostream& os, int k, int t, const char* name, double v) {
  os << k << ',' << t << ',' << name << ",0," << fmt(v) << '\n';
}

}  // namespace

json run_config_to_json(const RunConfig& cfg) {
  const auto& m = cfg.ilc.miqp;
  return {{"mode", to_string(cfg.mode)},
          {"iterations", cfg.iterations},
          {"seed", cfg.seed},
          {"ilc_solver", cfg.ilc.mode == IlcMode::Binary ? "binary" : "relaxed"},
          {"allow_relaxed_nonaffine", cfg.allow_relaxed_nonaffine},
          {"early_stop_eps", cfg.early_stop_eps},
          {"node_limit", m.node_limit},
          {"time_limit", m.time_limit},
          {"fathom_tol", m.fathom_tol},
          {"integrality_tol", m.integrality_tol},
          {"qp_tol", cfg.qp.tol},
          {"qp_primal_tol", cfg.qp.primal_tol},
          {"qp_max_iter", cfg.qp.max_iter}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  try {
    if (j.contains("mode")) cfg.mode = parse_mode(j.at("mode").get<std::string>());
    cfg.iterations = j.value("iterations", cfg.iterations);
    cfg.seed = j.value("seed", cfg.seed);
    const std::string solver = j.value("ilc_solver", std::string("binary"));
    if (solver == "binary")
      cfg.ilc.mode = IlcMode::Binary;
    else if (solver == "relaxed")
      cfg.ilc.mode = IlcMode::Relaxed;
    else
      throw ConfigError("ilc_solver must be binary or relaxed");
    cfg.allow_relaxed_nonaffine = j.value("allow_relaxed_nonaffine", false);
    cfg.early_stop_eps = j.value("early_stop_eps", 0.0);
    auto& m = cfg.ilc.miqp;
    m.node_limit = j.value("node_limit", m.node_limit);
    m.time_limit = j.value("time_limit", m.time_limit);
    m.fathom_tol = j.value("fathom_tol", m.fathom_tol);
    m.integrality_tol = j.value("integrality_tol", m.integrality_tol);
    cfg.qp.tol = j.value("qp_tol", cfg.qp.tol);
    cfg.qp.primal_tol = j.value("qp_primal_tol", cfg.qp.primal_tol);
    cfg.qp.max_iter = j.value("qp_max_iter", cfg.qp.max_iter);
    m.qp = cfg.qp;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run configuration: ") + e.what());
  }
  return cfg;
}

json config_echo(const Scenario& sc, const RunConfig& cfg) {
  json scen = sc.source.empty() ? json(sc.name) : json::parse(sc.source);
  return {{"version", build_version()}, {"scenario", scen}, {"run", run_config_to_json(cfg)}};
}

json audit_to_json(const RunAudit& a) {
  return {{"tube_plan", tally_json(a.tube_plan)},
          {"tube_step", tally_json(a.tube_step)},
          {"tube_step_near", tally_json(a.tube_step_near)},
          {"constraints", tally_json(a.constraints)},
          {"candidate_replay", tally_json(a.candidate_replay)},
          {"plan_replay", tally_json(a.plan_replay)},
          {"monotone", tally_json(a.monotone)},
          {"first_bound", tally_json(a.first_bound)},
          {"descent", tally_json(a.descent)},
          {"link", tally_json(a.link)},
          {"set_contains", tally_json(a.set_contains)},
          {"set_shrinks", tally_json(a.set_shrinks)},
          {"infeasible_solves", a.infeasible_solves},
          {"planning_fallbacks", a.planning_fallbacks},
          {"plateau", num(a.plateau)}};
}

void write_run_bundle(const std::string& dir, const Scenario& sc, const RunResult& res,
                      const RunAudit& audit) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root);
  const int N = sc.sys.steps();

  open_out(root / "config_echo.json") << config_echo(sc, res.config).dump(2) << '\n';

  {
    auto f = open_out(root / "trajectories.csv");
    f << "k,t,variable,coord,value\n";
    for (std::size_t t = 0; t < sc.reference.size(); ++t)
      put_vec(f, -1, static_cast<int>(t), "r", sc.reference[t]);
    for (const auto& log : res.logs) {
      for (int t = 0; t <= N; ++t) put_vec(f, log.k, t, "x", log.x[t]);
      for (int t = 0; t < N; ++t) {
        put_vec(f, log.k, t, "u", log.u[t]);
        put_vec(f, log.k, t, "w", log.w[t]);
        put_vec(f, log.k, t, "d_meas", log.d_meas[t]);
      }
      if (!log.plan) continue;
      const IlcSolution& p = *log.plan;
      for (int t = 0; t <= N; ++t) {
        put_vec(f, log.k, t, "z", p.z[t]);
        put_vec(f, log.k, t, "x_ref", p.x_ref[t]);
        put_scalar(f, log.k, t, "eta", p.eta[t]);
      }
      for (int t = 0; t < N; ++t) {
        put_vec(f, log.k, t, "v", p.v[t]);
        put_vec(f, log.k, t, "d_ref", p.d_ref[t]);
        put_scalar(f, log.k, t, "xi", p.xi[t]);
        put_scalar(f, log.k, t, "rho", p.rho[t]);
        put_scalar(f, log.k, t, "alpha", p.alpha[t]);
      }
    }
  }

  {
    auto f = open_out(root / "tubes.csv");
    f << "k,t,eta,eta_mpc_first_step\n";
    for (const auto& log : res.logs) {
      if (log.k == 0) continue;
      for (int t = 0; t <= N; ++t) {
        const double plan = log.plan ? log.plan->eta[t] : std::nan("");
        const double step = t < static_cast<int>(log.mpc.size()) ? log.mpc[t].eta[0] : std::nan("");
        f << log.k << ',' << t << ',' << fmt(plan) << ',' << fmt(step) << '\n';
      }
    }
  }

  {
    auto f = open_out(root / "sets.csv");
    f << "k,t,coord,lower,upper,kind\n";
    for (const auto& log : res.logs) {
      auto put = [&](const std::vector<Box>& boxes, const char* kind) {
        for (std::size_t t = 0; t < boxes.size(); ++t)
          for (int i = 0; i < boxes[t].dim(); ++i)
            f << log.k << ',' << t << ',' << i << ',' << fmt(boxes[t].lower[i]) << ','
              << fmt(boxes[t].upper[i]) << ',' << kind << '\n';
      };
      put(log.estimate, "D");
      put(log.reference, "Dref");
    }
  }

  {
    auto f = open_out(root / "costs.csv");
    f << "k,closed_loop,nominal,planning,mpc_first\n";
    for (const auto& log : res.logs) {
      const double first = log.steps.empty() ? std::nan("") : log.steps.front().cost;
      f << log.k << ',' << fmt(log.closed_cost) << ',' << fmt(log.nominal_cost) << ','
        << fmt(log.planning_cost) << ',' << fmt(first) << '\n';
    }
  }

  {
    auto f = open_out(root / "mpc_steps.csv");
    f << "k,tau,cost,eta0,input,qp_iterations,used_candidate\n";
    for (const auto& log : res.logs)
      for (const auto& s : log.steps)
        f << log.k << ',' << s.tau << ',' << fmt(s.cost) << ',' << fmt(s.eta0) << ','
          << fmt(s.input.size() ? s.input[0] : std::nan("")) << ',' << s.qp_iterations << ','
          << (s.used_candidate ? 1 : 0) << '\n';
  }

  json summary = {{"version", build_version()},
                  {"scenario", sc.name},
                  {"mode", to_string(res.config.mode)},
                  {"seed", res.config.seed},
                  {"iterations", static_cast<int>(res.logs.size()) - 1},
                  {"initial_cost", num(res.logs.front().closed_cost)},
                  {"final_closed_cost", num(res.logs.back().closed_cost)},
                  {"final_nominal_cost", num(res.logs.back().nominal_cost)},
                  {"final_planning_cost", num(res.logs.back().planning_cost)},
                  {"audit", audit_to_json(audit)}};
  open_out(root / "summary.json") << summary.dump(2) << '\n';

  json timing = json::array();
  for (const auto& log : res.logs)
    if (log.k > 0)
      timing.push_back({{"k", log.k},
                        {"seconds", log.wall_seconds},
                        {"nodes", log.plan ? log.plan->nodes : 0},
                        {"qp_solves", log.plan ? log.plan->qp_solves : 0}});
  open_out(root / "timing.json") << timing.dump(2) << '\n';
}

}  // namespace ilpc
