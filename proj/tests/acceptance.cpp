// Acceptance run: one PASS/FAIL line per criterion, 1 through 15.
//
// Exit status is nonzero when a criterion fails that is not listed in
// --known-failures. Known failures are still reported as FAIL.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include <sys/wait.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "ilpc/checks.hpp"
#include "ilpc/scenario_io.hpp"
#include "oracles.hpp"

using namespace ilpc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Verdict solver_certification(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int qp_bad = 0, qp_infeasible = 0;
  double qp_worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const bool infeasible = i % 10 == 9;
    const auto qp = oracle::random_qp(rng, infeasible);
    const auto ref = oracle::enumerate_active_sets(qp);
    const auto s = solve_qp(qp.problem());
    if (!ref.feasible) {
      ++qp_infeasible;
      if (s.status != QpStatus::Infeasible) ++qp_bad;
      continue;
    }
    if (!s.optimal()) {
      ++qp_bad;
      continue;
    }
    const double err = std::max(inf_norm(s.x - ref.x),
                                std::abs(s.objective - ref.objective) /
                                    std::max(1.0, std::abs(ref.objective)));
    qp_worst = std::max(qp_worst, err);
    if (err > 1e-6) ++qp_bad;
  }

  int mi_bad = 0;
  for (int i = 0; i < 100; ++i) {
    const auto toy = oracle::random_miqp(rng);
    const auto ref = oracle::enumerate_assignments(toy);
    const int nb = static_cast<int>(toy.binaries.size());
    const auto r = solve_miqp([&](const Assignment& a) { return toy.with(a).problem(); },
                              toy.binaries, Assignment(nb, -1), {}, MiqpSettings{});
    const double tol = 1e-6 * std::max(1.0, std::abs(ref.objective));
    bool ok = r.found == ref.feasible;
    if (ok && ref.feasible) {
      ok = r.optimal && std::abs(r.objective - ref.objective) <= tol;
      // Ties aside, the same assignment must come out.
      if (ok && ref.runner_up - ref.objective > tol) ok = r.assignment == ref.best;
    }
    if (!ok) ++mi_bad;
  }
  std::ostringstream os;
  os << "QP " << qp_bad << "/1000 mismatches (" << qp_infeasible
     << " infeasible cases), worst error " << qp_worst << "; MIQP " << mi_bad
     << "/100 mismatches";
  return {7, "solver certification", qp_bad == 0 && mi_bad == 0, os.str()};
}

Verdict psi_correctness(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> dim(1, 4), inputs(1, 2), nrows(1, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int nx = dim(rng), nu = inputs(rng), rows = nrows(rng);
    ConstraintSet c;
    c.Hx = Mat(rows, nx);
    c.Hu = Mat(rows, nu);
    c.h = Vec::Ones(rows);
    c.HxT = Mat(rows, nx);
    c.hT = Vec::Ones(rows);
    Mat K(nu, nx);
    for (int r = 0; r < rows; ++r) {
      for (int i = 0; i < nx; ++i) {
        c.Hx(r, i) = nd(rng);
        c.HxT(r, i) = nd(rng);
      }
      for (int j = 0; j < nu; ++j) c.Hu(r, j) = nd(rng);
    }
    for (int j = 0; j < nu; ++j)
      for (int i = 0; i < nx; ++i) K(j, i) = nd(rng);
    const auto g = tightening_gains(c, {K});
    for (int r = 0; r < rows; ++r) {
      worst = std::max(worst,
                       std::abs(g.stage[0][r] - oracle::vertex_sup(c.Hx.row(r), c.Hu.row(r), K)));
      worst = std::max(worst, std::abs(g.terminal[r] - oracle::vertex_sup(c.HxT.row(r), Vec(), K)));
    }
  }
  return {8, "tightening gains", worst <= 1e-10, "500 pairs, worst error " + num(worst)};
}

Verdict reference_regression() {
  const Scenario sc = builtin_scenario();
  const auto doc = nlohmann::json::parse(builtin_scenario_json());
  const auto& table = doc.at("reference");
  const Trajectory r = build_reference(sc.sys, sc.u_bar);
  double worst = table.size() == r.size() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < std::min(r.size(), table.size()); ++t)
    for (int i = 0; i < r[t].size(); ++i)
      worst = std::max(worst, std::abs(r[t][i] - table[t][i].get<double>()));
  return {14, "reference regression", worst <= 1e-9,
          std::to_string(table.size()) + " samples, worst error " + num(worst)};
}

std::vector<SeedOutcome> batch_sweep(int seeds, int iterations) {
  const Scenario sc = builtin_scenario();
  const RunMode modes[3] = {RunMode::Ilpc, RunMode::IlcOpenLoop, RunMode::MpcKnown};
  std::vector<std::array<RunAudit, 3>> audits(seeds);
  std::vector<std::array<RunResult, 3>> runs(seeds);
  std::mutex io;
  parallel_for(seeds * 3, [&](int job) {
    const int s = job / 3, m = job % 3;
    RunConfig cfg;
    cfg.mode = modes[m];
    cfg.iterations = iterations;
    cfg.seed = static_cast<std::uint64_t>(s + 1);
    const auto t0 = Clock::now();
    RunResult r = run(sc, cfg);
    audits[s][m] = audit_run(sc, r);
    // Only the summary numbers are needed afterwards.
    r.logs.erase(r.logs.begin() + 1, r.logs.end() - 1);
    runs[s][m] = std::move(r);
    std::lock_guard<std::mutex> lock(io);
    std::fprintf(stderr, "  seed %d %-9s %.1f s\n", s + 1, to_string(modes[m]), seconds_since(t0));
  });
  std::vector<SeedOutcome> out;
  for (int s = 0; s < seeds; ++s)
    out.push_back(summarize_seed(s + 1, audits[s], {&runs[s][0], &runs[s][1], &runs[s][2]}));
  return out;
}

Verdict relaxation(int seeds, int compare_seeds, int iterations) {
  const Scenario sc = builtin_affine_scenario();
  RunAudit all;
  std::vector<double> worst_gap(seeds, -std::numeric_limits<double>::infinity());
  std::vector<int> compared(seeds, 0);
  std::mutex io;
  std::vector<RunAudit> audits(seeds);
  parallel_for(seeds, [&](int s) {
    RunConfig cfg;
    cfg.ilc.mode = IlcMode::Relaxed;
    cfg.iterations = iterations;
    cfg.seed = static_cast<std::uint64_t>(s + 1);
    std::map<int, double> binary_cost;
    if (s < compare_seeds) {
      // The binary problem solved on exactly the inputs the relaxed run sees.
      IlcOptions binary = cfg.ilc;
      binary.mode = IlcMode::Binary;
      binary.miqp.qp = cfg.qp;
      cfg.on_planning = [&, binary](int k, const IlcInputs& in, const IlcSolution& fb) {
        const ControlContext ctx = ControlContext::from_scenario(sc);
        binary_cost[k] = solve_ilc(ctx, in, binary, fb).cost;
      };
    }
    const auto t0 = Clock::now();
    const RunResult r = run(sc, cfg);
    audits[s] = audit_run(sc, r);
    for (const auto& [k, cost] : binary_cost) {
      worst_gap[s] = std::max(worst_gap[s], r.logs[k].planning_cost - cost);
      ++compared[s];
    }
    std::lock_guard<std::mutex> lock(io);
    std::fprintf(stderr, "  affine seed %d relaxed %.1f s\n", s + 1, seconds_since(t0));
  });
  double gap = -std::numeric_limits<double>::infinity();
  int n_cmp = 0;
  for (int s = 0; s < seeds; ++s) {
    all.merge(audits[s]);
    gap = std::max(gap, worst_gap[s]);
    n_cmp += compared[s];
  }
  const bool c1 = all.tube_plan.ok() && all.tube_step.ok();
  const bool c2 = all.constraints.ok();
  const bool c3 = all.infeasible_solves == 0 && all.candidate_replay.ok() && all.plan_replay.ok();
  const bool c4 = all.monotone.ok() && all.first_bound.ok();
  const bool c5 = all.descent.ok() && all.link.ok();
  const bool cost_ok = gap <= 1e-6;
  std::ostringstream os;
  os << n_cmp << " planning problems, worst relaxed - binary " << gap << "; relaxed runs over "
     << seeds << " seeds: tube " << all.tube_plan.violations << "+" << all.tube_step.violations
     << " (t<=1 " << all.tube_step_near.violations << "), constraints "
     << all.constraints.violations << ", infeasible " << all.infeasible_solves << ", replay "
     << all.candidate_replay.violations + all.plan_replay.violations << ", monotone "
     << all.monotone.violations + all.first_bound.violations << ", descent "
     << all.descent.violations + all.link.violations;
  return {9, "relaxation on affine variant", cost_ok && c1 && c2 && c3 && c4 && c5, os.str()};
}

Verdict runtime(const std::string& cli) {
  const auto dir = std::filesystem::temp_directory_path() / "ilpc_acceptance_reproduce";
  std::filesystem::remove_all(dir);
  const std::string cmd = "\"" + cli + "\" reproduce-paper --out \"" + dir.string() + "\" > /dev/null";
  const auto t0 = Clock::now();
  const int status = std::system(cmd.c_str());
  const double secs = seconds_since(t0);
  std::ifstream costs(dir / "costs.csv");
  std::string header;
  std::getline(costs, header);
  std::filesystem::remove_all(dir);
  // The command exits 3 when some criterion fails; that is judged elsewhere.
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  const bool ran = code == 0 || code == 3;
  const bool columns = header.find("ilpc_nominal") != std::string::npos &&
                       header.find("ilc_nominal") != std::string::npos &&
                       header.find("mpc_known_nominal") != std::string::npos;
  return {15, "runtime", ran && columns && secs < 300.0,
          "reproduce-paper " + num(secs) + " s (limit 300 s), exit " + std::to_string(code)};
}

std::set<int> parse_ids(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.insert(std::stoi(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int seeds = 20, iterations = 49, compare_seeds = 5;
  std::string known, cli;
  std::string only;
  app.add_option("--seeds", seeds)->capture_default_str();
  app.add_option("--iterations", iterations)->capture_default_str();
  app.add_option("--compare-seeds", compare_seeds, "Affine seeds with the binary comparison")
      ->capture_default_str();
  app.add_option("--known-failures", known, "Comma-separated criteria expected to fail");
  app.add_option("--cli", cli, "Path of the ilpc executable for the runtime check");
  app.add_option("--only", only, "Comma-separated subset of criteria to run");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> expected = parse_ids(known);
  const std::set<int> chosen = parse_ids(only);
  auto want = [&](std::initializer_list<int> ids) {
    if (chosen.empty()) return true;
    for (int id : ids)
      if (chosen.count(id)) return true;
    return false;
  };

  std::vector<Verdict> verdicts;
  const auto t0 = Clock::now();
  if (want({7})) verdicts.push_back(solver_certification(7));
  if (want({8})) verdicts.push_back(psi_correctness(8));
  if (want({14})) verdicts.push_back(reference_regression());
  if (want({1, 2, 3, 4, 5, 6, 10, 11, 12, 13})) {
    std::fprintf(stderr, "batch sweep: %d seeds x 3 modes\n", seeds);
    for (auto& v : sweep_verdicts(batch_sweep(seeds, iterations))) verdicts.push_back(v);
  }
  if (want({9})) {
    std::fprintf(stderr, "affine variant: %d seeds\n", seeds);
    verdicts.push_back(relaxation(seeds, compare_seeds, iterations));
  }
  if (want({15})) {
    if (cli.empty())
      verdicts.push_back({15, "runtime", false, "no --cli given"});
    else
      verdicts.push_back(runtime(cli));
  }
  std::sort(verdicts.begin(), verdicts.end(),
            [](const Verdict& a, const Verdict& b) { return a.id < b.id; });

  int unexpected = 0;
  for (const auto& v : verdicts) {
    if (!chosen.empty() && !chosen.count(v.id)) continue;
    std::string note;
    if (!v.pass && expected.count(v.id))
      note = " [known]";
    else if (!v.pass)
      ++unexpected;
    else if (expected.count(v.id))
      note = " [listed as known failure but passed]";
    std::printf("criterion %2d %s  %s: %s%s\n", v.id, v.pass ? "PASS" : "FAIL", v.name.c_str(),
                v.detail.c_str(), note.c_str());
  }
  std::printf("total %.1f s, %d unexpected failure(s)\n", seconds_since(t0), unexpected);
  return unexpected == 0 ? 0 : 1;
}
