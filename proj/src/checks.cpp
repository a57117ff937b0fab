#include "ilpc/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ilpc {

void Tally::add(double excess, double tol) {
  ++checked;
  worst = std::max(worst, excess);
  if (excess > tol) ++violations;
}

void Tally::merge(const Tally& o) {
  checked += o.checked;
  violations += o.violations;
  worst = std::max(worst, o.worst);
}

void RunAudit::merge(const RunAudit& o) {
  tube_plan.merge(o.tube_plan);
  tube_step.merge(o.tube_step);
  tube_step_near.merge(o.tube_step_near);
  constraints.merge(o.constraints);
  candidate_replay.merge(o.candidate_replay);
  plan_replay.merge(o.plan_replay);
  monotone.merge(o.monotone);
  first_bound.merge(o.first_bound);
  descent.merge(o.descent);
  link.merge(o.link);
  set_contains.merge(o.set_contains);
  set_shrinks.merge(o.set_shrinks);
  infeasible_solves += o.infeasible_solves;
  planning_fallbacks += o.planning_fallbacks;
  plateau = std::max(plateau, o.plateau);
}

namespace {

double outside(const Box& b, const Vec& p) {
  return std::max((b.lower - p).maxCoeff(), (p - b.upper).maxCoeff());
}

double not_inside(const Box& inner, const Box& outer) {
  return std::max((outer.lower - inner.lower).maxCoeff(), (inner.upper - outer.upper).maxCoeff());
}

}  // namespace

std::vector<double> tracking_deviation(const ControlContext& ctx, const RunResult& res) {
  std::vector<double> out;
  for (std::size_t k = 1; k < res.logs.size(); ++k) {
    const auto& log = res.logs[k];
    const Trajectory& z = log.plan ? log.plan->z : log.mpc.front().z;
    double d = 0.0;
    for (std::size_t t = 0; t < z.size(); ++t) d = std::max(d, inf_norm(z[t] - ctx.reference[t]));
    out.push_back(d);
  }
  return out;
}

RunAudit audit_run(const Scenario& sc, const RunResult& res, const CheckTolerances& tol) {
  const ControlContext ctx = ControlContext::from_scenario(sc);
  const int N = ctx.steps();
  const bool planned = res.config.mode != RunMode::MpcKnown;
  const bool relaxed = planned && res.config.ilc.mode == IlcMode::Relaxed;
  RunAudit a;

  for (const auto& log : res.logs) {
    for (int t = 0; t < N; ++t)
      a.constraints.add(check_constraints(ctx.cons, log.x[t], log.u[t], false).margin, tol.constraint);
    a.constraints.add(check_constraints(ctx.cons, log.x[N], Vec(), true).margin, tol.constraint);
  }

  double sum_c2 = 0.0;
  for (double c : ctx.c2) sum_c2 += c;

  for (std::size_t k = 1; k < res.logs.size(); ++k) {
    const auto& log = res.logs[k];
    const auto& prev = res.logs[k - 1];

    if (log.plan) {
      const IlcSolution& p = *log.plan;
      for (int t = 0; t <= N; ++t)
        a.tube_plan.add(inf_norm(log.x[t] - p.z[t]) - p.eta[t], tol.tube);
      a.candidate_replay.add(log.fallback_residual, tol.replay);
      a.plan_replay.add(log.planning_residual, tol.replay);
      if (p.used_fallback) ++a.planning_fallbacks;
      if (k == 1) {
        const double bound = nominal_cost(ctx, res.initial.x) + (ctx.c1 * N + sum_c2) * ctx.tube.w_bar;
        a.first_bound.add(log.planning_cost - bound, tol.cost);
      } else {
        a.monotone.add(log.planning_cost - prev.planning_cost, tol.cost);
      }
      if (!log.mpc.empty()) {
        double rho_cost = 0.0;
        for (int t = 0; t < N; ++t) rho_cost += ctx.c2[t] * p.rho[t];
        a.link.add(log.mpc.front().cost - (log.planning_cost - rho_cost), tol.cost);
      }

      // Estimate sets handed to the planner.
      const Trajectory& xref_prev = prev.plan ? prev.plan->x_ref : res.initial.x;
      const bool ref_exact = !relaxed || sc.dist.affine;
      for (int t = 0; t < N; ++t) {
        a.set_contains.add(outside(log.estimate[t], sc.dist(prev.x[t], t)), tol.set);
        if (ref_exact)
          a.set_contains.add(outside(log.reference[t], sc.dist(xref_prev[t], t)), tol.set);
      }
    }

    const Trajectory* v_ref = nullptr;
    if (log.plan) v_ref = &log.plan->v;
    else if (!log.mpc.empty()) v_ref = &res.initial.u;
    for (std::size_t i = 0; i < log.mpc.size(); ++i) {
      const MpcSolution& s = log.mpc[i];
      const int H = N - s.tau;
      for (int t = 0; t <= H; ++t) {
        const double e = inf_norm(log.x[s.tau + t] - s.z[t]) - s.eta[t];
        a.tube_step.add(e, tol.tube);
        if (t <= 1) a.tube_step_near.add(e, tol.tube);
      }
      a.candidate_replay.add(log.steps[i].candidate_residual, tol.replay);
      if (s.used_candidate) ++a.infeasible_solves;
      if (i + 1 < log.mpc.size()) {
        const Vec ez = s.z[0] - ctx.reference[s.tau];
        const Vec ev = s.v[0] - (*v_ref)[s.tau];
        const double drop = ez.dot(ctx.Q * ez) + ev.dot(ctx.P * ev) + ctx.c1 * std::abs(s.xi[0]);
        a.descent.add(log.mpc[i + 1].cost - (s.cost - drop), tol.cost);
      }
    }
  }

  // Audit over the whole history: for every visited state, the
  // estimate built from iterations 0..n contains the true disturbance and
  // shrinks as n grows.
  if (planned) {
    DisturbanceHistory hist(N, ctx.sys.w_bar, ctx.sys.m);
    for (const auto& log : res.logs) hist.add_iteration(log.x, log.d_meas);
    const int n_it = hist.iterations();
    for (int j = 0; j < n_it; ++j) {
      for (int t = 0; t < N; ++t) {
        const Vec& q = hist.state(j, t);
        const Vec truth = sc.dist(q, t);
        Box acc = hist.estimate(t, q, 0);
        for (int n = 0; n < n_it; ++n) {
          if (n > 0) {
            const Box next = hist.refine(acc, t, q, n);
            a.set_shrinks.add(not_inside(next, acc), tol.set);
            acc = next;
          }
          if (n >= j) a.set_contains.add(outside(acc, truth), tol.set);
        }
        const Box batch = hist.estimate(t, q, n_it - 1);
        a.set_shrinks.add(std::max(inf_norm(batch.lower - acc.lower), inf_norm(batch.upper - acc.upper)),
                          tol.set);
      }
    }
  }

  const auto dev = tracking_deviation(ctx, res);
  if (dev.size() >= 10) {
    const auto first = dev.end() - 10;
    const double hi = *std::max_element(first, dev.end());
    const double lo = *std::min_element(first, dev.end());
    a.plateau = hi > 0 ? (hi - lo) / hi : 0.0;
  }
  return a;
}

SeedOutcome summarize_seed(std::uint64_t seed, const std::array<RunAudit, 3>& audit,
                           const std::array<const RunResult*, 3>& runs) {
  SeedOutcome o;
  o.seed = seed;
  o.audit = audit;
  for (int m = 0; m < 3; ++m) {
    o.initial_cost[m] = runs[m]->logs.front().closed_cost;
    o.final_closed[m] = runs[m]->logs.back().closed_cost;
    o.final_nominal[m] = runs[m]->logs.back().nominal_cost;
  }
  return o;
}

namespace {

std::string tally_text(const char* what, const Tally& t) {
  std::ostringstream os;
  os << what << ' ' << t.violations << '/' << t.checked;
  if (t.checked > 0) os << " worst " << t.worst;
  return os.str();
}

double mean_of(const std::vector<SeedOutcome>& seeds, double (*get)(const SeedOutcome&)) {
  double s = 0.0;
  for (const auto& o : seeds) s += get(o);
  return seeds.empty() ? std::nan("") : s / seeds.size();
}

Verdict band(int id, const std::string& name, double value, double lo, double hi) {
  std::ostringstream os;
  os << "mean " << value << " in [" << lo << ", " << hi << "]";
  return {id, name, value >= lo && value <= hi, os.str()};
}

}  // namespace

std::vector<Verdict> sweep_verdicts(const std::vector<SeedOutcome>& seeds) {
  RunAudit ilpc, all;
  for (const auto& o : seeds) {
    ilpc.merge(o.audit[0]);
    for (const auto& a : o.audit) all.merge(a);
  }
  std::vector<Verdict> out;
  const std::string n = std::to_string(seeds.size()) + " seeds: ";

  out.push_back({1, "tube containment", ilpc.tube_plan.ok() && ilpc.tube_step.ok(),
                 n + tally_text("plan", ilpc.tube_plan) + ", " +
                     tally_text("tracking", ilpc.tube_step) + " (" +
                     tally_text("t<=1", ilpc.tube_step_near) + ")"});
  out.push_back({2, "constraint satisfaction", all.constraints.ok(),
                 n + tally_text("rows", all.constraints)});
  out.push_back({3, "recursive feasibility",
                 all.infeasible_solves == 0 && all.candidate_replay.ok() && all.plan_replay.ok(),
                 n + "infeasible " + std::to_string(all.infeasible_solves) + ", " +
                     tally_text("candidate replay", all.candidate_replay) + ", " +
                     tally_text("plan replay", all.plan_replay)});
  out.push_back({4, "monotone planning cost", ilpc.monotone.ok() && ilpc.first_bound.ok(),
                 n + tally_text("steps", ilpc.monotone) + ", " +
                     tally_text("first bound", ilpc.first_bound)});
  out.push_back({5, "tracking descent", ilpc.descent.ok() && ilpc.link.ok(),
                 n + tally_text("steps", ilpc.descent) + ", " + tally_text("link", ilpc.link)});
  out.push_back({6, "set-membership soundness", ilpc.set_contains.ok() && ilpc.set_shrinks.ok(),
                 n + tally_text("contains", ilpc.set_contains) + ", " +
                     tally_text("shrinks", ilpc.set_shrinks)});

  out.push_back(band(10, "initial closed-loop cost",
                     mean_of(seeds, [](const SeedOutcome& o) { return o.initial_cost[0]; }), 12,
                     18));
  {
    const double a = mean_of(seeds, [](const SeedOutcome& o) { return o.final_nominal[0]; });
    const double b = mean_of(seeds, [](const SeedOutcome& o) { return o.final_nominal[1]; });
    const double c = mean_of(seeds, [](const SeedOutcome& o) { return o.final_nominal[2]; });
    const bool ok = a >= 0.1 && a <= 0.5 && b >= 0.3 && b <= 1.0 && c >= 4 && c <= 9;
    std::ostringstream os;
    os << "ilpc " << a << " in [0.1, 0.5], ilc " << b << " in [0.3, 1], mpc-known " << c
       << " in [4, 9]";
    out.push_back({11, "final nominal cost", ok, os.str()});
  }
  {
    int bad = 0;
    for (const auto& o : seeds) {
      const bool nom = o.final_nominal[0] < o.final_nominal[1] && o.final_nominal[1] < o.final_nominal[2];
      const bool cl = o.final_closed[0] < o.final_closed[1] && o.final_closed[1] < o.final_closed[2];
      if (!nom || !cl) ++bad;
    }
    out.push_back({12, "final cost ordering", bad == 0,
                   n + std::to_string(bad) + " out of order"});
  }
  {
    int bad = 0;
    double worst = 0.0;
    for (const auto& o : seeds) {
      worst = std::max(worst, o.audit[0].plateau);
      if (!(o.audit[0].plateau < 0.05)) ++bad;
    }
    std::ostringstream os;
    os << n << bad << " above 5%, worst spread " << worst;
    out.push_back({13, "tracking plateau", bad == 0, os.str()});
  }
  return out;
}

}  // namespace ilpc
