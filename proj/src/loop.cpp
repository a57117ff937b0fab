#include "ilpc/loop.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace ilpc {

Mat place_poles_2x1(const Mat& A, const Mat& B, double p1, double p2) {
  if (A.rows() != 2 || A.cols() != 2 || B.rows() != 2 || B.cols() != 1)
    throw ConfigError("pole placement expects a 2x2 A and a 2x1 B");
  Mat C(2, 2);
  C << B, A * B;
  const double scale = std::max(1.0, C.cwiseAbs().maxCoeff());
  if (std::abs(C.determinant()) <= 1e-12 * scale * scale)
    throw ConfigError("pair (A, B) is not controllable");
  const Mat phi = A * A - (p1 + p2) * A + p1 * p2 * Mat::Identity(2, 2);
  Mat e(1, 2);
  e << 0.0, 1.0;
  return -(e * C.inverse() * phi);
}

namespace {

// Interval for input j allowed by rows that only involve that input.
void input_interval(const ConstraintSet& cons, const Vec& psi, double eta, int j, double& lo,
                    double& hi) {
  lo = -std::numeric_limits<double>::infinity();
  hi = std::numeric_limits<double>::infinity();
  const Vec rhs = tighten_rows(cons.h, psi, eta);
  for (int r = 0; r < cons.stage_rows(); ++r) {
    if (cons.Hx.row(r).cwiseAbs().maxCoeff() > 0.0) continue;
    bool single = true;
    for (int c = 0; c < cons.Hu.cols(); ++c)
      if (c != j && cons.Hu(r, c) != 0.0) single = false;
    const double a = cons.Hu(r, j);
    if (!single || a == 0.0) continue;
    if (a > 0)
      hi = std::min(hi, rhs[r] / a);
    else
      lo = std::max(lo, rhs[r] / a);
  }
}

}  // namespace

InitialTrajectory generate_initial_trajectory(const Scenario& sc, const ControlContext& ctx,
                                              std::mt19937_64& rng) {
  const int N = ctx.steps();
  const auto eta0 = initial_trajectory_eta(ctx.tube);
  InitialTrajectory it;
  it.x.push_back(ctx.sys.x_bar);
  for (int t = 0; t < N; ++t) {
    Vec u = sc.K0 * (it.x[t] - ctx.reference[t]);
    if (sc.saturate_initial_law) {
      for (int j = 0; j < u.size(); ++j) {
        double lo, hi;
        input_interval(ctx.cons, ctx.gains.stage[t], eta0[t], j, lo, hi);
        if (lo <= hi) u[j] = std::clamp(u[j], lo, hi);
      }
    }
    const Vec w = sample_noise(rng, ctx.sys.w_bar, ctx.nx());
    it.u.push_back(u);
    it.w.push_back(w);
    it.x.push_back(step_true(ctx.sys, sc.dist, it.x[t], u, w, t));
    it.d_meas.push_back(measure_disturbance(ctx.sys, it.x[t + 1], it.x[t], u, t));
  }
  it.check = check_initial_trajectory(it.x, it.u, ctx.cons, ctx.gains, ctx.tube);
  return it;
}

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::Ilpc: return "ilpc";
    case RunMode::IlcOpenLoop: return "ilc";
    case RunMode::MpcKnown: return "mpc-known";
  }
  return "unknown";
}

RunMode parse_mode(const std::string& s) {
  if (s == "ilpc") return RunMode::Ilpc;
  if (s == "ilc" || s == "ilc_open_loop") return RunMode::IlcOpenLoop;
  if (s == "mpc-known" || s == "mpc_known") return RunMode::MpcKnown;
  throw ConfigError("unknown mode '" + s + "' (expected ilpc, ilc or mpc-known)");
}

RunConfig::RunConfig() {
  ilc.miqp.node_limit = 250;
  qp.primal_tol = 1e-10;
  ilc.miqp.qp.primal_tol = 1e-10;
}

Runner::Runner(const Scenario& sc, RunConfig cfg)
    : sc_(sc),
      cfg_(std::move(cfg)),
      ctx_(ControlContext::from_scenario(sc)),
      rng_(cfg_.seed),
      hist_(sc.sys.steps(), sc.sys.w_bar, sc.sys.m) {
  sc_.validate();
  if (cfg_.iterations < 1) throw ConfigError("iterations must be at least 1");
  if (cfg_.mode != RunMode::MpcKnown && cfg_.ilc.mode == IlcMode::Relaxed && !sc_.dist.affine &&
      !cfg_.allow_relaxed_nonaffine)
    throw ConfigError(
        "relaxed planning needs an affine disturbance; pass --allow-relaxed-nonaffine to "
        "override");

  init_ = generate_initial_trajectory(sc_, ctx_, rng_);
  if (!init_.check.ok) {
    std::ostringstream os;
    os << "initial trajectory violates the tightened constraints at t=" << init_.check.t
       << " row " << init_.check.row << " by " << init_.check.margin;
    throw ConfigError(os.str());
  }
  hist_.add_iteration(init_.x, init_.d_meas);
  refsets_ = ReferenceSets(hist_);

  IterationLog log0;
  log0.k = 0;
  log0.x = init_.x;
  log0.u = init_.u;
  log0.w = init_.w;
  log0.d_meas = init_.d_meas;
  log0.closed_cost = nominal_cost(ctx_, init_.x);
  log0.nominal_cost = log0.closed_cost;
  logs_.push_back(std::move(log0));

  known_.x_ref = init_.x;
  known_.d_ref = init_.d_meas;
  known_.rho.assign(ctx_.steps(), ctx_.tube.w_bar);
  known_.v = init_.u;
}

void Runner::emit(const std::string& ev) const {
  if (cfg_.trace) cfg_.trace(ev);
}

void Runner::rollout(IterationLog& log, const MpcPlanData* plan_data) {
  const int N = ctx_.steps();
  const int k = log.k;
  log.x.assign(1, ctx_.sys.x_bar + sample_noise(rng_, ctx_.sys.r0, ctx_.nx()));
  const bool tracking = cfg_.mode != RunMode::IlcOpenLoop;

  for (int tau = 0; tau < N; ++tau) {
    const Vec x = log.x[tau];
    Vec u;
    if (tracking) {
      emit("mpc " + std::to_string(k) + " " + std::to_string(tau));
      MpcInputs in{tau, x, plan_data};
      MpcSolution cand;
      if (tau == 0) {
        if (log.plan) {
          cand = plan_as_mpc(log.plan->z, log.plan->v, log.plan->xi, log.plan->eta);
        } else {
          std::vector<double> zeros(N, 0.0);
          cand = plan_as_mpc(init_.x, init_.u, zeros, propagate_eta(ctx_.tube, zeros, known_.rho));
        }
        cand.cost = mpc_cost(ctx_, in, cand);
      } else {
        cand = shift_candidate(ctx_, *plan_data, log.mpc.back(), x);
      }
      StepLog step;
      step.tau = tau;
      step.candidate_residual = mpc_constraint_residual(ctx_, in, cand);
      MpcSolution sol = solve_mpc(ctx_, in, cfg_.qp, &cand);
      u = ancillary_input(sol.v[0], ctx_.sys.K[tau], x, sol.z[0]);
      step.cost = sol.cost;
      step.eta0 = sol.eta[0];
      step.qp_iterations = sol.iterations;
      step.used_candidate = sol.used_candidate;
      step.input = u;
      log.steps.push_back(std::move(step));
      log.mpc.push_back(std::move(sol));
    } else {
      u = ancillary_input(log.plan->v[tau], ctx_.sys.K[tau], x, log.plan->z[tau]);
    }
    const Vec w = sample_noise(rng_, ctx_.sys.w_bar, ctx_.nx());
    log.u.push_back(u);
    log.w.push_back(w);
    log.x.push_back(step_true(ctx_.sys, sc_.dist, x, u, w, tau));
    log.d_meas.push_back(measure_disturbance(ctx_.sys, log.x[tau + 1], x, u, tau));
  }
  log.closed_cost = nominal_cost(ctx_, log.x);
}

const IterationLog& Runner::run_iteration() {
  const auto t0 = std::chrono::steady_clock::now();
  const int k = static_cast<int>(logs_.size());
  const int N = ctx_.steps();
  const IterationLog& prev = logs_.back();
  IterationLog log;
  log.k = k;

  if (cfg_.mode == RunMode::MpcKnown) {
    rollout(log, &known_);
    log.nominal_cost = nominal_cost(ctx_, log.mpc.front().z);
  } else {
    emit("measure " + std::to_string(k - 1));
    const Trajectory& xref_prev = prev.plan ? prev.plan->x_ref : init_.x;

    IlcInputs in;
    in.x_prev = prev.x;
    in.xref_prev = xref_prev;
    for (int t = 0; t < N; ++t) in.estimate.push_back(hist_.estimate(t, prev.x[t]));
    emit("estimate " + std::to_string(k));
    refsets_.refine(hist_, xref_prev);
    in.reference = refsets_.current();
    emit("reference " + std::to_string(k));
    if (prev.plan) in.alpha_prev = prev.plan->alpha;

    const bool relaxed = cfg_.ilc.mode == IlcMode::Relaxed;
    const IlcSolution fallback = prev.plan
                                     ? shifted_plan(*prev.plan)
                                     : first_iteration_plan(ctx_, init_.x, init_.u, init_.d_meas);
    log.fallback_residual = ilc_constraint_residual(ctx_, in, fallback, relaxed);
    if (cfg_.on_planning) cfg_.on_planning(k, in, fallback);
    IlcSolution plan = solve_ilc(ctx_, in, cfg_.ilc, fallback);
    emit("plan " + std::to_string(k));
    log.planning_residual = ilc_constraint_residual(ctx_, in, plan, relaxed);
    log.planning_cost = plan.cost;
    log.nominal_cost = nominal_cost(ctx_, plan.z);

    refsets_.advance(in.estimate, plan.alpha);
    emit("advance " + std::to_string(k));
    log.estimate = std::move(in.estimate);
    log.reference = std::move(in.reference);

    MpcPlanData data{plan.x_ref, plan.d_ref, plan.rho, plan.v};
    log.plan = std::move(plan);
    rollout(log, &data);
  }

  hist_.add_iteration(log.x, log.d_meas);
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  logs_.push_back(std::move(log));
  return logs_.back();
}

RunResult Runner::run() {
  int calm = 0;
  while (static_cast<int>(logs_.size()) <= cfg_.iterations) {
    const IterationLog& log = run_iteration();
    if (cfg_.early_stop_eps > 0 && log.k >= 2 && !std::isnan(log.planning_cost)) {
      const double prev = logs_[logs_.size() - 2].planning_cost;
      calm = std::abs(log.planning_cost - prev) < cfg_.early_stop_eps ? calm + 1 : 0;
      if (calm >= 5) break;
    }
  }
  return {cfg_, init_, logs_};
}

RunResult run(const Scenario& sc, const RunConfig& cfg) { return Runner(sc, cfg).run(); }

int sweep_threads() {
  if (const char* env = std::getenv("ILPC_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, const std::function<void(int)>& fn) {
  const int workers = std::min(count, sweep_threads());
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace ilpc
