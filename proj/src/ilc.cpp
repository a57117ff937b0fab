#include "ilpc/ilc.hpp"

#include <cmath>

namespace ilpc {

namespace {

IlcLayout layout_of(const ControlContext& ctx) { return {ctx.steps(), ctx.nx(), ctx.nu()}; }

void check_inputs(const ControlContext& ctx, const IlcInputs& in) {
  const auto N = static_cast<std::size_t>(ctx.steps());
  if (in.x_prev.size() != N + 1 || in.xref_prev.size() != N + 1 || in.estimate.size() != N ||
      in.reference.size() != N)
    throw Error("planning inputs do not cover the horizon");
}

Vec blend_state(const IlcInputs& in, int t, double a) {
  return in.xref_prev[t] + a * (in.x_prev[t] - in.xref_prev[t]);
}

double clamp01(double a) { return std::min(1.0, std::max(0.0, a)); }

}  // namespace

QpProblem build_ilc(const ControlContext& ctx, const IlcInputs& in, const Assignment& alpha) {
  check_inputs(ctx, in);
  const IlcLayout L = layout_of(ctx);
  const int N = L.N, nx = L.nx, nu = L.nu;
  if (static_cast<int>(alpha.size()) != N) throw Error("alpha assignment has the wrong length");
  const auto& sys = ctx.sys;
  const auto& cons = ctx.cons;

  QpBuilder qb(L.size());
  for (int t = 0; t <= N; ++t) qb.add_tracking(L.z(t), ctx.Q, ctx.reference[t]);
  for (int t = 0; t < N; ++t) {
    qb.add_linear(L.xi(t), ctx.c1);
    qb.add_linear(L.rho(t), ctx.c2[t]);
  }

  for (int i = 0; i < nx; ++i) {
    qb.begin_eq(sys.x_bar[i]);
    qb.coef(L.z(0, i), 1.0);
  }
  qb.begin_eq(ctx.tube.eta0);
  qb.coef(L.eta(0), 1.0);
  for (int t = 0; t < N; ++t) {
    for (int i = 0; i < nx; ++i) {
      qb.begin_eq(0.0);
      qb.coef(L.z(t + 1, i), 1.0);
      for (int j = 0; j < nx; ++j) qb.coef(L.z(t, j), -sys.A[t](i, j));
      for (int j = 0; j < nu; ++j) qb.coef(L.v(t, j), -sys.B[t](i, j));
      qb.coef(L.dref(t, i), -1.0);
    }
  }
  for (int t = 0; t < N; ++t) {
    qb.begin_eq(ctx.tube.w_bar);
    qb.coef(L.eta(t + 1), 1.0);
    qb.coef(L.eta(t), -ctx.tube.m_bar[t]);
    qb.coef(L.xi(t), -ctx.tube.m[t]);
    qb.coef(L.rho(t), -1.0);
  }
  for (int t = 0; t < N; ++t) {
    if (alpha[t] < 0) continue;
    qb.begin_eq(static_cast<double>(alpha[t]));
    qb.coef(L.alpha(t), 1.0);
  }

  for (int t = 0; t < N; ++t) {
    const Vec delta = in.x_prev[t] - in.xref_prev[t];
    for (int i = 0; i < nx; ++i) {
      qb.begin_ineq(in.xref_prev[t][i]);
      qb.coef(L.z(t, i), 1.0);
      qb.coef(L.alpha(t), -delta[i]);
      qb.coef(L.xi(t), -1.0);
      qb.begin_ineq(-in.xref_prev[t][i]);
      qb.coef(L.z(t, i), -1.0);
      qb.coef(L.alpha(t), delta[i]);
      qb.coef(L.xi(t), -1.0);
    }
    const Box& d1 = in.estimate[t];
    const Box& d2 = in.reference[t];
    for (int i = 0; i < nx; ++i) {
      qb.begin_ineq(d2.lower[i]);
      qb.coef(L.dref(t, i), 1.0);
      qb.coef(L.alpha(t), -(d1.lower[i] - d2.lower[i]));
      qb.coef(L.rho(t), -1.0);
      qb.begin_ineq(-d2.upper[i]);
      qb.coef(L.dref(t, i), -1.0);
      qb.coef(L.alpha(t), d1.upper[i] - d2.upper[i]);
      qb.coef(L.rho(t), -1.0);
    }
    for (int r = 0; r < cons.stage_rows(); ++r) {
      qb.begin_ineq(cons.h[r]);
      for (int i = 0; i < nx; ++i) qb.coef(L.z(t, i), cons.Hx(r, i));
      for (int j = 0; j < nu; ++j) qb.coef(L.v(t, j), cons.Hu(r, j));
      qb.coef(L.eta(t), ctx.gains.stage[t][r]);
    }
    if (alpha[t] < 0) {
      qb.begin_ineq(0.0);
      qb.coef(L.alpha(t), -1.0);
      qb.begin_ineq(1.0);
      qb.coef(L.alpha(t), 1.0);
    }
  }
  for (int r = 0; r < cons.terminal_rows(); ++r) {
    qb.begin_ineq(cons.hT[r]);
    for (int i = 0; i < nx; ++i) qb.coef(L.z(N, i), cons.HxT(r, i));
    qb.coef(L.eta(N), ctx.gains.terminal[r]);
  }
  return qb.build();
}

IlcSolution unpack_ilc(const ControlContext& ctx, const IlcInputs& in, const Vec& x) {
  const IlcLayout L = layout_of(ctx);
  const int N = L.N;
  IlcSolution s;
  for (int t = 0; t <= N; ++t) s.z.push_back(x.segment(L.z(t), L.nx));
  for (int t = 0; t < N; ++t) {
    s.v.push_back(x.segment(L.v(t), L.nu));
    s.xi.push_back(std::max(0.0, x[L.xi(t)]));
    s.rho.push_back(std::max(0.0, x[L.rho(t)]));
    s.d_ref.push_back(x.segment(L.dref(t), L.nx));
    s.alpha.push_back(clamp01(x[L.alpha(t)]));
  }
  for (int t = 0; t <= N; ++t) s.eta.push_back(x[L.eta(t)]);
  for (int t = 0; t < N; ++t) s.x_ref.push_back(blend_state(in, t, s.alpha[t]));
  s.x_ref.push_back(in.x_prev[N]);
  s.cost = ilc_cost(ctx, s);
  return s;
}

Vec pack_ilc(const ControlContext& ctx, const IlcSolution& s) {
  const IlcLayout L = layout_of(ctx);
  Vec x = Vec::Zero(L.size());
  for (int t = 0; t <= L.N; ++t) {
    x.segment(L.z(t), L.nx) = s.z[t];
    x[L.eta(t)] = s.eta[t];
  }
  for (int t = 0; t < L.N; ++t) {
    x.segment(L.v(t), L.nu) = s.v[t];
    x[L.xi(t)] = s.xi[t];
    x[L.rho(t)] = s.rho[t];
    x.segment(L.dref(t), L.nx) = s.d_ref[t];
    x[L.alpha(t)] = s.alpha[t];
  }
  return x;
}

double nominal_cost(const ControlContext& ctx, const Trajectory& z) {
  double c = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    const Vec e = z[t] - ctx.reference[t];
    c += e.dot(ctx.Q * e);
  }
  return c;
}

double ilc_cost(const ControlContext& ctx, const IlcSolution& s) {
  double c = nominal_cost(ctx, s.z);
  for (int t = 0; t < ctx.steps(); ++t) c += ctx.c1 * s.xi[t] + ctx.c2[t] * s.rho[t];
  return c;
}

double ilc_constraint_residual(const ControlContext& ctx, const IlcInputs& in,
                               const IlcSolution& s, bool allow_fractional) {
  const int N = ctx.steps();
  const auto& sys = ctx.sys;
  double worst = 0.0;
  auto eq = [&](double r) { worst = std::max(worst, std::abs(r)); };
  auto le = [&](double r) { worst = std::max(worst, r); };

  eq(inf_norm(s.z[0] - sys.x_bar));
  eq(s.eta[0] - ctx.tube.eta0);
  for (int t = 0; t < N; ++t) {
    eq(inf_norm(s.z[t + 1] - nominal_step(sys, s.z[t], s.v[t], s.d_ref[t], t)));
    eq(s.eta[t + 1] - (ctx.tube.m_bar[t] * s.eta[t] + ctx.tube.m[t] * s.xi[t] + s.rho[t] +
                       ctx.tube.w_bar));
    const double a = s.alpha[t];
    le(-a);
    le(a - 1.0);
    if (!allow_fractional) eq(a - std::round(a));
    eq(inf_norm(s.x_ref[t] - blend_state(in, t, a)));
    le(inf_norm(s.z[t] - s.x_ref[t]) - s.xi[t]);
    le(rho_bound(s.d_ref[t], in.estimate[t], in.reference[t], clamp01(a)) - s.rho[t]);
    le(-s.xi[t]);
    le(-s.rho[t]);
    const Vec lhs = ctx.cons.Hx * s.z[t] + ctx.cons.Hu * s.v[t];
    le((lhs - tighten_rows(ctx.cons.h, ctx.gains.stage[t], std::max(0.0, s.eta[t]))).maxCoeff());
  }
  for (double e : s.eta) le(-e);
  le((ctx.cons.HxT * s.z[N] - tighten_rows(ctx.cons.hT, ctx.gains.terminal, std::max(0.0, s.eta[N])))
         .maxCoeff());
  return worst;
}

IlcSolution shifted_plan(const IlcSolution& previous) {
  IlcSolution s = previous;
  std::fill(s.alpha.begin(), s.alpha.end(), 0.0);
  s.nodes = 0;
  s.qp_solves = 0;
  s.gap = 0.0;
  s.proven_optimal = false;
  s.used_fallback = false;
  return s;
}

IlcSolution first_iteration_plan(const ControlContext& ctx, const Trajectory& x0,
                                 const Trajectory& u0, const Trajectory& d_meas0) {
  const int N = ctx.steps();
  IlcSolution s;
  s.z = x0;
  s.v = u0;
  s.d_ref = d_meas0;
  s.x_ref = x0;
  s.alpha.assign(N, 1.0);
  s.xi.assign(N, 0.0);
  s.rho.assign(N, ctx.tube.w_bar);
  s.eta.assign(N + 1, ctx.tube.eta0);
  for (int t = 0; t < N; ++t)
    s.eta[t + 1] = ctx.tube.m_bar[t] * s.eta[t] + 2.0 * ctx.tube.w_bar;
  s.cost = ilc_cost(ctx, s);
  return s;
}

Assignment inert_alpha(const IlcInputs& in) {
  Assignment a(in.estimate.size(), -1);
  for (std::size_t t = 0; t < a.size(); ++t)
    if (in.x_prev[t] == in.xref_prev[t] && in.estimate[t] == in.reference[t]) a[t] = 0;
  return a;
}

IlcSolution solve_ilc(const ControlContext& ctx, const IlcInputs& in, const IlcOptions& opt,
                      const IlcSolution& fallback,
                      const std::function<void(const MiqpNodeInfo&)>& on_node) {
  check_inputs(ctx, in);
  const IlcLayout L = layout_of(ctx);
  const int N = L.N;
  const Assignment start = inert_alpha(in);
  auto build = [&](const Assignment& a) { return build_ilc(ctx, in, a); };

  IlcSolution best;
  bool have = false;
  if (opt.mode == IlcMode::Relaxed) {
    QpSolution qs = solve_qp(build(start), opt.miqp.qp);
    if (qs.optimal()) {
      best = unpack_ilc(ctx, in, qs.x);
      best.nodes = 1;
      best.qp_solves = 1;
      best.proven_optimal = true;
      have = true;
    }
  } else {
    std::vector<int> vars(N);
    for (int t = 0; t < N; ++t) vars[t] = L.alpha(t);
    std::vector<Assignment> candidates;
    auto to_assignment = [&](const std::vector<double>& a) {
      Assignment out(N);
      for (int t = 0; t < N; ++t) out[t] = a[t] >= 0.5 ? 1 : 0;
      return out;
    };
    if (static_cast<int>(in.alpha_prev.size()) == N) candidates.push_back(to_assignment(in.alpha_prev));
    candidates.push_back(Assignment(N, 0));
    if (static_cast<int>(fallback.alpha.size()) == N) candidates.push_back(to_assignment(fallback.alpha));
    const MiqpResult r = solve_miqp(build, vars, start, candidates, opt.miqp, on_node);
    if (r.found) {
      best = unpack_ilc(ctx, in, r.solution.x);
      for (int t = 0; t < N; ++t) {
        best.alpha[t] = static_cast<double>(r.assignment[t]);
        best.x_ref[t] = r.assignment[t] ? in.x_prev[t] : in.xref_prev[t];
      }
      best.cost = ilc_cost(ctx, best);
      best.nodes = r.nodes;
      best.qp_solves = r.qp_solves;
      best.gap = r.gap;
      best.proven_optimal = r.optimal;
      have = true;
    }
  }

  if (!have || best.cost > fallback.cost) {
    IlcSolution fb = fallback;
    fb.cost = ilc_cost(ctx, fb);
    fb.used_fallback = true;
    if (have) {
      fb.nodes = best.nodes;
      fb.qp_solves = best.qp_solves;
    }
    return fb;
  }
  return best;
}

}  // namespace ilpc
