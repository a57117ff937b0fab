#include "ilpc/mpc.hpp"

#include <sstream>

namespace ilpc {

namespace {

MpcLayout layout_of(const ControlContext& ctx, int tau) {
  if (tau < 0 || tau >= ctx.steps()) throw Error("tracking problem time outside the horizon");
  return {ctx.steps() - tau, ctx.nx(), ctx.nu()};
}

}  // namespace

QpProblem build_mpc(const ControlContext& ctx, const MpcInputs& in) {
  const MpcLayout L = layout_of(ctx, in.tau);
  const int H = L.H, nx = L.nx, nu = L.nu, tau = in.tau;
  const auto& plan = *in.plan;
  const auto& sys = ctx.sys;
  const auto& cons = ctx.cons;

  QpBuilder qb(L.size());
  for (int t = 0; t <= H; ++t) qb.add_tracking(L.z(t), ctx.Q, ctx.reference[tau + t]);
  for (int t = 0; t < H; ++t) {
    qb.add_tracking(L.v(t), ctx.P, plan.v[tau + t]);
    qb.add_linear(L.xi(t), ctx.c1);
  }

  for (int t = 0; t < H; ++t) {
    for (int i = 0; i < nx; ++i) {
      qb.begin_eq(plan.d_ref[tau + t][i]);
      qb.coef(L.z(t + 1, i), 1.0);
      for (int j = 0; j < nx; ++j) qb.coef(L.z(t, j), -sys.A[tau + t](i, j));
      for (int j = 0; j < nu; ++j) qb.coef(L.v(t, j), -sys.B[tau + t](i, j));
    }
  }
  for (int t = 0; t < H; ++t) {
    qb.begin_eq(plan.rho[tau + t] + ctx.tube.w_bar);
    qb.coef(L.eta(t + 1), 1.0);
    qb.coef(L.eta(t), -ctx.tube.m_bar[tau + t]);
    qb.coef(L.xi(t), -ctx.tube.m[tau + t]);
  }

  for (int i = 0; i < nx; ++i) {
    qb.begin_ineq(in.x_meas[i]);
    qb.coef(L.z(0, i), 1.0);
    qb.coef(L.eta(0), -1.0);
    qb.begin_ineq(-in.x_meas[i]);
    qb.coef(L.z(0, i), -1.0);
    qb.coef(L.eta(0), -1.0);
  }
  for (int t = 0; t < H; ++t) {
    const Vec& xr = plan.x_ref[tau + t];
    for (int i = 0; i < nx; ++i) {
      qb.begin_ineq(xr[i]);
      qb.coef(L.z(t, i), 1.0);
      qb.coef(L.xi(t), -1.0);
      qb.begin_ineq(-xr[i]);
      qb.coef(L.z(t, i), -1.0);
      qb.coef(L.xi(t), -1.0);
    }
    for (int r = 0; r < cons.stage_rows(); ++r) {
      qb.begin_ineq(cons.h[r]);
      for (int i = 0; i < nx; ++i) qb.coef(L.z(t, i), cons.Hx(r, i));
      for (int j = 0; j < nu; ++j) qb.coef(L.v(t, j), cons.Hu(r, j));
      qb.coef(L.eta(t), ctx.gains.stage[tau + t][r]);
    }
  }
  for (int r = 0; r < cons.terminal_rows(); ++r) {
    qb.begin_ineq(cons.hT[r]);
    for (int i = 0; i < nx; ++i) qb.coef(L.z(H, i), cons.HxT(r, i));
    qb.coef(L.eta(H), ctx.gains.terminal[r]);
  }
  return qb.build();
}

MpcSolution unpack_mpc(const ControlContext& ctx, const MpcInputs& in, const Vec& x) {
  const MpcLayout L = layout_of(ctx, in.tau);
  MpcSolution s;
  s.tau = in.tau;
  for (int t = 0; t <= L.H; ++t) {
    s.z.push_back(x.segment(L.z(t), L.nx));
    s.eta.push_back(x[L.eta(t)]);
  }
  for (int t = 0; t < L.H; ++t) {
    s.v.push_back(x.segment(L.v(t), L.nu));
    s.xi.push_back(std::max(0.0, x[L.xi(t)]));
  }
  s.cost = mpc_cost(ctx, in, s);
  return s;
}

Vec pack_mpc(const ControlContext& ctx, const MpcSolution& s) {
  const MpcLayout L = layout_of(ctx, s.tau);
  Vec x(L.size());
  for (int t = 0; t <= L.H; ++t) {
    x.segment(L.z(t), L.nx) = s.z[t];
    x[L.eta(t)] = s.eta[t];
  }
  for (int t = 0; t < L.H; ++t) {
    x.segment(L.v(t), L.nu) = s.v[t];
    x[L.xi(t)] = s.xi[t];
  }
  return x;
}

double mpc_cost(const ControlContext& ctx, const MpcInputs& in, const MpcSolution& s) {
  const int H = ctx.steps() - in.tau;
  double c = 0.0;
  for (int t = 0; t <= H; ++t) {
    const Vec e = s.z[t] - ctx.reference[in.tau + t];
    c += e.dot(ctx.Q * e);
  }
  for (int t = 0; t < H; ++t) {
    const Vec e = s.v[t] - in.plan->v[in.tau + t];
    c += e.dot(ctx.P * e) + ctx.c1 * s.xi[t];
  }
  return c;
}

double mpc_constraint_residual(const ControlContext& ctx, const MpcInputs& in,
                               const MpcSolution& s) {
  const int H = ctx.steps() - in.tau;
  const int tau = in.tau;
  const auto& plan = *in.plan;
  double worst = 0.0;
  auto eq = [&](double r) { worst = std::max(worst, std::abs(r)); };
  auto le = [&](double r) { worst = std::max(worst, r); };
  le(inf_norm(s.z[0] - in.x_meas) - s.eta[0]);
  for (int t = 0; t < H; ++t) {
    eq(inf_norm(s.z[t + 1] - nominal_step(ctx.sys, s.z[t], s.v[t], plan.d_ref[tau + t], tau + t)));
    eq(s.eta[t + 1] - (ctx.tube.m_bar[tau + t] * s.eta[t] + ctx.tube.m[tau + t] * s.xi[t] +
                       plan.rho[tau + t] + ctx.tube.w_bar));
    le(inf_norm(s.z[t] - plan.x_ref[tau + t]) - s.xi[t]);
    const Vec lhs = ctx.cons.Hx * s.z[t] + ctx.cons.Hu * s.v[t];
    le((lhs - tighten_rows(ctx.cons.h, ctx.gains.stage[tau + t], std::max(0.0, s.eta[t])))
           .maxCoeff());
  }
  for (double e : s.eta) le(-e);
  le((ctx.cons.HxT * s.z[H] - tighten_rows(ctx.cons.hT, ctx.gains.terminal, std::max(0.0, s.eta[H])))
         .maxCoeff());
  return worst;
}

MpcSolution plan_as_mpc(const Trajectory& z, const Trajectory& v, const std::vector<double>& xi,
                        const std::vector<double>& eta) {
  MpcSolution s;
  s.tau = 0;
  s.z = z;
  s.v = v;
  s.xi = xi;
  s.eta = eta;
  return s;
}

MpcSolution shift_candidate(const ControlContext& ctx, const MpcPlanData& plan,
                            const MpcSolution& prev, const Vec& x_next) {
  MpcSolution c;
  c.tau = prev.tau + 1;
  const int H = ctx.steps() - c.tau;
  c.z.assign(prev.z.begin() + 1, prev.z.end());
  c.v.assign(prev.v.begin() + 1, prev.v.end());
  c.xi.assign(prev.xi.begin() + 1, prev.xi.end());
  c.eta.assign(H + 1, 0.0);
  c.eta[0] = inf_norm(x_next - c.z[0]);
  for (int t = 0; t < H; ++t) {
    const int s = c.tau + t;
    c.eta[t + 1] = ctx.tube.m_bar[s] * c.eta[t] + ctx.tube.m[s] * c.xi[t] + plan.rho[s] +
                   ctx.tube.w_bar;
  }
  MpcInputs in{c.tau, x_next, &plan};
  c.cost = mpc_cost(ctx, in, c);
  return c;
}

MpcSolution solve_mpc(const ControlContext& ctx, const MpcInputs& in, const QpSettings& qp,
                      const MpcSolution* candidate) {
  QpProblem prob = build_mpc(ctx, in);
  if (candidate) prob.warm_start = pack_mpc(ctx, *candidate);
  const QpSolution qs = solve_qp(prob, qp);
  if (qs.optimal()) {
    MpcSolution s = unpack_mpc(ctx, in, qs.x);
    s.iterations = qs.iterations;
    return s;
  }
  if (candidate) {
    MpcSolution s = *candidate;
    s.used_candidate = true;
    s.iterations = qs.iterations;
    return s;
  }
  std::ostringstream os;
  os << "tracking problem at tau=" << in.tau << " ended with status " << to_string(qs.status);
  if (qs.status == QpStatus::Infeasible) os << " (infeasibility " << qs.infeasibility << ")";
  throw SolverError(os.str());
}

}  // namespace ilpc
