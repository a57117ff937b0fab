#pragma once

#include "ilpc/control_data.hpp"

namespace ilpc {

// Data fixed by the planning problem for the whole iteration.
struct MpcPlanData {
  Trajectory x_ref;  // N+1 (only the first N are used)
  Trajectory d_ref;  // N
  std::vector<double> rho;  // N
  Trajectory v;      // N, input reference
};

struct MpcInputs {
  int tau = 0;
  Vec x_meas;
  const MpcPlanData* plan = nullptr;
};

// Variable offsets for horizon H = N - tau.
struct MpcLayout {
  int H, nx, nu;
  MpcLayout(int horizon, int nx, int nu) : H(horizon), nx(nx), nu(nu) {}

  int z(int t, int i = 0) const { return t * nx + i; }
  int v(int t, int j = 0) const { return (H + 1) * nx + t * nu + j; }
  int xi(int t) const { return (H + 1) * nx + H * nu + t; }
  int eta(int t) const { return xi(0) + H + t; }
  int size() const { return eta(0) + H + 1; }
};

struct MpcSolution {
  int tau = 0;
  Trajectory z;  // H+1
  Trajectory v;  // H
  std::vector<double> xi;   // H
  std::vector<double> eta;  // H+1
  double cost = 0.0;
  int iterations = 0;
  bool used_candidate = false;  // solver failed and the shift candidate was kept
};

// Equality rows: nominal dynamics for each t, then the eta recursion for each t.
// Inequality rows: the two initial-tube rows per coordinate, then for each t
// the two xi rows per coordinate and the tightened stage rows, and finally the
// tightened terminal rows.
QpProblem build_mpc(const ControlContext& ctx, const MpcInputs& in);

MpcSolution unpack_mpc(const ControlContext& ctx, const MpcInputs& in, const Vec& x);
Vec pack_mpc(const ControlContext& ctx, const MpcSolution& s);

double mpc_cost(const ControlContext& ctx, const MpcInputs& in, const MpcSolution& s);

// Largest violation of any tracking-problem constraint, recomputed from the
// definitions.
double mpc_constraint_residual(const ControlContext& ctx, const MpcInputs& in,
                               const MpcSolution& s);

// The planning optimum viewed as a tracking solution at tau = 0.
MpcSolution plan_as_mpc(const Trajectory& z, const Trajectory& v, const std::vector<double>& xi,
                        const std::vector<double>& eta);

// Tail of `prev` with the initial radius reset to ||x_next - z_prev(1)||.
MpcSolution shift_candidate(const ControlContext& ctx, const MpcPlanData& plan,
                            const MpcSolution& prev, const Vec& x_next);

// Solves at `in.tau`. When the solver fails and `candidate` is given, the
// candidate is returned with used_candidate set. Otherwise throws SolverError.
MpcSolution solve_mpc(const ControlContext& ctx, const MpcInputs& in, const QpSettings& qp,
                      const MpcSolution* candidate = nullptr);

}  // namespace ilpc
