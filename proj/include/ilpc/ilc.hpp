#pragma once

#include "ilpc/control_data.hpp"
#include "ilpc/miqp.hpp"
#include "ilpc/setmem.hpp"

namespace ilpc {

// Data of the iteration-level planning problem for iteration k.
struct IlcInputs {
  Trajectory x_prev;     // closed-loop states of iteration k-1
  Trajectory xref_prev;  // state reference of iteration k-1
  std::vector<Box> estimate;   // sets around f(x_prev(t))
  std::vector<Box> reference;  // sets around f(xref_prev(t))
  std::vector<double> alpha_prev;  // optional branch-and-bound hint
};

// Variable offsets inside the planning QP.
struct IlcLayout {
  int N, nx, nu;
  IlcLayout(int steps, int nx, int nu) : N(steps), nx(nx), nu(nu) {}

  int z(int t, int i = 0) const { return t * nx + i; }
  int v(int t, int j = 0) const { return (N + 1) * nx + t * nu + j; }
  int xi(int t) const { return (N + 1) * nx + N * nu + t; }
  int rho(int t) const { return xi(0) + N + t; }
  int eta(int t) const { return xi(0) + 2 * N + t; }
  int dref(int t, int i = 0) const { return xi(0) + 3 * N + 1 + t * nx + i; }
  int alpha(int t) const { return dref(0) + N * nx + t; }
  int size() const { return alpha(0) + N; }
};

struct IlcSolution {
  Trajectory z;     // N+1
  Trajectory v;     // N
  std::vector<double> xi, rho, eta;
  Trajectory d_ref;  // N
  Trajectory x_ref;  // N+1, the last entry repeats x_prev(N)
  std::vector<double> alpha;
  double cost = 0.0;

  // Solver diagnostics.
  int nodes = 0;
  int qp_solves = 0;
  double gap = 0.0;
  bool proven_optimal = false;
  bool used_fallback = false;
};

enum class IlcMode { Binary, Relaxed };

struct IlcOptions {
  IlcMode mode = IlcMode::Binary;
  MiqpSettings miqp;
};

// Assembles the planning QP for the given alpha fixings (-1 = free in [0,1]).
//
// Equality rows, in order: z(0) = x_bar; eta(0) = r0; nominal dynamics for
// each t; eta recursion for each t; one row per fixed alpha.
// Inequality rows, for each t: the two xi rows per coordinate, the two rho
// rows per coordinate, the tightened stage rows, then alpha >= 0 and
// alpha <= 1 when alpha(t) is free. The tightened terminal rows come last.
QpProblem build_ilc(const ControlContext& ctx, const IlcInputs& in, const Assignment& alpha);

IlcSolution unpack_ilc(const ControlContext& ctx, const IlcInputs& in, const Vec& x);
Vec pack_ilc(const ControlContext& ctx, const IlcSolution& sol);

// ||z - r||_Q^2 + c1 sum xi + sum c2 rho, evaluated from the variables.
double ilc_cost(const ControlContext& ctx, const IlcSolution& sol);
double nominal_cost(const ControlContext& ctx, const Trajectory& z);

// Largest violation of any planning constraint, recomputed from the
// definitions rather than from the QP matrices. Alpha must be binary unless
// `allow_fractional` is set.
double ilc_constraint_residual(const ControlContext& ctx, const IlcInputs& in,
                               const IlcSolution& sol, bool allow_fractional = false);

// Candidate for k >= 2: the previous plan with every alpha set to zero.
IlcSolution shifted_plan(const IlcSolution& previous);

// Candidate for k = 1 built from the initial trajectory and its measured
// disturbance.
IlcSolution first_iteration_plan(const ControlContext& ctx, const Trajectory& x0,
                                 const Trajectory& u0, const Trajectory& d_meas0);

// Times where alpha cannot change the problem (same previous state and
// reference, same boxes). They are fixed to zero.
Assignment inert_alpha(const IlcInputs& in);

// Solves the planning problem. `fallback` must be feasible for these inputs;
// the result never costs more than it.
IlcSolution solve_ilc(const ControlContext& ctx, const IlcInputs& in, const IlcOptions& opt,
                      const IlcSolution& fallback,
                      const std::function<void(const MiqpNodeInfo&)>& on_node = {});

}  // namespace ilpc
