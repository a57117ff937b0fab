#pragma once

#include <array>
#include <string>

#include "ilpc/loop.hpp"

namespace ilpc {

struct CheckTolerances {
  double tube = 1e-9;
  double constraint = 1e-9;
  double replay = 1e-9;
  double cost = 1e-6;
  double set = 1e-12;
};

// A count of violations and the worst excess over the allowed bound.
struct Tally {
  long checked = 0;
  long violations = 0;
  double worst = -std::numeric_limits<double>::infinity();

  void add(double excess, double tol);
  void merge(const Tally& o);
  bool ok() const { return violations == 0; }
};

// Property audit of one run, recomputed from the logs and the scenario's
// true disturbance.
struct RunAudit {
  Tally tube_plan;         // ||x_k(t) - z_k(t)|| <= eta_k(t)
  Tally tube_step;         // ||x_k(tau+t) - z^tau(t)|| <= eta^tau(t), all t
  Tally tube_step_near;    // same, t in {0, 1}
  Tally constraints;       // original stage and terminal rows
  Tally candidate_replay;  // planning fallback and tracking candidates
  Tally plan_replay;       // returned planning solutions
  Tally monotone;          // J_ILC(k) <= J_ILC(k-1)
  Tally first_bound;       // J_ILC(1) bound from the initial trajectory
  Tally descent;           // per-step tracking cost decrease
  Tally link;              // J_MPC(0) <= J_ILC - sum c2 rho
  Tally set_contains;      // true disturbance inside its estimate set
  Tally set_shrinks;       // D_{k|n} inside D_{k|n-1}
  long infeasible_solves = 0;  // tracking steps that fell back to the candidate
  long planning_fallbacks = 0;  // planning solves that returned the fallback
  double plateau = 0.0;  // relative spread of max_t ||z_k(t)-r(t)|| over the last 10 iterations

  void merge(const RunAudit& o);
};

RunAudit audit_run(const Scenario& sc, const RunResult& res, const CheckTolerances& tol = {});

// max_t ||z_k(t) - r(t)||_inf for each logged iteration k >= 1.
std::vector<double> tracking_deviation(const ControlContext& ctx, const RunResult& res);

struct Verdict {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

// Results of the three modes for one seed, in the order ilpc, ilc, mpc-known.
struct SeedOutcome {
  std::uint64_t seed = 0;
  std::array<RunAudit, 3> audit;
  std::array<double, 3> initial_cost{};
  std::array<double, 3> final_closed{};
  std::array<double, 3> final_nominal{};
};

SeedOutcome summarize_seed(std::uint64_t seed, const std::array<RunAudit, 3>& audit,
                           const std::array<const RunResult*, 3>& runs);

// Criteria that follow from closed-loop runs of the batch scenario: the
// guarantees (1-6) and the cost bands, ordering and plateau (10-13).
std::vector<Verdict> sweep_verdicts(const std::vector<SeedOutcome>& seeds);

}  // namespace ilpc
