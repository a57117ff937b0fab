#pragma once

#include <functional>
#include <optional>
#include <string>

#include "ilpc/ilc.hpp"
#include "ilpc/mpc.hpp"
#include "ilpc/setmem.hpp"

namespace ilpc {

// Ackermann's formula for a 2-state, 1-input pair. Returns K with
// eig(A + B K) equal to the requested poles.
Mat place_poles_2x1(const Mat& A, const Mat& B, double p1, double p2);

struct InitialTrajectory {
  Trajectory x;       // N+1
  Trajectory u;       // N
  Trajectory w;       // N
  Trajectory d_meas;  // N
  InitialCheck check;
};

// Closed-loop rollout under u = K0 (x - r), optionally clipped to the inputs
// allowed by the initial-trajectory tightening. Starts exactly at x_bar.
InitialTrajectory generate_initial_trajectory(const Scenario& sc, const ControlContext& ctx,
                                              std::mt19937_64& rng);

enum class RunMode { Ilpc, IlcOpenLoop, MpcKnown };

const char* to_string(RunMode m);
RunMode parse_mode(const std::string& s);

struct RunConfig {
  RunMode mode = RunMode::Ilpc;
  // Learning iterations after the initial trajectory k = 0.
  int iterations = 49;
  std::uint64_t seed = 1;
  IlcOptions ilc;
  QpSettings qp;
  // Relaxed planning with a non-affine disturbance has no tube guarantee.
  bool allow_relaxed_nonaffine = false;
  // Stop early after 5 consecutive planning-cost changes below this value.
  // Zero keeps the fixed iteration count.
  double early_stop_eps = 0.0;
  // Records named events in execution order.
  std::function<void(const std::string&)> trace;
  // Sees the planning inputs and the fallback of iteration k before the solve.
  std::function<void(int, const IlcInputs&, const IlcSolution&)> on_planning;

  RunConfig();
};

struct StepLog {
  int tau = 0;
  double cost = 0.0;
  double eta0 = 0.0;
  Vec input;  // applied u(tau)
  int qp_iterations = 0;
  bool used_candidate = false;
  // Replay residual of the feasibility witness offered at this step
  // (planning optimum at tau = 0, shifted solution afterwards).
  double candidate_residual = 0.0;
};

struct IterationLog {
  int k = 0;
  Trajectory x, u, w, d_meas;
  std::optional<IlcSolution> plan;
  std::vector<MpcSolution> mpc;
  std::vector<StepLog> steps;
  std::vector<Box> estimate;   // sets fed to the planner
  std::vector<Box> reference;
  double closed_cost = 0.0;
  double nominal_cost = 0.0;
  double planning_cost = std::numeric_limits<double>::quiet_NaN();
  double planning_residual = 0.0;
  double fallback_residual = 0.0;
  double wall_seconds = 0.0;
};

struct RunResult {
  RunConfig config;
  InitialTrajectory initial;
  std::vector<IterationLog> logs;  // logs[0] is the initial trajectory
};

class Runner {
 public:
  Runner(const Scenario& sc, RunConfig cfg);

  const ControlContext& context() const { return ctx_; }
  const DisturbanceHistory& history() const { return hist_; }
  const std::vector<IterationLog>& logs() const { return logs_; }
  const InitialTrajectory& initial() const { return init_; }

  // Executes iteration k = logs().size().
  const IterationLog& run_iteration();
  RunResult run();

 private:
  void emit(const std::string& ev) const;
  void rollout(IterationLog& log, const MpcPlanData* plan_data);

  Scenario sc_;
  RunConfig cfg_;
  ControlContext ctx_;
  std::mt19937_64 rng_;
  InitialTrajectory init_;
  DisturbanceHistory hist_;
  ReferenceSets refsets_;
  MpcPlanData known_;
  std::vector<IterationLog> logs_;
};

RunResult run(const Scenario& sc, const RunConfig& cfg);

// Number of worker threads for seed sweeps: ILPC_THREADS if set, else the
// hardware concurrency.
int sweep_threads();

// Calls fn(i) for i in [0, count) on up to sweep_threads() threads.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace ilpc
