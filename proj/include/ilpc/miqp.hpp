#pragma once

#include <functional>

#include "ilpc/qp.hpp"

namespace ilpc {

// Per binary: -1 free (relaxed to [0,1]), 0 or 1 fixed.
using Assignment = std::vector<int>;

struct MiqpSettings {
  int node_limit = 2000;
  // Wall-clock limit in seconds; zero disables it. Leave it off when runs
  // must be reproducible.
  double time_limit = 0.0;
  double fathom_tol = 1e-9;
  double integrality_tol = 1e-6;
  QpSettings qp;
};

struct MiqpNodeInfo {
  Assignment fixed;
  double bound = 0.0;  // relaxation objective, +inf when infeasible
  bool integral = false;
};

struct MiqpResult {
  bool found = false;
  Assignment assignment;
  QpSolution solution;
  double objective = 0.0;
  double bound = 0.0;  // lower bound on the optimum
  double gap = 0.0;
  int nodes = 0;
  int qp_solves = 0;
  bool optimal = false;  // every node fathomed
};

// Builds the convex relaxation for a partial assignment. For a full
// assignment it must return the QP of that binary completion.
using RelaxationBuilder = std::function<QpProblem(const Assignment&)>;

// Best-first branch and bound. `binary_vars[i]` is the QP variable index of
// binary i. `start` holds fixings applied to every node. Each of the
// `candidates` is evaluated first and seeds the incumbent.
MiqpResult solve_miqp(const RelaxationBuilder& build, const std::vector<int>& binary_vars,
                      const Assignment& start, const std::vector<Assignment>& candidates,
                      const MiqpSettings& settings,
                      const std::function<void(const MiqpNodeInfo&)>& on_node = {});

}  // namespace ilpc
