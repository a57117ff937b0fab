#include "ilpc/miqp.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

namespace ilpc {

namespace {

struct Node {
  Assignment fixed;
  double bound;
  long seq;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.seq > b.seq;
  }
};

}  // namespace

MiqpResult solve_miqp(const RelaxationBuilder& build, const std::vector<int>& binary_vars,
                      const Assignment& start, const std::vector<Assignment>& candidates,
                      const MiqpSettings& settings,
                      const std::function<void(const MiqpNodeInfo&)>& on_node) {
  const int nb = static_cast<int>(binary_vars.size());
  if (static_cast<int>(start.size()) != nb) throw Error("start assignment has the wrong length");
  const auto t0 = std::chrono::steady_clock::now();
  const double inf = std::numeric_limits<double>::infinity();

  MiqpResult res;
  res.objective = inf;
  auto tol = [&](double v) { return settings.fathom_tol * (1.0 + std::abs(v)); };

  std::set<Assignment> tried;
  auto try_complete = [&](Assignment full) {
    for (int i = 0; i < nb; ++i)
      if (start[i] >= 0) full[i] = start[i];
    if (!tried.insert(full).second) return;
    QpSolution s = solve_qp(build(full), settings.qp);
    ++res.qp_solves;
    if (s.optimal() && s.objective < res.objective) {
      res.found = true;
      res.objective = s.objective;
      res.assignment = std::move(full);
      res.solution = std::move(s);
    }
  };

  for (const auto& c : candidates)
    if (static_cast<int>(c.size()) == nb) try_complete(c);

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long seq = 0;
  open.push({start, -inf, seq++});
  bool exhausted = true;

  while (!open.empty()) {
    const bool over_time =
        settings.time_limit > 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >
            settings.time_limit;
    if (res.nodes >= settings.node_limit || over_time) {
      exhausted = false;
      break;
    }
    Node node = open.top();
    open.pop();
    if (node.bound >= res.objective - tol(res.objective)) continue;

    QpSolution s = solve_qp(build(node.fixed), settings.qp);
    ++res.nodes;
    ++res.qp_solves;
    MiqpNodeInfo info{node.fixed, s.optimal() ? s.objective : inf, false};
    if (!s.optimal()) {
      if (s.status != QpStatus::Infeasible) exhausted = false;
      if (on_node) on_node(info);
      continue;
    }

    int branch = -1;
    double most = -1.0;
    Assignment rounded = node.fixed;
    for (int i = 0; i < nb; ++i) {
      const double a = s.x[binary_vars[i]];
      if (node.fixed[i] < 0) rounded[i] = a >= 0.5 ? 1 : 0;
      if (node.fixed[i] >= 0) continue;
      const double frac = std::min(a, 1.0 - a);
      if (frac > settings.integrality_tol && frac > most + 1e-12) {
        most = frac;
        branch = i;
      }
    }
    info.integral = branch < 0;
    if (on_node) on_node(info);
    if (s.objective >= res.objective - tol(res.objective)) continue;

    // Integral relaxations are re-solved with every binary fixed so the
    // returned point is exactly binary.
    try_complete(rounded);
    if (branch < 0 || res.objective <= s.objective + tol(s.objective)) continue;

    Node down{node.fixed, s.objective, 0};
    Node up{node.fixed, s.objective, 0};
    down.fixed[branch] = 0;
    up.fixed[branch] = 1;
    if (rounded[branch] == 1) {
      up.seq = seq++;
      down.seq = seq++;
    } else {
      down.seq = seq++;
      up.seq = seq++;
    }
    open.push(std::move(down));
    open.push(std::move(up));
  }

  double bound = res.objective;
  while (!open.empty()) {
    bound = std::min(bound, open.top().bound);
    open.pop();
  }
  res.bound = bound;
  res.optimal = exhausted && res.found;
  res.gap = res.found ? std::max(0.0, res.objective - bound) : inf;
  if (res.optimal) res.gap = 0.0;
  return res;
}

}  // namespace ilpc
