#pragma once

#include "ilpc/model.hpp"

namespace ilpc {

struct TubeParams {
  std::vector<double> m_bar;
  std::vector<double> m;
  double w_bar = 0.0;
  double eta0 = 0.0;

  static TubeParams from_system(const LtvSystem& sys);
  int steps() const { return static_cast<int>(m.size()); }
};

// psi for each stage row (one vector per transition) and for the terminal rows.
struct TighteningGains {
  std::vector<Vec> stage;
  Vec terminal;
};

// eta(0) = eta0, eta(t+1) = m_bar eta + m xi + rho + w_bar.
std::vector<double> propagate_eta(const TubeParams& params, const std::vector<double>& xi,
                                  const std::vector<double>& rho);

// For infinity-norm balls the row-wise support is the l1 norm of each row.
TighteningGains tightening_gains(const ConstraintSet& cset, const std::vector<Mat>& K);

Vec tighten_rows(const Vec& h, const Vec& psi, double eta);

// eta0(0) = w_bar, eta0(t+1) = m_bar eta0 + 2 w_bar.
std::vector<double> initial_trajectory_eta(const TubeParams& params);

struct InitialCheck {
  bool ok = true;
  int t = -1;  // time of the worst row, N for the terminal rows
  int row = -1;
  double margin = 0.0;  // worst lhs - tightened rhs
};

InitialCheck check_initial_trajectory(const Trajectory& x0, const Trajectory& u0,
                                      const ConstraintSet& cset, const TighteningGains& gains,
                                      const TubeParams& params);

}  // namespace ilpc
