#pragma once

#include "ilpc/model.hpp"
#include "ilpc/qp.hpp"
#include "ilpc/tube.hpp"

namespace ilpc {

// Scenario data shared by the planning and tracking problems.
struct ControlContext {
  LtvSystem sys;
  ConstraintSet cons;
  TighteningGains gains;
  TubeParams tube;
  Trajectory reference;
  Mat Q;
  Mat P;
  double c1 = 0.0;
  std::vector<double> c2;  // c1 / m(t)

  int steps() const { return sys.steps(); }
  int nx() const { return sys.nx(); }
  int nu() const { return sys.nu(); }

  static ControlContext from_scenario(const Scenario& sc);
};

// Accumulates sparse rows of a QpProblem.
class QpBuilder {
 public:
  explicit QpBuilder(int num_vars);

  int num_vars() const { return n_; }

  // Adds the quadratic term (x_block - target)' W (x_block - target) for the
  // variables starting at `first`, including its constant part.
  void add_tracking(int first, const Mat& W, const Vec& target);
  void add_linear(int var, double coef);

  int begin_eq(double rhs);
  int begin_ineq(double rhs);
  // Adds a coefficient to the last row started with begin_eq/begin_ineq.
  void coef(int var, double value);

  QpProblem build() const;

 private:
  using Triplet = Eigen::Triplet<double>;
  int n_;
  std::vector<Triplet> p_;
  Vec q_;
  double offset_ = 0.0;
  std::vector<Triplet> a_, g_;
  std::vector<double> b_, h_;
  bool last_eq_ = true;
};

}  // namespace ilpc
