#include "ilpc/control_data.hpp"

namespace ilpc {

ControlContext ControlContext::from_scenario(const Scenario& sc) {
  ControlContext c;
  c.sys = sc.sys;
  c.cons = sc.cons;
  c.gains = tightening_gains(sc.cons, sc.sys.K);
  c.tube = TubeParams::from_system(sc.sys);
  c.reference = sc.reference;
  c.Q = sc.Q;
  c.P = sc.P;
  c.c1 = sc.c1;
  for (double m : sc.sys.m) c.c2.push_back(sc.c1 / m);
  return c;
}

QpBuilder::QpBuilder(int num_vars) : n_(num_vars), q_(Vec::Zero(num_vars)) {}

void QpBuilder::add_tracking(int first, const Mat& W, const Vec& target) {
  const int k = static_cast<int>(target.size());
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (W(i, j) != 0.0) p_.emplace_back(first + i, first + j, 2.0 * W(i, j));
  q_.segment(first, k) -= 2.0 * W * target;
  offset_ += target.dot(W * target);
}

void QpBuilder::add_linear(int var, double coef) { q_[var] += coef; }

int QpBuilder::begin_eq(double rhs) {
  b_.push_back(rhs);
  last_eq_ = true;
  return static_cast<int>(b_.size()) - 1;
}

int QpBuilder::begin_ineq(double rhs) {
  h_.push_back(rhs);
  last_eq_ = false;
  return static_cast<int>(h_.size()) - 1;
}

void QpBuilder::coef(int var, double value) {
  if (value == 0.0) return;
  if (last_eq_)
    a_.emplace_back(static_cast<int>(b_.size()) - 1, var, value);
  else
    g_.emplace_back(static_cast<int>(h_.size()) - 1, var, value);
}

QpProblem QpBuilder::build() const {
  QpProblem p;
  p.P.resize(n_, n_);
  p.P.setFromTriplets(p_.begin(), p_.end());
  p.P.makeCompressed();
  p.q = q_;
  p.offset = offset_;
  p.A.resize(static_cast<int>(b_.size()), n_);
  p.A.setFromTriplets(a_.begin(), a_.end());
  p.A.makeCompressed();
  p.b = Eigen::Map<const Vec>(b_.data(), static_cast<Eigen::Index>(b_.size()));
  p.G.resize(static_cast<int>(h_.size()), n_);
  p.G.setFromTriplets(g_.begin(), g_.end());
  p.G.makeCompressed();
  p.h = Eigen::Map<const Vec>(h_.data(), static_cast<Eigen::Index>(h_.size()));
  return p;
}

}  // namespace ilpc
