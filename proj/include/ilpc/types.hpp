#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace ilpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One vector per time index.
using Trajectory = std::vector<Vec>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad scenario or run configuration. Maps to CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A QP or MIQP could not be solved. Maps to CLI exit code 2.
class SolverError : public Error {
 public:
  using Error::Error;
};

// Estimate sets became empty, i.e. the measurements contradict the
// Lipschitz or noise bounds.
class SetMembershipError : public Error {
 public:
  using Error::Error;
};

inline double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Induced infinity norm: maximum absolute row sum.
inline double induced_inf_norm(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace ilpc
