#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>

#include "ilpc/types.hpp"

namespace ilpc {

// Uncertain LTV plant x(t+1) = A(t)x + B(t)u + f(x,t) + w.
//
// The horizon has `num_states()` states indexed 0..N and N = A.size()
// transitions. A, B, K and m are stored per transition.
struct LtvSystem {
  std::vector<Mat> A;
  std::vector<Mat> B;
  std::vector<Mat> K;
  std::vector<double> m;
  double w_bar = 0.0;
  double r0 = 0.0;
  Vec x_bar;

  int nx() const { return static_cast<int>(x_bar.size()); }
  int nu() const { return B.empty() ? 0 : static_cast<int>(B.front().cols()); }
  int steps() const { return static_cast<int>(A.size()); }
  int num_states() const { return steps() + 1; }

  Mat closed_loop(int t) const { return A[t] + B[t] * K[t]; }
  // ||A(t)+B(t)K(t)||_inf + m(t)
  double m_bar(int t) const { return induced_inf_norm(closed_loop(t)) + m[t]; }

  // Throws ConfigError on inconsistent dimensions or non-positive m.
  void validate() const;
};

// Stage rows Hx x + Hu u <= h and terminal rows HxT x <= hT.
struct ConstraintSet {
  Mat Hx;
  Mat Hu;
  Vec h;
  Mat HxT;
  Vec hT;

  int stage_rows() const { return static_cast<int>(h.size()); }
  int terminal_rows() const { return static_cast<int>(hT.size()); }

  void validate(int nx, int nu) const;

  // |x_i| <= x_max and |u_j| <= u_max, with the same state box at the end.
  static ConstraintSet box(int nx, int nu, double x_max, double u_max);
};

struct DisturbanceModel {
  std::function<Vec(const Vec&, int)> eval;
  bool affine = false;
  std::vector<Mat> D;  // only when affine
  std::vector<Vec> d;  // only when affine

  Vec operator()(const Vec& x, int t) const { return eval(x, t); }

  static DisturbanceModel zero(int nx);
  static DisturbanceModel make_affine(std::vector<Mat> D, std::vector<Vec> d);
  // [f(x,t)]_i = curvature * x_i^2 + offset(t)_i
  static DisturbanceModel quadratic(double curvature, std::vector<Vec> offset);
};

struct Scenario {
  std::string name;
  LtvSystem sys;
  ConstraintSet cons;
  DisturbanceModel dist;
  Trajectory u_bar;      // N entries
  Trajectory reference;  // N+1 entries
  Mat Q;
  Mat P;
  double c1 = 0.1;
  Mat K0;
  std::uint64_t seed = 1;
  int iterations = 50;
  // Clip the initial feedback law to the inputs allowed by the
  // initial-trajectory tightening.
  bool saturate_initial_law = true;
  // Canonical JSON the scenario was loaded from, if any.
  std::string source;

  void validate() const;
};

Vec step_true(const LtvSystem& sys, const DisturbanceModel& dist, const Vec& x, const Vec& u,
              const Vec& w, int t);

Vec nominal_step(const LtvSystem& sys, const Vec& z, const Vec& v, const Vec& d_ref, int t);

Vec ancillary_input(const Vec& v, const Mat& K, const Vec& x, const Vec& z);

struct ConstraintCheck {
  bool ok = true;
  double margin = 0.0;  // max over rows of lhs - rhs
  int worst_row = -1;
};

ConstraintCheck check_constraints(const ConstraintSet& cset, const Vec& x, const Vec& u,
                                  bool terminal);

Vec sample_noise(std::mt19937_64& rng, double w_bar, int n);

// r(0) = x_bar, r(t+1) = A(t)r(t) + B(t)u_bar(t).
Trajectory build_reference(const LtvSystem& sys, const Trajectory& u_bar);

struct LipschitzReport {
  double worst_ratio = 0.0;  // largest ||f(x)-f(y)|| / (m(t)||x-y||) seen
  int worst_t = -1;
  bool ok() const { return worst_ratio <= 1.0; }
};

// Samples point pairs in the state box implied by the stage constraints and
// compares the observed Lipschitz quotient against m(t).
LipschitzReport sample_lipschitz(const LtvSystem& sys, const DisturbanceModel& dist,
                                 const ConstraintSet& cset, int samples_per_step,
                                 std::uint64_t seed);

}  // namespace ilpc
