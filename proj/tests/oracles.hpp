#pragma once

// Brute-force reference computations for the tests. None of these call the
// solver code they are used to check.

#include <limits>
#include <random>

#include "ilpc/miqp.hpp"
#include "ilpc/qp.hpp"
#include "ilpc/setmem.hpp"

namespace oracle {

using ilpc::Mat;
using ilpc::Vec;

struct DenseQp {
  Mat P;
  Vec q;
  Mat A;
  Vec b;
  Mat G;
  Vec h;

  double objective(const Vec& x) const { return 0.5 * x.dot(P * x) + q.dot(x); }
  ilpc::QpProblem problem() const { return ilpc::QpProblem::from_dense(P, q, A, b, G, h); }
};

struct QpAnswer {
  bool feasible = false;
  Vec x;
  double objective = std::numeric_limits<double>::infinity();
};

// Solves the KKT system for every subset of inequalities taken as active and
// keeps the best point that is primal feasible with nonnegative multipliers.
// P must be positive definite.
QpAnswer enumerate_active_sets(const DenseQp& qp);

// n <= 6 variables, up to 2 equalities and up to 4 inequalities, positive
// definite Hessian. With `infeasible` two inequality rows contradict.
DenseQp random_qp(std::mt19937_64& rng, bool infeasible);

// A toy mixed-binary QP: `binaries` lists the variables restricted to {0, 1}.
struct ToyMiqp {
  DenseQp base;
  std::vector<int> binaries;

  // Fixed binaries become equalities, free ones get 0 <= x <= 1.
  DenseQp with(const ilpc::Assignment& a) const;
};

ToyMiqp random_miqp(std::mt19937_64& rng);

struct MiqpAnswer {
  bool feasible = false;
  ilpc::Assignment best;
  double objective = std::numeric_limits<double>::infinity();
  double runner_up = std::numeric_limits<double>::infinity();
};

MiqpAnswer enumerate_assignments(const ToyMiqp& m);

// sup of (a + b K) e over the 2^n vertices of the unit infinity ball.
double vertex_sup(const Vec& a, const Vec& b, const Mat& K);

// sup of ||d_ref - alpha d1 - (1 - alpha) d2|| over the corners of both boxes.
double corner_sup(const Vec& d_ref, const ilpc::Box& first, const ilpc::Box& second,
                  double alpha);

}  // namespace oracle
