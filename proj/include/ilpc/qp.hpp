#pragma once

#include <Eigen/Sparse>
#include <iosfwd>
#include <optional>

#include "ilpc/types.hpp"

namespace ilpc {

using SpMat = Eigen::SparseMatrix<double>;

// minimize 1/2 x'Px + q'x + offset  subject to  Ax = b, Gx <= h.
//
// Matrices are stored sparse; the constant offset lets callers make the
// objective equal to their own cost definition.
struct QpProblem {
  SpMat P;
  Vec q;
  double offset = 0.0;
  SpMat A;
  Vec b;
  SpMat G;
  Vec h;
  std::optional<Vec> warm_start;

  int num_vars() const { return static_cast<int>(q.size()); }
  int num_eq() const { return static_cast<int>(b.size()); }
  int num_ineq() const { return static_cast<int>(h.size()); }

  double objective(const Vec& x) const;
  void validate() const;

  // Symmetrizes P and clamps eigenvalues in [-1e-9, 0) to zero. Throws if P
  // has an eigenvalue below -1e-9.
  static QpProblem from_dense(const Mat& P, const Vec& q, const Mat& A, const Vec& b,
                              const Mat& G, const Vec& h);
};

enum class QpStatus { Optimal, Infeasible, MaxIter, NumericalError };

const char* to_string(QpStatus s);

struct QpSettings {
  double tol = 1e-8;
  // Primal feasibility target. Kept separate so callers that replay
  // constraints can ask for more than the stationarity tolerance.
  double primal_tol = 1e-8;
  // Used only when the iteration cannot continue.
  double acceptable_tol = 1e-6;
  double acceptable_primal_tol = 1e-9;
  int max_iter = 100;
  double regularization = 1e-9;
  int refinement_steps = 3;
  // Phase-one optimum above this value certifies infeasibility.
  double infeasibility_threshold = 1e-7;
  // Re-solve on the identified active set after convergence.
  bool polish = true;
};

struct QpResiduals {
  double primal = 0.0;          // max(|Ax-b|, (Gx-h)+)
  double dual = 0.0;            // |Px+q+A'y+G'z| and negative parts of z
  double complementarity = 0.0; // max |z_i (h-Gx)_i|
};

struct QpSolution {
  Vec x;
  Vec y;  // equality multipliers
  Vec z;  // inequality multipliers, >= 0
  QpStatus status = QpStatus::MaxIter;
  QpResiduals residuals;
  int iterations = 0;
  double objective = 0.0;
  // Smallest uniform relaxation of the inequalities that admits a solution,
  // reported when status is Infeasible.
  double infeasibility = 0.0;

  bool optimal() const { return status == QpStatus::Optimal; }
};

// Residuals recomputed from scratch for any primal/dual triple.
QpResiduals kkt_residuals(const QpProblem& p, const Vec& x, const Vec& y, const Vec& z);

// Primal-dual interior point with Mehrotra predictor-corrector steps.
QpSolution solve_qp(const QpProblem& p, const QpSettings& settings = {});

// Plain-text dump: a header line with dimensions, then dense rows of each block.
void dump_qp(const QpProblem& p, std::ostream& os);

}  // namespace ilpc
