#include "ilpc/qp.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace ilpc {

namespace {

using RowSpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

SpMat to_sparse(const Mat& m) {
  SpMat s = m.sparseView(1.0, 0.0);
  s.makeCompressed();
  return s;
}

double pos_part_max(const Vec& v) { return v.size() == 0 ? 0.0 : std::max(0.0, v.maxCoeff()); }

// Reduced KKT matrix [P + G'WG + dI, A'; A, -dI] with a fixed sparsity pattern.
// The pattern is analysed once; each iteration only rewrites values.
class KktSystem {
 public:
  KktSystem(const QpProblem& p, double reg) : n_(p.num_vars()), me_(p.num_eq()), reg_(reg), cur_reg_(reg) {
    const int dim = n_ + me_;
    std::vector<Triplet> trips;
    for (int k = 0; k < p.P.outerSize(); ++k)
      for (SpMat::InnerIterator it(p.P, k); it; ++it)
        if (it.row() >= it.col()) trips.emplace_back(it.row(), it.col(), 0.0);
    for (int i = 0; i < dim; ++i) trips.emplace_back(i, i, 0.0);
    for (int k = 0; k < p.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(p.A, k); it; ++it)
        trips.emplace_back(n_ + it.row(), it.col(), 0.0);
    RowSpMat g = p.G;
    for (int i = 0; i < g.outerSize(); ++i) {
      for (RowSpMat::InnerIterator a(g, i); a; ++a)
        for (RowSpMat::InnerIterator b(g, i); b; ++b)
          if (a.col() >= b.col()) trips.emplace_back(a.col(), b.col(), 0.0);
    }
    K_.resize(dim, dim);
    K_.setFromTriplets(trips.begin(), trips.end());
    K_.makeCompressed();

    base_.assign(K_.nonZeros(), 0.0);
    for (int k = 0; k < p.P.outerSize(); ++k)
      for (SpMat::InnerIterator it(p.P, k); it; ++it)
        if (it.row() >= it.col()) base_[position(it.row(), it.col())] += it.value();
    for (int i = 0; i < n_; ++i) base_[position(i, i)] += reg_;
    for (int i = n_; i < dim; ++i) base_[position(i, i)] -= reg_;
    for (int k = 0; k < p.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(p.A, k); it; ++it)
        base_[position(n_ + it.row(), it.col())] += it.value();
    for (int i = 0; i < g.outerSize(); ++i)
      for (RowSpMat::InnerIterator a(g, i); a; ++a)
        for (RowSpMat::InnerIterator b(g, i); b; ++b)
          if (a.col() >= b.col())
            weighted_.push_back({position(a.col(), b.col()), i, a.value() * b.value()});

    for (int i = 0; i < dim; ++i) diag_.push_back(position(i, i));
    ldlt_.analyzePattern(K_);
  }

  // Exact zero pivots can appear through cancellation when the weights
  // span many decades; the regularization is raised until the factorization
  // succeeds. Refinement still targets the unregularized system.
  bool factorize(const Vec& w) {
    double* vals = K_.valuePtr();
    for (double extra : {0.0, 1e-7, 1e-5, 1e-3}) {
      std::copy(base_.begin(), base_.end(), vals);
      for (const auto& e : weighted_) vals[e.pos] += w[e.row] * e.coef;
      for (int i = 0; i < n_ + me_; ++i) vals[diag_[i]] += i < n_ ? extra : -extra;
      cur_reg_ = reg_ + extra;
      ldlt_.factorize(K_);
      if (ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  Vec solve(const Vec& rhs, int refinement) const {
    Vec sol = ldlt_.solve(rhs);
    const double floor = 1e-14 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    double last = std::numeric_limits<double>::infinity();
    for (int k = 0; k < refinement; ++k) {
      Vec res = rhs - apply_unregularized(sol);
      const double nr = res.lpNorm<Eigen::Infinity>();
      if (!(nr < last) || nr <= floor) break;
      last = nr;
      sol += ldlt_.solve(res);
    }
    return sol;
  }

 private:
  struct Weighted {
    Eigen::Index pos;
    int row;
    double coef;
  };

  Eigen::Index position(int row, int col) const {
    const auto* outer = K_.outerIndexPtr();
    const auto* inner = K_.innerIndexPtr();
    const auto* first = inner + outer[col];
    const auto* last = inner + outer[col + 1];
    const auto* it = std::lower_bound(first, last, row);
    return it - inner;
  }

  Vec apply_unregularized(const Vec& v) const {
    Vec out = K_.selfadjointView<Eigen::Lower>() * v;
    out.head(n_) -= cur_reg_ * v.head(n_);
    out.tail(me_) += cur_reg_ * v.tail(me_);
    return out;
  }

  int n_;
  int me_;
  double reg_;
  double cur_reg_;
  std::vector<Eigen::Index> diag_;
  SpMat K_;
  std::vector<double> base_;
  std::vector<Weighted> weighted_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

double max_step(const Vec& v, const Vec& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0) a = std::min(a, -v[i] / dv[i]);
  return a;
}

QpSolution solve_equality_only(const QpProblem& p, const QpSettings& s) {
  KktSystem kkt(p, s.regularization);
  QpSolution sol;
  const int n = p.num_vars();
  if (!kkt.factorize(Vec())) {
    sol.status = QpStatus::NumericalError;
    return sol;
  }
  Vec rhs(n + p.num_eq());
  rhs << -p.q, p.b;
  Vec d = kkt.solve(rhs, s.refinement_steps + 2);
  sol.x = d.head(n);
  sol.y = d.tail(p.num_eq());
  sol.z = Vec();
  sol.residuals = kkt_residuals(p, sol.x, sol.y, sol.z);
  sol.iterations = 1;
  sol.objective = p.objective(sol.x);
  sol.status = (sol.residuals.dual <= s.tol && sol.residuals.primal <= s.primal_tol)
                   ? QpStatus::Optimal
                   : QpStatus::MaxIter;
  return sol;
}

QpSolution interior_point(const QpProblem& p, const QpSettings& s) {
  const int n = p.num_vars();
  const int me = p.num_eq();
  const int mi = p.num_ineq();
  KktSystem kkt(p, s.regularization);
  const SpMat At = p.A.transpose();
  const SpMat Gt = p.G.transpose();

  QpSolution sol;
  Vec x, y, z, sl;

  // Least-squares start with unit scaling, then shift slacks and
  // multipliers into the positive orthant.
  if (!kkt.factorize(Vec::Ones(mi))) {
    sol.status = QpStatus::NumericalError;
    return sol;
  }
  {
    Vec rhs(n + me);
    rhs << -p.q + Gt * p.h, p.b;
    Vec d = kkt.solve(rhs, s.refinement_steps);
    x = p.warm_start && p.warm_start->size() == n ? *p.warm_start : Vec(d.head(n));
    y = d.tail(me);
    sl = p.h - p.G * x;
    z = -sl;
    const double ap = -sl.minCoeff();
    if (ap >= -1e-8) sl.array() += 1.0 + ap;
    const double ad = -z.minCoeff();
    if (ad >= -1e-8) z.array() += 1.0 + ad;
  }

  // Best acceptable iterate, returned when the iteration stops short.
  double best = std::numeric_limits<double>::infinity();
  Vec bx, by, bz;
  const double loose_primal = std::max(s.primal_tol, s.acceptable_primal_tol);
  bool stalled = false;

  for (int it = 0; it <= s.max_iter; ++it) {
    const Vec rd = p.P * x + p.q + At * y + Gt * z;
    const Vec rp = p.A * x - p.b;
    const Vec gx = p.G * x;
    const Vec ri = gx + sl - p.h;
    const double mu = sl.dot(z) / mi;

    const double stat = rd.size() ? rd.lpNorm<Eigen::Infinity>() : 0.0;
    const double prim =
        std::max(rp.size() ? rp.lpNorm<Eigen::Infinity>() : 0.0, pos_part_max(gx - p.h));
    // Relative duality gap on the iterate's own slacks; ri separately
    // bounds their distance to h - Gx.
    const double comp = sl.dot(z) / std::max(1.0, std::abs(p.objective(x)));
    sol.iterations = it;
    const double score = std::max({stat / s.tol, comp / s.tol, prim / s.primal_tol,
                                   ri.lpNorm<Eigen::Infinity>() / s.primal_tol});
    const bool usable = stat <= s.acceptable_tol && comp <= s.acceptable_tol &&
                        prim <= loose_primal && ri.lpNorm<Eigen::Infinity>() <= loose_primal;
    if (usable && score < best) {
      best = score;
      bx = x;
      by = y;
      bz = z;
    }
    if (stat <= s.tol && prim <= s.primal_tol && comp <= s.tol &&
        ri.lpNorm<Eigen::Infinity>() <= s.primal_tol) {
      sol.status = QpStatus::Optimal;
      break;
    }
    // Stalled close to the optimum: fall back to the best iterate within
    // the looser tolerances.
    auto acceptable = [&] { return stalled = bx.size() == n; };
    if (it == s.max_iter) break;
    if (!std::isfinite(mu) || x.lpNorm<Eigen::Infinity>() > 1e12 ||
        z.lpNorm<Eigen::Infinity>() > 1e12) {
      sol.status = acceptable() ? QpStatus::Optimal : QpStatus::NumericalError;
      break;
    }

    const Vec w = z.cwiseQuotient(sl);
    if (!kkt.factorize(w)) {
      sol.status = acceptable() ? QpStatus::Optimal : QpStatus::NumericalError;
      break;
    }

    auto newton = [&](const Vec& rc, Vec& dx, Vec& dy, Vec& dz, Vec& ds) {
      Vec rhs(n + me);
      rhs.head(n) = -rd - Gt * (w.cwiseProduct(ri) - rc.cwiseQuotient(sl));
      rhs.tail(me) = -rp;
      const Vec d = kkt.solve(rhs, s.refinement_steps);
      dx = d.head(n);
      dy = d.tail(me);
      dz = w.cwiseProduct(p.G * dx + ri) - rc.cwiseQuotient(sl);
      ds = (-rc - sl.cwiseProduct(dz)).cwiseQuotient(z);
    };

    Vec dx, dy, dz, ds;
    const Vec rc_aff = sl.cwiseProduct(z);
    newton(rc_aff, dx, dy, dz, ds);
    const double a_aff = std::min(max_step(sl, ds), max_step(z, dz));
    const double mu_aff = (sl + a_aff * ds).dot(z + a_aff * dz) / mi;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const Vec rc = rc_aff + ds.cwiseProduct(dz) - Vec::Constant(mi, sigma * mu);
    newton(rc, dx, dy, dz, ds);
    const double a = std::min(1.0, 0.99 * std::min(max_step(sl, ds), max_step(z, dz)));

    x += a * dx;
    y += a * dy;
    z += a * dz;
    sl += a * ds;
  }

  if (sol.status == QpStatus::MaxIter && bx.size() == n) stalled = true;
  if (stalled) {
    sol.status = QpStatus::Optimal;
    x = bx;
    y = by;
    z = bz;
  }
  sol.x = x;
  sol.y = y;
  sol.z = z;
  sol.residuals = kkt_residuals(p, x, y, z);
  sol.objective = p.objective(x);
  return sol;
}

// Re-solves with the rows judged active as equalities. Kept only when the
// result satisfies the KKT conditions of the original problem.
bool polish(const QpProblem& p, const QpSettings& s, QpSolution& sol) {
  const Vec slack = p.h - p.G * sol.x;
  std::vector<int> active;
  for (int i = 0; i < p.num_ineq(); ++i)
    if (sol.z[i] > slack[i]) active.push_back(i);
  const int me = p.num_eq();
  const int na = static_cast<int>(active.size());
  QpProblem eq;
  eq.P = p.P;
  eq.q = p.q;
  eq.offset = p.offset;
  std::vector<Triplet> ta;
  for (int k = 0; k < p.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.A, k); it; ++it) ta.emplace_back(it.row(), it.col(), it.value());
  const RowSpMat g = p.G;
  for (int j = 0; j < na; ++j)
    for (RowSpMat::InnerIterator it(g, active[j]); it; ++it)
      ta.emplace_back(me + j, it.col(), it.value());
  eq.A.resize(me + na, p.num_vars());
  eq.A.setFromTriplets(ta.begin(), ta.end());
  eq.b.resize(me + na);
  eq.b.head(me) = p.b;
  for (int j = 0; j < na; ++j) eq.b[me + j] = p.h[active[j]];
  eq.G.resize(0, p.num_vars());
  eq.h.resize(0);
  const QpSolution r = solve_equality_only(eq, s);
  if (r.x.size() != p.num_vars() || !r.x.allFinite() || !r.y.allFinite()) return false;
  Vec z = Vec::Zero(p.num_ineq());
  for (int j = 0; j < na; ++j) z[active[j]] = r.y[me + j];
  const Vec y = r.y.head(me);
  const QpResiduals res = kkt_residuals(p, r.x, y, z);
  if (res.primal > s.primal_tol || res.dual > s.tol || res.complementarity > s.tol) return false;
  if (sol.optimal() &&
      p.objective(r.x) > sol.objective + s.tol * std::max(1.0, std::abs(sol.objective)))
    return false;
  sol.x = r.x;
  sol.y = y;
  sol.z = z;
  sol.residuals = res;
  sol.objective = p.objective(r.x);
  sol.status = QpStatus::Optimal;
  return true;
}

// min tau  s.t.  Gx - tau <= h, tau >= 0, Ax = b.
double phase_one(const QpProblem& p, const QpSettings& s) {
  const int n = p.num_vars();
  QpProblem f;
  f.P.resize(n + 1, n + 1);
  f.q = Vec::Zero(n + 1);
  f.q[n] = 1.0;
  std::vector<Triplet> ta, tg;
  for (int k = 0; k < p.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.A, k); it; ++it) ta.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < p.G.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.G, k); it; ++it) tg.emplace_back(it.row(), it.col(), it.value());
  const int mi = p.num_ineq();
  for (int i = 0; i < mi; ++i) tg.emplace_back(i, n, -1.0);
  tg.emplace_back(mi, n, -1.0);
  f.A.resize(p.num_eq(), n + 1);
  f.A.setFromTriplets(ta.begin(), ta.end());
  f.b = p.b;
  f.G.resize(mi + 1, n + 1);
  f.G.setFromTriplets(tg.begin(), tg.end());
  f.h.resize(mi + 1);
  f.h << p.h, 0.0;
  QpSettings fs = s;
  fs.tol = std::max(s.tol, 1e-9);
  fs.primal_tol = fs.tol;
  const QpSolution r = interior_point(f, fs);
  if (r.status != QpStatus::Optimal) return std::numeric_limits<double>::quiet_NaN();
  return r.x[n];
}

}  // namespace

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIter: return "max_iter";
    case QpStatus::NumericalError: return "numerical_error";
  }
  return "unknown";
}

double QpProblem::objective(const Vec& x) const { return 0.5 * x.dot(P * x) + q.dot(x) + offset; }

void QpProblem::validate() const {
  const int n = num_vars();
  if (P.rows() != n || P.cols() != n) throw Error("QP cost matrix has the wrong shape");
  if (A.rows() != b.size() || (A.rows() > 0 && A.cols() != n))
    throw Error("QP equality block has the wrong shape");
  if (G.rows() != h.size() || (G.rows() > 0 && G.cols() != n))
    throw Error("QP inequality block has the wrong shape");
}

QpProblem QpProblem::from_dense(const Mat& P, const Vec& q, const Mat& A, const Vec& b,
                                const Mat& G, const Vec& h) {
  const int n = static_cast<int>(q.size());
  Mat sym = 0.5 * (P + P.transpose());
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    const double low = es.eigenvalues().minCoeff();
    if (low < -1e-9) throw Error("QP cost matrix is not positive semidefinite");
    if (low < 0) {
      const Vec clamped = es.eigenvalues().cwiseMax(0.0);
      sym = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
      sym = 0.5 * (sym + sym.transpose());
    }
  }
  QpProblem p;
  p.P = to_sparse(sym);
  p.q = q;
  p.A = A.rows() ? to_sparse(A) : SpMat(0, n);
  p.b = b;
  p.G = G.rows() ? to_sparse(G) : SpMat(0, n);
  p.h = h;
  p.validate();
  return p;
}

QpResiduals kkt_residuals(const QpProblem& p, const Vec& x, const Vec& y, const Vec& z) {
  QpResiduals r;
  Vec stat = p.P * x + p.q;
  if (p.num_eq()) stat += p.A.transpose() * y;
  if (p.num_ineq()) stat += p.G.transpose() * z;
  r.dual = stat.size() ? stat.lpNorm<Eigen::Infinity>() : 0.0;
  if (p.num_ineq()) r.dual = std::max(r.dual, pos_part_max(-z));
  if (p.num_eq()) r.primal = (p.A * x - p.b).lpNorm<Eigen::Infinity>();
  if (p.num_ineq()) {
    const Vec slack = p.h - p.G * x;
    r.primal = std::max(r.primal, pos_part_max(-slack));
    r.complementarity = (z.array() * slack.array()).abs().maxCoeff();
  }
  return r;
}

QpSolution solve_qp(const QpProblem& p, const QpSettings& settings) {
  p.validate();
  QpSolution sol =
      p.num_ineq() == 0 ? solve_equality_only(p, settings) : interior_point(p, settings);
  // A stalled run often ends next to a vertex the polish can finish.
  if (settings.polish && p.num_ineq() > 0 && sol.x.size() == p.num_vars() &&
      sol.z.size() == p.num_ineq())
    polish(p, settings, sol);
  if (sol.status == QpStatus::Optimal || p.num_ineq() == 0) return sol;
  const double tau = phase_one(p, settings);
  if (std::isfinite(tau) && tau > settings.infeasibility_threshold) {
    sol.status = QpStatus::Infeasible;
    sol.infeasibility = tau;
  }
  return sol;
}

void dump_qp(const QpProblem& p, std::ostream& os) {
  os << "qp n=" << p.num_vars() << " eq=" << p.num_eq() << " ineq=" << p.num_ineq()
     << " offset=" << p.offset << '\n';
  const Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, " ", "\n");
  os << "P\n" << Mat(p.P).format(fmt) << "\nq\n" << p.q.transpose().format(fmt) << '\n';
  os << "A\n" << Mat(p.A).format(fmt) << "\nb\n" << p.b.transpose().format(fmt) << '\n';
  os << "G\n" << Mat(p.G).format(fmt) << "\nh\n" << p.h.transpose().format(fmt) << '\n';
}

}  // namespace ilpc
