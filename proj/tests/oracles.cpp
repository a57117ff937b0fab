#include "oracles.hpp"

#include <cmath>

namespace oracle {

QpAnswer enumerate_active_sets(const DenseQp& qp) {
  const int n = static_cast<int>(qp.q.size());
  const int me = static_cast<int>(qp.b.size());
  const int mi = static_cast<int>(qp.h.size());
  const double scale = 1.0 + qp.q.cwiseAbs().maxCoeff();
  QpAnswer best;
  for (int mask = 0; mask < (1 << mi); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < mi; ++i)
      if (mask & (1 << i)) act.push_back(i);
    const int ma = static_cast<int>(act.size());
    const int dim = n + me + ma;
    Mat K = Mat::Zero(dim, dim);
    Vec rhs = Vec::Zero(dim);
    K.topLeftCorner(n, n) = qp.P;
    rhs.head(n) = -qp.q;
    for (int r = 0; r < me; ++r) {
      K.block(n + r, 0, 1, n) = qp.A.row(r);
      K.block(0, n + r, n, 1) = qp.A.row(r).transpose();
      rhs[n + r] = qp.b[r];
    }
    for (int r = 0; r < ma; ++r) {
      K.block(n + me + r, 0, 1, n) = qp.G.row(act[r]);
      K.block(0, n + me + r, n, 1) = qp.G.row(act[r]).transpose();
      rhs[n + me + r] = qp.h[act[r]];
    }
    Eigen::FullPivLU<Mat> lu(K);
    if (!lu.isInvertible()) continue;
    const Vec sol = lu.solve(rhs);
    const Vec x = sol.head(n);
    const Vec z = sol.tail(ma);
    if (ma > 0 && z.minCoeff() < -1e-10 * scale) continue;
    if (mi > 0 && (qp.G * x - qp.h).maxCoeff() > 1e-10 * scale) continue;
    const double f = qp.objective(x);
    if (f < best.objective) {
      best.feasible = true;
      best.objective = f;
      best.x = x;
    }
  }
  return best;
}

namespace {

Mat gaussian(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> nd;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

int pick(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

DenseQp random_qp(std::mt19937_64& rng, bool infeasible) {
  std::uniform_real_distribution<double> slack(0.0, 0.5);
  const int n = pick(rng, 1, 6);
  const int me = pick(rng, 0, std::min(2, n - 1));
  const int mi = pick(rng, infeasible ? 2 : 0, 4);
  DenseQp qp;
  const Mat M = gaussian(rng, n, n);
  qp.P = M * M.transpose() + 0.1 * Mat::Identity(n, n);
  qp.q = 2.0 * gaussian(rng, n, 1);
  const Vec x0 = gaussian(rng, n, 1);
  qp.A = gaussian(rng, me, n);
  qp.b = qp.A * x0;
  qp.G = gaussian(rng, mi, n);
  qp.h.resize(mi);
  for (int i = 0; i < mi; ++i) qp.h[i] = qp.G.row(i).dot(x0) + slack(rng);
  if (infeasible) {
    // g x <= g x0 + s with s < 0.5, and g x >= g x0 + 1.
    qp.G.row(mi - 1) = -qp.G.row(0);
    qp.h[mi - 1] = -(qp.G.row(0).dot(x0) + 1.0);
  }
  return qp;
}

DenseQp ToyMiqp::with(const ilpc::Assignment& a) const {
  DenseQp out = base;
  const int n = static_cast<int>(base.q.size());
  for (std::size_t i = 0; i < binaries.size(); ++i) {
    const int v = binaries[i];
    if (a[i] >= 0) {
      out.A.conservativeResize(out.A.rows() + 1, n);
      out.A.row(out.A.rows() - 1).setZero();
      out.A(out.A.rows() - 1, v) = 1.0;
      out.b.conservativeResize(out.b.size() + 1);
      out.b[out.b.size() - 1] = a[i];
    } else {
      for (double sgn : {1.0, -1.0}) {
        out.G.conservativeResize(out.G.rows() + 1, n);
        out.G.row(out.G.rows() - 1).setZero();
        out.G(out.G.rows() - 1, v) = sgn;
        out.h.conservativeResize(out.h.size() + 1);
        out.h[out.h.size() - 1] = sgn > 0 ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

ToyMiqp random_miqp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> slack(0.0, 0.5);
  std::bernoulli_distribution coin(0.5);
  const int nb = pick(rng, 1, 4);
  const int n = pick(rng, nb, 6);
  const int mi = pick(rng, 0, 4);
  ToyMiqp m;
  DenseQp& qp = m.base;
  const Mat M = gaussian(rng, n, n);
  qp.P = M * M.transpose() + 0.1 * Mat::Identity(n, n);
  qp.q = 2.0 * gaussian(rng, n, 1);
  Vec x0 = gaussian(rng, n, 1);
  for (int i = 0; i < nb; ++i) {
    m.binaries.push_back(i);
    x0[i] = coin(rng) ? 1.0 : 0.0;
  }
  qp.A = Mat(0, n);
  qp.b = Vec(0);
  qp.G = gaussian(rng, mi, n);
  qp.h.resize(mi);
  for (int i = 0; i < mi; ++i) qp.h[i] = qp.G.row(i).dot(x0) + slack(rng);
  return m;
}

MiqpAnswer enumerate_assignments(const ToyMiqp& m) {
  const int nb = static_cast<int>(m.binaries.size());
  MiqpAnswer out;
  for (int mask = 0; mask < (1 << nb); ++mask) {
    ilpc::Assignment a(nb);
    for (int i = 0; i < nb; ++i) a[i] = (mask >> i) & 1;
    const QpAnswer r = enumerate_active_sets(m.with(a));
    if (!r.feasible) continue;
    if (r.objective < out.objective) {
      out.runner_up = out.objective;
      out.objective = r.objective;
      out.best = a;
      out.feasible = true;
    } else if (r.objective < out.runner_up) {
      out.runner_up = r.objective;
    }
  }
  return out;
}

double vertex_sup(const Vec& a, const Vec& b, const Mat& K) {
  const int n = static_cast<int>(a.size());
  double best = -std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << n); ++mask) {
    Vec e(n);
    for (int i = 0; i < n; ++i) e[i] = (mask >> i) & 1 ? 1.0 : -1.0;
    double v = a.dot(e);
    if (b.size() > 0) v += b.dot(K * e);
    best = std::max(best, v);
  }
  return best;
}

double corner_sup(const Vec& d_ref, const ilpc::Box& first, const ilpc::Box& second,
                  double alpha) {
  const int n = static_cast<int>(d_ref.size());
  double best = 0.0;
  for (int m1 = 0; m1 < (1 << n); ++m1)
    for (int m2 = 0; m2 < (1 << n); ++m2) {
      Vec c1(n), c2(n);
      for (int i = 0; i < n; ++i) {
        c1[i] = (m1 >> i) & 1 ? first.upper[i] : first.lower[i];
        c2[i] = (m2 >> i) & 1 ? second.upper[i] : second.lower[i];
      }
      best = std::max(best, (d_ref - alpha * c1 - (1 - alpha) * c2).cwiseAbs().maxCoeff());
    }
  return best;
}

}  // namespace oracle
