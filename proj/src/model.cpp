#include "ilpc/model.hpp"

#include <cmath>
#include <sstream>

namespace ilpc {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

void check_time(const LtvSystem& sys, int t) {
  if (t < 0 || t >= sys.steps()) {
    std::ostringstream os;
    os << "time index " << t << " outside horizon [0," << sys.steps() << ")";
    throw Error(os.str());
  }
}

}  // namespace

void LtvSystem::validate() const {
  const int N = steps();
  require(N >= 1, "system needs at least one transition");
  require(static_cast<int>(B.size()) == N && static_cast<int>(K.size()) == N &&
              static_cast<int>(m.size()) == N,
          "A, B, K and m must have one entry per transition");
  const int n = nx();
  const int p = nu();
  require(n >= 1 && p >= 1, "state and input dimensions must be positive");
  for (int t = 0; t < N; ++t) {
    std::ostringstream where;
    where << " at t=" << t;
    require(A[t].rows() == n && A[t].cols() == n, "A has wrong shape" + where.str());
    require(B[t].rows() == n && B[t].cols() == p, "B has wrong shape" + where.str());
    require(K[t].rows() == p && K[t].cols() == n, "K has wrong shape" + where.str());
    require(std::isfinite(m[t]) && m[t] > 0.0, "Lipschitz bound must be positive" + where.str());
    require(std::isfinite(m_bar(t)), "closed-loop norm is not finite" + where.str());
  }
  require(w_bar >= 0.0 && r0 >= 0.0, "noise and initial radius must be non-negative");
}

void ConstraintSet::validate(int nx, int nu) const {
  require(Hx.rows() == h.size() && Hu.rows() == h.size(), "stage constraint rows disagree");
  require(Hx.cols() == nx && Hu.cols() == nu, "stage constraint columns disagree with system");
  require(HxT.rows() == hT.size(), "terminal constraint rows disagree");
  require(HxT.cols() == nx, "terminal constraint columns disagree with system");
}

ConstraintSet ConstraintSet::box(int nx, int nu, double x_max, double u_max) {
  ConstraintSet c;
  const int rows = 2 * (nx + nu);
  c.Hx = Mat::Zero(rows, nx);
  c.Hu = Mat::Zero(rows, nu);
  c.h = Vec::Zero(rows);
  int r = 0;
  for (int i = 0; i < nx; ++i) {
    c.Hx(r, i) = 1.0;
    c.h(r++) = x_max;
    c.Hx(r, i) = -1.0;
    c.h(r++) = x_max;
  }
  for (int j = 0; j < nu; ++j) {
    c.Hu(r, j) = 1.0;
    c.h(r++) = u_max;
    c.Hu(r, j) = -1.0;
    c.h(r++) = u_max;
  }
  c.HxT = Mat::Zero(2 * nx, nx);
  c.hT = Vec::Constant(2 * nx, x_max);
  for (int i = 0; i < nx; ++i) {
    c.HxT(2 * i, i) = 1.0;
    c.HxT(2 * i + 1, i) = -1.0;
  }
  return c;
}

DisturbanceModel DisturbanceModel::zero(int nx) {
  DisturbanceModel dm;
  dm.eval = [nx](const Vec&, int) { return Vec::Zero(nx); };
  return dm;
}

DisturbanceModel DisturbanceModel::make_affine(std::vector<Mat> D, std::vector<Vec> d) {
  DisturbanceModel dm;
  dm.affine = true;
  dm.D = std::move(D);
  dm.d = std::move(d);
  dm.eval = [D = dm.D, d = dm.d](const Vec& x, int t) -> Vec { return D[t] * x + d[t]; };
  return dm;
}

DisturbanceModel DisturbanceModel::quadratic(double curvature, std::vector<Vec> offset) {
  DisturbanceModel dm;
  dm.eval = [curvature, offset = std::move(offset)](const Vec& x, int t) -> Vec {
    return curvature * x.array().square().matrix() + offset[t];
  };
  return dm;
}

void Scenario::validate() const {
  sys.validate();
  cons.validate(sys.nx(), sys.nu());
  const int N = sys.steps();
  const int n = sys.nx();
  require(static_cast<int>(u_bar.size()) == N, "reference input needs one entry per transition");
  for (const auto& u : u_bar) require(u.size() == sys.nu(), "reference input has wrong size");
  require(static_cast<int>(reference.size()) == N + 1, "reference needs one entry per state");
  require(Q.rows() == n && Q.cols() == n, "Q has wrong shape");
  require(P.rows() == sys.nu() && P.cols() == sys.nu(), "P has wrong shape");
  require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eq(Q);
  require(eq.eigenvalues().minCoeff() > 0.0, "Q must be positive definite");
  Eigen::SelfAdjointEigenSolver<Mat> ep(0.5 * (P + P.transpose()));
  require(ep.eigenvalues().minCoeff() >= -1e-12, "P must be positive semidefinite");
  require(c1 > 0.0, "c1 must be positive");
  require(K0.rows() == sys.nu() && K0.cols() == n, "K0 has wrong shape");
  require(iterations >= 1, "iterations must be at least 1");
  if (dist.affine) {
    require(static_cast<int>(dist.D.size()) == N && static_cast<int>(dist.d.size()) == N,
            "affine disturbance needs one D and d per transition");
  }
}

Vec step_true(const LtvSystem& sys, const DisturbanceModel& dist, const Vec& x, const Vec& u,
              const Vec& w, int t) {
  check_time(sys, t);
  return sys.A[t] * x + sys.B[t] * u + dist(x, t) + w;
}

Vec nominal_step(const LtvSystem& sys, const Vec& z, const Vec& v, const Vec& d_ref, int t) {
  check_time(sys, t);
  return sys.A[t] * z + sys.B[t] * v + d_ref;
}

Vec ancillary_input(const Vec& v, const Mat& K, const Vec& x, const Vec& z) {
  return v + K * (x - z);
}

ConstraintCheck check_constraints(const ConstraintSet& cset, const Vec& x, const Vec& u,
                                  bool terminal) {
  Vec slack = terminal ? Vec(cset.HxT * x - cset.hT) : Vec(cset.Hx * x + cset.Hu * u - cset.h);
  ConstraintCheck out;
  if (slack.size() == 0) return out;
  Eigen::Index row = 0;
  out.margin = slack.maxCoeff(&row);
  out.worst_row = static_cast<int>(row);
  out.ok = out.margin <= 0.0;
  return out;
}

Vec sample_noise(std::mt19937_64& rng, double w_bar, int n) {
  Vec w(n);
  if (w_bar == 0.0) return Vec::Zero(n);
  std::uniform_real_distribution<double> dist(-w_bar, w_bar);
  for (int i = 0; i < n; ++i) w(i) = dist(rng);
  return w;
}

Trajectory build_reference(const LtvSystem& sys, const Trajectory& u_bar) {
  if (static_cast<int>(u_bar.size()) != sys.steps())
    throw ConfigError("reference input length does not match the horizon");
  Trajectory r;
  r.reserve(u_bar.size() + 1);
  r.push_back(sys.x_bar);
  for (int t = 0; t < sys.steps(); ++t) {
    if (u_bar[t].size() != sys.nu()) throw ConfigError("reference input has wrong size");
    r.push_back(sys.A[t] * r.back() + sys.B[t] * u_bar[t]);
  }
  return r;
}

LipschitzReport sample_lipschitz(const LtvSystem& sys, const DisturbanceModel& dist,
                                 const ConstraintSet& cset, int samples_per_step,
                                 std::uint64_t seed) {
  // State box from rows that bound a single state coordinate and no input.
  const int n = sys.nx();
  Vec lo = Vec::Constant(n, -1.0), hi = Vec::Constant(n, 1.0);
  std::vector<bool> has_lo(n, false), has_hi(n, false);
  for (int r = 0; r < cset.stage_rows(); ++r) {
    if (cset.Hu.row(r).cwiseAbs().maxCoeff() > 0.0) continue;
    int nz = -1, count = 0;
    for (int i = 0; i < n; ++i)
      if (cset.Hx(r, i) != 0.0) nz = i, ++count;
    if (count != 1) continue;
    const double bound = cset.h(r) / cset.Hx(r, nz);
    if (cset.Hx(r, nz) > 0) {
      hi(nz) = has_hi[nz] ? std::min(hi(nz), bound) : bound;
      has_hi[nz] = true;
    } else {
      lo(nz) = has_lo[nz] ? std::max(lo(nz), bound) : bound;
      has_lo[nz] = true;
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&]() {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
    return x;
  };
  LipschitzReport rep;
  for (int t = 0; t < sys.steps(); ++t) {
    for (int s = 0; s < samples_per_step; ++s) {
      Vec x = draw();
      Vec y = draw();
      // Every other pair is pushed toward a corner where quadratic terms are steepest.
      if (s % 2 == 1) {
        for (int i = 0; i < n; ++i) {
          const double c = (x(i) >= 0 ? hi(i) : lo(i));
          x(i) = c - 1e-3 * (c - x(i));
          y(i) = c - 2e-3 * (c - y(i));
        }
      }
      const double dx = inf_norm(x - y);
      if (dx == 0.0) continue;
      const double ratio = inf_norm(dist(x, t) - dist(y, t)) / (sys.m[t] * dx);
      if (ratio > rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.worst_t = t;
      }
    }
  }
  return rep;
}

}  // namespace ilpc
