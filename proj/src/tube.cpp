#include "ilpc/tube.hpp"

#include <limits>

namespace ilpc {

TubeParams TubeParams::from_system(const LtvSystem& sys) {
  TubeParams p;
  for (int t = 0; t < sys.steps(); ++t) {
    p.m_bar.push_back(sys.m_bar(t));
    p.m.push_back(sys.m[t]);
  }
  p.w_bar = sys.w_bar;
  p.eta0 = sys.r0;
  return p;
}

std::vector<double> propagate_eta(const TubeParams& params, const std::vector<double>& xi,
                                  const std::vector<double>& rho) {
  const int N = params.steps();
  if (static_cast<int>(xi.size()) != N || static_cast<int>(rho.size()) != N)
    throw Error("xi and rho need one entry per transition");
  std::vector<double> eta(N + 1);
  eta[0] = params.eta0;
  for (int t = 0; t < N; ++t) {
    if (xi[t] < 0 || rho[t] < 0) throw Error("xi and rho must be non-negative");
    eta[t + 1] = params.m_bar[t] * eta[t] + params.m[t] * xi[t] + rho[t] + params.w_bar;
  }
  return eta;
}

TighteningGains tightening_gains(const ConstraintSet& cset, const std::vector<Mat>& K) {
  TighteningGains g;
  g.stage.reserve(K.size());
  for (const Mat& k : K) g.stage.push_back((cset.Hx + cset.Hu * k).cwiseAbs().rowwise().sum());
  g.terminal = cset.HxT.cwiseAbs().rowwise().sum();
  return g;
}

Vec tighten_rows(const Vec& h, const Vec& psi, double eta) {
  if (eta < 0) throw Error("eta must be non-negative");
  return h - psi * eta;
}

std::vector<double> initial_trajectory_eta(const TubeParams& params) {
  const int N = params.steps();
  std::vector<double> eta(N + 1);
  eta[0] = params.w_bar;
  for (int t = 0; t < N; ++t) eta[t + 1] = params.m_bar[t] * eta[t] + 2.0 * params.w_bar;
  return eta;
}

InitialCheck check_initial_trajectory(const Trajectory& x0, const Trajectory& u0,
                                      const ConstraintSet& cset, const TighteningGains& gains,
                                      const TubeParams& params) {
  const int N = params.steps();
  if (static_cast<int>(x0.size()) != N + 1 || static_cast<int>(u0.size()) != N)
    throw Error("initial trajectory has the wrong length");
  const auto eta = initial_trajectory_eta(params);
  InitialCheck out;
  out.margin = -std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec& slack, int t) {
    if (slack.size() == 0) return;
    Eigen::Index r;
    const double worst = slack.maxCoeff(&r);
    if (worst > out.margin) {
      out.margin = worst;
      out.t = t;
      out.row = static_cast<int>(r);
    }
  };
  for (int t = 0; t < N; ++t)
    consider(cset.Hx * x0[t] + cset.Hu * u0[t] - tighten_rows(cset.h, gains.stage[t], eta[t]), t);
  consider(cset.HxT * x0[N] - tighten_rows(cset.hT, gains.terminal, eta[N]), N);
  out.ok = out.margin <= 0.0;
  return out;
}

}  // namespace ilpc
