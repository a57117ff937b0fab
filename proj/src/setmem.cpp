#include "ilpc/setmem.hpp"

#include <algorithm>
#include <sstream>

namespace ilpc {

bool Box::contains(const Vec& p, double tol) const {
  return ((p - lower).array() >= -tol).all() && ((upper - p).array() >= -tol).all();
}

bool Box::subset_of(const Box& outer, double tol) const {
  return ((lower - outer.lower).array() >= -tol).all() &&
         ((outer.upper - upper).array() >= -tol).all();
}

Box Box::ball(const Vec& center, double radius) {
  return {center.array() - radius, center.array() + radius};
}

bool operator==(const Box& a, const Box& b) { return a.lower == b.lower && a.upper == b.upper; }

Vec measure_disturbance(const LtvSystem& sys, const Vec& x_next, const Vec& x, const Vec& u,
                        int t) {
  return x_next - sys.A.at(t) * x - sys.B.at(t) * u;
}

Box raw_set(const Vec& d_meas, double w_bar) {
  if (w_bar < 0) throw Error("noise radius must be non-negative");
  return Box::ball(d_meas, w_bar);
}

Box inflate(const Box& b, double radius) {
  if (radius < 0) throw Error("inflation radius must be non-negative");
  return {b.lower.array() - radius, b.upper.array() + radius};
}

std::optional<Box> intersect(const Box& a, const Box& b) {
  Box out{a.lower.cwiseMax(b.lower), a.upper.cwiseMin(b.upper)};
  if (((out.upper - out.lower).array() < 0).any()) return std::nullopt;
  return out;
}

Box blend(const Box& a, const Box& b, double alpha) {
  if (alpha == 1.0) return a;
  if (alpha == 0.0) return b;
  return {alpha * a.lower + (1 - alpha) * b.lower, alpha * a.upper + (1 - alpha) * b.upper};
}

double rho_bound(const Vec& d_ref, const Box& first, const Box& second, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw Error("alpha must lie in [0,1]");
  const Box mix = blend(first, second, alpha);
  const Vec lo = (d_ref - mix.lower).cwiseAbs();
  const Vec hi = (d_ref - mix.upper).cwiseAbs();
  return lo.cwiseMax(hi).maxCoeff();
}

double rho_bound(const Vec& d_ref, const Box& box) { return rho_bound(d_ref, box, box, 1.0); }

DisturbanceHistory::DisturbanceHistory(int steps, double w_bar, std::vector<double> lipschitz)
    : steps_(steps), w_bar_(w_bar), m_(std::move(lipschitz)) {
  if (static_cast<int>(m_.size()) != steps_) throw Error("need one Lipschitz bound per step");
}

void DisturbanceHistory::add_iteration(const Trajectory& states, const Trajectory& measured) {
  if (static_cast<int>(measured.size()) != steps_ ||
      static_cast<int>(states.size()) != steps_ + 1)
    throw Error("history entries must cover the full horizon");
  states_.push_back(states);
  measured_.push_back(measured);
}

Box DisturbanceHistory::refine(const Box& prior, int t, const Vec& query, int j) const {
  const Box term = inflate(raw_set(measured(j, t), w_bar_), m_[t] * inf_norm(state(j, t) - query));
  auto cut = intersect(prior, term);
  if (!cut) {
    std::ostringstream os;
    os << "set-membership contradiction at t=" << t << ": measurement of iteration " << j
       << " excludes every disturbance consistent with earlier data";
    throw SetMembershipError(os.str());
  }
  return *cut;
}

Box DisturbanceHistory::estimate(int t, const Vec& query, int last) const {
  if (last < 0 || last >= iterations()) throw Error("estimate requested beyond stored history");
  Box acc = inflate(raw_set(measured(0, t), w_bar_), m_[t] * inf_norm(state(0, t) - query));
  for (int j = 1; j <= last; ++j) acc = refine(acc, t, query, j);
  return acc;
}

ReferenceSets::ReferenceSets(const DisturbanceHistory& hist) {
  if (hist.iterations() < 1) throw Error("reference sets need one measured iteration");
  const int N = hist.steps();
  sets_.reserve(N);
  for (int t = 0; t < N; ++t) sets_.push_back(hist.estimate(t, hist.state(0, t), 0));
}

void ReferenceSets::refine(const DisturbanceHistory& hist, const Trajectory& x_ref) {
  const int j = hist.iterations() - 1;
  for (int t = 0; t < static_cast<int>(sets_.size()); ++t)
    sets_[t] = hist.refine(sets_[t], t, x_ref[t], j);
}

void ReferenceSets::advance(const std::vector<Box>& estimate, const std::vector<double>& alpha) {
  if (estimate.size() != sets_.size() || alpha.size() != sets_.size())
    throw Error("reference set update has mismatched lengths");
  for (std::size_t t = 0; t < sets_.size(); ++t) sets_[t] = blend(estimate[t], sets_[t], alpha[t]);
}

}  // namespace ilpc
