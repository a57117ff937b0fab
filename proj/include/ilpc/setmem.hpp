#pragma once

#include <optional>

#include "ilpc/model.hpp"

namespace ilpc {

// Axis-aligned box. Empty results are represented by std::nullopt.
struct Box {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  Vec center() const { return 0.5 * (lower + upper); }
  bool contains(const Vec& p, double tol = 0.0) const;
  // Coordinate-wise inclusion of this box in `outer`.
  bool subset_of(const Box& outer, double tol = 0.0) const;

  static Box ball(const Vec& center, double radius);
};

bool operator==(const Box& a, const Box& b);

Vec measure_disturbance(const LtvSystem& sys, const Vec& x_next, const Vec& x, const Vec& u,
                        int t);

Box raw_set(const Vec& d_meas, double w_bar);

Box inflate(const Box& b, double radius);

std::optional<Box> intersect(const Box& a, const Box& b);

// alpha*a + (1-alpha)*b as a Minkowski combination.
Box blend(const Box& a, const Box& b, double alpha);

// sup over d1 in first, d2 in second of ||d_ref - alpha d1 - (1-alpha) d2||_inf.
double rho_bound(const Vec& d_ref, const Box& first, const Box& second, double alpha);
double rho_bound(const Vec& d_ref, const Box& box);

// Measured disturbances and visited states of all finished iterations.
class DisturbanceHistory {
 public:
  DisturbanceHistory(int steps, double w_bar, std::vector<double> lipschitz);

  // `states` has steps+1 entries and `measured` has steps entries.
  void add_iteration(const Trajectory& states, const Trajectory& measured);

  int iterations() const { return static_cast<int>(measured_.size()); }
  int steps() const { return steps_; }
  const Vec& measured(int j, int t) const { return measured_.at(j).at(t); }
  const Vec& state(int j, int t) const { return states_.at(j).at(t); }

  // Intersection over j = 0..last of raw(d_j(t)) inflated by m(t)||x_j(t) - query||.
  // Throws SetMembershipError if it is empty.
  Box estimate(int t, const Vec& query, int last) const;
  Box estimate(int t, const Vec& query) const { return estimate(t, query, iterations() - 1); }

  // One step of the recursive form: prior intersected with the newest term.
  Box refine(const Box& prior, int t, const Vec& query, int j) const;

 private:
  int steps_;
  double w_bar_;
  std::vector<double> m_;
  std::vector<Trajectory> measured_;
  std::vector<Trajectory> states_;
};

// Reference-set bookkeeping across iterations.
class ReferenceSets {
 public:
  ReferenceSets() = default;
  // Starts the lineage from the raw sets of the first measured iteration.
  explicit ReferenceSets(const DisturbanceHistory& hist);

  const std::vector<Box>& current() const { return sets_; }
  // Intersects each set with the newest iteration's term at the given references.
  void refine(const DisturbanceHistory& hist, const Trajectory& x_ref);
  // Selects the estimate set where alpha = 1 and keeps the reference set where
  // alpha = 0. Fractional alpha blends the two.
  void advance(const std::vector<Box>& estimate, const std::vector<double>& alpha);

 private:
  std::vector<Box> sets_;
};

}  // namespace ilpc
