#include <gtest/gtest.h>

#include <json.hpp>

#include "ilpc/loop.hpp"
#include "ilpc/scenario_io.hpp"

using namespace ilpc;
using nlohmann::json;

namespace {

Vec V(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

LtvSystem identity_system(int steps) {
  LtvSystem s;
  for (int t = 0; t < steps; ++t) {
    s.A.push_back(Mat::Identity(2, 2));
    s.B.push_back(Mat::Zero(2, 1));
    s.K.push_back(Mat::Zero(1, 2));
    s.m.push_back(0.1);
  }
  s.x_bar = V({1, 2});
  return s;
}

json builtin_doc() { return json::parse(builtin_scenario_json()); }

std::string config_error(const json& doc) {
  try {
    parse_scenario(doc.dump(), "test");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Model, IdentityStep) {
  const LtvSystem s = identity_system(1);
  const Vec x = step_true(s, DisturbanceModel::zero(2), V({1, 2}), V({0}), V({0, 0}), 0);
  EXPECT_EQ(x, V({1, 2}));
}

TEST(Model, BatchStepFromOriginIsFirstDisturbanceSample) {
  const Scenario sc = builtin_scenario();
  const Vec x = step_true(sc.sys, sc.dist, V({0, 0}), V({0}), V({0, 0}), 0);
  EXPECT_NEAR(x[0], 0.2478, 1e-12);
  EXPECT_NEAR(x[1], -0.16564, 1e-12);
}

TEST(Model, BatchStepWithoutDisturbance) {
  const Scenario sc = builtin_scenario();
  const Vec x = step_true(sc.sys, DisturbanceModel::zero(2), V({-0.5, 0.5}), V({-0.1}),
                          V({0, 0}), 0);
  EXPECT_NEAR(x[0], -0.2774, 1e-12);
  EXPECT_NEAR(x[1], 0.38712, 1e-12);
  const Vec z = nominal_step(sc.sys, V({-0.5, 0.5}), V({-0.1}), V({0, 0}), 0);
  EXPECT_NEAR(inf_norm(z - x), 0.0, 1e-15);
}

TEST(Model, NominalStepMatchesDenseProduct) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  LtvSystem s = identity_system(1);
  for (int trial = 0; trial < 20; ++trial) {
    Mat A(2, 2), B(2, 1);
    Vec z(2), v(1), d(2);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) A(i, j) = nd(rng);
      B(i, 0) = nd(rng);
      z[i] = nd(rng);
      d[i] = nd(rng);
    }
    v[0] = nd(rng);
    s.A[0] = A;
    s.B[0] = B;
    const Vec got = nominal_step(s, z, v, d, 0);
    for (int i = 0; i < 2; ++i) {
      const double want = A(i, 0) * z[0] + A(i, 1) * z[1] + B(i, 0) * v[0] + d[i];
      EXPECT_NEAR(got[i], want, 1e-14);
    }
  }
}

TEST(Model, AncillaryInput) {
  const Mat K = (Mat(1, 2) << -0.9075, -0.5029).finished();
  EXPECT_EQ(ancillary_input(V({0.2}), K, V({1, 1}), V({1, 1})), V({0.2}));
  EXPECT_EQ(ancillary_input(V({0.2}), Mat::Zero(1, 2), V({3, 1}), V({1, 1})), V({0.2}));
  EXPECT_NEAR(ancillary_input(V({0.2}), K, V({0.1, -0.1}), V({0, 0}))[0], 0.15954, 1e-14);
}

TEST(Model, ConstraintChecks) {
  const ConstraintSet c = ConstraintSet::box(2, 1, 1.75, 0.85);
  const auto ok = check_constraints(c, V({0, 0}), V({0}), false);
  EXPECT_TRUE(ok.ok);
  EXPECT_DOUBLE_EQ(ok.margin, -0.85);
  EXPECT_DOUBLE_EQ(check_constraints(c, V({0, 0}), Vec(), true).margin, -1.75);
  EXPECT_FALSE(check_constraints(c, V({1.76, 0}), V({0}), false).ok);
  EXPECT_FALSE(check_constraints(c, V({0, 0}), V({0.86}), false).ok);
  EXPECT_FALSE(check_constraints(c, V({0, -1.76}), Vec(), true).ok);
}

TEST(Model, NoiseBoundsAndDeterminism) {
  std::mt19937_64 a(42), b(42);
  EXPECT_EQ(sample_noise(a, 0.0, 2), Vec::Zero(2));
  const int n = 100000;
  double sum = 0.0, worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec w = sample_noise(a, 0.06, 2);
    worst = std::max(worst, inf_norm(w));
    sum += w[0];
  }
  EXPECT_LE(worst, 0.06);
  const double sigma = 0.06 / std::sqrt(3.0);
  EXPECT_LE(std::abs(sum / n), 3 * sigma / std::sqrt(double(n)));

  std::mt19937_64 c(7), d(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_noise(c, 0.06, 2), sample_noise(d, 0.06, 2));
  (void)b;
}

TEST(Model, ReferenceIdentityIsConstant) {
  const LtvSystem s = identity_system(5);
  const Trajectory r = build_reference(s, Trajectory(5, V({0})));
  ASSERT_EQ(r.size(), 6u);
  for (const auto& p : r) EXPECT_EQ(p, s.x_bar);
}

TEST(Model, BatchReferenceMatchesTable) {
  const Scenario sc = builtin_scenario();
  const Trajectory r = build_reference(sc.sys, sc.u_bar);
  EXPECT_NEAR(r[1][0], -0.2774, 1e-12);
  EXPECT_NEAR(r[1][1], 0.38712, 1e-12);
  const json table = builtin_doc()["reference"];
  ASSERT_EQ(table.size(), 30u);
  ASSERT_EQ(r.size(), 30u);
  for (std::size_t t = 0; t < r.size(); ++t)
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(r[t][i], table[t][i].get<double>(), 1e-9) << t;
}

TEST(Model, BatchConstants) {
  const Scenario sc = builtin_scenario();
  EXPECT_EQ(sc.sys.num_states(), 30);
  for (int t = 0; t < sc.sys.steps(); ++t) {
    EXPECT_NEAR(induced_inf_norm(sc.sys.closed_loop(t)), 0.5595, 1e-3);
    EXPECT_NEAR(sc.sys.m_bar(t), 0.7595, 1e-3);
  }
  EXPECT_DOUBLE_EQ(sc.sys.w_bar, 0.06);
}

TEST(PolePlacement, BatchPoles) {
  const Scenario sc = builtin_scenario();
  const Mat K0 = place_poles_2x1(sc.sys.A[0], sc.sys.B[0], 0.3, 0.2);
  const Mat cl = sc.sys.A[0] + sc.sys.B[0] * K0;
  // Characteristic polynomial s^2 - 0.5 s + 0.06.
  EXPECT_NEAR(cl.trace(), 0.5, 1e-12);
  EXPECT_NEAR(cl.determinant(), 0.06, 1e-12);
  EXPECT_NEAR((K0 - sc.K0).norm(), 0.0, 1e-12);
}

TEST(PolePlacement, AlreadyPlaced) {
  const Mat A = (Mat(2, 2) << 0.3, 1, 0, 0.2).finished();
  const Mat B = (Mat(2, 1) << 0, 1).finished();
  const Mat K = place_poles_2x1(A, B, 0.3, 0.2);
  EXPECT_LT(K.norm(), 1e-12);
}

TEST(PolePlacement, RandomControllablePairs) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> pole(-0.95, 0.95);
  int tested = 0;
  while (tested < 200) {
    Mat A(2, 2), B(2, 1);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) A(i, j) = nd(rng);
      B(i, 0) = nd(rng);
    }
    Mat C(2, 2);
    C << B, A * B;
    if (std::abs(C.determinant()) < 0.1) continue;
    ++tested;
    const double p1 = pole(rng), p2 = pole(rng);
    const Mat K = place_poles_2x1(A, B, p1, p2);
    Eigen::EigenSolver<Mat> es(A + B * K);
    std::vector<std::complex<double>> got = {es.eigenvalues()[0], es.eigenvalues()[1]};
    std::vector<double> want = {p1, p2};
    std::sort(want.begin(), want.end());
    std::sort(got.begin(), got.end(),
              [](auto a, auto b) { return a.real() < b.real(); });
    for (int i = 0; i < 2; ++i) {
      // A double root is ill conditioned; compare through the polynomial instead.
      if (std::abs(p1 - p2) < 1e-3) break;
      EXPECT_NEAR(got[i].real(), want[i], 1e-8);
      EXPECT_NEAR(got[i].imag(), 0.0, 1e-8);
    }
    const Mat cl = A + B * K;
    EXPECT_NEAR(cl.trace(), p1 + p2, 1e-8);
    EXPECT_NEAR(cl.determinant(), p1 * p2, 1e-8);
  }
}

TEST(PolePlacement, UncontrollablePairThrows) {
  const Mat A = Mat::Identity(2, 2);
  const Mat B = (Mat(2, 1) << 1, 0).finished();
  EXPECT_THROW(place_poles_2x1(A, B, 0.1, 0.2), Error);
}

TEST(Lipschitz, QuadraticExceedsStatedBound) {
  const Scenario sc = builtin_scenario();
  const auto rep = sample_lipschitz(sc.sys, sc.dist, sc.cons, 2000, 1);
  EXPECT_FALSE(rep.ok());
  // 2 alpha x_max / m = 2 * 0.2 / 1.75 / 0.2
  EXPECT_LE(rep.worst_ratio, 2.0 / 1.75 + 1e-9);
  EXPECT_GT(rep.worst_ratio, 1.0);
}

TEST(Lipschitz, AffineVariantWithinBound) {
  const Scenario sc = builtin_affine_scenario();
  EXPECT_TRUE(sc.dist.affine);
  const auto rep = sample_lipschitz(sc.sys, sc.dist, sc.cons, 500, 1);
  EXPECT_TRUE(rep.ok());
  EXPECT_NEAR(rep.worst_ratio, 0.5, 1e-9);
}

TEST(Scenario, ShippedFileEqualsBuiltin) {
  const Scenario a = builtin_scenario();
  const Scenario b = load_scenario(std::string(ILPC_SOURCE_DIR) + "/scenarios/batch_process.json");
  EXPECT_EQ(json::parse(a.source), json::parse(b.source));
  EXPECT_EQ(resolve_scenario("batch_process_affine").name, "batch_process_affine");
}

TEST(Scenario, RejectsMalformedJson) {
  EXPECT_THROW(parse_scenario("{ not json", "x"), ConfigError);
}

TEST(Scenario, MissingKeyNamesIt) {
  json doc = builtin_doc();
  doc.erase("A");
  EXPECT_NE(config_error(doc).find("A"), std::string::npos);
}

TEST(Scenario, WrongClosedLoopNorm) {
  json doc = builtin_doc();
  doc["K_closed_loop_norm"] = 0.6;
  EXPECT_NE(config_error(doc).find("K_closed_loop_norm"), std::string::npos);
}

TEST(Scenario, CorruptReferenceTable) {
  json doc = builtin_doc();
  doc["reference"][7][1] = doc["reference"][7][1].get<double>() + 1e-6;
  EXPECT_NE(config_error(doc).find("reference"), std::string::npos);
}

TEST(Scenario, UnknownDisturbanceType) {
  json doc = builtin_doc();
  doc["disturbance"]["type"] = "cubic";
  EXPECT_NE(config_error(doc).find("disturbance"), std::string::npos);
}

TEST(Scenario, WrongDimensions) {
  json doc = builtin_doc();
  doc["B"] = json::array({json::array({1.0}), json::array({1.0}), json::array({1.0})});
  EXPECT_FALSE(config_error(doc).empty());
  doc = builtin_doc();
  doc["u_bar"].erase(0);
  EXPECT_FALSE(config_error(doc).empty());
}

TEST(Scenario, NonPositiveLipschitz) {
  json doc = builtin_doc();
  doc["lipschitz"] = 0.0;
  EXPECT_FALSE(config_error(doc).empty());
}

TEST(Scenario, MissingFile) {
  EXPECT_THROW(resolve_scenario("/nonexistent/scenario.json"), ConfigError);
}
