#include "ilpc/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ilpc/loop.hpp"

namespace ilpc {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& key, const std::string& what) {
  throw ConfigError(origin + ": '" + key + "' " + what);
}

const json& need(const json& j, const std::string& key, const std::string& origin) {
  if (!j.contains(key)) fail(origin, key, "is missing");
  return j.at(key);
}

double number(const json& j, const std::string& key, const std::string& origin) {
  if (!j.is_number()) fail(origin, key, "must be a number");
  return j.get<double>();
}

Vec vector_of(const json& j, const std::string& key, const std::string& origin) {
  if (!j.is_array() || j.empty()) fail(origin, key, "must be a non-empty array of numbers");
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = number(j[i], key, origin);
  return v;
}

Mat matrix_of(const json& j, const std::string& key, const std::string& origin) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    fail(origin, key, "must be an array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
      fail(origin, key, "has ragged rows");
    for (int c = 0; c < cols; ++c) m(r, c) = number(j[r][c], key, origin);
  }
  return m;
}

Trajectory vectors_of(const json& j, const std::string& key, const std::string& origin) {
  if (!j.is_array()) fail(origin, key, "must be an array");
  Trajectory out;
  for (const auto& e : j) out.push_back(vector_of(e, key, origin));
  return out;
}

// A matrix shared by every transition, or {"sequence": [...]}.
std::vector<Mat> per_step(const json& j, int steps, const std::string& key,
                          const std::string& origin) {
  if (j.is_object()) {
    const json& seq = need(j, "sequence", origin + "/" + key);
    if (static_cast<int>(seq.size()) != steps)
      fail(origin, key, "sequence needs " + std::to_string(steps) + " entries");
    std::vector<Mat> out;
    for (const auto& m : seq) out.push_back(matrix_of(m, key, origin));
    return out;
  }
  return std::vector<Mat>(steps, matrix_of(j, key, origin));
}

std::vector<double> per_step_scalar(const json& j, int steps, const std::string& key,
                                    const std::string& origin) {
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != steps)
      fail(origin, key, "needs " + std::to_string(steps) + " entries");
    std::vector<double> out;
    for (const auto& e : j) out.push_back(number(e, key, origin));
    return out;
  }
  return std::vector<double>(steps, number(j, key, origin));
}

ConstraintSet constraints_of(const json& j, int nx, int nu, const std::string& origin) {
  if (j.contains("x_max"))
    return ConstraintSet::box(nx, nu, number(j.at("x_max"), "x_max", origin),
                              number(need(j, "u_max", origin), "u_max", origin));
  ConstraintSet c;
  c.Hx = matrix_of(need(j, "Hx", origin), "Hx", origin);
  c.Hu = matrix_of(need(j, "Hu", origin), "Hu", origin);
  c.h = vector_of(need(j, "h", origin), "h", origin);
  c.HxT = matrix_of(need(j, "HxT", origin), "HxT", origin);
  c.hT = vector_of(need(j, "hT", origin), "hT", origin);
  return c;
}

DisturbanceModel disturbance_of(const json& j, int steps, int nx, const std::string& origin) {
  const std::string type = need(j, "type", origin).get<std::string>();
  if (type == "zero") return DisturbanceModel::zero(nx);
  Trajectory offset = vectors_of(need(j, "offset", origin), "offset", origin);
  if (static_cast<int>(offset.size()) != steps)
    fail(origin, "offset", "needs " + std::to_string(steps) + " entries");
  for (const auto& d : offset)
    if (d.size() != nx) fail(origin, "offset", "entries must have the state dimension");
  if (type == "quadratic")
    return DisturbanceModel::quadratic(number(need(j, "curvature", origin), "curvature", origin),
                                       std::move(offset));
  if (type == "affine")
    return DisturbanceModel::make_affine(per_step(need(j, "D", origin), steps, "D", origin),
                                         std::move(offset));
  fail(origin, "disturbance.type", "must be quadratic, affine or zero");
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(origin + ": top level must be an object");

  try {
    Scenario sc;
    sc.name = doc.value("name", std::string("unnamed"));
    const int states = need(doc, "states", origin).get<int>();
    if (states < 2) fail(origin, "states", "must be at least 2");
    const int N = states - 1;

    auto& sys = sc.sys;
    sys.A = per_step(need(doc, "A", origin), N, "A", origin);
    sys.B = per_step(need(doc, "B", origin), N, "B", origin);
    sys.K = per_step(need(doc, "K", origin), N, "K", origin);
    sys.m = per_step_scalar(need(doc, "lipschitz", origin), N, "lipschitz", origin);
    sys.w_bar = number(need(doc, "w_bar", origin), "w_bar", origin);
    sys.r0 = number(need(doc, "r0", origin), "r0", origin);
    sys.x_bar = vector_of(need(doc, "x_bar", origin), "x_bar", origin);
    sys.validate();
    const int nx = sys.nx(), nu = sys.nu();

    sc.cons = constraints_of(need(doc, "constraints", origin), nx, nu, origin);
    sc.dist = disturbance_of(need(doc, "disturbance", origin), N, nx, origin);
    sc.u_bar = vectors_of(need(doc, "u_bar", origin), "u_bar", origin);
    if (static_cast<int>(sc.u_bar.size()) != N)
      fail(origin, "u_bar", "needs " + std::to_string(N) + " entries");
    sc.reference = build_reference(sys, sc.u_bar);
    if (doc.contains("reference")) {
      const Trajectory table = vectors_of(doc.at("reference"), "reference", origin);
      if (table.size() != sc.reference.size())
        fail(origin, "reference", "needs " + std::to_string(states) + " entries");
      for (std::size_t t = 0; t < table.size(); ++t) {
        if (table[t].size() != nx || inf_norm(table[t] - sc.reference[t]) > 1e-9) {
          std::ostringstream os;
          os << "disagrees with the reference generated from u_bar at t=" << t;
          fail(origin, "reference", os.str());
        }
      }
    }

    if (doc.contains("K_closed_loop_norm")) {
      const double want = number(doc.at("K_closed_loop_norm"), "K_closed_loop_norm", origin);
      for (int t = 0; t < N; ++t) {
        const double got = induced_inf_norm(sys.closed_loop(t));
        if (std::abs(got - want) > 1e-3) {
          std::ostringstream os;
          os << "is " << want << " but ||A+BK|| = " << got << " at t=" << t;
          fail(origin, "K_closed_loop_norm", os.str());
        }
      }
    }

    sc.Q = matrix_of(need(doc, "Q", origin), "Q", origin);
    sc.P = matrix_of(need(doc, "P", origin), "P", origin);
    sc.c1 = number(need(doc, "c1", origin), "c1", origin);

    const json& ig = need(doc, "initial_gain", origin);
    if (ig.contains("K0")) {
      sc.K0 = matrix_of(ig.at("K0"), "K0", origin);
    } else {
      const Vec poles = vector_of(need(ig, "poles", origin), "poles", origin);
      if (poles.size() != 2) fail(origin, "poles", "needs two entries");
      sc.K0 = place_poles_2x1(sys.A[0], sys.B[0], poles[0], poles[1]);
    }
    sc.saturate_initial_law = ig.value("saturate", true);

    sc.seed = doc.value("seed", std::uint64_t{1});
    sc.iterations = doc.value("iterations", 49);
    sc.source = doc.dump();
    sc.validate();
    return sc;
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

Scenario builtin_scenario() { return parse_scenario(builtin_scenario_json(), "batch_process"); }

Scenario builtin_affine_scenario() {
  return parse_scenario(builtin_affine_scenario_json(), "batch_process_affine");
}

Scenario resolve_scenario(const std::string& name_or_path) {
  if (name_or_path == "batch_process") return builtin_scenario();
  if (name_or_path == "batch_process_affine") return builtin_affine_scenario();
  return load_scenario(name_or_path);
}

}  // namespace ilpc
