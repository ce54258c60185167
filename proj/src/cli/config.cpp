#include "charflow/cli.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace charflow::cli {

namespace {

std::string where(const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.line < 0) return "";
  return " (line " + std::to_string(mark.line + 1) + ")";
}

YAML::Node require(const YAML::Node& parent, const std::string& key, const std::string& why) {
  const YAML::Node node = parent[key];
  if (!node) throw ConfigError("missing key '" + key + "'" + (why.empty() ? "" : " required " + why));
  return node;
}

double as_double(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError("key '" + key + "' must be a number" + where(node));
  }
}

int as_int(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<int>();
  } catch (const YAML::Exception&) {
    throw ConfigError("key '" + key + "' must be an integer" + where(node));
  }
}

std::vector<double> as_list(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ConfigError("key '" + key + "' must be a list of numbers" + where(node));
  std::vector<double> out;
  for (const auto& item : node) out.push_back(as_double(item, key));
  return out;
}

Vec as_vec(const YAML::Node& node, const std::string& key, int expected) {
  const auto list = as_list(node, key);
  if (expected >= 0 && static_cast<int>(list.size()) != expected)
    throw ConfigError("key '" + key + "' must have " + std::to_string(expected) + " entries, got " +
                      std::to_string(list.size()) + where(node));
  return Eigen::Map<const Vec>(list.data(), static_cast<Eigen::Index>(list.size()));
}

Mat as_matrix(const YAML::Node& node, const std::string& key, int n) {
  const auto list = as_list(node, key);
  if (static_cast<int>(list.size()) != n * n)
    throw ConfigError("matrix '" + key + "' must have n*n = " + std::to_string(n * n) + " row-major entries, got " +
                      std::to_string(list.size()) + where(node));
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = list[i * n + j];
  return m;
}

SSpan as_span(const YAML::Node& node, const std::string& key) {
  const auto list = as_list(node, key);
  if (list.size() != 2) throw ConfigError("key '" + key + "' must be a pair [start, end]" + where(node));
  if (!(list[1] >= list[0])) throw ConfigError("key '" + key + "' must satisfy end >= start" + where(node));
  return {list[0], list[1]};
}

Task parse_task(const std::string& s) {
  if (s == "verify") return Task::Verify;
  if (s == "characteristics") return Task::Characteristics;
  if (s == "cauchy") return Task::Cauchy;
  if (s == "algebra") return Task::Algebra;
  if (s == "eikonal") return Task::Eikonal;
  if (s == "hj") return Task::HamiltonJacobi;
  throw ConfigError("unknown task '" + s + "' (expected verify, characteristics, cauchy, algebra, eikonal or hj)");
}

void parse_hamiltonian(const YAML::Node& node, RunConfig& cfg) {
  const int n = cfg.n;
  QuadraticPDE q = QuadraticPDE::zeros(n);
  if (const auto b = node["builtin"]) {
    const std::string name = b.as<std::string>();
    cfg.hamiltonian_name = name;
    if (name == "eikonal") {
      q.c = 0.5 * Mat::Identity(n, n);
      q.h0 = node["N"] ? as_double(node["N"], "N") : 0.5;
      if (!(q.h0 > 0.0)) throw ConfigError("eikonal N must be positive");
    } else if (name == "oscillator") {
      q.a = 0.5 * Mat::Identity(n, n);
      q.c = 0.5 * Mat::Identity(n, n);
      q.h0 = node["E"] ? as_double(node["E"], "E") : 0.5;
    } else if (name == "transport") {
      q.e = as_vec(require(node, "velocity", "for builtin transport"), "velocity", n);
      q.h0 = node["h0"] ? as_double(node["h0"], "h0") : 0.0;
    } else {
      throw ConfigError("unknown builtin Hamiltonian '" + name + "' (expected eikonal, oscillator or transport)");
    }
  } else {
    cfg.hamiltonian_name = "quadratic";
    bool any = false;
    if (node["a"]) q.a = as_matrix(node["a"], "a", n), any = true;
    if (node["b"]) q.b = as_matrix(node["b"], "b", n), any = true;
    if (node["c"]) q.c = as_matrix(node["c"], "c", n), any = true;
    if (node["e"]) q.e = as_vec(node["e"], "e", n), any = true;
    if (node["f"]) q.f = as_vec(node["f"], "f", n), any = true;
    if (node["h0"]) q.h0 = as_double(node["h0"], "h0"), any = true;
    if (!any) throw ConfigError("hamiltonian needs either 'builtin' or at least one of a, b, c, e, f, h0");
  }
  try {
    q.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("hamiltonian: ") + e.what());
  }
  cfg.pde = std::move(q);
}

CurveSpec parse_gamma(const YAML::Node& node, int n) {
  CurveSpec g;
  const std::string kind = require(node, "kind", "in 'gamma'").as<std::string>();
  auto parse_lambda = [&g, &node](bool need) {
    if (const auto l = node["lambda"]) {
      g.lambda_start = as_double(require(l, "start", "in 'gamma.lambda'"), "start");
      g.lambda_stop = as_double(require(l, "stop", "in 'gamma.lambda'"), "stop");
      g.lambda_count = as_int(require(l, "count", "in 'gamma.lambda'"), "count");
    } else if (need) {
      throw ConfigError("missing key 'lambda' required in 'gamma'");
    }
    if (g.lambda_count < 1) throw ConfigError("gamma.lambda.count must be >= 1");
  };
  if (kind == "point") {
    if (n != 1) throw ConfigError("gamma kind 'point' needs n = 1");
    g.kind = CurveSpec::Kind::Point;
    g.points.push_back(as_vec(require(node, "x", "in 'gamma'"), "x", 1));
    g.phi_values.push_back(as_double(require(node, "phi", "in 'gamma'"), "phi"));
  } else if (kind == "polynomial") {
    if (n != 2) throw ConfigError("gamma kind 'polynomial' needs n = 2");
    g.kind = CurveSpec::Kind::Polynomial;
    const auto xs = require(node, "x", "in 'gamma'");
    if (!xs.IsSequence() || static_cast<int>(xs.size()) != n)
      throw ConfigError("gamma.x must hold one coefficient list per coordinate" + where(xs));
    for (const auto& c : xs) g.x_coeffs.push_back(as_list(c, "gamma.x"));
    g.phi_coeffs = as_list(require(node, "phi", "in 'gamma'"), "phi");
    parse_lambda(true);
  } else if (kind == "circle") {
    if (n != 2) throw ConfigError("gamma kind 'circle' needs n = 2");
    g.kind = CurveSpec::Kind::Circle;
    g.center = node["center"] ? as_vec(node["center"], "center", 2) : Vec(Vec::Zero(2));
    g.radius = as_double(require(node, "radius", "in 'gamma'"), "radius");
    if (!(g.radius > 0.0)) throw ConfigError("gamma.radius must be positive");
    g.phi_constant = node["phi"] ? as_double(node["phi"], "phi") : 0.0;
    g.lambda_count = as_int(require(node, "count", "in 'gamma'"), "count");
    if (g.lambda_count < 3) throw ConfigError("gamma.count must be >= 3 for a circle");
  } else if (kind == "grid") {
    if (n != 2) throw ConfigError("gamma kind 'grid' needs n = 2");
    g.kind = CurveSpec::Kind::Grid;
    const auto pts = require(node, "points", "in 'gamma'");
    if (!pts.IsSequence() || pts.size() < 2) throw ConfigError("gamma.points needs at least two points");
    for (const auto& p : pts) g.points.push_back(as_vec(p, "gamma.points", 2));
    g.phi_values = as_list(require(node, "phi", "in 'gamma'"), "phi");
    if (g.phi_values.size() != g.points.size()) throw ConfigError("gamma.phi must have one value per grid point");
  } else {
    throw ConfigError("unknown gamma kind '" + kind + "' (expected point, polynomial, circle or grid)");
  }
  return g;
}

}  // namespace

const char* to_string(Task t) {
  switch (t) {
    case Task::Verify: return "verify";
    case Task::Characteristics: return "characteristics";
    case Task::Cauchy: return "cauchy";
    case Task::Algebra: return "algebra";
    case Task::Eikonal: return "eikonal";
    case Task::HamiltonJacobi: return "hj";
  }
  return "unknown";
}

namespace {

RunConfig parse_root(const YAML::Node& root);

}  // namespace

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("parse error at line " + std::to_string(e.mark.line + 1) + ", column " +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping of keys to values");
  try {
    return parse_root(root);
  } catch (const YAML::Exception& e) {
    throw ConfigError("invalid value at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

namespace {

RunConfig parse_root(const YAML::Node& root) {
  RunConfig cfg;
  cfg.task = parse_task(require(root, "task", "").as<std::string>());
  const std::string task_name = std::string("for task ") + to_string(cfg.task);
  cfg.n = as_int(require(root, "n", ""), "n");
  if (cfg.n < 1) throw ConfigError("key 'n' must be >= 1");
  if (root["output"]) cfg.output = root["output"].as<std::string>();

  const bool needs_step = cfg.task == Task::Characteristics || cfg.task == Task::Cauchy ||
                          cfg.task == Task::HamiltonJacobi;
  if (root["step"]) {
    cfg.integrator.step = as_double(root["step"], "step");
  } else if (needs_step) {
    throw ConfigError("missing key 'step' required " + task_name);
  }
  if (root["max_steps"]) cfg.integrator.max_steps = as_int(root["max_steps"], "max_steps");
  try {
    cfg.integrator.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  const bool needs_h = cfg.task == Task::Verify || cfg.task == Task::Characteristics ||
                       cfg.task == Task::Cauchy || cfg.task == Task::Algebra;
  if (root["hamiltonian"]) {
    parse_hamiltonian(root["hamiltonian"], cfg);
  } else if (needs_h) {
    throw ConfigError("missing key 'hamiltonian' required " + task_name);
  }

  switch (cfg.task) {
    case Task::Verify:
      if (root["samples"]) cfg.samples = as_int(root["samples"], "samples");
      if (cfg.samples < 1) throw ConfigError("key 'samples' must be >= 1");
      break;
    case Task::Characteristics: {
      const auto init = require(root, "initial", task_name);
      cfg.initial.x = as_vec(require(init, "x", "in 'initial'"), "initial.x", cfg.n);
      cfg.initial.y = as_vec(require(init, "y", "in 'initial'"), "initial.y", cfg.n);
      cfg.initial.z = init["z"] ? as_double(init["z"], "initial.z") : 0.0;
      cfg.s_span = as_span(require(root, "s_span", task_name), "s_span");
      if (root["field"]) {
        const std::string f = root["field"].as<std::string>();
        if (f == "characteristic") cfg.field = FieldKind::Characteristic;
        else if (f == "contact") cfg.field = FieldKind::Contact;
        else if (f == "lifted") cfg.field = FieldKind::Lifted;
        else throw ConfigError("unknown field '" + f + "' (expected characteristic, contact or lifted)");
      }
      break;
    }
    case Task::Cauchy:
      cfg.gamma = parse_gamma(require(root, "gamma", task_name), cfg.n);
      cfg.level = root["level"] ? as_double(root["level"], "level") : 0.0;
      cfg.p_guess = as_vec(require(root, "p_guess", task_name), "p_guess", cfg.n);
      cfg.s_span = as_span(require(root, "s_span", task_name), "s_span");
      if (root["strip_tol"]) cfg.strip_tol = as_double(root["strip_tol"], "strip_tol");
      break;
    case Task::Algebra:
      cfg.s_list = root["s"] ? as_list(root["s"], "s") : std::vector<double>{0.5, -0.5, 2.0, -2.0};
      if (root["samples"]) cfg.samples = as_int(root["samples"], "samples");
      break;
    case Task::Eikonal: {
      const auto med = require(root, "medium", task_name);
      cfg.medium.n = cfg.n;
      cfg.medium.axis = med["axis"] ? as_int(med["axis"], "medium.axis") : cfg.n - 1;
      cfg.medium.interfaces = med["interfaces"] ? as_list(med["interfaces"], "medium.interfaces") : std::vector<double>{};
      cfg.medium.N_values = as_list(require(med, "N", "in 'medium'"), "medium.N");
      try {
        cfg.medium.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("medium: ") + e.what());
      }
      const auto rays = require(root, "rays", task_name);
      if (!rays.IsSequence() || rays.size() == 0) throw ConfigError("key 'rays' must be a non-empty list");
      for (const auto& r : rays)
        cfg.rays.push_back({as_vec(require(r, "x", "in each ray"), "rays.x", cfg.n),
                            as_vec(require(r, "y", "in each ray"), "rays.y", cfg.n)});
      cfg.s_max = as_double(require(root, "s_max", task_name), "s_max");
      if (!(cfg.s_max >= 0.0)) throw ConfigError("key 's_max' must be >= 0");
      break;
    }
    case Task::HamiltonJacobi:
      cfg.mechanical = require(root, "mechanical", task_name).as<std::string>();
      if (cfg.mechanical != "oscillator" && cfg.mechanical != "free")
        throw ConfigError("unknown mechanical system '" + cfg.mechanical + "' (expected oscillator or free)");
      cfg.q0 = as_vec(require(root, "q0", task_name), "q0", cfg.n);
      cfg.p0 = as_vec(require(root, "p0", task_name), "p0", cfg.n);
      cfg.t_span = as_span(require(root, "t_span", task_name), "t_span");
      break;
  }
  return cfg;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

double poly(const std::vector<double>& c, double t) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
  return acc;
}

double dpoly(const std::vector<double>& c, double t) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) acc = acc * t + static_cast<double>(k) * c[k];
  return acc;
}

}  // namespace

InitialDataManifold build_manifold(const CurveSpec& curve, int n) {
  InitialDataManifold m;
  m.n = n;
  switch (curve.kind) {
    case CurveSpec::Kind::Point: {
      const Vec x = curve.points.at(0);
      const double phi = curve.phi_values.at(0);
      m.lambda_grid = {Vec(0)};
      m.x_gamma = [x](const Vec&) { return x; };
      m.tangent = [](const Vec&) { return Mat(1, 0); };
      m.phi = [phi](const Vec&) { return phi; };
      m.dphi = [](const Vec&) { return Vec(0); };
      break;
    }
    case CurveSpec::Kind::Polynomial: {
      for (int i = 0; i < curve.lambda_count; ++i) {
        const double t = curve.lambda_count == 1 ? curve.lambda_start
                                                : curve.lambda_start + (curve.lambda_stop - curve.lambda_start) * i /
                                                                          (curve.lambda_count - 1);
        m.lambda_grid.push_back(Vec::Constant(1, t));
      }
      const auto xc = curve.x_coeffs;
      const auto pc = curve.phi_coeffs;
      m.x_gamma = [xc](const Vec& l) { return Vec((Vec(2) << poly(xc[0], l(0)), poly(xc[1], l(0))).finished()); };
      m.tangent = [xc](const Vec& l) { return Mat((Mat(2, 1) << dpoly(xc[0], l(0)), dpoly(xc[1], l(0))).finished()); };
      m.phi = [pc](const Vec& l) { return poly(pc, l(0)); };
      m.dphi = [pc](const Vec& l) { return Vec::Constant(1, dpoly(pc, l(0))); };
      break;
    }
    case CurveSpec::Kind::Circle: {
      for (int i = 0; i < curve.lambda_count; ++i)
        m.lambda_grid.push_back(Vec::Constant(1, 2.0 * std::numbers::pi * i / curve.lambda_count));
      const Vec c = curve.center;
      const double r = curve.radius;
      const double phi = curve.phi_constant;
      m.x_gamma = [c, r](const Vec& l) { return Vec(c + r * (Vec(2) << std::cos(l(0)), std::sin(l(0))).finished()); };
      m.tangent = [r](const Vec& l) { return Mat(r * (Mat(2, 1) << -std::sin(l(0)), std::cos(l(0))).finished()); };
      m.phi = [phi](const Vec&) { return phi; };
      m.dphi = [](const Vec&) { return Vec(Vec::Zero(1)); };
      break;
    }
    case CurveSpec::Kind::Grid: {
      const auto pts = curve.points;
      const auto vals = curve.phi_values;
      const auto last = static_cast<long>(pts.size()) - 1;
      for (long i = 0; i <= last; ++i) m.lambda_grid.push_back(Vec::Constant(1, static_cast<double>(i)));
      auto index = [last](const Vec& l) { return std::clamp(std::lround(l(0)), 0L, last); };
      // Central differences in the grid index, one-sided at the ends.
      auto span = [last](long i) { return std::pair<long, long>{std::max(i - 1, 0L), std::min(i + 1, last)}; };
      m.x_gamma = [pts, index](const Vec& l) { return pts[index(l)]; };
      m.tangent = [pts, index, span](const Vec& l) {
        const auto [lo, hi] = span(index(l));
        return Mat((pts[hi] - pts[lo]) / static_cast<double>(hi - lo));
      };
      m.phi = [vals, index](const Vec& l) { return vals[index(l)]; };
      m.dphi = [vals, index, span](const Vec& l) {
        const auto [lo, hi] = span(index(l));
        return Vec::Constant(1, (vals[hi] - vals[lo]) / static_cast<double>(hi - lo));
      };
      break;
    }
  }
  return m;
}

MechanicalHamiltonian builtin_mechanical(const std::string& name, int n_q) {
  if (name == "oscillator") {
    return MechanicalHamiltonian(
        n_q, [](const Vec& q, const Vec& p, double) { return 0.5 * (p.squaredNorm() + q.squaredNorm()); },
        [](const Vec& q, const Vec& p, double) { return MechanicalHamiltonian::Partials{q, p, 0.0}; });
  }
  if (name == "free") {
    return MechanicalHamiltonian(
        n_q, [](const Vec&, const Vec& p, double) { return 0.5 * p.squaredNorm(); },
        [](const Vec& q, const Vec& p, double) {
          return MechanicalHamiltonian::Partials{Vec(Vec::Zero(q.size())), p, 0.0};
        });
  }
  throw InvalidArgument("unknown mechanical system '" + name + "'");
}

}  // namespace charflow::cli
