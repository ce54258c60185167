#include "charflow/cli.hpp"

#include "charflow/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace charflow::cli {

namespace {

class Report {
 public:
  void note(const std::string& line) { os_ << line << '\n'; }

  void value(const std::string& name, double v) { os_ << "INFO " << name << " = " << csv::format(v) << '\n'; }

  // Pass iff residual <= tol (NaN fails).
  void check(const std::string& name, double residual, double tol) {
    const bool ok = residual <= tol;
    if (!ok) ++failures_;
    os_ << (ok ? "PASS " : "FAIL ") << name << " residual=" << csv::format(residual) << " tol=" << csv::format(tol)
        << '\n';
  }

  void check_flag(const std::string& name, bool ok, const std::string& detail) {
    if (!ok) ++failures_;
    os_ << (ok ? "PASS " : "FAIL ") << name << ' ' << detail << '\n';
  }

  void error(const std::string& what) {
    ++failures_;
    os_ << "ERROR " << what << '\n';
  }

  int failures() const { return failures_; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
  int failures_ = 0;
};

class Outputs {
 public:
  Outputs(std::string prefix, bool enabled) : prefix_(std::move(prefix)), enabled_(enabled) {}

  template <typename Writer>
  void write(const std::string& suffix, Writer&& writer) {
    const std::string path = prefix_ + suffix;
    if (!enabled_) {
      std::ostringstream sink;
      writer(sink);
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file '" + path + "'");
    writer(out);
    files_.push_back(path);
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  std::string prefix_;
  bool enabled_;
  std::vector<std::string> files_;
};

void write_matrix_csv(std::ostream& os, const Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(csv::format(m(i, j)));
    csv::write_row(os, row);
  }
}

Vec uniform(std::mt19937_64& rng, int size, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vec v(size);
  for (auto& x : v) x = d(rng);
  return v;
}

void run_verify(const RunConfig& cfg, const RunOptions& opt, Report& rep) {
  const QuadraticPDE& q = cfg.pde;
  const int n = cfg.n;
  const double ts = opt.tol_scale;
  const Hamiltonian h = quadratic_hamiltonian(q);
  std::mt19937_64 rng(opt.seed);

  // Coincidence on h = 0 and the off-level identity X_h^1 = X_c - h dz.
  double on_level = 0.0, identity = 0.0;
  int constructed = 0;
  for (int i = 0; i < cfg.samples; ++i) {
    const JetPoint p{uniform(rng, n), uniform(rng, n), uniform(rng, 1)(0)};
    identity = std::max(identity, verify_coincidence(h, p).identity);
    for (int attempt = 0; attempt < 20; ++attempt) {
      try {
        const JetPoint on = solve_on_level(h, p.x, p.z, uniform(rng, n, -0.1, 0.1), uniform(rng, n));
        on_level = std::max(on_level, verify_coincidence(h, on).coincidence);
        ++constructed;
        break;
      } catch (const NoRealSolution&) {
      }
    }
  }
  rep.check("contact-identity (X_h1 - X_c + h e_z)", identity, 1e-12 * ts);
  if (constructed > 0) {
    rep.check("coincidence on h=0 (" + std::to_string(constructed) + " points)", on_level, 1e-10 * ts);
  } else {
    rep.note("SKIP coincidence on h=0: no point of the zero level set found along sampled rays");
  }

  // [X_c, X_h^1] with closed-form Jacobians.
  const VectorField xc = quadratic_characteristic_field(q);
  const VectorField xh = quadratic_contact_field(q);
  double bracket = 0.0;
  for (int i = 0; i < cfg.samples; ++i) {
    const JetPoint p{uniform(rng, n), uniform(rng, n), uniform(rng, 1)(0)};
    const auto b = commutator_with_scale(xc, xh, p, BracketScheme::ExactAffine);
    bracket = std::max(bracket, inf_norm(b.bracket.packed()) / std::max(1.0, b.scale));
  }
  rep.check("bracket [X_c, X_h1] (exact-affine, relative)", bracket, 1e-12 * ts);

  // Conservation of h along the contact flow.
  {
    const JetPoint p{uniform(rng, n), uniform(rng, n), 0.0};
    const Trajectory tr = integrate(h, FieldKind::Contact, p, {0.0, 1.0}, cfg.integrator);
    rep.check("conservation of h along X_h1, s in [0,1]", conservation_report(tr).max_drift,
              1e-8 * ts * std::max(1.0, std::abs(tr.h_values.front())));
  }

  // Characteristic plane at a random point.
  {
    const JetPoint p{uniform(rng, n), uniform(rng, n), 0.0};
    try {
      const auto basis = characteristic_plane_basis(h, p);
      const TangentVector X = characteristic_field(h, p);
      const JetGradient g = h.gradient(p);
      double constraint = 0.0, skew = 0.0;
      for (const auto& V : basis) {
        constraint = std::max({constraint, std::abs(contact_form_at(p, V)),
                               std::abs(g.x.dot(V.dx) + g.y.dot(V.dy) + g.z * V.dz)});
        skew = std::max(skew, std::abs(d_contact_form_at(p, X, V)));
      }
      rep.check_flag("characteristic plane dimension", static_cast<int>(basis.size()) == 2 * n - 1,
                     "size=" + std::to_string(basis.size()));
      rep.check("characteristic plane constraints", constraint, 1e-12 * ts);
      rep.check("d(theta)(X_c, P)", skew, 1e-10 * ts);
    } catch (const DegeneratePoint& e) {
      rep.note(std::string("SKIP characteristic plane: ") + e.what());
    }
  }

  // Algebra and group membership.
  const GeneratorU u = to_generator(q);
  rep.check("algebra membership ||U^T Omega + Omega U||", algebra_residual(u), 1e-12 * ts);
  for (double s : {0.5, -0.5, 1.0, -1.0}) {
    const GroupElement g = matrix_exponential(u, s);
    const auto r = odd_symplectic_residual(g);
    const double scale = std::max(1.0, inf_norm(g.matrix) * inf_norm(g.matrix));
    rep.check("exp(" + csv::format(s) + " U) odd-symplectic", r.form, 1e-10 * ts * scale);
    rep.check("exp(" + csv::format(s) + " U) fixes e_z", r.fixed_vec, 1e-14 * ts);
  }

  // Exponential versus RK4 flow of the generator field.
  {
    const Vec w0 = uniform(rng, 2 * n);
    const double coarse = flow_vs_exponential(u, w0, 0.0, 1.0, cfg.integrator);
    IntegratorConfig fine = cfg.integrator;
    fine.step *= 0.5;
    fine.max_steps *= 2;
    const double refined = flow_vs_exponential(u, w0, 0.0, 1.0, fine);
    rep.check("exp-vs-flow at s=1", coarse, 1e-8 * ts);
    if (refined > 1e-11) {
      const double ratio = coarse / refined;
      rep.check_flag("exp-vs-flow fourth-order ratio", ratio >= 12.0 && ratio <= 20.0, "ratio=" + csv::format(ratio));
    } else {
      rep.note("INFO exp-vs-flow exact to roundoff; order ratio not applicable");
    }
  }

  // Commutation dichotomy.
  double density = 0.0;
  for (int i = 0; i < cfg.samples; ++i) density = std::max(density, std::abs(commutator_density(q, uniform(rng, n), uniform(rng, n))));
  const bool cond = commutation_condition(q);
  rep.note(std::string("INFO commutation_condition = ") + (cond ? "true" : "false"));
  rep.value("max |commutator_density|", density);
  if (cond) rep.check("commutator density vanishes", density, 1e-10 * ts);
}

void run_characteristics(const RunConfig& cfg, Report& rep, Outputs& out) {
  const Hamiltonian h = quadratic_hamiltonian(cfg.pde);
  const Trajectory tr = integrate(h, cfg.field, cfg.initial, cfg.s_span, cfg.integrator);
  out.write("_trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, tr); });
  rep.note(std::string("INFO field = ") + to_string(cfg.field));
  rep.value("samples", static_cast<double>(tr.points.size()));
  rep.value("max |h - h(s0)|", conservation_report(tr).max_drift);
}

void run_cauchy(const RunConfig& cfg, const RunOptions& opt, Report& rep, Outputs& out) {
  const Hamiltonian h = quadratic_hamiltonian(cfg.pde);
  const InitialDataManifold m = build_manifold(cfg.gamma, cfg.n);
  StripSolverOptions sopt;
  sopt.tol = cfg.strip_tol;
  const InitialStrip strip = solve_strip(h, m, cfg.level, cfg.p_guess, sopt);
  PropagateOptions popt;
  popt.skip_characteristic = true;
  const SolutionSheet sheet = propagate(h, strip, cfg.s_span, cfg.integrator, popt);
  out.write("_sheet.csv", [&](std::ostream& os) { write_sheet_csv(os, sheet); });

  const SheetResidual res = residual_on_sheet(h, sheet, cfg.level);
  rep.value("strip points", static_cast<double>(strip.points.size()));
  rep.value("skipped characteristic points", static_cast<double>(sheet.skipped.size()));
  rep.check("max |h - level| on sheet", res.max_level_residual, 1e-8 * opt.tol_scale);
  if (res.graph_nodes_checked > 0) {
    rep.value("max graph defect |grad z - y| (interior, pre-fold)", res.max_graph_defect);
  }
  rep.value("fold nodes", static_cast<double>(res.folds.size()));
  constexpr std::size_t kListedFolds = 8;
  for (std::size_t i = 0; i < std::min(res.folds.size(), kListedFolds); ++i) {
    const FoldNode& f = res.folds[i];
    std::ostringstream os;
    os << "INFO fold column=" << f.column << " s=" << csv::format(sheet.s_values[f.s_index]) << " x=(";
    for (Eigen::Index i = 0; i < f.x.size(); ++i) os << (i ? "," : "") << csv::format(f.x(i));
    os << ")";
    rep.note(os.str());
  }
  if (res.folds.size() > kListedFolds)
    rep.note("INFO ... " + std::to_string(res.folds.size() - kListedFolds) + " more fold nodes");
}

void run_algebra(const RunConfig& cfg, const RunOptions& opt, Report& rep, Outputs& out) {
  const QuadraticPDE& q = cfg.pde;
  const GeneratorU u = to_generator(q);
  const Mat U = embed_generator(u);
  out.write("_generator.csv", [&](std::ostream& os) { write_matrix_csv(os, U); });
  rep.check("algebra membership ||U^T Omega + Omega U||", algebra_residual(u), 1e-12 * opt.tol_scale);
  for (std::size_t i = 0; i < cfg.s_list.size(); ++i) {
    const double s = cfg.s_list[i];
    const GroupElement g = matrix_exponential(u, s);
    out.write("_exp_" + std::to_string(i) + ".csv", [&](std::ostream& os) { write_matrix_csv(os, g.matrix); });
    const auto r = odd_symplectic_residual(g);
    const double scale = std::max(1.0, inf_norm(g.matrix) * inf_norm(g.matrix));
    rep.check("exp(" + csv::format(s) + " U) odd-symplectic", r.form, 1e-10 * opt.tol_scale * scale);
    rep.check("exp(" + csv::format(s) + " U) fixes e_z", r.fixed_vec, 1e-14 * opt.tol_scale);
  }
  std::mt19937_64 rng(opt.seed);
  double density = 0.0;
  for (int i = 0; i < cfg.samples; ++i)
    density = std::max(density, std::abs(commutator_density(q, uniform(rng, cfg.n), uniform(rng, cfg.n))));
  rep.note(std::string("INFO commutation_condition = ") + (commutation_condition(q) ? "true" : "false"));
  rep.value("max |commutator_density|", density);
}

void run_eikonal(const RunConfig& cfg, const RunOptions& opt, Report& rep, Outputs& out) {
  const auto rays = trace_rays(cfg.medium, cfg.rays, cfg.s_max, cfg.integrator);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const Ray& ray = rays[i];
    out.write("_ray" + std::to_string(i) + ".csv", [&](std::ostream& os) { write_ray_csv(os, ray); });
    double level = 0.0, exp_res = 0.0;
    for (const RaySegment& seg : ray.segments) {
      const double twoN = 2.0 * cfg.medium.N_values[seg.layer];
      level = std::max(level, std::abs(seg.entry.y.squaredNorm() - twoN));
      exp_res = std::max(exp_res, seg.exp_residual);
    }
    const std::string tag = "ray " + std::to_string(i);
    rep.value(tag + " segments", static_cast<double>(ray.segments.size()));
    rep.check(tag + " |y|^2 = 2N per segment", level, 1e-10 * opt.tol_scale);
    rep.check(tag + " exact flow vs exp(sU)", exp_res, 1e-12 * opt.tol_scale);
  }
}

void run_hj(const RunConfig& cfg, const RunOptions& opt, Report& rep, Outputs& out) {
  const MechanicalHamiltonian H = builtin_mechanical(cfg.mechanical, cfg.n);
  const Trajectory tr = hj_characteristics(H, cfg.q0, cfg.p0, cfg.t_span, cfg.integrator);
  out.write("_hj.csv", [&](std::ostream& os) { write_trajectory_csv(os, tr); });
  rep.value("final action z", tr.points.back().z);
  rep.check("lifted h drift", conservation_report(tr).max_drift, 1e-8 * opt.tol_scale);
}

}  // namespace

RunResult run(const RunConfig& config, const RunOptions& options) {
  Report rep;
  const std::string prefix = !options.out_prefix.empty() ? options.out_prefix
                             : !config.output.empty()    ? config.output
                                                         : std::string("charflow");
  Outputs out(prefix, options.write_files);
  rep.note(std::string("charflow report: task ") + to_string(config.task) + ", n = " + std::to_string(config.n) +
           (config.hamiltonian_name.empty() ? "" : ", hamiltonian " + config.hamiltonian_name));
  try {
    switch (config.task) {
      case Task::Verify: run_verify(config, options, rep); break;
      case Task::Characteristics: run_characteristics(config, rep, out); break;
      case Task::Cauchy: run_cauchy(config, options, rep, out); break;
      case Task::Algebra: run_algebra(config, options, rep, out); break;
      case Task::Eikonal: run_eikonal(config, options, rep, out); break;
      case Task::HamiltonJacobi: run_hj(config, options, rep, out); break;
    }
  } catch (const std::exception& e) {
    rep.error(e.what());
  }
  rep.note("failures: " + std::to_string(rep.failures()));

  RunResult result;
  result.failures = rep.failures();
  result.status = rep.failures() == 0 ? 0 : 1;
  result.report = rep.str();
  try {
    out.write("_report.txt", [&](std::ostream& os) { os << result.report; });
  } catch (const std::exception& e) {
    result.status = 1;
    result.report += std::string("ERROR ") + e.what() + '\n';
  }
  result.files = out.files();
  return result;
}

}  // namespace charflow::cli
