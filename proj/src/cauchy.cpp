#include "charflow/cauchy.hpp"

#include "charflow/csv.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace charflow {

namespace {

std::string describe(const Vec& lambda) {
  std::ostringstream os;
  os << "lambda = (";
  for (Eigen::Index i = 0; i < lambda.size(); ++i) os << (i ? ", " : "") << lambda(i);
  os << ")";
  return os.str();
}

}  // namespace

void InitialDataManifold::validate() const {
  if (n < 1) throw InvalidArgument("initial data manifold needs n >= 1");
  if (!x_gamma || !phi) throw InvalidArgument("initial data manifold needs x_gamma and phi callbacks");
  if (lambda_grid.empty()) throw InvalidArgument("initial data manifold has an empty lambda grid");
  for (const Vec& l : lambda_grid)
    if (l.size() != n - 1) throw InvalidArgument("lambda grid points must have n-1 coordinates");
}

Mat InitialDataManifold::tangent_at(const Vec& lambda) const {
  if (tangent) return tangent(lambda);
  Mat T(n, n - 1);
  Vec l = lambda;
  for (int j = 0; j < n - 1; ++j) {
    const double eps = fd_step(lambda(j));
    l(j) = lambda(j) + eps;
    const Vec xp = x_gamma(l);
    l(j) = lambda(j) - eps;
    const Vec xm = x_gamma(l);
    l(j) = lambda(j);
    T.col(j) = (xp - xm) / (2 * eps);
  }
  return T;
}

Vec InitialDataManifold::dphi_at(const Vec& lambda) const {
  if (dphi) return dphi(lambda);
  Vec d(n - 1);
  Vec l = lambda;
  for (int j = 0; j < n - 1; ++j) {
    const double eps = fd_step(lambda(j));
    l(j) = lambda(j) + eps;
    const double fp = phi(l);
    l(j) = lambda(j) - eps;
    const double fm = phi(l);
    l(j) = lambda(j);
    d(j) = (fp - fm) / (2 * eps);
  }
  return d;
}

InitialStrip solve_strip(const Hamiltonian& h, const InitialDataManifold& m, double level, const Vec& p_guess,
                         const StripSolverOptions& opts) {
  m.validate();
  const int n = m.n;
  if (h.n() != n) throw InvalidArgument("Hamiltonian and initial data have different dimensions");
  if (p_guess.size() != n || !p_guess.allFinite()) throw InvalidArgument("p_guess must be a finite n-vector");

  InitialStrip strip{n, level, {}};
  strip.points.reserve(m.lambda_grid.size());
  Vec p = p_guess;

  for (const Vec& lambda : m.lambda_grid) {
    const Vec x0 = m.x_gamma(lambda);
    const double z0 = m.phi(lambda);
    const Mat T = m.tangent_at(lambda);
    const Vec dphi = m.dphi_at(lambda);
    if (x0.size() != n || T.rows() != n || T.cols() != n - 1)
      throw InvalidArgument("x_gamma / tangent callbacks return wrong shapes at " + describe(lambda));
    if (n > 1 && Eigen::FullPivLU<Mat>(T).rank() < n - 1)
      throw DegeneratePoint("gamma is not immersed (dependent tangents) at " + describe(lambda));

    auto residual = [&](const Vec& q) {
      Vec F(n);
      F(0) = h.value({x0, q, z0}) - level;
      if (n > 1) F.tail(n - 1) = T.transpose() * q - dphi;
      return F;
    };

    Vec F = residual(p);
    double fnorm = F.norm();
    int iter = 0;
    for (; iter < opts.max_iter && fnorm > opts.tol; ++iter) {
      Mat J(n, n);
      J.row(0) = h.gradient({x0, p, z0}).y.transpose();
      if (n > 1) J.bottomRows(n - 1) = T.transpose();
      Eigen::ColPivHouseholderQR<Mat> qr(J);
      qr.setThreshold(1e-13);
      if (qr.rank() < n)
        throw NoRealSolution("strip equations have no real solution near the guess at " + describe(lambda) +
                             ": Newton reached a singular Jacobian with residual " + std::to_string(fnorm));
      const Vec delta = qr.solve(-F);

      double alpha = 1.0;
      bool decreased = false;
      for (int k = 0; k <= opts.max_halvings; ++k, alpha *= 0.5) {
        const Vec trial = p + alpha * delta;
        const Vec Ft = residual(trial);
        if (Ft.allFinite() && Ft.norm() < fnorm) {
          p = trial;
          F = Ft;
          fnorm = Ft.norm();
          decreased = true;
          break;
        }
      }
      if (!decreased)
        throw NoRealSolution("strip equations have no real solution near the guess at " + describe(lambda) +
                             ": residual stalls at " + std::to_string(fnorm));
    }
    if (fnorm > opts.tol)
      throw NonConvergence("strip Newton did not converge in " + std::to_string(opts.max_iter) +
                           " iterations at " + describe(lambda) + " (residual " + std::to_string(fnorm) + ")");

    strip.points.push_back({lambda, x0, z0, p, T, fnorm});
  }
  return strip;
}

std::vector<bool> is_noncharacteristic(const Hamiltonian& h, const InitialStrip& strip, double tol) {
  const int n = strip.n;
  std::vector<bool> out;
  out.reserve(strip.points.size());
  for (const StripPoint& sp : strip.points) {
    Mat M(n, n);
    if (n > 1) M.leftCols(n - 1) = sp.tangent;
    M.col(n - 1) = characteristic_field(h, {sp.x0, sp.p0, sp.z0}).dx;
    double scale = 1.0;
    for (int j = 0; j < n; ++j) scale *= M.col(j).norm();
    out.push_back(scale > 0.0 && std::abs(M.determinant()) > tol * scale);
  }
  return out;
}

namespace {

struct ColumnPlan {
  std::vector<std::size_t> indices;
  std::vector<std::size_t> skipped;
};

ColumnPlan plan_columns(const Hamiltonian& h, const InitialStrip& strip, const PropagateOptions& opts) {
  const auto ok = is_noncharacteristic(h, strip, opts.noncharacteristic_tol);
  ColumnPlan plan;
  for (std::size_t i = 0; i < ok.size(); ++i) {
    if (ok[i]) {
      plan.indices.push_back(i);
    } else if (opts.skip_characteristic) {
      plan.skipped.push_back(i);
    } else {
      throw DegeneratePoint("initial strip is characteristic at " + describe(strip.points[i].lambda));
    }
  }
  return plan;
}

std::vector<SheetNode> propagate_column(const Hamiltonian& h, const StripPoint& sp, SSpan s_span,
                                        const IntegratorConfig& cfg) {
  const Trajectory tr = integrate(h, FieldKind::Characteristic, {sp.x0, sp.p0, sp.z0}, s_span, cfg);
  std::vector<SheetNode> col;
  col.reserve(tr.points.size());
  for (std::size_t k = 0; k < tr.points.size(); ++k)
    col.push_back({tr.points[k].x, tr.points[k].y, tr.points[k].z, tr.h_values[k]});
  return col;
}

SolutionSheet empty_sheet(const InitialStrip& strip, SSpan s_span, const IntegratorConfig& cfg,
                          const ColumnPlan& plan) {
  SolutionSheet sheet;
  sheet.n = strip.n;
  sheet.strip_index = plan.indices;
  sheet.skipped = plan.skipped;
  for (std::size_t i : plan.indices) sheet.lambdas.push_back(strip.points[i].lambda);
  // s grid shared by every column; same stepping rule as the integrator.
  sheet.s_values = rk4_integrate([](const Vec& v) { return Vec(Vec::Zero(v.size())); }, Vec::Zero(1), s_span, cfg).s;
  sheet.columns.resize(plan.indices.size());
  return sheet;
}

}  // namespace

SolutionSheet propagate_serial(const Hamiltonian& h, const InitialStrip& strip, SSpan s_span,
                               const IntegratorConfig& cfg, const PropagateOptions& opts) {
  const ColumnPlan plan = plan_columns(h, strip, opts);
  SolutionSheet sheet = empty_sheet(strip, s_span, cfg, plan);
  for (std::size_t c = 0; c < plan.indices.size(); ++c)
    sheet.columns[c] = propagate_column(h, strip.points[plan.indices[c]], s_span, cfg);
  return sheet;
}

SolutionSheet propagate(const Hamiltonian& h, const InitialStrip& strip, SSpan s_span, const IntegratorConfig& cfg,
                        const PropagateOptions& opts) {
  const ColumnPlan plan = plan_columns(h, strip, opts);
  SolutionSheet sheet = empty_sheet(strip, s_span, cfg, plan);
  const auto count = static_cast<long>(plan.indices.size());
  std::vector<std::exception_ptr> errors(plan.indices.size());

#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < count; ++c) {
    try {
      sheet.columns[c] = propagate_column(h, strip.points[plan.indices[c]], s_span, cfg);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return sheet;
}

namespace {

// Nearest 2(n-1) lambda neighbours of each column, ties broken by index.
std::vector<std::vector<std::size_t>> lambda_neighbours(const SolutionSheet& sheet) {
  const std::size_t cols = sheet.lambdas.size();
  const std::size_t want = std::min<std::size_t>(2 * static_cast<std::size_t>(sheet.n - 1), cols ? cols - 1 : 0);
  std::vector<std::vector<std::size_t>> out(cols);
  for (std::size_t i = 0; i < cols; ++i) {
    std::vector<std::size_t> idx(cols);
    std::iota(idx.begin(), idx.end(), 0);
    idx.erase(idx.begin() + static_cast<long>(i));
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return (sheet.lambdas[a] - sheet.lambdas[i]).squaredNorm() < (sheet.lambdas[b] - sheet.lambdas[i]).squaredNorm();
    });
    idx.resize(want);
    out[i] = std::move(idx);
  }
  return out;
}

bool balanced(const SolutionSheet& sheet, std::size_t col, const std::vector<std::size_t>& nb) {
  if (nb.empty()) return true;
  Vec sum = Vec::Zero(sheet.n - 1);
  double mean = 0.0;
  for (std::size_t j : nb) {
    const Vec d = sheet.lambdas[j] - sheet.lambdas[col];
    sum += d;
    mean += d.norm();
  }
  mean /= static_cast<double>(nb.size());
  return sum.norm() <= 1e-6 * mean;
}

}  // namespace

SheetResidual residual_on_sheet(const Hamiltonian& h, const SolutionSheet& sheet, double level) {
  const int n = sheet.n;
  const std::size_t cols = sheet.columns.size();
  const std::size_t ns = sheet.s_values.size();
  SheetResidual res;
  res.first_fold.assign(cols, -1);

  for (const auto& col : sheet.columns)
    for (const SheetNode& node : col)
      res.max_level_residual = std::max(res.max_level_residual, std::abs(h.value({node.x, node.y, node.z}) - level));

  const auto nbrs = lambda_neighbours(sheet);

  // det[dx/ds | dx/dlambda] at every node; dx/ds is the X_c projection, dx/dlambda
  // a least-squares fit over the lambda neighbours at the same s.
  std::vector<std::vector<double>> det(cols, std::vector<double>(ns, std::numeric_limits<double>::quiet_NaN()));
  std::vector<std::vector<double>> scale(cols, std::vector<double>(ns, 0.0));
  for (std::size_t c = 0; c < cols; ++c) {
    const auto& nb = nbrs[c];
    if (n > 1 && nb.size() < static_cast<std::size_t>(n - 1)) continue;
    for (std::size_t k = 0; k < ns; ++k) {
      const SheetNode& node = sheet.columns[c][k];
      Mat M(n, n);
      M.col(0) = characteristic_field(h, {node.x, node.y, node.z}).dx;
      if (n > 1) {
        Mat dL(nb.size(), n - 1), dX(nb.size(), n);
        for (std::size_t r = 0; r < nb.size(); ++r) {
          dL.row(r) = (sheet.lambdas[nb[r]] - sheet.lambdas[c]).transpose();
          dX.row(r) = (sheet.columns[nb[r]][k].x - node.x).transpose();
        }
        // dX ~ dL * G with G = (dx/dlambda)^T
        const Mat G = dL.colPivHouseholderQr().solve(dX);
        M.rightCols(n - 1) = G.transpose();
      }
      double sc = 1.0;
      for (int j = 0; j < n; ++j) sc *= M.col(j).norm();
      det[c][k] = M.determinant();
      scale[c][k] = sc;
    }
  }

  constexpr double kFoldTol = 1e-10;
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t k = 0; k < ns; ++k) {
      const double d = det[c][k];
      if (std::isnan(d)) break;
      bool fold = std::abs(d) <= kFoldTol * scale[c][k];
      std::size_t at = k;
      if (!fold && k + 1 < ns && !std::isnan(det[c][k + 1]) && std::abs(det[c][k + 1]) > kFoldTol * scale[c][k + 1] &&
          std::signbit(d) != std::signbit(det[c][k + 1])) {
        fold = true;
        at = std::abs(d) / scale[c][k] <= std::abs(det[c][k + 1]) / scale[c][k + 1] ? k : k + 1;
      }
      if (fold) {
        res.first_fold[c] = static_cast<long>(std::min(k, at));
        res.folds.push_back({c, at, sheet.columns[c][at].x});
        break;
      }
    }
  }

  // Graph consistency: least-squares differencing in (s, lambda) for the
  // parameter derivatives of x and z, then grad z = (dx/dP)^-T dz/dP.
  res.max_graph_defect = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    const auto& nb = nbrs[c];
    if (!balanced(sheet, c, nb)) continue;
    const long stop = res.first_fold[c] < 0 ? static_cast<long>(ns) - 1 : res.first_fold[c] - 1;
    for (long k = 1; k < stop; ++k) {
      bool usable = true;
      for (std::size_t j : nb)
        if (res.first_fold[j] >= 0 && k + 1 >= res.first_fold[j]) usable = false;
      if (!usable) continue;
      const SheetNode& node = sheet.columns[c][k];
      const std::size_t rows = 2 + nb.size();
      Mat dP = Mat::Zero(rows, n), dX(rows, n);
      Vec dZ(rows);
      for (int side = 0; side < 2; ++side) {
        const SheetNode& o = sheet.columns[c][side ? k + 1 : k - 1];
        dP(side, 0) = sheet.s_values[side ? k + 1 : k - 1] - sheet.s_values[k];
        dX.row(side) = (o.x - node.x).transpose();
        dZ(side) = o.z - node.z;
      }
      for (std::size_t r = 0; r < nb.size(); ++r) {
        const SheetNode& o = sheet.columns[nb[r]][k];
        if (n > 1) dP.block(2 + r, 1, 1, n - 1) = (sheet.lambdas[nb[r]] - sheet.lambdas[c]).transpose();
        dX.row(2 + r) = (o.x - node.x).transpose();
        dZ(2 + r) = o.z - node.z;
      }
      Eigen::ColPivHouseholderQR<Mat> qr(dP);
      if (qr.rank() < n) continue;
      const Mat Gx = qr.solve(dX);  // (dx/dP)^T
      const Vec gz = qr.solve(dZ);  // dz/dP
      Eigen::FullPivLU<Mat> lu(Gx);
      if (!lu.isInvertible()) continue;
      const Vec g = lu.solve(gz);
      res.max_graph_defect = std::max(res.max_graph_defect, inf_norm(Vec(g - node.y)));
      ++res.graph_nodes_checked;
    }
  }
  if (res.graph_nodes_checked == 0) res.max_graph_defect = std::numeric_limits<double>::quiet_NaN();
  return res;
}

void write_sheet_csv(std::ostream& os, const SolutionSheet& sheet) {
  const int n = sheet.n;
  std::vector<std::string> header{"s"};
  for (int i = 1; i < n; ++i) header.push_back("lambda" + std::to_string(i));
  for (int i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
  header.push_back("z");
  for (int i = 1; i <= n; ++i) header.push_back("y" + std::to_string(i));
  header.push_back("h");
  csv::write_row(os, header);
  for (std::size_t c = 0; c < sheet.columns.size(); ++c) {
    for (std::size_t k = 0; k < sheet.columns[c].size(); ++k) {
      const SheetNode& node = sheet.columns[c][k];
      std::vector<std::string> row{csv::format(sheet.s_values[k])};
      for (int i = 0; i < n - 1; ++i) row.push_back(csv::format(sheet.lambdas[c](i)));
      for (int i = 0; i < n; ++i) row.push_back(csv::format(node.x(i)));
      row.push_back(csv::format(node.z));
      for (int i = 0; i < n; ++i) row.push_back(csv::format(node.y(i)));
      row.push_back(csv::format(node.h));
      csv::write_row(os, row);
    }
  }
}

}  // namespace charflow
