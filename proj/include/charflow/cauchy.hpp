#pragma once

// Cauchy problem for h(x, grad z) = level by characteristics: lift the data
// (gamma, phi) to an initial strip in J^1, then flow X_c from every strip
// point to build the (s, lambda)-parametrised solution sheet.

#include "charflow/flows.hpp"
#include "charflow/jet_contact.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace charflow {

// gamma as an immersed (n-1)-manifold x_gamma(lambda) with data phi(x_gamma(lambda)).
// Missing derivative callbacks are replaced by central differences in lambda.
struct InitialDataManifold {
  int n = 0;
  std::vector<Vec> lambda_grid;  // points of R^{n-1}
  std::function<Vec(const Vec&)> x_gamma;
  std::function<Mat(const Vec&)> tangent;  // n x (n-1), columns d x_gamma / d lambda_j
  std::function<double(const Vec&)> phi;
  std::function<Vec(const Vec&)> dphi;     // d (phi o x_gamma) / d lambda

  void validate() const;
  Mat tangent_at(const Vec& lambda) const;
  Vec dphi_at(const Vec& lambda) const;
};

struct StripPoint {
  Vec lambda;
  Vec x0;
  double z0 = 0.0;
  Vec p0;
  Mat tangent;  // n x (n-1)
  double residual = 0.0;
};

struct InitialStrip {
  int n = 0;
  double level = 0.0;
  std::vector<StripPoint> points;
};

struct StripSolverOptions {
  double tol = 1e-12;
  int max_iter = 50;
  int max_halvings = 30;
};

// Per lambda: damped Newton on {h(x0, p) = level, p . t_j = d phi / d lambda_j}.
// The root found at one grid point seeds the next.
InitialStrip solve_strip(const Hamiltonian& h, const InitialDataManifold& m, double level, const Vec& p_guess,
                         const StripSolverOptions& opts = {});

// det[t_1 .. t_{n-1} | dx of X_c] compared against tol times the product of column norms.
std::vector<bool> is_noncharacteristic(const Hamiltonian& h, const InitialStrip& strip, double tol = 1e-8);

struct SheetNode {
  Vec x;
  Vec y;
  double z = 0.0;
  double h = 0.0;
};

struct SolutionSheet {
  int n = 0;
  std::vector<double> s_values;
  std::vector<Vec> lambdas;                     // one per propagated column
  std::vector<std::size_t> strip_index;         // column -> index in the strip
  std::vector<std::vector<SheetNode>> columns;  // [column][s]
  std::vector<std::size_t> skipped;             // strip indices dropped as characteristic
};

struct PropagateOptions {
  bool skip_characteristic = false;
  double noncharacteristic_tol = 1e-8;
};

// Columns are integrated with OpenMP; output is identical to propagate_serial.
SolutionSheet propagate(const Hamiltonian& h, const InitialStrip& strip, SSpan s_span, const IntegratorConfig& cfg,
                        const PropagateOptions& opts = {});
SolutionSheet propagate_serial(const Hamiltonian& h, const InitialStrip& strip, SSpan s_span,
                               const IntegratorConfig& cfg, const PropagateOptions& opts = {});

struct FoldNode {
  std::size_t column = 0;
  std::size_t s_index = 0;
  Vec x;
};

struct SheetResidual {
  double max_level_residual = 0.0;
  // Max ||grad z estimate - y||_inf over interior nodes before any fold;
  // NaN when no node qualifies.
  double max_graph_defect = 0.0;
  std::size_t graph_nodes_checked = 0;
  std::vector<FoldNode> folds;
  // First s index at which each column meets a fold, or -1.
  std::vector<long> first_fold;
};

SheetResidual residual_on_sheet(const Hamiltonian& h, const SolutionSheet& sheet, double level);

// Columns: s, lambda_1..lambda_{n-1}, x_1..x_n, z, y_1..y_n, h.
void write_sheet_csv(std::ostream& os, const SolutionSheet& sheet);

}  // namespace charflow
