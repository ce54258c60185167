#include "charflow/cauchy.hpp"
#include "charflow/quadratic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

namespace charflow {
namespace {

constexpr double kPi = std::numbers::pi;

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Hamiltonian eikonal(int n, double N = 0.5) {
  QuadraticPDE q = QuadraticPDE::zeros(n);
  q.c = 0.5 * Mat::Identity(n, n);
  q.h0 = N;
  return quadratic_hamiltonian(q);
}

std::vector<Vec> grid1(double lo, double hi, int count) {
  std::vector<Vec> g;
  for (int i = 0; i < count; ++i) g.push_back(Vec::Constant(1, lo + (hi - lo) * i / (count - 1)));
  return g;
}

// gamma = x1-axis in R^2 with phi = slope * x1.
InitialDataManifold line_data(double slope, std::vector<Vec> grid) {
  InitialDataManifold m;
  m.n = 2;
  m.lambda_grid = std::move(grid);
  m.x_gamma = [](const Vec& l) { return v2(l(0), 0.0); };
  m.tangent = [](const Vec&) { return Mat(v2(1.0, 0.0)); };
  m.phi = [slope](const Vec& l) { return slope * l(0); };
  m.dphi = [slope](const Vec&) { return Vec(Vec::Constant(1, slope)); };
  return m;
}

InitialDataManifold circle_data(int count) {
  InitialDataManifold m;
  m.n = 2;
  for (int i = 0; i < count; ++i) m.lambda_grid.push_back(Vec::Constant(1, 2 * kPi * i / count));
  m.x_gamma = [](const Vec& l) { return v2(std::cos(l(0)), std::sin(l(0))); };
  m.tangent = [](const Vec& l) { return Mat(v2(-std::sin(l(0)), std::cos(l(0)))); };
  m.phi = [](const Vec&) { return 0.0; };
  return m;
}

TEST(SolveStrip, FlatFront) {
  const InitialStrip strip = solve_strip(eikonal(2), line_data(0.0, grid1(-1, 1, 5)), 0.0, v2(0, 1));
  ASSERT_EQ(strip.points.size(), 5u);
  for (const StripPoint& sp : strip.points) {
    EXPECT_NEAR(sp.p0(0), 0.0, 1e-12);
    EXPECT_NEAR(sp.p0(1), 1.0, 1e-12);
    EXPECT_EQ(sp.z0, 0.0);
    EXPECT_EQ(sp.x0, v2(sp.lambda(0), 0.0));
    EXPECT_LE(sp.residual, 1e-12);
  }
}

TEST(SolveStrip, SlopedDataPicksBranchByGuess) {
  const auto m = line_data(0.5, grid1(-1, 1, 5));
  const InitialStrip up = solve_strip(eikonal(2), m, 0.0, v2(0, 1));
  const InitialStrip down = solve_strip(eikonal(2), m, 0.0, v2(0, -1));
  for (std::size_t i = 0; i < up.points.size(); ++i) {
    EXPECT_NEAR(up.points[i].p0(0), 0.5, 1e-12);
    EXPECT_NEAR(up.points[i].p0(1), std::sqrt(3.0) / 2, 1e-12);
    EXPECT_NEAR(down.points[i].p0(0), 0.5, 1e-12);
    EXPECT_NEAR(down.points[i].p0(1), -std::sqrt(3.0) / 2, 1e-12);
  }
}

TEST(SolveStrip, IndependentOfGuessWithinBranch) {
  const auto m = line_data(0.5, grid1(-1, 1, 3));
  const InitialStrip ref = solve_strip(eikonal(2), m, 0.0, v2(0, 1));
  for (const Vec& guess : {v2(0.3, 0.7), v2(0.6, 1.4), v2(-0.5, 0.2), v2(2.0, 3.0)}) {
    const InitialStrip s = solve_strip(eikonal(2), m, 0.0, guess);
    for (std::size_t i = 0; i < s.points.size(); ++i)
      EXPECT_LE(inf_norm(Vec(s.points[i].p0 - ref.points[i].p0)), 1e-12) << guess.transpose();
  }
}

TEST(SolveStrip, SteepDataHasNoRealSolution) {
  EXPECT_THROW(solve_strip(eikonal(2), line_data(2.0, grid1(-1, 1, 3)), 0.0, v2(0, 1)), NoRealSolution);
}

TEST(SolveStrip, LevelShiftsOnlyTheStrip) {
  // h = 1/2|y|^2 - 1/2 = 1.5 is |y| = 2.
  const InitialStrip s = solve_strip(eikonal(2), line_data(0.0, grid1(0, 1, 2)), 1.5, v2(0, 1));
  EXPECT_NEAR(s.points[0].p0(1), 2.0, 1e-12);
  EXPECT_EQ(s.level, 1.5);
}

TEST(SolveStrip, Errors) {
  const auto m = line_data(0.5, grid1(-1, 1, 3));
  EXPECT_THROW(solve_strip(eikonal(2), m, 0.0, v2(0, 1), {1e-12, 1, 30}), NonConvergence);
  EXPECT_THROW(solve_strip(eikonal(3), m, 0.0, v2(0, 1)), InvalidArgument);
  EXPECT_THROW(solve_strip(eikonal(2), m, 0.0, Vec::Zero(3)), InvalidArgument);
  InitialDataManifold bad = m;
  bad.lambda_grid = {Vec::Zero(2)};
  EXPECT_THROW(solve_strip(eikonal(2), bad, 0.0, v2(0, 1)), InvalidArgument);
  bad = m;
  bad.tangent = [](const Vec&) { return Mat(Mat::Zero(2, 1)); };
  EXPECT_THROW(solve_strip(eikonal(2), bad, 0.0, v2(0, 1)), DegeneratePoint);
}

TEST(SolveStrip, FiniteDifferenceCallbacks) {
  InitialDataManifold m = line_data(0.5, grid1(-1, 1, 3));
  m.tangent = nullptr;
  m.dphi = nullptr;
  const InitialStrip s = solve_strip(eikonal(2), m, 0.0, v2(0, 1));
  EXPECT_NEAR(s.points[1].p0(0), 0.5, 1e-9);
  EXPECT_NEAR(s.points[1].p0(1), std::sqrt(3.0) / 2, 1e-9);
}

TEST(NonCharacteristic, Examples) {
  const InitialStrip strip = solve_strip(eikonal(2), line_data(0.0, grid1(-1, 1, 3)), 0.0, v2(0, 1));
  for (bool ok : is_noncharacteristic(eikonal(2), strip)) EXPECT_TRUE(ok);

  InitialStrip along = strip;
  for (auto& sp : along.points) sp.p0 = v2(1.0, 0.0);
  for (bool ok : is_noncharacteristic(eikonal(2), along)) EXPECT_FALSE(ok);
}

TEST(NonCharacteristic, PointDataInOneDimension) {
  InitialStrip strip;
  strip.n = 1;
  strip.points.push_back({Vec(0), Vec::Constant(1, 0.0), 0.0, Vec::Constant(1, 1.0), Mat(1, 0), 0.0});
  EXPECT_TRUE(is_noncharacteristic(eikonal(1), strip)[0]);
  const Hamiltonian no_y = Hamiltonian::finite_difference(1, [](const JetPoint& p) { return p.x(0) * p.x(0) - 1; }, true);
  EXPECT_FALSE(is_noncharacteristic(no_y, strip)[0]);

  InitialDataManifold m;
  m.n = 1;
  m.lambda_grid = {Vec(0)};
  m.x_gamma = [](const Vec&) { return Vec(Vec::Constant(1, 0.0)); };
  m.phi = [](const Vec&) { return 0.0; };
  const InitialStrip solved = solve_strip(eikonal(1), m, 0.0, Vec::Constant(1, 0.8));
  EXPECT_NEAR(solved.points[0].p0(0), 1.0, 1e-12);
}

TEST(Propagate, FlatFrontGivesDistanceFunction) {
  const Hamiltonian h = eikonal(2);
  const InitialStrip strip = solve_strip(h, line_data(0.0, grid1(-1, 1, 21)), 0.0, v2(0, 1));
  const SolutionSheet sheet = propagate(h, strip, {0.0, 1.0}, {0.05, 1000});
  ASSERT_EQ(sheet.columns.size(), 21u);
  ASSERT_EQ(sheet.s_values.size(), 21u);
  for (std::size_t c = 0; c < sheet.columns.size(); ++c) {
    for (std::size_t k = 0; k < sheet.s_values.size(); ++k) {
      const SheetNode& node = sheet.columns[c][k];
      const double s = sheet.s_values[k];
      EXPECT_NEAR(node.x(0), sheet.lambdas[c](0), 1e-10);
      EXPECT_NEAR(node.x(1), s, 1e-10);
      EXPECT_NEAR(node.z, node.x(1), 1e-10);  // z = x2, the distance to gamma
    }
  }
  const SheetResidual r = residual_on_sheet(h, sheet, 0.0);
  EXPECT_LE(r.max_level_residual, 1e-13);
  EXPECT_GT(r.graph_nodes_checked, 0u);
  EXPECT_LE(r.max_graph_defect, 1e-6);
  EXPECT_TRUE(r.folds.empty());
}

TEST(Propagate, ThreeDimensionalPlane) {
  const Hamiltonian h = eikonal(3);
  InitialDataManifold m;
  m.n = 3;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) m.lambda_grid.push_back(v2(-1 + 0.5 * i, -1 + 0.5 * j));
  m.x_gamma = [](const Vec& l) { return Vec((Vec(3) << l(0), l(1), 0.0).finished()); };
  m.phi = [](const Vec&) { return 0.0; };
  const InitialStrip strip = solve_strip(h, m, 0.0, (Vec(3) << 0, 0, 1).finished());
  const SolutionSheet sheet = propagate(h, strip, {0.0, 0.5}, {0.1, 100});
  for (const auto& col : sheet.columns)
    for (const SheetNode& node : col) EXPECT_NEAR(node.z, node.x(2), 1e-10);
  const SheetResidual r = residual_on_sheet(h, sheet, 0.0);
  EXPECT_GT(r.graph_nodes_checked, 0u);
  EXPECT_LE(r.max_graph_defect, 1e-6);
  EXPECT_TRUE(r.folds.empty());
}

TEST(Propagate, TransportStraightLines) {
  // h = y1 - 1 on gamma = x2-axis with phi = x2^2: z = x1 + x2^2.
  QuadraticPDE q = QuadraticPDE::zeros(2);
  q.e = v2(1.0, 0.0);
  q.h0 = 1.0;
  const Hamiltonian h = quadratic_hamiltonian(q);
  InitialDataManifold m;
  m.n = 2;
  m.lambda_grid = grid1(-1, 1, 11);
  m.x_gamma = [](const Vec& l) { return v2(0.0, l(0)); };
  m.phi = [](const Vec& l) { return l(0) * l(0); };
  const InitialStrip strip = solve_strip(h, m, 0.0, v2(0.0, 0.0));
  const SolutionSheet sheet = propagate(h, strip, {0.0, 2.0}, {0.1, 100});
  for (std::size_t c = 0; c < sheet.columns.size(); ++c) {
    const double l = sheet.lambdas[c](0);
    for (std::size_t k = 0; k < sheet.s_values.size(); ++k) {
      const SheetNode& node = sheet.columns[c][k];
      const double s = sheet.s_values[k];
      EXPECT_NEAR(node.x(0), s, 1e-12);
      EXPECT_NEAR(node.x(1), l, 1e-12);
      EXPECT_NEAR(node.z, l * l + s, 1e-8);
    }
  }
  EXPECT_LE(residual_on_sheet(h, sheet, 0.0).max_graph_defect, 1e-6);
}

TEST(Propagate, InitialRowIsTheStrip) {
  const Hamiltonian h = eikonal(2);
  const InitialStrip strip = solve_strip(h, circle_data(16), 0.0, v2(-1, 0));
  for (SSpan span : {SSpan{0.0, 0.0}, SSpan{0.0, 0.3}}) {
    const SolutionSheet sheet = propagate(h, strip, span, {0.1, 100});
    ASSERT_EQ(sheet.columns.size(), strip.points.size());
    for (std::size_t c = 0; c < sheet.columns.size(); ++c) {
      const StripPoint& sp = strip.points[sheet.strip_index[c]];
      const SheetNode& node = sheet.columns[c][0];
      EXPECT_EQ(node.x, sp.x0);
      EXPECT_EQ(node.y, sp.p0);
      EXPECT_EQ(node.z, sp.z0);
      EXPECT_LE(std::abs(node.h - strip.level), 1e-12);
    }
    if (span.second == 0.0) EXPECT_EQ(sheet.s_values.size(), 1u);
  }
}

TEST(Propagate, CharacteristicStripRejectedOrSkipped) {
  const Hamiltonian h = eikonal(2);
  InitialStrip strip = solve_strip(h, line_data(0.0, grid1(-1, 1, 5)), 0.0, v2(0, 1));
  strip.points[2].p0 = v2(1.0, 0.0);
  EXPECT_THROW(propagate(h, strip, {0, 1}, {0.1, 100}), DegeneratePoint);
  const SolutionSheet sheet = propagate(h, strip, {0, 1}, {0.1, 100}, {true, 1e-8});
  EXPECT_EQ(sheet.columns.size(), 4u);
  ASSERT_EQ(sheet.skipped.size(), 1u);
  EXPECT_EQ(sheet.skipped[0], 2u);
  EXPECT_EQ(sheet.strip_index, (std::vector<std::size_t>{0, 1, 3, 4}));
}

TEST(Propagate, IntegratorErrorsPropagate) {
  const Hamiltonian h = eikonal(2);
  const InitialStrip strip = solve_strip(h, line_data(0.0, grid1(-1, 1, 5)), 0.0, v2(0, 1));
  EXPECT_THROW(propagate(h, strip, {0, 1}, {0.1, 3}), IntegrationError);
  EXPECT_THROW(propagate_serial(h, strip, {0, 1}, {0.1, 3}), IntegrationError);
}

TEST(Residual, CircleFocusesAtCentre) {
  const Hamiltonian h = eikonal(2);
  const InitialStrip strip = solve_strip(h, circle_data(64), 0.0, v2(-1, 0));
  for (const StripPoint& sp : strip.points) EXPECT_LE(inf_norm(Vec(sp.p0 + sp.x0)), 1e-12);  // inward normal
  const SolutionSheet sheet = propagate(h, strip, {0.0, 1.5}, {1e-2, 1000});
  const SheetResidual r = residual_on_sheet(h, sheet, 0.0);
  EXPECT_LE(r.max_level_residual, 1e-8);
  ASSERT_EQ(r.folds.size(), sheet.columns.size());
  for (const FoldNode& f : r.folds) {
    EXPECT_LE(f.x.norm(), 2e-2);
    EXPECT_NEAR(sheet.s_values[f.s_index], 1.0, 1e-2 + 1e-12);
  }
  // Before the fold the sheet is the graph of z = 1 - |x|.
  EXPECT_GT(r.graph_nodes_checked, 0u);
  EXPECT_LE(r.max_graph_defect, 1e-6);
  for (std::size_t c = 0; c < sheet.columns.size(); ++c)
    for (std::size_t k = 0; k < sheet.s_values.size(); ++k) {
      const SheetNode& node = sheet.columns[c][k];
      if (sheet.s_values[k] < 1.0) EXPECT_NEAR(node.z, 1.0 - node.x.norm(), 1e-10);
    }
}

TEST(Residual, ConservedForNonQuadraticHamiltonian) {
  // Anisotropic eikonal with a smooth index: h = 1/2 |y|^2 / n(x)^2 - 1/2.
  const Hamiltonian h = Hamiltonian::finite_difference(
      2,
      [](const JetPoint& p) {
        const double idx = 1.0 + 0.2 * std::sin(p.x(0)) * std::cos(p.x(1));
        return 0.5 * p.y.squaredNorm() / (idx * idx) - 0.5;
      },
      true);
  const InitialStrip strip = solve_strip(h, line_data(0.0, grid1(-1, 1, 9)), 0.0, v2(0, 1));
  const SolutionSheet sheet = propagate(h, strip, {0.0, 1.0}, {1e-3, 10000});
  const SheetResidual r = residual_on_sheet(h, sheet, 0.0);
  EXPECT_LE(r.max_level_residual, 1e-8);
}

TEST(SheetCsv, Header) {
  const Hamiltonian h = eikonal(2);
  const InitialStrip strip = solve_strip(h, line_data(0.0, grid1(0, 1, 2)), 0.0, v2(0, 1));
  const SolutionSheet sheet = propagate(h, strip, {0.0, 0.5}, {0.5, 10});
  std::ostringstream os;
  write_sheet_csv(os, sheet);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "s,lambda1,x1,x2,z,y1,y2,h");
  std::getline(is, line);
  EXPECT_EQ(line, "0,0,0,0,0,0,1,0");
  int rows = 1;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

}  // namespace
}  // namespace charflow
