#pragma once

// Batch front end: a YAML run configuration in, CSV files and a plain-text
// report out. See README.md for the configuration grammar.

#include "charflow/applications.hpp"
#include "charflow/cauchy.hpp"
#include "charflow/flows.hpp"
#include "charflow/quadratic.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace charflow::cli {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class Task { Verify, Characteristics, Cauchy, Algebra, Eikonal, HamiltonJacobi };
const char* to_string(Task t);

struct CurveSpec {
  enum class Kind { Point, Polynomial, Circle, Grid };
  Kind kind = Kind::Polynomial;
  // point / grid
  std::vector<Vec> points;
  std::vector<double> phi_values;
  // polynomial: one coefficient list per coordinate, lowest degree first
  std::vector<std::vector<double>> x_coeffs;
  std::vector<double> phi_coeffs;
  double lambda_start = 0.0;
  double lambda_stop = 1.0;
  int lambda_count = 11;
  // circle
  Vec center;
  double radius = 1.0;
  double phi_constant = 0.0;
};

struct RunConfig {
  Task task = Task::Verify;
  int n = 0;
  std::string hamiltonian_name;  // builtin name or "quadratic"
  QuadraticPDE pde;
  IntegratorConfig integrator;
  std::string output;

  // characteristics
  JetPoint initial;
  SSpan s_span{0.0, 1.0};
  FieldKind field = FieldKind::Characteristic;

  // cauchy
  CurveSpec gamma;
  double level = 0.0;
  Vec p_guess;
  double strip_tol = 1e-12;

  // algebra
  std::vector<double> s_list;

  // eikonal
  LayeredMedium medium;
  std::vector<RayStart> rays;
  double s_max = 1.0;

  // hj
  std::string mechanical;
  Vec q0;
  Vec p0;
  SSpan t_span{0.0, 1.0};

  // verify
  int samples = 100;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

InitialDataManifold build_manifold(const CurveSpec& curve, int n);
MechanicalHamiltonian builtin_mechanical(const std::string& name, int n_q);

struct RunOptions {
  std::string out_prefix;  // overrides RunConfig::output when non-empty
  std::uint64_t seed = 1;
  double tol_scale = 1.0;
  bool write_files = true;
};

struct RunResult {
  int status = 0;
  int failures = 0;
  std::string report;
  std::vector<std::string> files;
};

// Never throws for module errors; they become a nonzero status and a report line.
RunResult run(const RunConfig& config, const RunOptions& options);

}  // namespace charflow::cli
