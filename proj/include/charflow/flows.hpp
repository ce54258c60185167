#pragma once

#include "charflow/jet_contact.hpp"
#include "charflow/odd_symplectic.hpp"

#include <functional>
#include <ostream>
#include <utility>
#include <vector>

namespace charflow {

// Fixed-step classical RK4 is the only method.
struct IntegratorConfig {
  double step = 1e-3;
  long max_steps = 10'000'000;

  void validate() const;
};

enum class FieldKind { Characteristic, Contact, Lifted };

const char* to_string(FieldKind kind);

struct Trajectory {
  std::vector<double> s_values;
  std::vector<JetPoint> points;
  std::vector<double> h_values;
  FieldKind field_kind = FieldKind::Characteristic;
};

using SSpan = std::pair<double, double>;

struct StateSamples {
  std::vector<double> s;
  std::vector<Vec> states;
};

// RK4 on an autonomous system; one sample per step plus the initial state,
// the last step shortened so the final sample lands exactly on s1.
StateSamples rk4_integrate(const std::function<Vec(const Vec&)>& rhs, const Vec& y0, SSpan s_span,
                           const IntegratorConfig& cfg);

Trajectory integrate(const Hamiltonian& h, FieldKind kind, const JetPoint& p0, SSpan s_span,
                     const IntegratorConfig& cfg);

// Lifted field at fixed t; h_values hold hat h(t, x, y).
Trajectory integrate_lifted(const LiftedHamiltonian& hh, double t, const JetPoint& p0, SSpan s_span,
                            const IntegratorConfig& cfg);

struct ConservationReport {
  double max_drift = 0.0;
};
ConservationReport conservation_report(const Trajectory& tr);

// RK4 flow of generator_field_at from (w0, z0) versus exp(sU) acting on
// (1, w0, z0); inf-norm difference of the (w, z) endpoints.
double flow_vs_exponential(const GeneratorU& u, const Vec& w0, double z0, double s,
                           const IntegratorConfig& cfg);

// Columns: s, x_1..x_n, y_1..y_n, z, h.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

}  // namespace charflow
