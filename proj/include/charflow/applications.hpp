#pragma once

#include "charflow/flows.hpp"
#include "charflow/quadratic.hpp"

#include <functional>
#include <ostream>
#include <vector>

namespace charflow {

// ---------------------------------------------------------------------------
// Hamilton-Jacobi

// H(q, p, t) of a mechanical system on R^{2 n_q}.
class MechanicalHamiltonian {
 public:
  struct Partials {
    Vec q;
    Vec p;
    double t = 0.0;
  };
  using ValueFn = std::function<double(const Vec& q, const Vec& p, double t)>;
  using PartialsFn = std::function<Partials(const Vec& q, const Vec& p, double t)>;

  MechanicalHamiltonian(int n_q, ValueFn value, PartialsFn partials = {});

  int n_q() const { return n_q_; }
  double value(const Vec& q, const Vec& p, double t) const { return value_(q, p, t); }
  Partials partials(const Vec& q, const Vec& p, double t) const;

 private:
  int n_q_;
  ValueFn value_;
  PartialsFn partials_;
};

// h on J^1(R^{n_q+1}) with x = (q, t), y = (p, E): h = H(q, p, t) + E.
Hamiltonian hj_lift(const MechanicalHamiltonian& H);

// Characteristic of the lifted equation through (q0, t0; p0, E0 = -H(q0, p0, t0))
// with z = 0; s runs over t_span, so s coincides with physical time and z
// accumulates the action.
Trajectory hj_characteristics(const MechanicalHamiltonian& H, const Vec& q0, const Vec& p0, SSpan t_span,
                              const IntegratorConfig& cfg);

// ---------------------------------------------------------------------------
// Eikonal in piecewise-constant layered media: h = |y|^2 / 2 - N_k.

struct LayeredMedium {
  int n = 2;
  int axis = 1;                     // stacking coordinate
  std::vector<double> interfaces;   // strictly increasing, K-1 values
  std::vector<double> N_values;     // K positive values

  void validate() const;
  std::size_t layer_count() const { return N_values.size(); }
  // Layers are half-open [xi_{k-1}, xi_k) along the axis, indexed from 0.
  std::size_t layer_of(const Vec& x) const;
};

QuadraticPDE layer_quadratic(const LayeredMedium& med, std::size_t k);
GeneratorU layer_generator(const LayeredMedium& med, std::size_t k);

enum class RayEvent { InterfaceCrossing, TotalInternalReflection, Terminal };
const char* to_string(RayEvent e);

struct RaySegment {
  std::size_t layer = 0;
  double s_start = 0.0;
  double s_end = 0.0;
  JetPoint entry;
  JetPoint exit;  // state at s_end before the event is applied
  RayEvent event = RayEvent::Terminal;
  // ||exact (x, y) - exp-action of the layer generator||_inf over the segment.
  double exp_residual = 0.0;
};

struct Ray {
  std::vector<RaySegment> segments;
};

// Straight-line characteristics in each layer; tangential momentum is kept at
// each interface and the normal component re-solved from h = 0 (Snell), with
// total internal reflection when that is impossible. cfg.max_steps bounds the
// number of segments.
Ray trace_ray(const LayeredMedium& med, const Vec& x0, const Vec& y0, double s_max, const IntegratorConfig& cfg,
              double z0 = 0.0);

struct RayStart {
  Vec x0;
  Vec y0;
};

std::vector<Ray> trace_rays(const LayeredMedium& med, const std::vector<RayStart>& starts, double s_max,
                            const IntegratorConfig& cfg);
std::vector<Ray> trace_rays_serial(const LayeredMedium& med, const std::vector<RayStart>& starts, double s_max,
                                   const IntegratorConfig& cfg);

// Columns: segment, k, s_start, s_end, x_1..x_n, y_1..y_n, z, event (exit state).
void write_ray_csv(std::ostream& os, const Ray& ray);

}  // namespace charflow
