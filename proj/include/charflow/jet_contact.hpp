#pragma once

// The 1-jet space J^1(R^n) with contact form theta = dz - y.dx and the three
// vector fields built from a first-order PDE h(x, y) = 0:
//   characteristic  X_c  : dx = h_y, dy = -h_x - y h_z, dz = y.h_y
//   contact         X_h^1: dx = h_y, dy = -h_x,         dz = -h + y.h_y
//   lifted          X_hat: the symplectised field of hat h(t, x, y)

#include "charflow/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace charflow {

struct JetPoint {
  Vec x;
  Vec y;
  double z = 0.0;

  int n() const { return static_cast<int>(x.size()); }
  // Packed state (x, y, z) of length 2n+1.
  Vec packed() const;
  static JetPoint unpack(const Vec& state, int n);
};

struct TangentVector {
  Vec dx;
  Vec dy;
  double dz = 0.0;

  Vec packed() const;
  static TangentVector unpack(const Vec& v, int n);
};

struct SymplPoint {
  double t = 1.0;
  Vec x;
  Vec y;
  double z = 0.0;
};

struct JetGradient {
  Vec x;
  Vec y;
  double z = 0.0;
};

// h(x, y, z) with partial derivatives, either from analytic callbacks or
// central finite differences of the value callback. Callbacks must be
// re-entrant; the object itself is immutable after construction.
class Hamiltonian {
 public:
  using ValueFn = std::function<double(const JetPoint&)>;
  using GradientFn = std::function<JetGradient(const JetPoint&)>;

  static Hamiltonian analytic(int n, ValueFn value, GradientFn gradient, bool z_independent);
  static Hamiltonian finite_difference(int n, ValueFn value, bool z_independent);

  int n() const { return n_; }
  bool z_independent() const { return z_independent_; }
  bool has_analytic_gradient() const { return static_cast<bool>(gradient_); }

  double value(const JetPoint& p) const;
  // Analytic gradient when available, otherwise finite differences.
  JetGradient gradient(const JetPoint& p) const;
  JetGradient fd_gradient(const JetPoint& p) const;

 private:
  Hamiltonian(int n, ValueFn value, GradientFn gradient, bool z_independent);

  int n_;
  ValueFn value_;
  GradientFn gradient_;
  bool z_independent_;
};

// hat h(t, x, y); independent of z by construction.
class LiftedHamiltonian {
 public:
  struct Partials {
    double t = 0.0;
    Vec x;
    Vec y;
  };
  using ValueFn = std::function<double(double t, const Vec& x, const Vec& y)>;
  using PartialsFn = std::function<Partials(double t, const Vec& x, const Vec& y)>;

  LiftedHamiltonian(int n, ValueFn value, PartialsFn partials = {});

  // hat h = t * h(x, y) for a z-independent h.
  static LiftedHamiltonian from_contact(const Hamiltonian& h);

  int n() const { return n_; }
  double value(double t, const Vec& x, const Vec& y) const { return value_(t, x, y); }
  Partials partials(double t, const Vec& x, const Vec& y) const;

 private:
  int n_;
  ValueFn value_;
  PartialsFn partials_;
};

double contact_form_at(const JetPoint& p, const TangentVector& V);
double d_contact_form_at(const JetPoint& p, const TangentVector& V, const TangentVector& W);

TangentVector characteristic_field(const Hamiltonian& h, const JetPoint& p);
TangentVector contact_field(const Hamiltonian& h, const JetPoint& p);

struct LiftedRate {
  double dt = 0.0;
  Vec dx;
  Vec dy;
  double dz = 0.0;
};
LiftedRate lifted_field(const LiftedHamiltonian& hh, const SymplPoint& q);

// Orthonormal basis (2n-1 vectors) of {V : theta(V) = 0, dh(V) = 0}.
std::vector<TangentVector> characteristic_plane_basis(const Hamiltonian& h, const JetPoint& p);

// A vector field on J^1 with an optional closed-form Jacobian in packed
// (x, y, z) coordinates.
struct VectorField {
  std::function<TangentVector(const JetPoint&)> eval;
  std::function<Mat(const JetPoint&)> jacobian;
};

enum class BracketScheme { ExactAffine, FiniteDifference };

// [X, Y](p) = DY(p) X(p) - DX(p) Y(p).
TangentVector commutator(const VectorField& X, const VectorField& Y, const JetPoint& p,
                         BracketScheme scheme);

// Same, plus the magnitude of the two products, for relative comparisons.
struct BracketValue {
  TangentVector bracket;
  double scale = 0.0;  // max(||DY X||, ||DX Y||)
};
BracketValue commutator_with_scale(const VectorField& X, const VectorField& Y, const JetPoint& p,
                                   BracketScheme scheme);

Mat finite_difference_jacobian(const std::function<TangentVector(const JetPoint&)>& field,
                               const JetPoint& p);

VectorField characteristic_vector_field(const Hamiltonian& h);
VectorField contact_vector_field(const Hamiltonian& h);

struct CoincidenceResidual {
  double identity = 0.0;     // ||X_h^1 - X_c + h e_z||_inf
  double coincidence = 0.0;  // ||X_h^1 - X_c||_inf
  double abs_h = 0.0;
};
CoincidenceResidual verify_coincidence(const Hamiltonian& h, const JetPoint& p);

// Point on h = level found along the ray y0 + r * dir, r >= 0, by bracketing
// then bisection/secant. Throws NoRealSolution if no sign change is found.
JetPoint solve_on_level(const Hamiltonian& h, const Vec& x, double z, const Vec& y0, const Vec& dir,
                        double level = 0.0, double r_max = 1e3);

double fd_step(double coordinate);

}  // namespace charflow
