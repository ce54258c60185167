#pragma once

// Constant-coefficient quadratic first-order PDEs
//
//   sum c_ij y_i y_j + sum b_ij y_i x_j + sum a_ij x_i x_j + e.y + f.x = h0,   y = grad z,
//
// and their generators in sp(2n+1, R).

#include "charflow/jet_contact.hpp"
#include "charflow/odd_symplectic.hpp"

namespace charflow {

struct QuadraticPDE {
  int n = 0;
  Mat a;  // x-x, symmetric
  Mat b;  // y-x cross term b_ij y_i x_j
  Mat c;  // y-y, symmetric
  Vec e;  // y-linear
  Vec f;  // x-linear
  double h0 = 0.0;

  static QuadraticPDE zeros(int n);
  // Throws InvalidArgument on wrong shapes, non-finite entries or asymmetric a / c.
  void validate() const;
};

// 2n x 2n symmetric matrix with blocks (a, b/2; b^T/2, c).
Mat assemble_B(const QuadraticPDE& q);

// LHS - h0, so the PDE is eval_h = 0.
double eval_h(const QuadraticPDE& q, const Vec& x, const Vec& y);

Hamiltonian quadratic_hamiltonian(const QuadraticPDE& q);

// Generator whose affine field v + A w equals the (x, y) part of the
// characteristic field. A = [[b, 2c], [-2a, -b^T]], v = (e, -f), k = h0.
// A built-in sample check throws Error if that match ever fails.
GeneratorU to_generator(const QuadraticPDE& q);

// True iff a = 0, b = 0 and f = 0.
bool commutation_condition(const QuadraticPDE& q, double tol = 0.0);

// z-component of [X_u, X_c] at (x, y), X_u the field of to_generator(q) on t = 1.
double commutator_density(const QuadraticPDE& q, const Vec& x, const Vec& y);

// Vector fields on J^1 with closed-form Jacobians (packed (x, y, z) order).
VectorField quadratic_characteristic_field(const QuadraticPDE& q);
VectorField quadratic_contact_field(const QuadraticPDE& q);
VectorField generator_vector_field(const GeneratorU& u);

}  // namespace charflow
