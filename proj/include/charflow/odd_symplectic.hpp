#pragma once

// Linear algebra of the odd-symplectic group Sp(2n+1, R).
//
// The group is realised inside Sp(2n+2, R) acting on coordinates ordered
// (t, x_1..x_n, y_1..y_n, z) as the stabiliser of the z basis vector. The
// symplectic form on that space pairs t with z and x_i with y_i.

#include "charflow/types.hpp"

namespace charflow {

inline constexpr double kMembershipTol = 1e-10;

// J on R^{2n}, coordinates (x, y): J[i, n+i] = 1, J[n+i, i] = -1.
struct SymplecticFormStd {
  int n = 0;
  Mat matrix;
};

// Omega on R^{2n+2}, coordinates (t, x, y, z): Omega[t, z] = 1 plus J on (x, y).
struct SymplecticFormExt {
  int n = 0;
  Mat matrix;
};

SymplecticFormStd standard_symplectic_form(int n);
SymplecticFormExt extended_symplectic_form(int n);

// Block generator (0 0 0; v A 0; k (Jv)^T 0) of sp(2n+1, R). A must be
// Hamiltonian (A^T J + J A = 0); this is checked on construction.
class GeneratorU {
 public:
  GeneratorU(Mat A, Vec v, double k, double tol = 1e-10);

  int n() const { return n_; }
  const Mat& A() const { return A_; }
  const Vec& v() const { return v_; }
  double k() const { return k_; }

  // J*A = [[-gamma, alpha], [alpha^T, beta]]; the three blocks exposed below.
  Mat alpha() const;
  Mat beta() const;
  Mat gamma() const;

 private:
  int n_;
  Mat A_;
  Vec v_;
  double k_;
};

struct GroupElement {
  int n = 0;
  Mat matrix;
};

Mat embed_generator(const GeneratorU& u);

bool is_hamiltonian_matrix(const Mat& A, double tol = kMembershipTol);
double hamiltonian_residual(const Mat& A);

bool is_odd_symplectic(const GroupElement& M, double tol = kMembershipTol);

struct MembershipResidual {
  double form = 0.0;       // ||M^T Omega M - Omega||_inf
  double fixed_vec = 0.0;  // ||M e_z - e_z||_inf
};
MembershipResidual odd_symplectic_residual(const GroupElement& M);

// ||U^T Omega + Omega U||_inf for the embedded generator.
double algebra_residual(const GeneratorU& u);

// exp(s U) by scaling and squaring over a degree-18 Taylor polynomial.
GroupElement matrix_exponential(const GeneratorU& u, double s);
Mat expm(const Mat& M);

struct AffineRate {
  Vec dw;
  double dz = 0.0;
};

// Field of u on the slice t = 1: dw = v + A w, dz = k + (Jv)^T w.
AffineRate generator_field_at(const GeneratorU& u, const Vec& w, double z);

// Action of a group element on (1, w, z); returns (w', z').
std::pair<Vec, double> affine_action(const GroupElement& g, const Vec& w, double z);

}  // namespace charflow
