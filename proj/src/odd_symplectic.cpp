#include "charflow/odd_symplectic.hpp"

#include <cmath>
#include <string>

namespace charflow {

namespace {

constexpr int kTaylorOrder = 18;

void require_positive(int n) {
  if (n < 1) throw InvalidArgument("dimension n must be >= 1, got " + std::to_string(n));
}

}  // namespace

SymplecticFormStd standard_symplectic_form(int n) {
  require_positive(n);
  Mat J = Mat::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    J(i, n + i) = 1.0;
    J(n + i, i) = -1.0;
  }
  return {n, std::move(J)};
}

SymplecticFormExt extended_symplectic_form(int n) {
  require_positive(n);
  const int dim = 2 * n + 2;
  Mat omega = Mat::Zero(dim, dim);
  omega(0, dim - 1) = 1.0;
  omega(dim - 1, 0) = -1.0;
  omega.block(1, 1, 2 * n, 2 * n) = standard_symplectic_form(n).matrix;
  return {n, std::move(omega)};
}

GeneratorU::GeneratorU(Mat A, Vec v, double k, double tol)
    : n_(static_cast<int>(A.rows() / 2)), A_(std::move(A)), v_(std::move(v)), k_(k) {
  if (A_.rows() != A_.cols() || A_.rows() % 2 != 0 || A_.rows() == 0)
    throw InvalidArgument("generator block A must be a non-empty square matrix of even size");
  if (v_.size() != A_.rows())
    throw InvalidArgument("generator vector v must have length 2n = " + std::to_string(A_.rows()));
  if (!std::isfinite(k_) || !A_.allFinite() || !v_.allFinite())
    throw InvalidArgument("generator entries must be finite");
  const double res = hamiltonian_residual(A_);
  if (res > tol * std::max(1.0, inf_norm(A_)))
    throw InvalidArgument("generator block A is not in sp(2n): ||A^T J + J A|| = " + std::to_string(res));
}

Mat GeneratorU::alpha() const {
  const Mat JA = standard_symplectic_form(n_).matrix * A_;
  return JA.block(0, n_, n_, n_);
}

Mat GeneratorU::beta() const {
  const Mat JA = standard_symplectic_form(n_).matrix * A_;
  return JA.block(n_, n_, n_, n_);
}

Mat GeneratorU::gamma() const {
  const Mat JA = standard_symplectic_form(n_).matrix * A_;
  return -JA.block(0, 0, n_, n_);
}

Mat embed_generator(const GeneratorU& u) {
  const int n2 = 2 * u.n();
  const int dim = n2 + 2;
  Mat U = Mat::Zero(dim, dim);
  U.block(1, 0, n2, 1) = u.v();
  U.block(1, 1, n2, n2) = u.A();
  U(dim - 1, 0) = u.k();
  const Vec Jv = standard_symplectic_form(u.n()).matrix * u.v();
  U.block(dim - 1, 1, 1, n2) = Jv.transpose();
  return U;
}

double hamiltonian_residual(const Mat& A) {
  if (A.rows() != A.cols() || A.rows() % 2 != 0 || A.rows() == 0)
    throw InvalidArgument("Hamiltonian-matrix test needs a square matrix of even dimension, got " +
                          std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  const Mat J = standard_symplectic_form(static_cast<int>(A.rows() / 2)).matrix;
  return inf_norm(Mat(A.transpose() * J + J * A));
}

bool is_hamiltonian_matrix(const Mat& A, double tol) { return hamiltonian_residual(A) <= tol; }

MembershipResidual odd_symplectic_residual(const GroupElement& M) {
  const auto dim = M.matrix.rows();
  if (M.matrix.cols() != dim || dim < 4 || dim % 2 != 0 || (M.n > 0 && dim != 2 * M.n + 2))
    throw InvalidArgument("group element must be (2n+2)x(2n+2), got " + std::to_string(M.matrix.rows()) +
                          "x" + std::to_string(M.matrix.cols()));
  const int n = static_cast<int>(dim / 2 - 1);
  const Mat omega = extended_symplectic_form(n).matrix;
  MembershipResidual r;
  r.form = inf_norm(Mat(M.matrix.transpose() * omega * M.matrix - omega));
  Vec ez = Vec::Zero(dim);
  ez(dim - 1) = 1.0;
  r.fixed_vec = inf_norm(Vec(M.matrix * ez - ez));
  return r;
}

bool is_odd_symplectic(const GroupElement& M, double tol) {
  const auto r = odd_symplectic_residual(M);
  return r.form <= tol && r.fixed_vec <= tol;
}

double algebra_residual(const GeneratorU& u) {
  const Mat U = embed_generator(u);
  const Mat omega = extended_symplectic_form(u.n()).matrix;
  return inf_norm(Mat(U.transpose() * omega + omega * U));
}

Mat expm(const Mat& M) {
  if (M.rows() != M.cols()) throw InvalidArgument("matrix exponential needs a square matrix");
  const double norm1 = M.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const Mat scaled = M / std::ldexp(1.0, squarings);

  // Horner form of sum_{j<=N} X^j / j!
  const Mat I = Mat::Identity(M.rows(), M.cols());
  Mat result = I;
  for (int j = kTaylorOrder; j >= 1; --j) result = I + scaled * result / static_cast<double>(j);
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

GroupElement matrix_exponential(const GeneratorU& u, double s) {
  return {u.n(), expm(s * embed_generator(u))};
}

AffineRate generator_field_at(const GeneratorU& u, const Vec& w, double /*z*/) {
  if (w.size() != 2 * u.n()) throw InvalidArgument("w must have length 2n");
  const Vec Jv = standard_symplectic_form(u.n()).matrix * u.v();
  return {u.v() + u.A() * w, u.k() + Jv.dot(w)};
}

std::pair<Vec, double> affine_action(const GroupElement& g, const Vec& w, double z) {
  const auto dim = g.matrix.rows();
  if (w.size() + 2 != dim) throw InvalidArgument("affine action: w has the wrong length");
  Vec p(dim);
  p(0) = 1.0;
  p.segment(1, w.size()) = w;
  p(dim - 1) = z;
  const Vec q = g.matrix * p;
  return {q.segment(1, w.size()), q(dim - 1)};
}

}  // namespace charflow
