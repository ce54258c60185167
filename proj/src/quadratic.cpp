#include "charflow/quadratic.hpp"

#include <cmath>
#include <random>
#include <string>

namespace charflow {

namespace {

constexpr int kSelfCheckPoints = 20;
constexpr double kSelfCheckTol = 1e-10;

struct Split {
  Vec x;
  Vec y;
};

Split split(const Vec& w, int n) { return {w.head(n), w.tail(n)}; }

Vec grad_y(const QuadraticPDE& q, const Vec& x, const Vec& y) { return 2.0 * q.c * y + q.b * x + q.e; }
Vec grad_x(const QuadraticPDE& q, const Vec& x, const Vec& y) {
  return 2.0 * q.a * x + q.b.transpose() * y + q.f;
}

}  // namespace

QuadraticPDE QuadraticPDE::zeros(int n) {
  if (n < 1) throw InvalidArgument("quadratic PDE dimension must be >= 1");
  return {n, Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(n, n), Vec::Zero(n), Vec::Zero(n), 0.0};
}

void QuadraticPDE::validate() const {
  if (n < 1) throw InvalidArgument("quadratic PDE dimension must be >= 1");
  auto square = [this](const Mat& m, const char* name) {
    if (m.rows() != n || m.cols() != n)
      throw InvalidArgument(std::string("block ") + name + " must be " + std::to_string(n) + "x" +
                            std::to_string(n));
    if (!m.allFinite()) throw InvalidArgument(std::string("block ") + name + " has non-finite entries");
  };
  square(a, "a");
  square(b, "b");
  square(c, "c");
  if (e.size() != n || f.size() != n) throw InvalidArgument("vectors e and f must have length n");
  if (!e.allFinite() || !f.allFinite() || !std::isfinite(h0))
    throw InvalidArgument("quadratic PDE has non-finite coefficients");
  auto symmetric = [](const Mat& m) {
    return inf_norm(Mat(m - m.transpose())) <= 1e-12 * std::max(1.0, inf_norm(m));
  };
  if (!symmetric(a)) throw InvalidArgument("block a must be symmetric");
  if (!symmetric(c)) throw InvalidArgument("block c must be symmetric");
}

Mat assemble_B(const QuadraticPDE& q) {
  q.validate();
  const int n = q.n;
  Mat B(2 * n, 2 * n);
  B << q.a, 0.5 * q.b, 0.5 * q.b.transpose(), q.c;
  return B;
}

double eval_h(const QuadraticPDE& q, const Vec& x, const Vec& y) {
  if (x.size() != q.n || y.size() != q.n) throw InvalidArgument("eval_h: dimension mismatch");
  return y.dot(q.c * y) + y.dot(q.b * x) + x.dot(q.a * x) + q.e.dot(y) + q.f.dot(x) - q.h0;
}

Hamiltonian quadratic_hamiltonian(const QuadraticPDE& q) {
  q.validate();
  auto value = [q](const JetPoint& p) { return eval_h(q, p.x, p.y); };
  auto gradient = [q](const JetPoint& p) { return JetGradient{grad_x(q, p.x, p.y), grad_y(q, p.x, p.y), 0.0}; };
  return Hamiltonian::analytic(q.n, value, gradient, true);
}

GeneratorU to_generator(const QuadraticPDE& q) {
  q.validate();
  const int n = q.n;
  Mat A(2 * n, 2 * n);
  A << q.b, 2.0 * q.c, -2.0 * q.a, -q.b.transpose();
  Vec v(2 * n);
  v << q.e, -q.f;
  GeneratorU u(std::move(A), std::move(v), q.h0);

  const Hamiltonian h = quadratic_hamiltonian(q);
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int i = 0; i < kSelfCheckPoints; ++i) {
    Vec w(2 * n);
    for (auto& wi : w) wi = dist(rng);
    const auto [x, y] = split(w, n);
    const TangentVector xc = characteristic_field(h, {x, y, 0.0});
    Vec xc_w(2 * n);
    xc_w << xc.dx, xc.dy;
    const AffineRate gen = generator_field_at(u, w, 0.0);
    const double scale = std::max(1.0, inf_norm(xc_w));
    if (inf_norm(Vec(xc_w - gen.dw)) > kSelfCheckTol * scale)
      throw Error("to_generator: generator field does not reproduce the characteristic field");
  }
  return u;
}

bool commutation_condition(const QuadraticPDE& q, double tol) {
  q.validate();
  return inf_norm(q.a) <= tol && inf_norm(q.b) <= tol && inf_norm(q.f) <= tol;
}

double commutator_density(const QuadraticPDE& q, const Vec& x, const Vec& y) {
  q.validate();
  if (x.size() != q.n || y.size() != q.n) throw InvalidArgument("commutator_density: dimension mismatch");
  // Shared (x, y) flow xi; z-rates Z_c = y.h_y and Z_u = h0 - f.x - e.y.
  const Vec xdot = grad_y(q, x, y);
  const Vec ydot = -grad_x(q, x, y);
  const Vec dZc_dx = q.b.transpose() * y;
  const Vec dZc_dy = 4.0 * q.c * y + q.b * x + q.e;
  const double xi_Zc = dZc_dx.dot(xdot) + dZc_dy.dot(ydot);
  const double xi_Zu = -q.f.dot(xdot) - q.e.dot(ydot);
  return xi_Zc - xi_Zu;
}

VectorField quadratic_characteristic_field(const QuadraticPDE& q) {
  q.validate();
  const Hamiltonian h = quadratic_hamiltonian(q);
  auto eval = [h](const JetPoint& p) { return characteristic_field(h, p); };
  auto jac = [q](const JetPoint& p) {
    const int n = q.n;
    Mat D = Mat::Zero(2 * n + 1, 2 * n + 1);
    D.block(0, 0, n, n) = q.b;
    D.block(0, n, n, n) = 2.0 * q.c;
    D.block(n, 0, n, n) = -2.0 * q.a;
    D.block(n, n, n, n) = -q.b.transpose();
    D.block(2 * n, 0, 1, n) = (q.b.transpose() * p.y).transpose();
    D.block(2 * n, n, 1, n) = (4.0 * q.c * p.y + q.b * p.x + q.e).transpose();
    return D;
  };
  return {eval, jac};
}

VectorField quadratic_contact_field(const QuadraticPDE& q) {
  q.validate();
  const Hamiltonian h = quadratic_hamiltonian(q);
  auto eval = [h](const JetPoint& p) { return contact_field(h, p); };
  auto jac = [q](const JetPoint& p) {
    const int n = q.n;
    Mat D = Mat::Zero(2 * n + 1, 2 * n + 1);
    D.block(0, 0, n, n) = q.b;
    D.block(0, n, n, n) = 2.0 * q.c;
    D.block(n, 0, n, n) = -2.0 * q.a;
    D.block(n, n, n, n) = -q.b.transpose();
    // dz = y^T c y - x^T a x - f.x + h0
    D.block(2 * n, 0, 1, n) = (-2.0 * q.a * p.x - q.f).transpose();
    D.block(2 * n, n, 1, n) = (2.0 * q.c * p.y).transpose();
    return D;
  };
  return {eval, jac};
}

VectorField generator_vector_field(const GeneratorU& u) {
  const int n = u.n();
  auto eval = [u, n](const JetPoint& p) {
    Vec w(2 * n);
    w << p.x, p.y;
    const AffineRate r = generator_field_at(u, w, p.z);
    return TangentVector{r.dw.head(n), r.dw.tail(n), r.dz};
  };
  auto jac = [u, n](const JetPoint&) {
    Mat D = Mat::Zero(2 * n + 1, 2 * n + 1);
    D.block(0, 0, 2 * n, 2 * n) = u.A();
    D.block(2 * n, 0, 1, 2 * n) = (standard_symplectic_form(n).matrix * u.v()).transpose();
    return D;
  };
  return {eval, jac};
}

}  // namespace charflow
