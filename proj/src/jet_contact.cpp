#include "charflow/jet_contact.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace charflow {

namespace {

void check_dims(const JetPoint& p, int n) {
  if (p.x.size() != n || p.y.size() != n)
    throw InvalidArgument("jet point dimension mismatch: expected n = " + std::to_string(n));
}

void check_finite(const JetGradient& g) {
  if (!g.x.allFinite() || !g.y.allFinite() || !std::isfinite(g.z))
    throw DegeneratePoint("Hamiltonian gradient is not finite");
}

}  // namespace

double fd_step(double coordinate) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(coordinate));
}

Vec JetPoint::packed() const {
  const auto n = x.size();
  Vec s(2 * n + 1);
  s << x, y, z;
  return s;
}

JetPoint JetPoint::unpack(const Vec& state, int n) {
  return {state.head(n), state.segment(n, n), state(2 * n)};
}

Vec TangentVector::packed() const {
  const auto n = dx.size();
  Vec s(2 * n + 1);
  s << dx, dy, dz;
  return s;
}

TangentVector TangentVector::unpack(const Vec& v, int n) {
  return {v.head(n), v.segment(n, n), v(2 * n)};
}

Hamiltonian::Hamiltonian(int n, ValueFn value, GradientFn gradient, bool z_independent)
    : n_(n), value_(std::move(value)), gradient_(std::move(gradient)), z_independent_(z_independent) {
  if (n_ < 1) throw InvalidArgument("Hamiltonian dimension must be >= 1");
  if (!value_) throw InvalidArgument("Hamiltonian needs a value callback");
}

Hamiltonian Hamiltonian::analytic(int n, ValueFn value, GradientFn gradient, bool z_independent) {
  if (!gradient) throw InvalidArgument("analytic Hamiltonian needs a gradient callback");
  return Hamiltonian(n, std::move(value), std::move(gradient), z_independent);
}

Hamiltonian Hamiltonian::finite_difference(int n, ValueFn value, bool z_independent) {
  return Hamiltonian(n, std::move(value), {}, z_independent);
}

double Hamiltonian::value(const JetPoint& p) const {
  check_dims(p, n_);
  return value_(p);
}

JetGradient Hamiltonian::gradient(const JetPoint& p) const {
  check_dims(p, n_);
  if (!gradient_) return fd_gradient(p);
  JetGradient g = gradient_(p);
  if (g.x.size() != n_ || g.y.size() != n_)
    throw InvalidArgument("gradient callback returned vectors of the wrong length");
  if (z_independent_) g.z = 0.0;
  check_finite(g);
  return g;
}

JetGradient Hamiltonian::fd_gradient(const JetPoint& p) const {
  check_dims(p, n_);
  JetGradient g{Vec(n_), Vec(n_), 0.0};
  JetPoint q = p;
  for (int i = 0; i < n_; ++i) {
    const double hx = fd_step(p.x(i));
    q.x(i) = p.x(i) + hx;
    const double fp = value_(q);
    q.x(i) = p.x(i) - hx;
    const double fm = value_(q);
    q.x(i) = p.x(i);
    g.x(i) = (fp - fm) / (2 * hx);

    const double hy = fd_step(p.y(i));
    q.y(i) = p.y(i) + hy;
    const double gp = value_(q);
    q.y(i) = p.y(i) - hy;
    const double gm = value_(q);
    q.y(i) = p.y(i);
    g.y(i) = (gp - gm) / (2 * hy);
  }
  if (!z_independent_) {
    const double hz = fd_step(p.z);
    q.z = p.z + hz;
    const double fp = value_(q);
    q.z = p.z - hz;
    const double fm = value_(q);
    g.z = (fp - fm) / (2 * hz);
  }
  check_finite(g);
  return g;
}

LiftedHamiltonian::LiftedHamiltonian(int n, ValueFn value, PartialsFn partials)
    : n_(n), value_(std::move(value)), partials_(std::move(partials)) {
  if (n_ < 1) throw InvalidArgument("lifted Hamiltonian dimension must be >= 1");
  if (!value_) throw InvalidArgument("lifted Hamiltonian needs a value callback");
}

LiftedHamiltonian LiftedHamiltonian::from_contact(const Hamiltonian& h) {
  if (!h.z_independent()) throw InvalidArgument("lifting t*h requires a z-independent h");
  auto value = [h](double t, const Vec& x, const Vec& y) { return t * h.value({x, y, 0.0}); };
  auto partials = [h](double t, const Vec& x, const Vec& y) {
    const JetPoint p{x, y, 0.0};
    const JetGradient g = h.gradient(p);
    return Partials{h.value(p), t * g.x, t * g.y};
  };
  return LiftedHamiltonian(h.n(), value, partials);
}

LiftedHamiltonian::Partials LiftedHamiltonian::partials(double t, const Vec& x, const Vec& y) const {
  if (x.size() != n_ || y.size() != n_) throw InvalidArgument("lifted Hamiltonian dimension mismatch");
  if (partials_) return partials_(t, x, y);

  Partials d{0.0, Vec(n_), Vec(n_)};
  const double ht = fd_step(t);
  d.t = (value_(t + ht, x, y) - value_(t - ht, x, y)) / (2 * ht);
  Vec xs = x, ys = y;
  for (int i = 0; i < n_; ++i) {
    const double hx = fd_step(x(i));
    xs(i) = x(i) + hx;
    const double fp = value_(t, xs, y);
    xs(i) = x(i) - hx;
    const double fm = value_(t, xs, y);
    xs(i) = x(i);
    d.x(i) = (fp - fm) / (2 * hx);

    const double hy = fd_step(y(i));
    ys(i) = y(i) + hy;
    const double gp = value_(t, x, ys);
    ys(i) = y(i) - hy;
    const double gm = value_(t, x, ys);
    ys(i) = y(i);
    d.y(i) = (gp - gm) / (2 * hy);
  }
  return d;
}

double contact_form_at(const JetPoint& p, const TangentVector& V) {
  if (V.dx.size() != p.y.size()) throw InvalidArgument("contact form: dimension mismatch");
  return V.dz - p.y.dot(V.dx);
}

double d_contact_form_at(const JetPoint& p, const TangentVector& V, const TangentVector& W) {
  if (V.dx.size() != p.x.size() || W.dx.size() != p.x.size() || V.dy.size() != p.x.size() ||
      W.dy.size() != p.x.size())
    throw InvalidArgument("d(theta): dimension mismatch");
  return V.dx.dot(W.dy) - W.dx.dot(V.dy);
}

TangentVector characteristic_field(const Hamiltonian& h, const JetPoint& p) {
  const JetGradient g = h.gradient(p);
  return {g.y, -g.x - p.y * g.z, p.y.dot(g.y)};
}

TangentVector contact_field(const Hamiltonian& h, const JetPoint& p) {
  if (!h.z_independent()) throw InvalidArgument("contact field X_h^1 requires dh/dz = 0");
  const JetGradient g = h.gradient(p);
  return {g.y, -g.x, -h.value(p) + p.y.dot(g.y)};
}

LiftedRate lifted_field(const LiftedHamiltonian& hh, const SymplPoint& q) {
  if (!(q.t > 0.0)) throw InvalidArgument("lifted field needs t > 0, got t = " + std::to_string(q.t));
  const auto d = hh.partials(q.t, q.x, q.y);
  LiftedRate r;
  r.dt = 0.0;
  r.dx = d.y / q.t;
  r.dy = -d.x / q.t;
  r.dz = -d.t + q.y.dot(d.y) / q.t;
  return r;
}

std::vector<TangentVector> characteristic_plane_basis(const Hamiltonian& h, const JetPoint& p) {
  const int n = h.n();
  const JetGradient g = h.gradient(p);
  Vec dh(2 * n + 1);
  dh << g.x, g.y, g.z;
  const double dh_norm = dh.norm();
  if (dh_norm == 0.0 || dh_norm < 1e-14)
    throw DegeneratePoint("characteristic plane undefined: dh vanishes at the point");

  Mat C(2 * n + 1, 2);
  C.col(0) << -p.y, Vec::Zero(n), 1.0;
  C.col(1) = dh;

  Eigen::HouseholderQR<Mat> qr(C);
  const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  // dh parallel to theta means the level set is tangent to the contact plane.
  if (std::abs(R(1, 1)) <= 1e-12 * dh_norm)
    throw DegeneratePoint("characteristic point: dh is proportional to theta (level set not transversal)");

  const Mat Q = qr.householderQ() * Mat::Identity(2 * n + 1, 2 * n + 1);
  std::vector<TangentVector> basis;
  basis.reserve(2 * n - 1);
  for (int j = 2; j < 2 * n + 1; ++j) basis.push_back(TangentVector::unpack(Q.col(j), n));
  return basis;
}

Mat finite_difference_jacobian(const std::function<TangentVector(const JetPoint&)>& field,
                               const JetPoint& p) {
  const int n = p.n();
  const Vec s = p.packed();
  Mat Jac(2 * n + 1, 2 * n + 1);
  Vec sp = s;
  for (int j = 0; j < s.size(); ++j) {
    const double eps = fd_step(s(j));
    sp(j) = s(j) + eps;
    const Vec fp = field(JetPoint::unpack(sp, n)).packed();
    sp(j) = s(j) - eps;
    const Vec fm = field(JetPoint::unpack(sp, n)).packed();
    sp(j) = s(j);
    Jac.col(j) = (fp - fm) / (2 * eps);
  }
  return Jac;
}

BracketValue commutator_with_scale(const VectorField& X, const VectorField& Y, const JetPoint& p,
                                   BracketScheme scheme) {
  const int n = p.n();
  Mat DX, DY;
  if (scheme == BracketScheme::ExactAffine) {
    if (!X.jacobian || !Y.jacobian)
      throw InvalidArgument("exact-affine bracket needs closed-form Jacobians for both fields");
    DX = X.jacobian(p);
    DY = Y.jacobian(p);
  } else {
    DX = finite_difference_jacobian(X.eval, p);
    DY = finite_difference_jacobian(Y.eval, p);
  }
  const Vec xv = X.eval(p).packed();
  const Vec yv = Y.eval(p).packed();
  const Vec a = DY * xv;
  const Vec b = DX * yv;
  return {TangentVector::unpack(a - b, n), std::max(inf_norm(a), inf_norm(b))};
}

TangentVector commutator(const VectorField& X, const VectorField& Y, const JetPoint& p,
                         BracketScheme scheme) {
  return commutator_with_scale(X, Y, p, scheme).bracket;
}

VectorField characteristic_vector_field(const Hamiltonian& h) {
  return {[h](const JetPoint& p) { return characteristic_field(h, p); }, {}};
}

VectorField contact_vector_field(const Hamiltonian& h) {
  if (!h.z_independent()) throw InvalidArgument("contact field X_h^1 requires dh/dz = 0");
  return {[h](const JetPoint& p) { return contact_field(h, p); }, {}};
}

CoincidenceResidual verify_coincidence(const Hamiltonian& h, const JetPoint& p) {
  if (!h.z_independent()) throw InvalidArgument("coincidence check requires dh/dz = 0");
  const Vec xc = characteristic_field(h, p).packed();
  const Vec xh = contact_field(h, p).packed();
  const double hv = h.value(p);
  Vec diff = xh - xc;
  CoincidenceResidual r;
  r.coincidence = inf_norm(diff);
  diff(diff.size() - 1) += hv;
  r.identity = inf_norm(diff);
  r.abs_h = std::abs(hv);
  return r;
}

JetPoint solve_on_level(const Hamiltonian& h, const Vec& x, double z, const Vec& y0, const Vec& dir,
                        double level, double r_max) {
  auto f = [&](double r) { return h.value({x, y0 + r * dir, z}) - level; };
  double lo = 0.0, flo = f(0.0);
  if (flo == 0.0) return {x, y0, z};
  double hi = 0.0, fhi = flo;
  bool bracketed = false;
  for (double r = 1e-3; r <= r_max; r *= 1.5) {
    const double fr = f(r);
    if ((fr < 0) != (flo < 0) || fr == 0.0) {
      hi = r;
      fhi = fr;
      bracketed = true;
      break;
    }
    lo = r;
    flo = fr;
  }
  if (!bracketed) throw NoRealSolution("no sign change of h - level along the search ray");
  if (fhi == 0.0) return {x, y0 + hi * dir, z};

  // Bracketed secant (Illinois variant); bisection when the secant leaves the bracket.
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    double r = hi - fhi * (hi - lo) / (fhi - flo);
    if (!(r > std::min(lo, hi) && r < std::max(lo, hi))) r = 0.5 * (lo + hi);
    const double fr = f(r);
    if (fr == 0.0 || std::abs(hi - lo) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(hi))
      return {x, y0 + r * dir, z};
    if ((fr < 0) == (flo < 0)) {
      lo = r;
      flo = fr;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = r;
      fhi = fr;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    if (std::abs(fr) <= 1e-15 * std::max(1.0, std::abs(level))) return {x, y0 + r * dir, z};
  }
  return {x, y0 + 0.5 * (lo + hi) * dir, z};
}

}  // namespace charflow
