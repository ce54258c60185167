#include "charflow/applications.hpp"

#include "charflow/csv.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <string>

namespace charflow {

MechanicalHamiltonian::MechanicalHamiltonian(int n_q, ValueFn value, PartialsFn partials)
    : n_q_(n_q), value_(std::move(value)), partials_(std::move(partials)) {
  if (n_q_ < 1) throw InvalidArgument("mechanical Hamiltonian needs n_q >= 1");
  if (!value_) throw InvalidArgument("mechanical Hamiltonian needs a value callback");
}

MechanicalHamiltonian::Partials MechanicalHamiltonian::partials(const Vec& q, const Vec& p, double t) const {
  if (partials_) return partials_(q, p, t);
  Partials d{Vec(n_q_), Vec(n_q_), 0.0};
  Vec qs = q, ps = p;
  for (int i = 0; i < n_q_; ++i) {
    const double hq = fd_step(q(i));
    qs(i) = q(i) + hq;
    const double a = value_(qs, p, t);
    qs(i) = q(i) - hq;
    const double b = value_(qs, p, t);
    qs(i) = q(i);
    d.q(i) = (a - b) / (2 * hq);

    const double hp = fd_step(p(i));
    ps(i) = p(i) + hp;
    const double c = value_(q, ps, t);
    ps(i) = p(i) - hp;
    const double e = value_(q, ps, t);
    ps(i) = p(i);
    d.p(i) = (c - e) / (2 * hp);
  }
  const double ht = fd_step(t);
  d.t = (value_(q, p, t + ht) - value_(q, p, t - ht)) / (2 * ht);
  return d;
}

Hamiltonian hj_lift(const MechanicalHamiltonian& H) {
  const int m = H.n_q();
  auto value = [H, m](const JetPoint& pt) { return H.value(pt.x.head(m), pt.y.head(m), pt.x(m)) + pt.y(m); };
  auto gradient = [H, m](const JetPoint& pt) {
    const auto d = H.partials(pt.x.head(m), pt.y.head(m), pt.x(m));
    JetGradient g{Vec(m + 1), Vec(m + 1), 0.0};
    g.x << d.q, d.t;
    g.y << d.p, 1.0;
    return g;
  };
  return Hamiltonian::analytic(m + 1, value, gradient, true);
}

Trajectory hj_characteristics(const MechanicalHamiltonian& H, const Vec& q0, const Vec& p0, SSpan t_span,
                              const IntegratorConfig& cfg) {
  const int m = H.n_q();
  if (q0.size() != m || p0.size() != m) throw InvalidArgument("hj_characteristics: q0 and p0 must have length n_q");
  const double t0 = t_span.first;
  JetPoint start{Vec(m + 1), Vec(m + 1), 0.0};
  start.x << q0, t0;
  start.y << p0, -H.value(q0, p0, t0);
  return integrate(hj_lift(H), FieldKind::Characteristic, start, t_span, cfg);
}

void LayeredMedium::validate() const {
  if (n < 1) throw InvalidArgument("layered medium needs n >= 1");
  if (axis < 0 || axis >= n) throw InvalidArgument("layered medium axis must lie in [0, n)");
  if (N_values.empty()) throw InvalidArgument("layered medium needs at least one layer");
  if (interfaces.size() + 1 != N_values.size())
    throw InvalidArgument("layered medium needs exactly one more N value than interfaces");
  for (double N : N_values)
    if (!(N > 0.0) || !std::isfinite(N)) throw InvalidArgument("layer N values must be positive and finite");
  for (std::size_t i = 0; i < interfaces.size(); ++i) {
    if (!std::isfinite(interfaces[i])) throw InvalidArgument("interface positions must be finite");
    if (i > 0 && !(interfaces[i] > interfaces[i - 1]))
      throw InvalidArgument("interfaces must be strictly increasing");
  }
}

std::size_t LayeredMedium::layer_of(const Vec& x) const {
  if (x.size() != n) throw InvalidArgument("layer_of: point has the wrong dimension");
  const auto it = std::upper_bound(interfaces.begin(), interfaces.end(), x(axis));
  return static_cast<std::size_t>(it - interfaces.begin());
}

QuadraticPDE layer_quadratic(const LayeredMedium& med, std::size_t k) {
  med.validate();
  if (k >= med.layer_count())
    throw InvalidArgument("layer index " + std::to_string(k) + " out of range [0, " +
                          std::to_string(med.layer_count()) + ")");
  QuadraticPDE q = QuadraticPDE::zeros(med.n);
  q.c = 0.5 * Mat::Identity(med.n, med.n);
  q.h0 = med.N_values[k];
  return q;
}

GeneratorU layer_generator(const LayeredMedium& med, std::size_t k) { return to_generator(layer_quadratic(med, k)); }

const char* to_string(RayEvent e) {
  switch (e) {
    case RayEvent::InterfaceCrossing: return "interface-crossing";
    case RayEvent::TotalInternalReflection: return "total-internal-reflection";
    case RayEvent::Terminal: return "terminal";
  }
  return "unknown";
}

namespace {

double exp_check(const GeneratorU& u, const JetPoint& entry, const JetPoint& exit, double ds) {
  const int n = entry.n();
  Vec w(2 * n);
  w << entry.x, entry.y;
  const auto [w_exp, z_exp] = affine_action(matrix_exponential(u, ds), w, entry.z);
  Vec w_exact(2 * n);
  w_exact << exit.x, exit.y;
  return inf_norm(Vec(w_exp - w_exact));
}

}  // namespace

Ray trace_ray(const LayeredMedium& med, const Vec& x0, const Vec& y0, double s_max, const IntegratorConfig& cfg,
              double z0) {
  med.validate();
  cfg.validate();
  const int n = med.n;
  const int ax = med.axis;
  if (x0.size() != n || y0.size() != n) throw InvalidArgument("trace_ray: x0 and y0 must have length n");
  if (!(s_max >= 0.0)) throw InvalidArgument("trace_ray: s_max must be >= 0");

  std::size_t k = med.layer_of(x0);
  const double level0 = y0.squaredNorm() - 2.0 * med.N_values[k];
  if (std::abs(level0) > 1e-8 * std::max(1.0, 2.0 * med.N_values[k]))
    throw InvalidArgument("trace_ray: |y0|^2 must equal 2 N of the starting layer (off by " +
                          std::to_string(level0) + ")");

  // Built on first visit; most rays see few layers.
  std::vector<std::optional<GeneratorU>> gens(med.layer_count());

  Ray ray;
  JetPoint state{x0, y0, z0};
  double s = 0.0;
  for (;;) {
    if (static_cast<long>(ray.segments.size()) >= cfg.max_steps)
      throw IntegrationError("trace_ray: segment budget exceeded", s);

    const double ya = state.y(ax);
    double to_hit = std::numeric_limits<double>::infinity();
    double plane = 0.0;
    std::size_t next = k;
    if (ya > 0.0 && k + 1 < med.layer_count()) {
      plane = med.interfaces[k];
      to_hit = (plane - state.x(ax)) / ya;
      next = k + 1;
    } else if (ya < 0.0 && k > 0) {
      plane = med.interfaces[k - 1];
      to_hit = (plane - state.x(ax)) / ya;
      next = k - 1;
    }
    to_hit = std::max(to_hit, 0.0);

    const bool terminal = s + to_hit >= s_max;
    const double ds = terminal ? s_max - s : to_hit;

    RaySegment seg;
    seg.layer = k;
    seg.s_start = s;
    seg.s_end = s + ds;
    seg.entry = state;
    seg.exit = {state.x + ds * state.y, state.y, state.z + ds * state.y.squaredNorm()};
    if (!terminal) seg.exit.x(ax) = plane;
    if (!gens[k]) gens[k] = layer_generator(med, k);
    seg.exp_residual = exp_check(*gens[k], seg.entry, seg.exit, ds);

    if (terminal) {
      seg.s_end = s_max;
      seg.event = RayEvent::Terminal;
      ray.segments.push_back(std::move(seg));
      break;
    }

    state = seg.exit;
    s = seg.s_end;
    double tangential = 0.0;
    for (int i = 0; i < n; ++i)
      if (i != ax) tangential += state.y(i) * state.y(i);
    const double twoN = 2.0 * med.N_values[next];
    const double disc = twoN - tangential;
    const double grazing = 1e-12 * std::max(1.0, twoN);
    if (disc > grazing) {
      state.y(ax) = std::copysign(std::sqrt(disc), ya);
      k = next;
      seg.event = RayEvent::InterfaceCrossing;
    } else if (disc < -grazing) {
      state.y(ax) = -ya;
      seg.event = RayEvent::TotalInternalReflection;
    } else {
      throw DegeneratePoint("trace_ray: grazing incidence at interface " + std::to_string(plane) +
                            " (normal momentum vanishes)");
    }
    ray.segments.push_back(std::move(seg));
  }
  return ray;
}

std::vector<Ray> trace_rays_serial(const LayeredMedium& med, const std::vector<RayStart>& starts, double s_max,
                                   const IntegratorConfig& cfg) {
  std::vector<Ray> rays;
  rays.reserve(starts.size());
  for (const RayStart& st : starts) rays.push_back(trace_ray(med, st.x0, st.y0, s_max, cfg));
  return rays;
}

std::vector<Ray> trace_rays(const LayeredMedium& med, const std::vector<RayStart>& starts, double s_max,
                            const IntegratorConfig& cfg) {
  std::vector<Ray> rays(starts.size());
  std::vector<std::exception_ptr> errors(starts.size());
  const auto count = static_cast<long>(starts.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      rays[i] = trace_ray(med, starts[i].x0, starts[i].y0, s_max, cfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rays;
}

void write_ray_csv(std::ostream& os, const Ray& ray) {
  const int n = ray.segments.empty() ? 0 : ray.segments.front().entry.n();
  std::vector<std::string> header{"segment", "k", "s_start", "s_end"};
  for (int i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
  for (int i = 1; i <= n; ++i) header.push_back("y" + std::to_string(i));
  header.push_back("z");
  header.push_back("event");
  csv::write_row(os, header);
  for (std::size_t i = 0; i < ray.segments.size(); ++i) {
    const RaySegment& seg = ray.segments[i];
    std::vector<std::string> row{std::to_string(i), std::to_string(seg.layer), csv::format(seg.s_start),
                                 csv::format(seg.s_end)};
    for (int j = 0; j < n; ++j) row.push_back(csv::format(seg.exit.x(j)));
    for (int j = 0; j < n; ++j) row.push_back(csv::format(seg.exit.y(j)));
    row.push_back(csv::format(seg.exit.z));
    row.push_back(to_string(seg.event));
    csv::write_row(os, row);
  }
}

}  // namespace charflow
