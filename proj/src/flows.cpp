#include "charflow/flows.hpp"

#include "charflow/csv.hpp"

#include <cmath>
#include <string>

namespace charflow {

void IntegratorConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("integrator step must be > 0");
  if (max_steps < 1) throw InvalidArgument("integrator max_steps must be >= 1");
}

const char* to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Characteristic: return "characteristic";
    case FieldKind::Contact: return "contact";
    case FieldKind::Lifted: return "lifted";
  }
  return "unknown";
}

StateSamples rk4_integrate(const std::function<Vec(const Vec&)>& rhs, const Vec& y0, SSpan s_span,
                           const IntegratorConfig& cfg) {
  cfg.validate();
  const auto [s0, s1] = s_span;
  if (!(s1 >= s0)) throw InvalidArgument("integration span must satisfy s1 >= s0");
  if (!y0.allFinite()) throw IntegrationError("initial state is not finite", s0);

  const double length = s1 - s0;
  auto full_steps = static_cast<long>(std::floor(length / cfg.step));
  double tail = length - static_cast<double>(full_steps) * cfg.step;
  if (tail <= 1e-12 * cfg.step) tail = 0.0;
  const long total = full_steps + (tail > 0.0 ? 1 : 0);
  if (total > cfg.max_steps)
    throw IntegrationError("step budget exceeded: need " + std::to_string(total) + " steps, max_steps = " +
                               std::to_string(cfg.max_steps),
                           s0);

  StateSamples out;
  out.s.reserve(total + 1);
  out.states.reserve(total + 1);
  out.s.push_back(s0);
  out.states.push_back(y0);

  Vec y = y0;
  for (long i = 0; i < total; ++i) {
    const double s_prev = out.s.back();
    const double s_next = (i < full_steps) ? s0 + static_cast<double>(i + 1) * cfg.step : s1;
    const double h = s_next - s_prev;
    try {
      const Vec k1 = rhs(y);
      const Vec k2 = rhs(y + 0.5 * h * k1);
      const Vec k3 = rhs(y + 0.5 * h * k2);
      const Vec k4 = rhs(y + h * k3);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } catch (const DegeneratePoint& e) {
      throw IntegrationError(std::string("field not evaluable after s = ") + std::to_string(s_prev) + ": " + e.what(),
                             s_prev);
    }
    if (!y.allFinite()) throw IntegrationError("state became non-finite after s = " + std::to_string(s_prev), s_prev);
    out.s.push_back(s_next);
    out.states.push_back(y);
  }
  return out;
}

namespace {

Trajectory assemble(const StateSamples& samples, int n, FieldKind kind,
                    const std::function<double(const JetPoint&)>& level) {
  Trajectory tr;
  tr.field_kind = kind;
  tr.s_values = samples.s;
  tr.points.reserve(samples.states.size());
  tr.h_values.reserve(samples.states.size());
  for (const Vec& st : samples.states) {
    tr.points.push_back(JetPoint::unpack(st, n));
    tr.h_values.push_back(level(tr.points.back()));
  }
  return tr;
}

}  // namespace

Trajectory integrate(const Hamiltonian& h, FieldKind kind, const JetPoint& p0, SSpan s_span,
                     const IntegratorConfig& cfg) {
  const int n = h.n();
  if (p0.n() != n || p0.y.size() != n) throw InvalidArgument("initial point dimension mismatch");
  std::function<Vec(const Vec&)> rhs;
  switch (kind) {
    case FieldKind::Characteristic:
      rhs = [&h, n](const Vec& st) { return characteristic_field(h, JetPoint::unpack(st, n)).packed(); };
      break;
    case FieldKind::Contact:
      if (!h.z_independent()) throw InvalidArgument("contact field X_h^1 requires dh/dz = 0");
      rhs = [&h, n](const Vec& st) { return contact_field(h, JetPoint::unpack(st, n)).packed(); };
      break;
    case FieldKind::Lifted:
      return integrate_lifted(LiftedHamiltonian::from_contact(h), 1.0, p0, s_span, cfg);
  }
  const auto samples = rk4_integrate(rhs, p0.packed(), s_span, cfg);
  return assemble(samples, n, kind, [&h](const JetPoint& p) { return h.value(p); });
}

Trajectory integrate_lifted(const LiftedHamiltonian& hh, double t, const JetPoint& p0, SSpan s_span,
                            const IntegratorConfig& cfg) {
  const int n = hh.n();
  if (!(t > 0.0)) throw InvalidArgument("lifted flow needs t > 0");
  if (p0.n() != n || p0.y.size() != n) throw InvalidArgument("initial point dimension mismatch");
  auto rhs = [&hh, t, n](const Vec& st) {
    const JetPoint p = JetPoint::unpack(st, n);
    const LiftedRate r = lifted_field(hh, {t, p.x, p.y, p.z});
    return TangentVector{r.dx, r.dy, r.dz}.packed();
  };
  const auto samples = rk4_integrate(rhs, p0.packed(), s_span, cfg);
  return assemble(samples, n, FieldKind::Lifted,
                  [&hh, t](const JetPoint& p) { return hh.value(t, p.x, p.y); });
}

ConservationReport conservation_report(const Trajectory& tr) {
  ConservationReport r;
  if (tr.h_values.empty()) return r;
  const double h0 = tr.h_values.front();
  for (double hv : tr.h_values) r.max_drift = std::max(r.max_drift, std::abs(hv - h0));
  return r;
}

double flow_vs_exponential(const GeneratorU& u, const Vec& w0, double z0, double s, const IntegratorConfig& cfg) {
  const int n2 = 2 * u.n();
  if (w0.size() != n2) throw InvalidArgument("flow_vs_exponential: w0 must have length 2n");
  auto rhs = [&u, n2](const Vec& st) {
    const AffineRate r = generator_field_at(u, st.head(n2), st(n2));
    Vec d(n2 + 1);
    d << r.dw, r.dz;
    return d;
  };
  Vec y0(n2 + 1);
  y0 << w0, z0;

  Vec flowed;
  if (s >= 0.0) {
    flowed = rk4_integrate(rhs, y0, {0.0, s}, cfg).states.back();
  } else {
    auto back = [&rhs](const Vec& st) { return Vec(-rhs(st)); };
    flowed = rk4_integrate(back, y0, {0.0, -s}, cfg).states.back();
  }
  const auto [w_exp, z_exp] = affine_action(matrix_exponential(u, s), w0, z0);
  Vec exact(n2 + 1);
  exact << w_exp, z_exp;
  return inf_norm(Vec(flowed - exact));
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  const int n = tr.points.empty() ? 0 : tr.points.front().n();
  std::vector<std::string> header{"s"};
  for (int i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
  for (int i = 1; i <= n; ++i) header.push_back("y" + std::to_string(i));
  header.push_back("z");
  header.push_back("h");
  csv::write_row(os, header);
  for (std::size_t k = 0; k < tr.points.size(); ++k) {
    const JetPoint& p = tr.points[k];
    std::vector<std::string> row{csv::format(tr.s_values[k])};
    for (int i = 0; i < n; ++i) row.push_back(csv::format(p.x(i)));
    for (int i = 0; i < n; ++i) row.push_back(csv::format(p.y(i)));
    row.push_back(csv::format(p.z));
    row.push_back(csv::format(tr.h_values[k]));
    csv::write_row(os, row);
  }
}

}  // namespace charflow
