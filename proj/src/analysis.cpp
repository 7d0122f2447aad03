#include "btc/analysis.hpp"

#include <cmath>
#include <sstream>

namespace btc {

namespace {

Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

void require_hermitian(const Matrix& a, const char* who) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument(std::string(who) + ": input is not Hermitian");
  }
}

}  // namespace

double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  require_hermitian(a.matrix, "fidelity");
  require_hermitian(b.matrix, "fidelity");
  const Matrix sb = psd_sqrt(b.matrix);
  const Matrix m = sb * a.matrix * sb;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  const double f = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(f, 0.0, 1.0);
}

double observable_value(const MomentRecord& m, Observable obs) {
  switch (obs) {
    case Observable::sx: return m.sx;
    case Observable::sy: return m.sy;
    case Observable::sz: return m.sz;
  }
  return m.sz;
}

std::vector<ExtremaRecord> find_extrema(const std::vector<double>& times,
                                        const std::vector<double>& values, double t0,
                                        double offset) {
  if (times.size() != values.size()) throw std::invalid_argument("find_extrema: size mismatch");
  std::vector<ExtremaRecord> out;
  for (std::size_t i = 1; i + 1 < values.size(); ++i) {
    const double a = values[i - 1], b = values[i], c = values[i + 1];
    const bool peak = b > a && b >= c;
    const bool trough = b < a && b <= c;
    if (!peak && !trough) continue;
    // parabola through (t_{i-1}, a), (t_i, b), (t_{i+1}, c) in coordinates centred on t_i
    const double h0 = times[i - 1] - times[i];
    const double h2 = times[i + 1] - times[i];
    const double d0 = a - b, d2 = c - b;
    const double curv = (d0 / h0 - d2 / h2) / (h0 - h2);  // quadratic coefficient
    const double slope = d0 / h0 - curv * h0;             // linear coefficient
    double dt = 0.0, v = b;
    if (curv != 0.0) {
      dt = -slope / (2.0 * curv);
      dt = std::clamp(dt, h0, h2);
      v = b + slope * dt + curv * dt * dt;
    }
    ExtremaRecord r;
    r.kind = peak ? ExtremumKind::peak : ExtremumKind::trough;
    r.t_star = times[i] + dt;
    const StroboscopicTime st = strobe_decompose(std::max(0.0, r.t_star), t0);
    r.s_star = st.s;
    r.r_n = st.r_n;
    r.value = v;
    r.delta_value = v - offset;
    out.push_back(r);
  }
  if (out.size() < 2) out.clear();
  return out;
}

std::vector<ExtremaRecord> find_extrema(const Trajectory& traj, Observable obs, double offset) {
  std::vector<double> v;
  v.reserve(traj.size());
  for (const MomentRecord& m : traj.moments) v.push_back(observable_value(m, obs));
  return find_extrema(traj.times, v, traj.params.t0(), offset);
}

std::optional<std::string> check_alternation(const std::vector<ExtremaRecord>& ex) {
  for (std::size_t i = 1; i < ex.size(); ++i) {
    if (ex[i].kind == ex[i - 1].kind) {
      std::ostringstream msg;
      msg << "extrema " << i - 1 << " and " << i << " are both "
          << (ex[i].kind == ExtremumKind::peak ? "peaks" : "troughs") << " (t = " << ex[i].t_star << ")";
      return msg.str();
    }
  }
  return std::nullopt;
}

std::vector<PeriodPoint> empirical_period(const std::vector<ExtremaRecord>& ex, double t0) {
  std::vector<PeriodPoint> out;
  for (ExtremumKind kind : {ExtremumKind::peak, ExtremumKind::trough}) {
    const ExtremaRecord* prev = nullptr;
    for (const ExtremaRecord& e : ex) {
      if (e.kind != kind) continue;
      if (prev) {
        PeriodPoint p;
        p.r_n = prev->r_n;
        p.t = 0.5 * (prev->t_star + e.t_star);
        p.period = e.t_star - prev->t_star;
        p.shift = (p.period - t0) / t0;
        p.branch = kind;
        out.push_back(p);
      }
      prev = &e;
    }
  }
  return out;
}

DecaySeries empirical_decay_rate(const std::vector<ExtremaRecord>& ex) {
  DecaySeries out;
  for (ExtremumKind kind : {ExtremumKind::peak, ExtremumKind::trough}) {
    const ExtremaRecord* prev = nullptr;
    for (const ExtremaRecord& e : ex) {
      if (e.kind != kind) continue;
      if (prev) {
        const double d1 = prev->delta_value, d2 = e.delta_value;
        if (d1 == 0.0 || d2 == 0.0 || (d1 > 0.0) != (d2 > 0.0)) {
          std::ostringstream msg;
          msg << "skipped pair at t = " << prev->t_star << ", " << e.t_star << ": delta changed sign";
          out.skipped.push_back(msg.str());
        } else {
          DecayPoint p;
          p.r_n = prev->r_n;
          p.t = 0.5 * (prev->t_star + e.t_star);
          p.gamma = -std::log(d2 / d1) / (e.t_star - prev->t_star);
          p.branch = kind;
          out.points.push_back(p);
        }
      }
      prev = &e;
    }
  }
  return out;
}

int branch_sign(ExtremumKind branch) { return branch == ExtremumKind::peak ? -1 : 1; }

namespace {

double transverse_norm3(const MomentSet& m) {
  const double r2 = m.sy * m.sy + m.sz * m.sz;
  if (!(r2 > 0.0)) {
    throw std::invalid_argument("memory term undefined: <Sy>_0 and <Sz>_0 both vanish");
  }
  return std::pow(r2, 1.5);
}

}  // namespace

double period_memory_term(const MomentSet& m, double r_n, const ModelParams& params) {
  const double k = params.kappa, w = params.omega0, n = params.n_spins;
  const double num = 2.0 * m.sy * m.sz * m.syz_sym + (m.sy2 - m.sz2) * m.sy * m.sy +
                     (m.sz2 - m.sy2) * m.sz * m.sz;
  return 7.0 * k * k / (w * w * n * n) * num / transverse_norm3(m) * std::exp(-3.5 * k * r_n / n);
}

double analytic_period_shift(const MomentSet& m, double r_n, const ModelParams& params,
                             ExtremumKind branch) {
  const double k = params.kappa, w = params.omega0, n = params.n_spins;
  const double base = (4.0 * n * n + 8.0 * n - 11.0) * k * k / (8.0 * w * w * n * n);
  return base + branch_sign(branch) * period_memory_term(m, r_n, params);
}

double decay_memory_term(const MomentSet& m, double r_n, const ModelParams& params) {
  const double k = params.kappa, w = params.omega0, n = params.n_spins;
  const double num = (m.sz * m.sz - m.sy * m.sy) * m.syz_sym + 2.0 * m.sy * m.sz * (m.sy2 - m.sz2);
  return 7.0 * k * k / (2.0 * w * n * n) * num / transverse_norm3(m) * std::exp(-3.5 * k * r_n / n);
}

double analytic_decay_rate(const MomentSet& m, double r_n, const ModelParams& params,
                           ExtremumKind branch) {
  return 1.5 * params.kappa / params.n_spins + branch_sign(branch) * decay_memory_term(m, r_n, params);
}

std::vector<double> meanfield_error(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw std::invalid_argument("meanfield_error: trajectories differ in length");
  const double n = a.params.n_spins;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.times[i] - b.times[i]) > 1e-9 * std::max(1.0, std::abs(a.times[i]))) {
      throw std::invalid_argument("meanfield_error: time grids differ");
    }
    out[i] = std::abs(a.moments[i].sz - b.moments[i].sz) / n;
  }
  return out;
}

double period_max(const std::vector<double>& times, const std::vector<double>& err, double t0, long k) {
  const double lo = k * t0, hi = (k + 1) * t0, eps = 1e-9 * t0;
  double m = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= lo - eps && times[i] <= hi + eps) {
      m = std::max(m, err[i]);
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("period_max: no samples in the requested period");
  return m;
}

}  // namespace btc
