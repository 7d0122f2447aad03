#include "btc/propagate.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace btc {

StroboscopicTime strobe_decompose(double t, double t0) {
  if (!(t0 > 0.0)) throw std::invalid_argument("strobe_decompose: period must be positive");
  if (!(t >= 0.0)) throw std::invalid_argument("strobe_decompose: negative time");
  double q = t / t0;
  long n = static_cast<long>(std::floor(q));
  // within 1e-12 of the next boundary: snap up
  if ((static_cast<double>(n + 1) * t0 - t) <= 1e-12 * std::max(1.0, t)) ++n;
  StroboscopicTime st;
  st.n = n;
  st.r_n = static_cast<double>(n) * t0;
  st.s = t - st.r_n;
  if (st.s < 0.0 || std::abs(st.s) <= 1e-12 * std::max(1.0, t)) st.s = 0.0;
  return st;
}

MomentRecord measure_moments(const SpinBasis& basis, const Matrix& rho) {
  const Matrix& x = basis.sx();
  const Matrix& y = basis.sy();
  const Matrix& z = basis.sz();
  MomentRecord m;
  m.sx = expectation(x, rho).real();
  m.sy = expectation(y, rho).real();
  m.sz = expectation(z, rho).real();
  m.sx2 = expectation(x * x, rho).real();
  m.sy2 = expectation(y * y, rho).real();
  m.sz2 = expectation(z * z, rho).real();
  m.syz_sym = expectation(y * z + z * y, rho).real();
  m.purity = purity(rho);
  return m;
}

void Trajectory::push(double t, const MomentRecord& m) {
  if (!times.empty() && !(t > times.back())) {
    throw std::logic_error("Trajectory: times must be strictly increasing");
  }
  times.push_back(t);
  moments.push_back(m);
  strobe_labels.push_back(strobe_decompose(t, params.t0()));
}

double Trajectory::moment_consistency(const SpinBasis& basis) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < states.size() && i < moments.size(); ++i) {
    const MomentRecord a = measure_moments(basis, states[i].matrix);
    const MomentRecord& b = moments[i];
    const double d[] = {a.sx - b.sx,   a.sy - b.sy,   a.sz - b.sz,           a.sx2 - b.sx2,
                        a.sy2 - b.sy2, a.sz2 - b.sz2, a.syz_sym - b.syz_sym, a.purity - b.purity};
    for (double v : d) worst = std::max(worst, std::abs(v));
  }
  return worst;
}

TimeGenerator lab_frame_time_generator(const ModelParams& params, const SpinBasis& basis) {
  return {lab_frame_rhs(params, basis), false, params.t0()};
}

TimeGenerator rotating_frame_time_generator(const ModelParams& params, const SpinBasis& basis) {
  return {rotating_frame_rhs(params, basis), true, params.t0()};
}

Trajectory evolve_fixed_step(const SpinBasis& basis, const ModelParams& params,
                             const TimeGenerator& gen, const DensityMatrix& rho0, double t_end,
                             double dt, int sample_every, const EvolveOptions& opts) {
  if (!(dt > 0.0)) throw std::invalid_argument("evolve_fixed_step: dt must be positive");
  if (sample_every < 1) throw std::invalid_argument("evolve_fixed_step: sample_every must be >= 1");
  if (gen.time_dependent && dt > gen.period / 50.0 * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "evolve_fixed_step: dt = " << dt << " exceeds period/50 = " << gen.period / 50.0;
    throw std::invalid_argument(msg.str());
  }
  if (rho0.dim() != basis.dim()) throw std::invalid_argument("evolve_fixed_step: dimension mismatch");
  const double span = t_end - opts.t_start;
  if (span < 0.0) throw std::invalid_argument("evolve_fixed_step: t_end before t_start");
  const long steps = std::lround(span / dt);
  if (std::abs(static_cast<double>(steps) * dt - span) > 1e-9 * std::max(1.0, std::abs(span))) {
    throw std::invalid_argument("evolve_fixed_step: t_end is not a whole number of steps");
  }

  Trajectory traj;
  traj.params = params;
  Matrix rho = rho0.matrix;
  const Eigen::Index d = rho.rows();
  Matrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);

  auto sample = [&](long i) {
    const double t = opts.t_start + static_cast<double>(i) * dt;
    if (opts.check_invariants) {
      if (!rho.allFinite()) {
        throw NumericalInvariantError("evolve_fixed_step: non-finite state at t = " + std::to_string(t));
      }
      const double lam = min_eigenvalue(rho);
      if (lam < opts.abort_eigenvalue) {
        std::ostringstream msg;
        msg << "evolve_fixed_step: eigenvalue " << lam << " below " << opts.abort_eigenvalue
            << " at t = " << t;
        throw NumericalInvariantError(msg.str());
      }
    }
    if (opts.sample_transform) {
      const Matrix out = opts.sample_transform(t, rho);
      traj.push(t, measure_moments(basis, out));
      if (opts.store_states) traj.states.push_back({out, t});
      if (opts.observer) opts.observer(t, out);
    } else {
      traj.push(t, measure_moments(basis, rho));
      if (opts.store_states) traj.states.push_back({rho, t});
      if (opts.observer) opts.observer(t, rho);
    }
  };

  sample(0);
  for (long i = 0; i < steps; ++i) {
    const double t = opts.t_start + static_cast<double>(i) * dt;
    gen.rhs(t, rho, k1);
    tmp = rho + (0.5 * dt) * k1;
    gen.rhs(t + 0.5 * dt, tmp, k2);
    tmp = rho + (0.5 * dt) * k2;
    gen.rhs(t + 0.5 * dt, tmp, k3);
    tmp = rho + dt * k3;
    gen.rhs(t + dt, tmp, k4);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    hermitize_normalize_inplace(rho);
    if ((i + 1) % sample_every == 0) sample(i + 1);
  }
  return traj;
}

Trajectory evolve_exact(const SpinBasis& basis, const ModelParams& params, const DensityMatrix& rho0,
                        double t_end, double dt, int sample_every, EvolveOptions opts) {
  params.validate(false);
  if (!(params.omega0 > 0.0)) {
    return evolve_fixed_step(basis, params, lab_frame_time_generator(params, basis), rho0, t_end, dt,
                             sample_every, opts);
  }
  // states at t_start are taken to be lab-frame; U(t_start) moves them over
  const Matrix u0 = frame_unitary(basis, params.omega0, opts.t_start);
  DensityMatrix start = rho0;
  start.matrix = u0.adjoint() * rho0.matrix * u0;
  auto inner = std::move(opts.sample_transform);
  const double w = params.omega0;
  opts.sample_transform = [&basis, w, inner](double t, const Matrix& rho) {
    const Matrix u = frame_unitary(basis, w, t);
    Matrix lab = u * rho * u.adjoint();
    return inner ? inner(t, lab) : lab;
  };
  return evolve_fixed_step(basis, params, rotating_frame_time_generator(params, basis), start, t_end,
                           dt, sample_every, opts);
}

Matrix dense_expm(const Matrix& a) {
  if (!a.allFinite()) throw NumericalInvariantError("dense_expm: non-finite entries");
  return a.exp();
}

DensityMatrix expm_apply(const Superoperator& superop, double duration, const DensityMatrix& rho) {
  if (duration < 0.0) throw std::invalid_argument("expm_apply: negative duration");
  if (superop.matrix.rows() != rho.matrix.size()) throw std::invalid_argument("expm_apply: dimension mismatch");
  DensityMatrix out = rho;
  if (duration == 0.0) return out;
  const Matrix e = dense_expm(duration * superop.matrix);
  out.matrix = devectorize(e * vectorize(rho.matrix));
  if (rho.time_label) out.time_label = *rho.time_label + duration;
  return out;
}

double operator_norm_bound(const SandwichSum& map) { return map.norm_bound(); }

Matrix expmv(const SandwichSum& map, double duration, const Matrix& rho, double tol) {
  if (!std::isfinite(duration)) throw std::invalid_argument("expmv: non-finite duration");
  if (duration == 0.0 || map.empty()) return rho;
  const double theta = std::abs(duration) * map.norm_bound();
  const long substeps = std::max(1L, static_cast<long>(std::ceil(theta / 2.0)));
  const double h = duration / static_cast<double>(substeps);
  Matrix v = rho;
  Matrix term(rho.rows(), rho.cols());
  Matrix next(rho.rows(), rho.cols());
  for (long step = 0; step < substeps; ++step) {
    term = v;
    Matrix sum = v;
    double prev = term.norm();
    for (int k = 1; k <= 80; ++k) {
      next.setZero();
      map.apply_add(term, h / k, next);
      term.swap(next);
      sum += term;
      const double cur = term.norm();
      if (cur + prev <= tol * sum.norm()) break;
      prev = cur;
      if (k == 80) throw NumericalInvariantError("expmv: Taylor series did not converge");
    }
    v.swap(sum);
  }
  return v;
}

QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = order * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

namespace {

// int_a^b f, composite rule, summation in fixed node order
Matrix integrate(const SuperopFunction& gen, double a, double b, const QuadratureRule& rule,
                 int panels, Frame* frame) {
  Matrix acc;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double half = 0.5 * width;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const Superoperator l = gen(lo + half * (1.0 + rule.nodes[k]));
      if (acc.size() == 0) {
        acc = Matrix::Zero(l.matrix.rows(), l.matrix.cols());
        if (frame) *frame = l.frame_label;
      }
      acc += (half * rule.weights[k]) * l.matrix;
    }
  }
  return acc;
}

}  // namespace

Superoperator averaged_generator_numeric(const SuperopFunction& gen, double t_start, double t_end,
                                         int quad_order, int panels) {
  if (!(t_end > t_start)) throw std::invalid_argument("averaged_generator_numeric: empty interval");
  if (panels < 1) throw std::invalid_argument("averaged_generator_numeric: panels must be >= 1");
  Frame frame = Frame::averaged;
  Matrix m = integrate(gen, t_start, t_end, gauss_legendre(quad_order), panels, &frame);
  return {m / (t_end - t_start), Frame::averaged, Order::rwa0};
}

Superoperator cumulative_generator_numeric(const SuperopFunction& gen, double s, int quad_order,
                                           int panels) {
  if (s < 0.0) throw std::invalid_argument("cumulative_generator_numeric: negative s");
  if (panels < 1) throw std::invalid_argument("cumulative_generator_numeric: panels must be >= 1");
  if (s == 0.0) {
    const Superoperator l = gen(0.0);
    return {Matrix::Zero(l.matrix.rows(), l.matrix.cols()), l.frame_label, Order::short_time};
  }
  Frame frame = Frame::rotating;
  Matrix m = integrate(gen, 0.0, s, gauss_legendre(quad_order), panels, &frame);
  return {std::move(m), frame, Order::short_time};
}

Superoperator magnus1_numeric(const SuperopFunction& gen, double r_n, double period,
                              int quad_order) {
  if (!(period > 0.0) || !(r_n > 0.0)) throw std::invalid_argument("magnus1_numeric: r_n and period must be positive");
  const double q = r_n / period;
  const long n = std::lround(q);
  if (n < 1 || std::abs(q - static_cast<double>(n)) > 1e-9) {
    throw std::invalid_argument("magnus1_numeric: r_n must be an integer multiple of the period");
  }
  const QuadratureRule rule = gauss_legendre(quad_order);
  Matrix acc;
  Matrix full;  // int over completed periods
  for (long p = 0; p < n; ++p) {
    const double lo = p * period;
    const double half = 0.5 * period;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double tp = lo + half * (1.0 + rule.nodes[k]);
      const Matrix lt = gen(tp).matrix;
      if (acc.size() == 0) {
        acc = Matrix::Zero(lt.rows(), lt.cols());
        full = Matrix::Zero(lt.rows(), lt.cols());
      }
      Matrix inner = full;
      if (tp > lo) inner += integrate(gen, lo, tp, rule, 1, nullptr);
      acc += (half * rule.weights[k]) * (lt * inner - inner * lt);
    }
    full += integrate(gen, lo, lo + period, rule, 1, nullptr);
  }
  return {acc / (2.0 * r_n), Frame::averaged, Order::magnus1};
}

}  // namespace btc
