#include "btc/srwa.hpp"

#include <cmath>
#include <sstream>

namespace btc {

namespace {

void check_basis(const SpinBasis& basis, const ModelParams& params, const char* who) {
  if (basis.n_spins() != params.n_spins) {
    throw std::invalid_argument(std::string(who) + ": params and basis disagree on N");
  }
}

void check_remainder(const ModelParams& params, double s, const char* who) {
  if (!(s >= 0.0) || !(s < params.t0())) {
    throw std::invalid_argument(std::string(who) + ": s must lie in [0, T0)");
  }
}

// Blocks of G(s): s * Lbar0 plus four oscillating pieces, see g_weights.
std::array<SandwichSum, 5> g_blocks(const SpinBasis& basis, const ModelParams& params) {
  const Matrix& x = basis.sx();
  const Matrix& y = basis.sy();
  const Matrix& z = basis.sz();
  std::array<SandwichSum, 5> b;
  b[0] = lbar0_map(basis, params);
  b[1].add(dissipator_block(y, y)).add(dissipator_block(z, z), -1.0);
  b[2].add(dissipator_block(y, z)).add(dissipator_block(z, y));
  b[3].add(dissipator_block(x, y)).add(dissipator_block(y, x), -1.0);
  b[4].add(dissipator_block(z, x)).add(dissipator_block(x, z), -1.0);
  return b;
}

std::array<Complex, 5> g_weights(const ModelParams& params, double s) {
  const double w = params.omega0;
  const double g = params.kappa / (w * params.n_spins);
  const double sn = std::sin(w * s);
  const double sh = std::sin(0.5 * w * s);
  return {Complex(s), Complex(0.25 * g * std::sin(2.0 * w * s)), Complex(-0.5 * g * sn * sn),
          kI * g * sn, kI * (2.0 * g * sh * sh)};
}

SandwichSum combine(const std::array<SandwichSum, 5>& blocks, const std::array<Complex, 5>& w) {
  SandwichSum out;
  for (std::size_t i = 0; i < blocks.size(); ++i) out.add(blocks[i], w[i]);
  return out;
}

}  // namespace

SandwichSum lbar0_map(const SpinBasis& basis, const ModelParams& params) {
  check_basis(basis, params, "lbar0");
  const double g = params.kappa / params.n_spins;
  SandwichSum out;
  out.add(dissipator_block(basis.sx(), basis.sx()), g);
  out.add(dissipator_block(basis.sy(), basis.sy()), 0.5 * g);
  out.add(dissipator_block(basis.sz(), basis.sz()), 0.5 * g);
  return out;
}

Superoperator build_lbar0(const SpinBasis& basis, const ModelParams& params) {
  return lbar0_map(basis, params).to_superoperator(Frame::averaged, Order::rwa0);
}

SandwichSum lbar1_map(const SpinBasis& basis, const ModelParams& params) {
  check_basis(basis, params, "lbar1");
  if (!(params.omega0 > 0.0)) throw std::invalid_argument("lbar1: omega0 must be positive");
  const LRWord xl = LRWord::left(basis.sx()), xr = LRWord::right(basis.sx());
  const LRWord yl = LRWord::left(basis.sy()), yr = LRWord::right(basis.sy());
  const LRWord zl = LRWord::left(basis.sz()), zr = LRWord::right(basis.sz());

  SandwichSum a;
  auto put = [&a](double c, const LRWord& w) { a += w * Complex(c); };
  put(16, xl * xl * xr);
  put(-16, xl * xr * xr);
  put(10, xl * yl * yr);
  put(-10, yl * xr * yr);
  put(18, xl * zl * zr);
  put(-18, zl * xr * zr);
  put(6, xl * yr * yr);
  put(6, yl * yr * xr);
  put(-6, yl * xl * yr);
  put(-6, yl * yl * xr);
  put(2, zl * xl * zr);
  put(2, zl * zl * xr);
  put(-2, zl * zr * xr);
  put(-2, xl * zr * zr);
  put(2, zr * xr * zr);
  put(-2, zl * xl * zl);
  put(-6, yr * xr * yr);
  put(6, yl * xl * yl);
  put(-4, xr * zr);
  put(-4, zr * xr);
  put(4, xl * zl);
  put(4, zl * xl);
  put(-5, xr);
  put(5, xl);

  SandwichSum b;
  b += yl * zr * zr;
  b += zl * zl * yr;
  b -= zl * yl * zr;
  b -= zl * zr * yr;
  b += yl * xr * xr * Complex(2);
  b += xl * xl * yr * Complex(2);
  b -= xl * yl * xr * Complex(2);
  b -= xl * xr * yr * Complex(2);

  const double k = params.kappa, w = params.omega0, n = params.n_spins;
  SandwichSum out;
  out.add(a, kI * (k * k / (8.0 * w * n * n)));
  out.add(b, 2.0 * k * k / (w * n * n));
  return out;
}

Superoperator build_lbar1(const SpinBasis& basis, const ModelParams& params) {
  return lbar1_map(basis, params).to_superoperator(Frame::averaged, Order::magnus1);
}

SandwichSum g_map(const SpinBasis& basis, const ModelParams& params, double s) {
  check_basis(basis, params, "g_map");
  check_remainder(params, s, "g_map");
  return combine(g_blocks(basis, params), g_weights(params, s));
}

Superoperator build_g(const SpinBasis& basis, const ModelParams& params, double s) {
  return g_map(basis, params, s).to_superoperator(Frame::rotating, Order::short_time);
}

Superoperator build_g_weights122(const SpinBasis& basis, const ModelParams& params, double s) {
  check_basis(basis, params, "g_weights122");
  check_remainder(params, s, "g_weights122");
  auto blocks = g_blocks(basis, params);
  const double g = params.kappa / params.n_spins;
  blocks[0] = SandwichSum();
  blocks[0].add(dissipator_block(basis.sx(), basis.sx()), g);
  blocks[0].add(dissipator_block(basis.sy(), basis.sy()), 2.0 * g);
  blocks[0].add(dissipator_block(basis.sz(), basis.sz()), 2.0 * g);
  return combine(blocks, g_weights(params, s)).to_superoperator(Frame::rotating, Order::short_time);
}

// ---------------------------------------------------------------------------

double SrwaOptions::resolved_tolerance(const ModelParams& params) const {
  if (positivity_tolerance > 0.0) return positivity_tolerance;
  return std::max(1e-6, params.kappa / params.omega0);
}

SrwaEngine::SrwaEngine(const SpinBasis& basis, const ModelParams& params, SrwaOptions opts)
    : basis_(&basis), params_(params), opts_(opts) {
  params_.validate(true);
  check_basis(basis, params, "SrwaEngine");
  lbar_ = lbar0_map(basis, params);
  lbar_.add(lbar1_map(basis, params));
  g_blocks_ = g_blocks(basis, params);
  if (opts_.backend == SrwaBackend::dense) {
    ensure_dense_allowed(params.n_spins);
    period_propagator_ =
        dense_expm(params.t0() * lbar_.to_superoperator(Frame::averaged, Order::magnus1).matrix);
  }
}

Matrix SrwaEngine::step_period(const Matrix& rho) const {
  if (period_propagator_) return devectorize(*period_propagator_ * vectorize(rho));
  return expmv(lbar_, params_.t0(), rho);
}

Matrix SrwaEngine::finish(const Matrix& strobe_state, const StroboscopicTime& st) const {
  Matrix rho = strobe_state;
  if (st.s > 0.0) {
    combine(g_blocks_, g_weights(params_, st.s)).apply_add(strobe_state, 1.0, rho);
    const Matrix u = frame_unitary(*basis_, params_.omega0, st.s);
    rho = u * rho * u.adjoint();
  }
  hermitize_normalize_inplace(rho);
  if (opts_.check_positivity) {
    const double lam = min_eigenvalue(rho);
    const double tol = opts_.resolved_tolerance(params_);
    if (lam < -tol) {
      std::ostringstream msg;
      msg << "SRWA state has eigenvalue " << lam << " < -" << tol << " at t = " << st.r_n + st.s
          << " (omega0/kappa = " << params_.ratio() << ")";
      throw NumericalInvariantError(msg.str());
    }
  }
  return rho;
}

SrwaTrajectory::SrwaTrajectory(std::shared_ptr<const SrwaEngine> engine, DensityMatrix rho0)
    : engine_(std::move(engine)) {
  if (rho0.dim() != engine_->basis().dim()) throw std::invalid_argument("SrwaTrajectory: dimension mismatch");
  strobes_.push_back(std::move(rho0.matrix));
}

const Matrix& SrwaTrajectory::strobe_state(long n) {
  if (n < 0) throw std::invalid_argument("SrwaTrajectory: negative period index");
  while (static_cast<long>(strobes_.size()) <= n) strobes_.push_back(engine_->step_period(strobes_.back()));
  return strobes_[static_cast<std::size_t>(n)];
}

DensityMatrix SrwaTrajectory::state(double t) {
  // U(r_n) is +-1 and drops out of the conjugation, so only U(s) is applied.
  const StroboscopicTime st = strobe_decompose(t, engine_->params().t0());
  return {engine_->finish(strobe_state(st.n), st), t};
}

DensityMatrix srwa_state(const DensityMatrix& rho0, double t, const SpinBasis& basis,
                         const ModelParams& params, const SrwaOptions& opts) {
  SrwaOptions o = opts;
  o.backend = SrwaBackend::matrix_free;
  const SrwaEngine engine(basis, params, o);
  const StroboscopicTime st = strobe_decompose(t, params.t0());
  const Matrix strobe = expmv(engine.lbar(), st.r_n, rho0.matrix);
  return {engine.finish(strobe, st), t};
}

// ---------------------------------------------------------------------------

DensityMatrix steady_state_analytic(const SpinBasis& basis, const ModelParams& params) {
  params.validate(true);
  check_basis(basis, params, "steady_state_analytic");
  const int d = basis.dim();
  const double c = 4.0 * params.kappa / (params.omega0 * params.n_spins);
  Matrix rho = (basis.identity() + c * basis.sy()) / static_cast<double>(d);
  return {rho, std::nullopt};
}

std::optional<std::string> steady_state_warning(const ModelParams& params) {
  if (2.0 * params.kappa / params.omega0 >= 1.0) {
    return std::string("2 kappa/omega0 >= 1: the analytic steady state is not positive");
  }
  return std::nullopt;
}

DensityMatrix steady_state_numeric(const SpinBasis& basis, const ModelParams& params) {
  params.validate(false);
  check_basis(basis, params, "steady_state_numeric");
  const Superoperator l = lab_frame_generator(params, basis);
  Eigen::BDCSVD<Matrix> svd(l.matrix, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Eigen::Index last = sv.size() - 1;
  if (last >= 1 && sv(last - 1) <= 1e-9 * std::max(1.0, sv(0))) {
    std::ostringstream msg;
    msg << "steady_state_numeric: null space is degenerate (sigma = " << sv(last - 1) << ", "
        << sv(last) << ")";
    throw NumericalInvariantError(msg.str());
  }
  Matrix rho = devectorize(svd.matrixV().col(last));
  const Complex tr = rho.trace();
  if (std::abs(tr) < 1e-300) throw NumericalInvariantError("steady_state_numeric: traceless null vector");
  rho /= tr;
  hermitize_normalize_inplace(rho);
  return {rho, std::nullopt};
}

// ---------------------------------------------------------------------------

MomentSet MomentSet::from_state(const SpinBasis& basis, const Matrix& rho) {
  const Matrix& x = basis.sx();
  const Matrix& y = basis.sy();
  const Matrix& z = basis.sz();
  MomentSet m;
  m.sx = expectation(x, rho).real();
  m.sy = expectation(y, rho).real();
  m.sz = expectation(z, rho).real();
  m.sx2 = expectation(x * x, rho).real();
  m.sy2 = expectation(y * y, rho).real();
  m.sz2 = expectation(z * z, rho).real();
  m.syz_sym = expectation(y * z + z * y, rho).real();
  m.sxy_sym = expectation(x * y + y * x, rho).real();
  m.sxz_sym = expectation(x * z + z * x, rho).real();
  const double s = basis.total_spin();
  const double casimir = s * (s + 1.0);
  if (std::abs(m.sx2 + m.sy2 + m.sz2 - casimir) > 1e-9 * std::max(1.0, casimir)) {
    std::ostringstream msg;
    msg << "MomentSet: Casimir sum " << m.sx2 + m.sy2 + m.sz2 << " differs from S(S+1) = " << casimir;
    throw NumericalInvariantError(msg.str());
  }
  return m;
}

MomentSet strobe_moments_analytic(const MomentSet& m0, double r, const ModelParams& params) {
  if (r < 0.0) throw std::invalid_argument("strobe_moments_analytic: negative r_n");
  const double k = params.kappa, w = params.omega0, n = params.n_spins;
  auto e = [&](double a) { return std::exp(-a * k * r / n); };
  const double c = n * n + 2.0 * n - 11.0 / 4.0;
  const double quad = n * (n + 2.0) / 12.0;
  MomentSet m;
  m.sx = m0.sx * e(1) + 5.0 * k / (3.0 * w * n) * m0.sxy_sym * (e(1) - e(2.5));
  m.sy = m0.sy * e(1.5) + k * k / (2.0 * w * n * n) * c * m0.sz * r * e(1.5) +
         k * (n + 2.0) / (3.0 * w) * (1.0 - e(1.5)) - k * (n + 2.0) / (12.0 * w) * (e(3) - e(1.5)) +
         k / (w * n) * m0.sx2 * (e(3) - e(1.5)) - k / (w * n) * (m0.sy2 - m0.sz2) * (e(5) - e(1.5));
  m.sz = m0.sz * e(1.5) - k * k / (2.0 * w * n * n) * c * m0.sy * r * e(1.5) -
         k / (w * n) * m0.syz_sym * (e(5) - e(1.5));
  // written as increments on the initial values (Casimir sum assumed) so r = 0 is exact
  auto em1 = [&](double a) { return std::expm1(-a * k * r / n); };
  const double a3 = n * (n + 2.0) / 24.0 - 0.5 * m0.sx2;
  const double b5 = 0.5 * (m0.sy2 - m0.sz2);
  m.sx2 = m0.sx2 + (m0.sx2 - quad) * em1(3);
  m.sy2 = m0.sy2 + a3 * em1(3) + b5 * em1(5);
  m.sz2 = m0.sz2 + a3 * em1(3) - b5 * em1(5);
  m.syz_sym = m0.syz_sym * e(5);
  m.sxy_sym = m0.sxy_sym * e(3.5);
  m.sxz_sym = m0.sxz_sym * e(3.5);
  return m;
}

std::array<double, 9> strobe_moment_rates(const MomentSet& m, const ModelParams& params) {
  const double k = params.kappa, w = params.omega0, n = params.n_spins;
  const double c = n * n + 2.0 * n - 11.0 / 4.0;
  const double h = k * k / (2.0 * w * n * n);
  return {-k / n * m.sx + 5.0 * h * m.sxy_sym,
          -1.5 * k / n * m.sy + h * (c * m.sz + 2.0 * (m.sx2 - m.sz2) + 12.0 * m.sy2),
          -1.5 * k / n * m.sz - h * (c * m.sy - 7.0 * m.syz_sym),
          k / n * (-2.0 * m.sx2 + m.sy2 + m.sz2),
          k / n * (m.sx2 - 3.0 * m.sy2 + 2.0 * m.sz2),
          k / n * (m.sx2 + 2.0 * m.sy2 - 3.0 * m.sz2),
          -5.0 * k / n * m.syz_sym,
          -3.5 * k / n * m.sxy_sym,
          -3.5 * k / n * m.sxz_sym};
}

ShortTimeObservables short_time_observables_analytic(const MomentSet& m, double s,
                                                     const ModelParams& params) {
  check_remainder(params, s, "short_time_observables_analytic");
  const double k = params.kappa, w = params.omega0, n = params.n_spins;
  const double c = std::cos(w * s), sn = std::sin(w * s);
  const double c2 = std::cos(2.0 * w * s), s2 = std::sin(2.0 * w * s);
  const double sh = std::sin(0.5 * w * s);
  const double damp = 1.0 - 1.5 * k * s / n;
  ShortTimeObservables o;
  o.sx = (1.0 - k * s / n) * m.sx + k / (w * n) * (2.0 * sh * sh * m.sxy_sym + sn * m.sxz_sym);
  o.sy = damp * (c * m.sy - sn * m.sz) +
         k / (2.0 * w * n) *
             (sn * m.sy + 4.0 * m.sx2 + 4.0 * c * c * m.sz2 + 4.0 * sn * sn * m.sy2 + 2.0 * s2 * m.syz_sym -
              4.0 * c * (m.sx2 + m.sz2) - 2.0 * sn * m.syz_sym);
  o.sz = damp * (c * m.sz + sn * m.sy) +
         k / (2.0 * w * n) *
             (2.0 * s2 * (m.sz2 - m.sy2) + 2.0 * c * m.syz_sym - sn * m.sz - 4.0 * sn * (m.sx2 + m.sz2) -
              2.0 * c2 * m.syz_sym);
  return o;
}

}  // namespace btc
