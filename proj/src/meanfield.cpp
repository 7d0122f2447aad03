#include "btc/meanfield.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace btc {

namespace {

constexpr int kPairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};

int levi_civita(int a, int b, int c) {
  if (a == b || b == c || a == c) return 0;
  return ((a == 0 && b == 1) || (a == 1 && b == 2) || (a == 2 && b == 0)) ? 1 : -1;
}

// Unnormalized moments: mu_a = <S_a>, sym_ab = <{S_a,S_b}>/2.
struct Moments {
  std::array<double, 3> mu{};
  std::array<std::array<double, 3>, 3> sym{};
};

Moments to_moments(const MeanFieldState& s, int n) {
  const double h = 0.5 * n;
  Moments m;
  m.mu = {h * s.mx, h * s.my, h * s.mz};
  for (int p = 0; p < 6; ++p) {
    const int a = kPairs[p][0], b = kPairs[p][1];
    const double v = h * h * s.c[p] + m.mu[a] * m.mu[b];
    m.sym[a][b] = m.sym[b][a] = v;
  }
  return m;
}

Complex ordered_pair(const Moments& m, int a, int b) {
  Complex v = m.sym[a][b];
  for (int c = 0; c < 3; ++c) v += Complex(0.0, 0.5 * levi_civita(a, b, c)) * m.mu[c];
  return v;
}

Complex closed_expectation(const SpinPolynomial& p, const Moments& m) {
  Complex total = 0.0;
  for (const auto& [w, coeff] : p.terms()) {
    Complex v;
    switch (w.size()) {
      case 0: v = 1.0; break;
      case 1: v = m.mu[w[0]]; break;
      case 2: v = ordered_pair(m, w[0], w[1]); break;
      case 3: {
        const int a = w[0], b = w[1], c = w[2];
        v = ordered_pair(m, a, b) * m.mu[c] + ordered_pair(m, a, c) * m.mu[b] +
            ordered_pair(m, b, c) * m.mu[a] - 2.0 * m.mu[a] * m.mu[b] * m.mu[c];
        break;
      }
      default: throw std::logic_error("closed_expectation: word longer than 3");
    }
    total += coeff * v;
  }
  return total;
}

struct HeisenbergTable {
  // index 0..2: S_a; 3..8: sym pairs in kPairs order
  std::array<SpinPolynomial, 9> drive, damping;
};

const HeisenbergTable& heisenberg_table() {
  static const HeisenbergTable table = [] {
    HeisenbergTable t;
    for (int a = 0; a < 3; ++a) {
      const SpinPolynomial o = SpinPolynomial::letter(a);
      t.drive[a] = heisenberg_drive(o);
      t.damping[a] = heisenberg_damping(o);
    }
    for (int p = 0; p < 6; ++p) {
      const SpinPolynomial sa = SpinPolynomial::letter(kPairs[p][0]);
      const SpinPolynomial sb = SpinPolynomial::letter(kPairs[p][1]);
      const SpinPolynomial o = (sa * sb + sb * sa) * Complex(0.5);
      t.drive[3 + p] = heisenberg_drive(o);
      t.damping[3 + p] = heisenberg_damping(o);
    }
    return t;
  }();
  return table;
}

void check_finite(const MeanFieldState& s, double t) {
  if (!s.finite()) {
    std::ostringstream msg;
    msg << "evolve_meanfield: non-finite moments at t = " << t;
    throw NumericalInvariantError(msg.str());
  }
}

MeanFieldState axpy(const MeanFieldState& y, double h, const MeanFieldState& k) {
  MeanFieldState out = y;
  out.mx += h * k.mx;
  out.my += h * k.my;
  out.mz += h * k.mz;
  for (int p = 0; p < 6; ++p) out.c[p] += h * k.c[p];
  return out;
}

}  // namespace

bool MeanFieldState::finite() const {
  if (!std::isfinite(mx) || !std::isfinite(my) || !std::isfinite(mz)) return false;
  for (double v : c) if (!std::isfinite(v)) return false;
  return true;
}

MeanFieldState meanfield_all_down(MeanFieldOrder order, int n_spins) {
  if (n_spins < 1) throw std::invalid_argument("meanfield_all_down: n_spins must be >= 1");
  MeanFieldState s;
  s.order = order;
  s.mx = s.my = 0.0;
  s.mz = -1.0;
  if (order == MeanFieldOrder::second) {
    // <Sx^2> = <Sy^2> = N/4, Sz sharp
    s.c = {1.0 / n_spins, 1.0 / n_spins, 0.0, 0.0, 0.0, 0.0};
  }
  return s;
}

MeanFieldState meanfield_from_state(const SpinBasis& basis, const Matrix& rho, MeanFieldOrder order) {
  const Matrix* ops[3] = {&basis.sx(), &basis.sy(), &basis.sz()};
  const double h = 0.5 * basis.n_spins();
  std::array<double, 3> mu{};
  for (int a = 0; a < 3; ++a) mu[a] = expectation(*ops[a], rho).real();
  MeanFieldState s;
  s.order = order;
  s.mx = mu[0] / h;
  s.my = mu[1] / h;
  s.mz = mu[2] / h;
  if (order == MeanFieldOrder::second) {
    for (int p = 0; p < 6; ++p) {
      const int a = kPairs[p][0], b = kPairs[p][1];
      const Matrix o = 0.5 * (*ops[a] * *ops[b] + *ops[b] * *ops[a]);
      s.c[p] = (expectation(o, rho).real() - mu[a] * mu[b]) / (h * h);
    }
  }
  return s;
}

MeanFieldState mft_rhs(const MeanFieldState& s, const ModelParams& params) {
  const double w = params.omega0, k = params.kappa;
  MeanFieldState d;
  d.order = MeanFieldOrder::first;
  d.mx = k * s.mx * s.mz;
  d.my = -w * s.mz + k * s.my * s.mz;
  d.mz = w * s.my - k * (s.mx * s.mx + s.my * s.my);
  return d;
}

MeanFieldState cumulant2_rhs(const MeanFieldState& s, const ModelParams& params) {
  const int n = params.n_spins;
  const double w = params.omega0, g = params.kappa / n;
  const HeisenbergTable& t = heisenberg_table();
  const Moments m = to_moments(s, n);
  std::array<double, 9> rate{};
  for (int i = 0; i < 9; ++i) {
    const Complex v = w * closed_expectation(t.drive[i], m) + g * closed_expectation(t.damping[i], m);
    rate[i] = v.real();
  }
  const double h = 0.5 * n;
  MeanFieldState d;
  d.order = MeanFieldOrder::second;
  d.mx = rate[0] / h;
  d.my = rate[1] / h;
  d.mz = rate[2] / h;
  for (int p = 0; p < 6; ++p) {
    const int a = kPairs[p][0], b = kPairs[p][1];
    d.c[p] = (rate[3 + p] - rate[a] * m.mu[b] - m.mu[a] * rate[b]) / (h * h);
  }
  return d;
}

// ---------------------------------------------------------------------------

SpinPolynomial SpinPolynomial::letter(int a) {
  if (a < 0 || a > 2) throw std::invalid_argument("SpinPolynomial::letter: axis must be 0, 1 or 2");
  SpinPolynomial p;
  p.terms_[{a}] = 1.0;
  return p;
}

SpinPolynomial SpinPolynomial::constant(Complex c) {
  SpinPolynomial p;
  if (c != Complex(0.0)) p.terms_[{}] = c;
  return p;
}

SpinPolynomial& SpinPolynomial::operator+=(const SpinPolynomial& o) {
  for (const auto& [w, c] : o.terms_) {
    Complex& slot = terms_[w];
    slot += c;
    if (slot == Complex(0.0)) terms_.erase(w);
  }
  return *this;
}

SpinPolynomial SpinPolynomial::operator+(const SpinPolynomial& o) const {
  SpinPolynomial r = *this;
  r += o;
  return r;
}

SpinPolynomial SpinPolynomial::operator-(const SpinPolynomial& o) const { return *this + o * Complex(-1.0); }

SpinPolynomial SpinPolynomial::operator*(const SpinPolynomial& o) const {
  SpinPolynomial r;
  for (const auto& [wa, ca] : terms_) {
    for (const auto& [wb, cb] : o.terms_) {
      Word w = wa;
      w.insert(w.end(), wb.begin(), wb.end());
      SpinPolynomial t;
      t.terms_[w] = ca * cb;
      r += t;
    }
  }
  return r;
}

SpinPolynomial SpinPolynomial::operator*(Complex s) const {
  SpinPolynomial r;
  if (s == Complex(0.0)) return r;
  for (const auto& [w, c] : terms_) r.terms_[w] = c * s;
  return r;
}

std::size_t SpinPolynomial::max_length() const {
  std::size_t l = 0;
  for (const auto& [w, c] : terms_) l = std::max(l, w.size());
  return l;
}

Complex SpinPolynomial::expectation(const SpinBasis& basis, const Matrix& rho) const {
  const Matrix* ops[3] = {&basis.sx(), &basis.sy(), &basis.sz()};
  Complex total = 0.0;
  for (const auto& [w, c] : terms_) {
    Matrix prod = basis.identity();
    for (int a : w) prod = prod * *ops[a];
    total += c * btc::expectation(prod, rho);
  }
  return total;
}

SpinPolynomial SpinPolynomial::sorted() const {
  SpinPolynomial out;
  std::vector<std::pair<Word, Complex>> work(terms_.begin(), terms_.end());
  while (!work.empty()) {
    auto [w, c] = std::move(work.back());
    work.pop_back();
    std::size_t i = 0;
    while (i + 1 < w.size() && w[i] <= w[i + 1]) ++i;
    if (i + 1 >= w.size()) {
      SpinPolynomial t;
      t.terms_[w] = c;
      out += t;
      continue;
    }
    // S_a S_b = S_b S_a + i eps_abc S_c for a > b
    const int a = w[i], b = w[i + 1], l = 3 - a - b;
    Word swapped = w;
    std::swap(swapped[i], swapped[i + 1]);
    work.emplace_back(std::move(swapped), c);
    Word shorter(w.begin(), w.begin() + static_cast<long>(i));
    shorter.push_back(l);
    shorter.insert(shorter.end(), w.begin() + static_cast<long>(i) + 2, w.end());
    work.emplace_back(std::move(shorter), c * kI * static_cast<double>(levi_civita(a, b, l)));
  }
  return out;
}

SpinPolynomial commutator(const SpinPolynomial& a, const SpinPolynomial& b) { return a * b - b * a; }

SpinPolynomial heisenberg_drive(const SpinPolynomial& o) {
  return (commutator(SpinPolynomial::letter(0), o) * kI).sorted();
}

SpinPolynomial heisenberg_damping(const SpinPolynomial& o) {
  const SpinPolynomial x = SpinPolynomial::letter(0);
  const SpinPolynomial y = SpinPolynomial::letter(1);
  const SpinPolynomial sp = x + y * kI;
  const SpinPolynomial sm = x - y * kI;
  return (sp * commutator(o, sm) + commutator(sp, o) * sm).sorted();
}

// ---------------------------------------------------------------------------

MomentRecord meanfield_moments(const MeanFieldState& s, int n_spins) {
  const double h = 0.5 * n_spins;
  MomentRecord r;
  r.sx = h * s.mx;
  r.sy = h * s.my;
  r.sz = h * s.mz;
  const bool second = s.order == MeanFieldOrder::second;
  r.sx2 = h * h * (s.mx * s.mx + (second ? s.c[0] : 0.0));
  r.sy2 = h * h * (s.my * s.my + (second ? s.c[1] : 0.0));
  r.sz2 = h * h * (s.mz * s.mz + (second ? s.c[2] : 0.0));
  r.syz_sym = 2.0 * h * h * (s.my * s.mz + (second ? s.c[5] : 0.0));
  r.purity = std::numeric_limits<double>::quiet_NaN();
  return r;
}

Trajectory evolve_meanfield(MeanFieldOrder order, const MeanFieldState& init,
                            const ModelParams& params, double t_end, double dt,
                            const MeanFieldOptions& opts) {
  params.validate(false);
  if (!(dt > 0.0)) throw std::invalid_argument("evolve_meanfield: dt must be positive");
  if (params.omega0 > 0.0 && dt > params.t0() / 50.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("evolve_meanfield: dt must not exceed T0/50");
  }
  if (opts.sample_every < 1) throw std::invalid_argument("evolve_meanfield: sample_every must be >= 1");
  if (t_end < 0.0) throw std::invalid_argument("evolve_meanfield: negative t_end");
  const long steps = std::lround(t_end / dt);
  if (std::abs(static_cast<double>(steps) * dt - t_end) > 1e-9 * std::max(1.0, t_end)) {
    throw std::invalid_argument("evolve_meanfield: t_end is not a whole number of steps");
  }
  auto rhs = [&](const MeanFieldState& s) {
    return order == MeanFieldOrder::first ? mft_rhs(s, params) : cumulant2_rhs(s, params);
  };

  ModelParams tp = params;
  if (!(tp.omega0 > 0.0)) tp.omega0 = 1.0;  // strobe labels need a period
  Trajectory traj;
  traj.params = tp;
  MeanFieldState y = init;
  y.order = order;
  check_finite(y, 0.0);
  // the first-order flow conserves |m|; RK4 does not, so project back each step
  const double radius = std::sqrt(y.mx * y.mx + y.my * y.my + y.mz * y.mz);
  traj.push(0.0, meanfield_moments(y, params.n_spins));
  for (long i = 0; i < steps; ++i) {
    const MeanFieldState k1 = rhs(y);
    const MeanFieldState k2 = rhs(axpy(y, 0.5 * dt, k1));
    const MeanFieldState k3 = rhs(axpy(y, 0.5 * dt, k2));
    const MeanFieldState k4 = rhs(axpy(y, dt, k3));
    MeanFieldState next = y;
    next.mx += dt / 6.0 * (k1.mx + 2.0 * k2.mx + 2.0 * k3.mx + k4.mx);
    next.my += dt / 6.0 * (k1.my + 2.0 * k2.my + 2.0 * k3.my + k4.my);
    next.mz += dt / 6.0 * (k1.mz + 2.0 * k2.mz + 2.0 * k3.mz + k4.mz);
    for (int p = 0; p < 6; ++p) next.c[p] += dt / 6.0 * (k1.c[p] + 2.0 * k2.c[p] + 2.0 * k3.c[p] + k4.c[p]);
    y = next;
    if (order == MeanFieldOrder::first && radius > 0.0) {
      const double r = std::sqrt(y.mx * y.mx + y.my * y.my + y.mz * y.mz);
      if (r > 0.0 && std::isfinite(r)) {
        y.mx *= radius / r;
        y.my *= radius / r;
        y.mz *= radius / r;
      }
    }
    const double t = static_cast<double>(i + 1) * dt;
    check_finite(y, t);
    if ((i + 1) % opts.sample_every == 0) traj.push(t, meanfield_moments(y, params.n_spins));
  }
  return traj;
}

}  // namespace btc
