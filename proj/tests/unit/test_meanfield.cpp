#include <cmath>

#include "btc/meanfield.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace btc;

namespace {

ModelParams model(int n, double w, double k = 1.0) {
  ModelParams p;
  p.n_spins = n;
  p.omega0 = w;
  p.kappa = k;
  return p;
}

SpinPolynomial word(std::initializer_list<int> letters) {
  SpinPolynomial p = SpinPolynomial::constant(1.0);
  for (int a : letters) p = p * SpinPolynomial::letter(a);
  return p;
}

// Normalized ⟨S_a⟩ trace per period: the last sample of each period.
double max_sz_in(const Trajectory& tr, double from, double to) {
  double m = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i)
    if (tr.times[i] >= from && tr.times[i] <= to) m = std::max(m, std::abs(tr.moments[i].sz));
  return m;
}

}  // namespace

TEST_CASE("mean-field right-hand side") {
  const ModelParams free = model(10, 40, 0.0);
  MeanFieldState s;
  s.mx = 0.3, s.my = -0.4, s.mz = 0.5;
  const MeanFieldState d = mft_rhs(s, free);
  CHECK(d.mx == 0.0);
  CHECK(d.my == doctest::Approx(-40 * 0.5));
  CHECK(d.mz == doctest::Approx(40 * -0.4));

  // N -> infinity with vanishing cumulants
  const ModelParams big = model(100000000, 40);
  MeanFieldState s2 = s;
  s2.order = MeanFieldOrder::second;
  const MeanFieldState c = cumulant2_rhs(s2, big);
  const MeanFieldState m = mft_rhs(s, big);
  CHECK(c.mx == doctest::Approx(m.mx).epsilon(1e-6));
  CHECK(c.my == doctest::Approx(m.my).epsilon(1e-6));
  CHECK(c.mz == doctest::Approx(m.mz).epsilon(1e-6));
}

TEST_CASE("initial states") {
  const MeanFieldState a = meanfield_all_down(MeanFieldOrder::second, 8);
  const SpinBasis b(8);
  const MeanFieldState e = meanfield_from_state(b, spin_coherent_down(b).matrix, MeanFieldOrder::second);
  CHECK(a.mz == -1.0);
  CHECK(e.mz == doctest::Approx(-1.0));
  for (int p = 0; p < 6; ++p) CHECK(std::abs(a.c[p] - e.c[p]) < 1e-14);
  CHECK_THROWS_AS(meanfield_all_down(MeanFieldOrder::first, 0), std::invalid_argument);
}

TEST_CASE("word algebra") {
  const SpinBasis b(3);
  const Matrix* ops[3] = {&b.sx(), &b.sy(), &b.sz()};
  std::mt19937_64 rng(21);
  const Matrix rho = btc::testing::random_density(4, rng);
  auto exact = [&](const SpinPolynomial::Word& w) {
    Matrix m = b.identity();
    for (int a : w) m = m * *ops[a];
    return (m * rho).trace();
  };
  const SpinPolynomial p = word({2, 0, 1}) * Complex(0.5, -1.0) + word({1, 0}) + word({2, 2, 1, 0}) +
                           SpinPolynomial::constant(3.0);
  Complex direct = 0.0;
  for (const auto& [w, c] : p.terms()) direct += c * exact(w);
  CHECK(std::abs(p.expectation(b, rho) - direct) < 1e-12);
  const SpinPolynomial s = p.sorted();
  CHECK(std::abs(s.expectation(b, rho) - direct) < 1e-12);
  for (const auto& [w, c] : s.terms()) {
    for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i - 1] <= w[i]);
  }
  // [Sx, Sy] = i Sz
  const SpinPolynomial comm = commutator(SpinPolynomial::letter(0), SpinPolynomial::letter(1)).sorted();
  CHECK(comm.terms().size() == 1);
  CHECK(comm.terms().at({2}) == Complex(0.0, 1.0));
  CHECK_THROWS_AS(SpinPolynomial::letter(3), std::invalid_argument);
}

TEST_CASE("Heisenberg images against the exact generator") {
  const ModelParams p = model(3, 7.0, 1.3);
  const SpinBasis b(3);
  const Superoperator l = lab_frame_generator(p, b);
  std::mt19937_64 rng(22);
  const std::vector<SpinPolynomial> observables = {
      word({0}), word({1}), word({2}), word({0, 0}), word({1, 2}), word({0, 2}), word({2, 1, 0}), word({1, 1, 2})};
  for (int trial = 0; trial < 4; ++trial) {
    const Matrix rho = btc::testing::random_density(4, rng);
    const Matrix lrho = l.apply(rho);
    for (const SpinPolynomial& o : observables) {
      const SpinPolynomial image =
          heisenberg_drive(o) * Complex(p.omega0) + heisenberg_damping(o) * Complex(p.kappa / p.n_spins);
      CHECK(std::abs(image.expectation(b, rho) - o.expectation(b, lrho)) < 1e-11);
    }
  }
}

TEST_CASE("cumulant first moments are exact") {
  // first-moment equations involve no closure
  std::mt19937_64 rng(23);
  for (int n : {2, 5, 9}) {
    const ModelParams p = model(n, 13.0, 1.0);
    const SpinBasis b(n);
    const Matrix rho = btc::testing::random_density(n + 1, rng);
    const Matrix lrho = lab_frame_generator(p, b).apply(rho);
    const MeanFieldState d = cumulant2_rhs(meanfield_from_state(b, rho, MeanFieldOrder::second), p);
    const double h = 0.5 * n;
    CHECK(d.mx * h == doctest::Approx(expectation(b.sx(), lrho).real()).epsilon(1e-10));
    CHECK(d.my * h == doctest::Approx(expectation(b.sy(), lrho).real()).epsilon(1e-10));
    CHECK(d.mz * h == doctest::Approx(expectation(b.sz(), lrho).real()).epsilon(1e-10));
  }
}

TEST_CASE("mean-field regimes") {
  const ModelParams osc = model(10, 80);
  const auto down = meanfield_all_down(MeanFieldOrder::first, 10);
  const Trajectory tr = evolve_meanfield(MeanFieldOrder::first, down, osc, 400 * osc.t0(), osc.t0() / 200);
  const double late = max_sz_in(tr, 399 * osc.t0(), 400 * osc.t0());
  CHECK(late > 0.9 * 5.0);
  CHECK(late == doctest::Approx(max_sz_in(tr, 10 * osc.t0(), 11 * osc.t0())).epsilon(0.02));
  // Bloch sphere preserved from a pure product state
  for (const auto& m : tr.moments) {
    CHECK(std::abs(m.sx * m.sx + m.sy * m.sy + m.sz * m.sz - 25.0) < 25.0 * 1e-9);
  }

  const ModelParams stat = model(10, 0.5);
  const Trajectory fp = evolve_meanfield(MeanFieldOrder::first, down, stat, 100.0, 0.01);
  const double z1 = fp.moments.back().sz;
  const double z0 = fp.moments[fp.size() - 101].sz;
  CHECK(std::abs(z1 - z0) < 1e-8);
  CHECK(z1 < 0.0);

  ModelParams still = model(10, 0.0, 0.0);
  const Trajectory c = evolve_meanfield(MeanFieldOrder::second, meanfield_all_down(MeanFieldOrder::second, 10),
                                        still, 5.0, 0.01);
  for (const auto& m : c.moments) CHECK(m.sz == -5.0);

  const Trajectory order1 = evolve_meanfield(MeanFieldOrder::first, meanfield_all_down(MeanFieldOrder::first, 80),
                                             model(80, 80), model(80, 80).t0(), model(80, 80).t0() / 200);
  const Trajectory order2 = evolve_meanfield(MeanFieldOrder::second, meanfield_all_down(MeanFieldOrder::second, 80),
                                             model(80, 80), model(80, 80).t0(), model(80, 80).t0() / 200);
  REQUIRE(order1.size() == order2.size());
  for (std::size_t i = 0; i < order1.size(); ++i) {
    CHECK(std::abs(order1.moments[i].sz - order2.moments[i].sz) < 1e-3 * 80);
  }
}

TEST_CASE("divergence and step guards") {
  const ModelParams p = model(4, 40);
  MeanFieldState wild;
  wild.mx = wild.my = wild.mz = 1e200;
  CHECK_THROWS_AS(evolve_meanfield(MeanFieldOrder::first, wild, p, p.t0(), p.t0() / 200),
                  NumericalInvariantError);
  const auto down = meanfield_all_down(MeanFieldOrder::first, 4);
  CHECK_THROWS_AS(evolve_meanfield(MeanFieldOrder::first, down, p, p.t0(), p.t0() / 25), std::invalid_argument);
}

TEST_CASE("short-time agreement with the exact dynamics") {
  {
    const ModelParams p = model(40, 80);
    const SpinBasis b(40);
    const double dt = p.t0() / 200;
    const Trajectory ex = evolve_exact(b, p, spin_coherent_down(b), 5 * p.t0(), dt, 1);
    const Trajectory cu = evolve_meanfield(MeanFieldOrder::second, meanfield_all_down(MeanFieldOrder::second, 40),
                                           p, 5 * p.t0(), dt);
    REQUIRE(ex.size() == cu.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ex.size(); ++i)
      worst = std::max(worst, std::abs(ex.moments[i].sz - cu.moments[i].sz));
    CHECK(worst < 0.02 * 40);
  }
  {
    const ModelParams p = model(80, 80);
    const SpinBasis b(80);
    const double dt = p.t0() / 200;
    const Trajectory ex = evolve_exact(b, p, spin_coherent_down(b), 10 * p.t0(), dt, 1);
    const Trajectory mf =
        evolve_meanfield(MeanFieldOrder::first, meanfield_all_down(MeanFieldOrder::first, 80), p, 10 * p.t0(), dt);
    REQUIRE(ex.size() == mf.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ex.size(); ++i)
      worst = std::max(worst, std::abs(ex.moments[i].sz - mf.moments[i].sz) / 80);
    MESSAGE("first-order error over 10 periods, N=80: " << worst);
    CHECK(worst < 0.01);
  }
}
