#include <cmath>

#include "btc/analysis.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace btc;

namespace {

struct Signal {
  std::vector<double> t, v;
};

template <class F>
Signal sample(F f, double t_end, double dt, double phase = 0.0) {
  Signal s;
  for (double t = phase * dt; t <= t_end; t += dt) {
    s.t.push_back(t);
    s.v.push_back(f(t));
  }
  return s;
}

ModelParams model(int n, double w, double k = 1.0) {
  ModelParams p;
  p.n_spins = n;
  p.omega0 = w;
  p.kappa = k;
  return p;
}

MomentSet all_down_moments(int n) {
  const SpinBasis b(n);
  return MomentSet::from_state(b, spin_coherent_down(b).matrix);
}

}  // namespace

TEST_CASE("fidelity") {
  std::mt19937_64 rng(31);
  for (int d : {2, 3, 6}) {
    for (int i = 0; i < 5; ++i) {
      const DensityMatrix a{btc::testing::random_density(d, rng), 0.0};
      const DensityMatrix b{btc::testing::random_density(d, rng), 0.0};
      CHECK(fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-9));
      const double f = fidelity(a, b);
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
      CHECK(std::abs(f - fidelity(b, a)) < 1e-9);
    }
  }
  Vector up = Vector::Zero(2), dn = Vector::Zero(2);
  up(0) = 1.0;
  dn(1) = 1.0;
  CHECK(fidelity(pure_state(up), pure_state(dn)) < 1e-9);
  CHECK(fidelity(maximally_mixed(2), pure_state(up)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS(fidelity({bad, 0.0}, maximally_mixed(2)));
}

TEST_CASE("extrema of synthetic signals") {
  const double w = 40.0, t0 = 2 * kPi / w;
  const Signal s = sample([&](double t) { return std::cos(w * t); }, 20 * t0, t0 / 200, 0.37);
  const auto ex = find_extrema(s.t, s.v, t0);
  CHECK(!check_alternation(ex));
  int peaks = 0;
  for (const auto& e : ex) {
    CHECK(e.s_star >= 0.0);
    CHECK(e.s_star < t0);
    CHECK(std::abs(e.r_n + e.s_star - e.t_star) < 1e-12);
    if (e.kind == ExtremumKind::peak) {
      ++peaks;
      const double k = std::round(e.t_star / t0);
      CHECK(std::abs(e.t_star - k * t0) < t0 / 1000);
      CHECK(e.value == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
  CHECK(peaks == 19);

  // interpolation error falls with the sampling step
  auto worst = [&](int per_period) {
    const Signal c = sample([&](double t) { return std::cos(w * t); }, 5 * t0, t0 / per_period, 0.41);
    double e = 0.0;
    for (const auto& x : find_extrema(c.t, c.v, t0)) {
      const double grid = (x.kind == ExtremumKind::peak ? 0.0 : 0.5);
      e = std::max(e, std::abs(x.t_star / t0 - grid - std::round(x.t_star / t0 - grid)));
    }
    return e;
  };
  CHECK(worst(100) < worst(25));

  const Signal damped = sample([&](double t) { return std::exp(-0.01 * t) * std::cos(w * t); }, 30 * t0, t0 / 200);
  for (const auto& p : empirical_period(find_extrema(damped.t, damped.v, t0), t0)) {
    CHECK(std::abs(p.period - t0) < 1e-3 * t0);
  }

  const Signal flat = sample([](double) { return 0.5; }, 1.0, 0.01);
  CHECK(find_extrema(flat.t, flat.v, t0).empty());
  CHECK(find_extrema(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 2.0}, t0).empty());

  std::vector<ExtremaRecord> doubled(2);
  CHECK(check_alternation(doubled));
}

TEST_CASE("empirical period and decay on synthetic signals") {
  const double w = 40.0, t0 = 2 * kPi / w;
  const Signal c = sample([&](double t) { return std::cos(w * t); }, 30 * t0, t0 / 200, 0.2);
  for (const auto& p : empirical_period(find_extrema(c.t, c.v, t0), t0)) CHECK(std::abs(p.shift) < 1e-6);

  const Signal d = sample([&](double t) { return std::exp(-0.15 * t) * std::cos(w * t); }, 30 * t0, t0 / 200, 0.6);
  const DecaySeries ds = empirical_decay_rate(find_extrema(d.t, d.v, t0));
  CHECK(ds.skipped.empty());
  CHECK(ds.points.size() > 50);
  for (const auto& p : ds.points) CHECK(p.gamma == doctest::Approx(0.15).epsilon(0.01));

  // offset crossing: deltas change sign and those pairs are reported
  const Signal cross = sample([&](double t) { return std::exp(-t) * std::cos(w * t); }, 3.0, t0 / 200);
  const DecaySeries cs = empirical_decay_rate(find_extrema(cross.t, cross.v, t0, 0.3));
  CHECK(!cs.skipped.empty());
}

TEST_CASE("extrema of an exact run") {
  const ModelParams p = model(10, 40);
  const SpinBasis b(10);
  const Trajectory tr = evolve_exact(b, p, spin_coherent_down(b), 20 * p.t0(), p.t0() / 200, 1);
  const auto ex = find_extrema(tr, Observable::sz);
  CHECK(!check_alternation(ex));
  CHECK(ex.size() >= 38);
  for (const auto& pp : empirical_period(ex, p.t0())) CHECK(std::abs(pp.shift) < 0.01);

  ModelParams free = p;
  free.kappa = 0.0;
  const Trajectory u = evolve_exact(b, free, spin_coherent_down(b), 10 * p.t0(), p.t0() / 200, 1);
  for (const auto& dp : empirical_decay_rate(find_extrema(u, Observable::sz)).points) {
    CHECK(std::abs(dp.gamma) < 1e-6);
  }
}

TEST_CASE("closed-form period shift") {
  const ModelParams p = model(10, 40);
  const MomentSet down = all_down_moments(10);
  CHECK(std::abs(period_memory_term(down, 0.0, p)) == doctest::Approx(31.5 / 160000).epsilon(1e-12));
  for (auto br : {ExtremumKind::peak, ExtremumKind::trough}) {
    CHECK(analytic_period_shift(down, 1e4, p, br) == doctest::Approx(469.0 / 1280000).epsilon(1e-12));
  }
  const double base = 469.0 / 1280000;
  const double pk = analytic_period_shift(down, 3.0, p, ExtremumKind::peak);
  const double tr = analytic_period_shift(down, 3.0, p, ExtremumKind::trough);
  CHECK(pk + tr == doctest::Approx(2 * base).epsilon(1e-12));
  CHECK(branch_sign(ExtremumKind::peak) == -1);
  CHECK(branch_sign(ExtremumKind::trough) == 1);

  const double half = 2.0 * 10 / 7.0 * std::log(2.0);
  CHECK(period_memory_term(down, half, p) == doctest::Approx(0.5 * period_memory_term(down, 0.0, p)).epsilon(1e-12));

  const ModelParams weak = model(10, 40, 1e-9);
  CHECK(std::abs(analytic_period_shift(down, 0.0, weak, ExtremumKind::peak)) < 1e-15);

  MomentSet blank;
  CHECK_THROWS_AS(analytic_period_shift(blank, 0.0, p, ExtremumKind::peak), std::invalid_argument);
  CHECK_THROWS_AS(analytic_decay_rate(blank, 0.0, p, ExtremumKind::trough), std::invalid_argument);
}

TEST_CASE("closed-form decay rate") {
  const ModelParams p = model(10, 40);
  const MomentSet down = all_down_moments(10);
  CHECK(decay_memory_term(down, 0.0, p) == 0.0);
  CHECK(analytic_decay_rate(down, 0.0, p, ExtremumKind::peak) == doctest::Approx(0.15));
  CHECK(analytic_decay_rate(down, 1e4, p, ExtremumKind::trough) == doctest::Approx(0.15));
  CHECK(std::abs(analytic_decay_rate(down, 0.0, model(10, 40, 1e-12), ExtremumKind::peak)) < 1e-12);

  // a generic start carries a nonzero memory term with opposite branch signs
  const SpinBasis b(10);
  std::mt19937_64 rng(32);
  const MomentSet tilt = MomentSet::from_state(b, btc::testing::random_density(11, rng));
  const double m = decay_memory_term(tilt, 0.0, p);
  CHECK(std::abs(m) > 1e-6);
  CHECK(analytic_decay_rate(tilt, 0.0, p, ExtremumKind::peak) == doctest::Approx(0.15 - m));
  CHECK(analytic_decay_rate(tilt, 0.0, p, ExtremumKind::trough) == doctest::Approx(0.15 + m));
}

TEST_CASE("mean-field error metric") {
  const ModelParams p = model(6, 40);
  const SpinBasis b(6);
  const Trajectory a = evolve_exact(b, p, spin_coherent_down(b), 2 * p.t0(), p.t0() / 200, 4);
  for (double e : meanfield_error(a, a)) CHECK(e == 0.0);
  Trajectory shifted = a;
  for (auto& m : shifted.moments) m.sz += 0.6;
  const auto err = meanfield_error(a, shifted);
  for (double e : err) CHECK(e == doctest::Approx(0.1));
  CHECK(period_max(a.times, err, p.t0(), 1) == doctest::Approx(0.1));
  Trajectory shorter = a;
  shorter.times.pop_back();
  shorter.moments.pop_back();
  CHECK_THROWS_AS(meanfield_error(a, shorter), std::invalid_argument);
}
