#include <cmath>

#include "btc/propagate.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace btc;
using btc::testing::max_abs;

TEST_CASE("column-stacking vectorization") {
  Matrix m(2, 2);
  m << Complex(1), Complex(2), Complex(3), Complex(4);  // [[a,b],[c,d]]
  const Vector v = vectorize(m);
  CHECK(v(0) == Complex(1));
  CHECK(v(1) == Complex(3));
  CHECK(v(2) == Complex(2));
  CHECK(v(3) == Complex(4));

  std::mt19937_64 rng(1);
  const Matrix r = btc::testing::random_complex(5, rng);
  CHECK(devectorize(vectorize(r)) == r);
  CHECK_THROWS_AS(devectorize(Vector::Zero(5)), std::invalid_argument);

  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = btc::testing::random_complex(3, rng);
    const Matrix b = btc::testing::random_complex(3, rng);
    const Matrix rho = btc::testing::random_complex(3, rng);
    // brute-force Kronecker product of B^T and A
    Matrix kron(9, 9);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) kron.block(3 * i, 3 * j, 3, 3) = b(j, i) * a;
    CHECK(max_abs(kron * vectorize(rho) - vectorize(a * rho * b)) < 1e-12);
    CHECK(max_abs(sandwich_matrix(a, b) - kron) < 1e-15);
  }
}

TEST_CASE("left and right multiplication maps") {
  const SpinBasis b(2);
  const Matrix id9 = Matrix::Identity(9, 9);
  CHECK(max_abs(left_mul_super(b.identity()).matrix - id9) < 1e-15);
  CHECK(max_abs(right_mul_super(b.identity()).matrix - id9) < 1e-15);

  std::mt19937_64 rng(2);
  const Matrix rho = btc::testing::random_complex(3, rng);
  CHECK(max_abs(left_mul_super(b.sx()).apply(rho) - b.sx() * rho) < 1e-14);
  CHECK(max_abs(right_mul_super(b.sx()).apply(rho) - rho * b.sx()) < 1e-14);

  const Matrix xl = left_mul_super(b.sx()).matrix, yl = left_mul_super(b.sy()).matrix;
  const Matrix xr = right_mul_super(b.sx()).matrix, yr = right_mul_super(b.sy()).matrix;
  CHECK(max_abs(xl * yr - yr * xl) < 1e-14);
  CHECK(max_abs(xl * yl - yl * xl - left_mul_super(kI * b.sz()).matrix) < 1e-14);
  CHECK(max_abs(xr * yr - yr * xr + right_mul_super(kI * b.sz()).matrix) < 1e-14);
}

TEST_CASE("LRWord composition") {
  const SpinBasis b(3);
  std::mt19937_64 rng(3);
  const Matrix rho = btc::testing::random_complex(4, rng);
  const LRWord w = LRWord::left(b.sx()) * LRWord::right(b.sz()) * LRWord::right(b.sy()) * Complex(2.0);
  SandwichSum s;
  s += w;
  // x ( (rho y) z ) ... right maps apply innermost first
  CHECK(max_abs(s.apply(rho) - 2.0 * b.sx() * rho * b.sy() * b.sz()) < 1e-12);
  SandwichSum d;
  d -= w;
  CHECK(max_abs(d.apply(rho) + s.apply(rho)) < 1e-12);
}

TEST_CASE("lab generator examples") {
  ModelParams p;
  p.n_spins = 3;
  p.omega0 = 0.0;
  {
    const SpinBasis b(3);
    const Superoperator l = lab_frame_generator(p, b);
    CHECK(max_abs(l.apply(spin_coherent_down(b).matrix)) < 1e-14);
  }
  p.n_spins = 1;
  const SpinBasis b1(1);
  Matrix up = Matrix::Zero(2, 2), down = Matrix::Zero(2, 2);
  up(0, 0) = 1.0;
  down(1, 1) = 1.0;
  CHECK(max_abs(lab_frame_generator(p, b1).apply(up) - 2.0 * (down - up)) < 1e-14);

  p.n_spins = 3;
  p.omega0 = 40.0;
  const SpinBasis b3(3);
  std::mt19937_64 rng(4);
  const Matrix h = btc::testing::random_hermitian(4, rng);
  CHECK(std::abs(lab_frame_generator(p, b3).apply(h).trace()) < 1e-12);
}

TEST_CASE("generators preserve trace and Hermiticity") {
  std::mt19937_64 rng(5);
  for (int n : {1, 2, 4, 8}) {
    ModelParams p;
    p.n_spins = n;
    const SpinBasis b(n);
    const Superoperator lab = lab_frame_generator(p, b);
    const Superoperator rot = rotating_frame_generator(p, b, 0.123);
    const RotatingFrameComponents comps = rotating_frame_components(p, b);
    const MatrixRhs rhs = rotating_frame_rhs(p, b);
    for (int k = 0; k < 20; ++k) {
      const Matrix h = btc::testing::random_hermitian(n + 1, rng);
      for (const Superoperator* l : {&lab, &rot}) {
        const Matrix out = l->apply(h);
        CHECK(std::abs(out.trace()) < 1e-10);
        CHECK(max_abs(out - out.adjoint()) < 1e-10);
      }
      Matrix out;
      rhs(0.123, h, out);
      CHECK(max_abs(out - comps.apply(0.123, h)) < 1e-10);
    }
  }
}

TEST_CASE("rotating-frame generator") {
  ModelParams p;
  p.n_spins = 2;
  const SpinBasis b(2);
  const double t0 = p.t0();
  CHECK(max_abs(rotating_frame_generator(p, b, 0.3).matrix - rotating_frame_generator(p, b, 0.3 + t0).matrix) < 1e-12);

  std::mt19937_64 rng(6);
  const Matrix rho = btc::testing::random_density(3, rng);
  const SandwichSum diss = lab_dissipator_map(p, b);
  for (double t : {0.0, 0.05, 0.11, 0.77}) {
    const Matrix u = frame_unitary(b, p.omega0, t);
    const Matrix expect = u.adjoint() * diss.apply(u * rho * u.adjoint()) * u;
    CHECK(max_abs(rotating_frame_generator(p, b, t).apply(rho) - expect) < 1e-12);
  }
}

TEST_CASE("frame rotation") {
  std::mt19937_64 rng(8);
  for (int n : {3, 4}) {
    ModelParams p;
    p.n_spins = n;
    const SpinBasis b(n);
    const DensityMatrix rho{btc::testing::random_density(n + 1, rng), 0.0};
    CHECK(max_abs(rotate_state(rho, b, p, 0.0, FrameDirection::to_lab).matrix - rho.matrix) < 1e-15);
    CHECK(max_abs(rotate_state(rho, b, p, p.t0(), FrameDirection::to_lab).matrix - rho.matrix) < 1e-12);
    const DensityMatrix there = rotate_state(rho, b, p, 0.37, FrameDirection::to_rotating);
    CHECK(max_abs(rotate_state(there, b, p, 0.37, FrameDirection::to_lab).matrix - rho.matrix) < 1e-12);
  }
}

TEST_CASE("unitary dynamics conserve purity") {
  ModelParams p;
  p.n_spins = 4;
  p.kappa = 0.0;
  const SpinBasis b(4);
  std::mt19937_64 rng(9);
  const Vector psi = btc::testing::random_complex(5, rng).col(0).normalized();
  const DensityMatrix rho0 = pure_state(psi);
  const Trajectory tr = evolve_fixed_step(b, p, lab_frame_time_generator(p, b), rho0, 10 * p.t0(),
                                          p.t0() / 1000, 100);
  for (const auto& m : tr.moments) CHECK(std::abs(m.purity - 1.0) < 1e-8);
}

TEST_CASE("lab and rotating propagation agree off the stroboscopic grid") {
  ModelParams p;
  p.n_spins = 4;
  const SpinBasis b(4);
  const DensityMatrix rho0 = spin_coherent_down(b);
  const double t = 3.7 * p.t0();
  const double dt = p.t0() / 2000;
  EvolveOptions keep;
  keep.store_states = true;
  const Trajectory lab = evolve_fixed_step(b, p, lab_frame_time_generator(p, b), rho0, t, dt, 7400, keep);
  const Trajectory rot = evolve_fixed_step(b, p, rotating_frame_time_generator(p, b), rho0, t, dt, 7400, keep);
  const DensityMatrix lab_in_rot = rotate_state(lab.states.back(), b, p, t, FrameDirection::to_rotating);
  CHECK(trace_distance(lab_in_rot.matrix, rot.states.back().matrix) < 1e-6);
}

TEST_CASE("dense superoperator memory guard") {
  CHECK_THROWS_AS(ensure_dense_allowed(81), MemoryGuardError);
  CHECK_NOTHROW(ensure_dense_allowed(80));
}

TEST_CASE("sandwich sum materialization") {
  ModelParams p;
  p.n_spins = 3;
  const SpinBasis b(3);
  std::mt19937_64 rng(10);
  const Matrix rho = btc::testing::random_complex(4, rng);
  const SandwichSum m = lab_frame_map(p, b);
  CHECK(max_abs(m.to_superoperator(Frame::lab, Order::exact).apply(rho) - m.apply(rho)) < 1e-12);
  CHECK(max_abs(m.scaled(2.0).apply(rho) - 2.0 * m.apply(rho)) < 1e-12);
}

TEST_CASE("model parameter validation") {
  ModelParams p;
  p.kappa = 0.0;
  CHECK_NOTHROW(p.validate(false));
  CHECK_THROWS_AS(p.validate(true), std::invalid_argument);
  p.kappa = 1.0;
  p.omega0 = 5.0;
  CHECK(regime_warning(p).has_value());
  p.omega0 = 40.0;
  CHECK_FALSE(regime_warning(p).has_value());
  p.n_spins = 0;
  CHECK_THROWS_AS(p.validate(false), std::invalid_argument);
}
