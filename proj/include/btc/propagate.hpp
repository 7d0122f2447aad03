// propagate.hpp - Time evolution: fixed-step RK4 in matrix form, matrix
// exponentials (dense and matrix-free), and Gauss-Legendre quadrature of
// time-dependent generators.

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "btc/liouville.hpp"

namespace btc {

// t = r_n + s with r_n = n * t0, 0 <= s < t0.
struct StroboscopicTime {
  double r_n = 0.0;
  double s = 0.0;
  long n = 0;
};

// Throws std::invalid_argument for t < 0 or t0 <= 0.
StroboscopicTime strobe_decompose(double t, double t0);

struct MomentRecord {
  double sx = 0, sy = 0, sz = 0;
  double sx2 = 0, sy2 = 0, sz2 = 0;
  double syz_sym = 0;
  double purity = 0;
};

MomentRecord measure_moments(const SpinBasis& basis, const Matrix& rho);

struct Trajectory {
  ModelParams params;
  std::vector<double> times;
  std::vector<DensityMatrix> states;  // empty unless requested
  std::vector<MomentRecord> moments;
  std::vector<StroboscopicTime> strobe_labels;

  std::size_t size() const { return times.size(); }
  void push(double t, const MomentRecord& m);
  // Recomputes moments from stored states; returns the largest deviation.
  double moment_consistency(const SpinBasis& basis) const;
};

// d rho/dt = rhs(t, rho). A time-dependent generator must declare its period
// so that the step-size floor can be enforced.
struct TimeGenerator {
  MatrixRhs rhs;
  bool time_dependent = false;
  double period = 0.0;
};

TimeGenerator lab_frame_time_generator(const ModelParams& params, const SpinBasis& basis);
TimeGenerator rotating_frame_time_generator(const ModelParams& params, const SpinBasis& basis);

struct EvolveOptions {
  bool store_states = false;
  double t_start = 0.0;
  double abort_eigenvalue = -1e-6;
  bool check_invariants = true;
  // Maps the integrated state to the recorded one (e.g. a frame change).
  std::function<Matrix(double t, const Matrix& rho)> sample_transform;
  // Called at every sample with the recorded state.
  std::function<void(double t, const Matrix& rho)> observer;
};

// Classical RK4 with t_i = t_start + i*dt, Hermitian/trace correction after
// every step. The number of steps is round((t_end - t_start)/dt); t_end has
// to be reachable within 1e-9 relative. Samples at step 0 and every
// sample_every steps.
Trajectory evolve_fixed_step(const SpinBasis& basis, const ModelParams& params,
                             const TimeGenerator& gen, const DensityMatrix& rho0, double t_end,
                             double dt, int sample_every, const EvolveOptions& opts = {});

// Exact lab-frame trajectory of the full master equation, integrated in the
// rotating frame (the drive is removed, so the step only has to resolve the
// dissipative time scales) and rotated back at every sample.
Trajectory evolve_exact(const SpinBasis& basis, const ModelParams& params, const DensityMatrix& rho0,
                        double t_end, double dt, int sample_every, EvolveOptions opts = {});

// exp(duration * L) vec(rho) with a dense scaling-and-squaring exponential.
DensityMatrix expm_apply(const Superoperator& superop, double duration, const DensityMatrix& rho);
Matrix dense_expm(const Matrix& a);

// Matrix-free exp(duration * L) rho: truncated Taylor series on substeps
// chosen from a norm bound of the sandwich terms.
Matrix expmv(const SandwichSum& map, double duration, const Matrix& rho, double tol = 1e-15);
// Upper bound on the induced 2-norm of rho -> map(rho).
double operator_norm_bound(const SandwichSum& map);

struct QuadratureRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

QuadratureRule gauss_legendre(int order);

using SuperopFunction = std::function<Superoperator(double)>;

// Period average (1/(b-a)) int_a^b L; `panels` equal subintervals, each with
// a rule of quad_order nodes.
Superoperator averaged_generator_numeric(const SuperopFunction& gen, double t_start, double t_end,
                                         int quad_order = 32, int panels = 1);

// (1/(2 r_n)) int_0^{r_n} dt' int_0^{t'} dt [L(t'), L(t)] for r_n = n*period.
Superoperator magnus1_numeric(const SuperopFunction& gen, double r_n, double period,
                              int quad_order = 32);

// int_0^s L(t) dt.
Superoperator cumulative_generator_numeric(const SuperopFunction& gen, double s,
                                           int quad_order = 32, int panels = 1);

}  // namespace btc
