// srwa.hpp - Stroboscopic rotating-wave approximation: the averaged
// generators Lbar0 and Lbar1, the intra-period map G(s), full-time state
// assembly, steady states, and closed-form moment dynamics.

#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "btc/propagate.hpp"

namespace btc {

// rho -> (k/N)[D(x,x) + D(y,y)/2 + D(z,z)/2], D(a,b) = 2 a rho b - b a rho - rho b a
SandwichSum lbar0_map(const SpinBasis& basis, const ModelParams& params);
Superoperator build_lbar0(const SpinBasis& basis, const ModelParams& params);

// First-order correction, O(k^2 / w).
SandwichSum lbar1_map(const SpinBasis& basis, const ModelParams& params);
Superoperator build_lbar1(const SpinBasis& basis, const ModelParams& params);

// int_0^s L_rot(t) dt in closed form.
SandwichSum g_map(const SpinBasis& basis, const ModelParams& params, double s);
Superoperator build_g(const SpinBasis& basis, const ModelParams& params, double s);
// Same, but with the literal dephasing weights {1, 2, 2} on the s-linear
// term instead of {1, 1/2, 1/2}. Kept only so the validator can report how
// far it is from the exact integral.
Superoperator build_g_weights122(const SpinBasis& basis, const ModelParams& params, double s);

enum class SrwaBackend { matrix_free, dense };

struct SrwaOptions {
  SrwaBackend backend = SrwaBackend::matrix_free;
  // Negative eigenvalues down to -positivity_tolerance are accepted; the
  // default (<= 0) means max(1e-6, kappa/omega0).
  double positivity_tolerance = 0.0;
  bool check_positivity = true;

  double resolved_tolerance(const ModelParams& params) const;
};

// Immutable generators shared by all SRWA evaluations at fixed (N, w, k).
class SrwaEngine {
 public:
  SrwaEngine(const SpinBasis& basis, const ModelParams& params, SrwaOptions opts = {});

  const SpinBasis& basis() const { return *basis_; }
  const ModelParams& params() const { return params_; }
  const SrwaOptions& options() const { return opts_; }
  const SandwichSum& lbar() const { return lbar_; }  // Lbar0 + Lbar1

  // exp(T0 * Lbar) applied once.
  Matrix step_period(const Matrix& rho) const;
  // [1 + G(s)] rho, then U(r_n + s) . U^dagger.
  Matrix finish(const Matrix& strobe_state, const StroboscopicTime& st) const;

 private:
  const SpinBasis* basis_;
  ModelParams params_;
  SrwaOptions opts_;
  SandwichSum lbar_;
  std::array<SandwichSum, 5> g_blocks_;
  std::optional<Matrix> period_propagator_;  // dense backend only
};

// SRWA evolution of one initial state. Stroboscopic states are generated by
// repeated one-period steps from rho0 and cached, so the result at a given t
// does not depend on the order of queries.
class SrwaTrajectory {
 public:
  SrwaTrajectory(std::shared_ptr<const SrwaEngine> engine, DensityMatrix rho0);

  DensityMatrix state(double t);
  const Matrix& strobe_state(long n);

 private:
  std::shared_ptr<const SrwaEngine> engine_;
  std::vector<Matrix> strobes_;
};

// One-shot U(t)[1 + G(s)] exp(r_n Lbar) rho0 U^dagger(t).
DensityMatrix srwa_state(const DensityMatrix& rho0, double t, const SpinBasis& basis,
                         const ModelParams& params, const SrwaOptions& opts = {});

// (1/(N+1)) [1 + (4k/(w N)) Sy]
DensityMatrix steady_state_analytic(const SpinBasis& basis, const ModelParams& params);
// Non-empty when 2k/w >= 1 and the analytic form stops being positive.
std::optional<std::string> steady_state_warning(const ModelParams& params);
// Unit-trace null vector of the lab generator (smallest right singular vector).
DensityMatrix steady_state_numeric(const SpinBasis& basis, const ModelParams& params);

struct MomentSet {
  double sx = 0, sy = 0, sz = 0;
  double sx2 = 0, sy2 = 0, sz2 = 0;
  double syz_sym = 0;
  // companions needed by the x equations
  double sxy_sym = 0, sxz_sym = 0;

  // Throws NumericalInvariantError if the Casimir sum misses S(S+1).
  static MomentSet from_state(const SpinBasis& basis, const Matrix& rho);
};

MomentSet strobe_moments_analytic(const MomentSet& init, double r_n, const ModelParams& params);

// Right-hand side of the closed moment ODEs at stroboscopic points, order
// (sx, sy, sz, sx2, sy2, sz2, syz_sym, sxy_sym, sxz_sym).
std::array<double, 9> strobe_moment_rates(const MomentSet& m, const ModelParams& params);

struct ShortTimeObservables {
  double sx = 0, sy = 0, sz = 0;
};

ShortTimeObservables short_time_observables_analytic(const MomentSet& at_strobe, double s,
                                                     const ModelParams& params);

}  // namespace btc
