// analysis.hpp - Fidelity, extremum detection, oscillation period and decay
// rate (empirical and closed-form), and the mean-field error metric.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "btc/srwa.hpp"

namespace btc {

// Uhlmann fidelity Tr sqrt(sqrt(b) a sqrt(b)), in [0, 1].
double fidelity(const DensityMatrix& a, const DensityMatrix& b);

enum class ExtremumKind { peak, trough };
enum class Observable { sx, sy, sz };

struct ExtremaRecord {
  ExtremumKind kind = ExtremumKind::peak;
  double t_star = 0.0;
  double s_star = 0.0;
  double r_n = 0.0;
  double value = 0.0;
  double delta_value = 0.0;  // value - offset
};

std::optional<std::string> check_alternation(const std::vector<ExtremaRecord>& ex);

// Discrete local extrema refined by a parabola through the three samples
// around each. Returns an empty list when fewer than two extrema exist.
std::vector<ExtremaRecord> find_extrema(const std::vector<double>& times,
                                        const std::vector<double>& values, double t0,
                                        double offset = 0.0);
std::vector<ExtremaRecord> find_extrema(const Trajectory& traj, Observable obs, double offset = 0.0);

double observable_value(const MomentRecord& m, Observable obs);

struct PeriodPoint {
  double r_n = 0.0;  // stroboscopic base of the earlier extremum
  double t = 0.0;    // midpoint of the pair
  double period = 0.0;
  double shift = 0.0;  // (T - T0)/T0
  ExtremumKind branch = ExtremumKind::peak;
};

struct DecayPoint {
  double r_n = 0.0;
  double t = 0.0;
  double gamma = 0.0;  // positive = decay
  ExtremumKind branch = ExtremumKind::peak;
};

struct DecaySeries {
  std::vector<DecayPoint> points;
  std::vector<std::string> skipped;  // diagnostics for pairs whose delta changed sign
};

// Spacing of consecutive same-kind extrema.
std::vector<PeriodPoint> empirical_period(const std::vector<ExtremaRecord>& extrema, double t0);

// gamma = -ln(d2/d1)/(t2 - t1) with d = value - offset of consecutive
// same-kind extrema.
DecaySeries empirical_decay_rate(const std::vector<ExtremaRecord>& extrema);

// (T - T0)/T0 = (4N^2 + 8N - 11) k^2 / (8 w^2 N^2) + sign * memory(r_n) with
// sign -1 for peaks and +1 for troughs; memory decays as exp(-7 k r_n / 2N).
double analytic_period_shift(const MomentSet& init, double r_n, const ModelParams& params,
                             ExtremumKind branch);
double period_memory_term(const MomentSet& init, double r_n, const ModelParams& params);

// gamma = 3k/(2N) + sign * memory(r_n), same branch signs.
double analytic_decay_rate(const MomentSet& init, double r_n, const ModelParams& params,
                           ExtremumKind branch);
double decay_memory_term(const MomentSet& init, double r_n, const ModelParams& params);

int branch_sign(ExtremumKind branch);

// |<Sz>_a - <Sz>_b| / N per sample; grids must agree.
std::vector<double> meanfield_error(const Trajectory& exact, const Trajectory& approx);

// max of err over samples with t in [k T0, (k+1) T0].
double period_max(const std::vector<double>& times, const std::vector<double>& err, double t0, long k);

}  // namespace btc
