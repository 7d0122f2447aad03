// meanfield.hpp - First-order mean-field and second-order (Gaussian) cumulant
// equations for the collective spin, in variables normalized by N/2.

#pragma once

#include <array>
#include <map>
#include <vector>

#include "btc/propagate.hpp"

namespace btc {

enum class MeanFieldOrder { first, second };

struct MeanFieldState {
  MeanFieldOrder order = MeanFieldOrder::first;
  double mx = 0, my = 0, mz = -1;  // 2<S_a>/N
  // (2/N)^2 (<{S_a,S_b}>/2 - <S_a><S_b>), order xx, yy, zz, xy, xz, yz
  std::array<double, 6> c{};

  bool finite() const;
};

MeanFieldState meanfield_all_down(MeanFieldOrder order, int n_spins);
MeanFieldState meanfield_from_state(const SpinBasis& basis, const Matrix& rho, MeanFieldOrder order);

// Product factorization, N -> infinity:
//   mx' = k mx mz,  my' = -w mz + k my mz,  mz' = w my - k (mx^2 + my^2)
MeanFieldState mft_rhs(const MeanFieldState& state, const ModelParams& params);

// Exact Heisenberg equations for <S_a> and <{S_a,S_b}>/2 with ordered third
// moments closed by setting their third cumulants to zero.
MeanFieldState cumulant2_rhs(const MeanFieldState& state, const ModelParams& params);

// Products of Sx, Sy, Sz with complex coefficients. Words are letter lists
// over {0, 1, 2}; the empty word is the identity.
class SpinPolynomial {
 public:
  using Word = std::vector<int>;

  static SpinPolynomial letter(int a);
  static SpinPolynomial constant(Complex c);

  SpinPolynomial& operator+=(const SpinPolynomial& o);
  SpinPolynomial operator+(const SpinPolynomial& o) const;
  SpinPolynomial operator-(const SpinPolynomial& o) const;
  SpinPolynomial operator*(const SpinPolynomial& o) const;
  SpinPolynomial operator*(Complex s) const;

  const std::map<Word, Complex>& terms() const { return terms_; }
  std::size_t max_length() const;
  // Rewrites every word with letters in ascending order using
  // [S_a, S_b] = i eps_abc S_c.
  SpinPolynomial sorted() const;

  // Exact value on a density matrix.
  Complex expectation(const SpinBasis& basis, const Matrix& rho) const;

 private:
  std::map<Word, Complex> terms_;
};

SpinPolynomial commutator(const SpinPolynomial& a, const SpinPolynomial& b);

// Heisenberg images (sorted): drive part i[Sx, O] and dissipative part
// S+[O, S-] + [S+, O]S-. The generator adjoint is w * drive + (k/N) * damping.
SpinPolynomial heisenberg_drive(const SpinPolynomial& o);
SpinPolynomial heisenberg_damping(const SpinPolynomial& o);

struct MeanFieldOptions {
  int sample_every = 1;
};

// RK4 on the normalized equations; the Trajectory carries de-normalized
// moments (<S_a> = N m_a / 2 and second moments from the cumulants, or from
// products at first order). Purity is not defined and recorded as NaN.
Trajectory evolve_meanfield(MeanFieldOrder order, const MeanFieldState& init,
                            const ModelParams& params, double t_end, double dt,
                            const MeanFieldOptions& opts = {});

MomentRecord meanfield_moments(const MeanFieldState& state, int n_spins);

}  // namespace btc
