// liouville.hpp - Superoperator algebra and the Lindblad generators of the
// collectively damped, x-driven spin ensemble.
//
// Vectorization convention (used everywhere in the project): column stacking,
// vec(rho)_{i + d*j} = rho(i, j). Under it the map rho -> A rho B is the
// matrix kron(B^T, A), so A_L = kron(1, A) and B_R = kron(B^T, 1).

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "btc/density_matrix.hpp"
#include "btc/spin_basis.hpp"

namespace btc {

enum class Frame { lab, rotating, averaged };
enum class Order { exact, rwa0, magnus1, short_time };

struct Superoperator {
  Matrix matrix;  // dim^2 x dim^2
  Frame frame_label = Frame::lab;
  Order order_label = Order::exact;

  int state_dim() const;
  Matrix apply(const Matrix& rho) const;
};

struct ModelParams {
  double omega0 = 40.0;  // drive frequency (rad / time)
  double kappa = 1.0;    // collective decay rate (1 / time)
  int n_spins = 10;

  double t0() const { return 2.0 * kPi / omega0; }
  double ratio() const { return omega0 / kappa; }

  // Throws std::invalid_argument. SRWA use additionally needs omega0 > 0 and
  // kappa > 0.
  void validate(bool for_srwa = false) const;
};

// Non-empty when omega0 / kappa < 10, where first-order SRWA is unreliable.
std::optional<std::string> regime_warning(const ModelParams& params);

inline constexpr int kMaxDenseSpins = 80;

// Throws MemoryGuardError above kMaxDenseSpins.
void ensure_dense_allowed(int n_spins);

Vector vectorize(const Matrix& rho);
Matrix devectorize(const Vector& v);  // throws std::invalid_argument

Superoperator left_mul_super(const Matrix& op);
Superoperator right_mul_super(const Matrix& op);
// rho -> a rho b
Matrix sandwich_matrix(const Matrix& a, const Matrix& b);

// A linear map rho -> sum_k c_k A_k rho B_k. Applied in matrix form with
// sparse factors, or materialized as a dense superoperator.
class SandwichSum {
 public:
  SandwichSum() = default;

  SandwichSum& add(Complex coeff, const Matrix& left, const Matrix& right);
  SandwichSum& add(const SandwichSum& other, Complex scale = 1.0);

  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  int state_dim() const { return dim_; }

  Matrix apply(const Matrix& rho) const;
  // out += scale * apply(rho)
  void apply_add(const Matrix& rho, Complex scale, Matrix& out) const;
  Superoperator to_superoperator(Frame frame, Order order) const;

  SandwichSum scaled(Complex s) const;
  // sum |c_k| b(A_k) b(B_k), b(A) = sqrt(|A|_1 |A|_inf) >= |A|_2
  double norm_bound() const;

 private:
  struct Term {
    Complex coeff;
    SparseMatrix left;
    SparseMatrix right;
  };
  std::vector<Term> terms_;
  int dim_ = 0;
};

// Product of left and right multiplication maps, c * A_L * B_R, closed under
// composition: (A_L B_R)(C_L D_R) = (AC)_L (DB)_R since right maps compose in
// reverse order.
class LRWord {
 public:
  LRWord(Complex coeff, Matrix left, Matrix right);
  static LRWord left(const Matrix& op);
  static LRWord right(const Matrix& op);

  LRWord operator*(const LRWord& other) const;
  LRWord operator*(Complex s) const;
  friend LRWord operator*(Complex s, const LRWord& w) { return w * s; }

  Complex coeff() const { return coeff_; }
  const Matrix& left_factor() const { return left_; }
  const Matrix& right_factor() const { return right_; }

 private:
  Complex coeff_;
  Matrix left_;
  Matrix right_;
};

SandwichSum& operator+=(SandwichSum& sum, const LRWord& word);
SandwichSum& operator-=(SandwichSum& sum, const LRWord& word);

// rho -> 2 a rho b - b a rho - rho b a, the building block for the dephasing
// channels and the oscillating cross terms.
SandwichSum dissipator_block(const Matrix& a, const Matrix& b);

// Lab-frame Lindblad generator:
//   d rho/dt = -i w [Sx, rho] + (k/N)(2 S- rho S+ - S+S- rho - rho S+S-).
SandwichSum lab_frame_map(const ModelParams& params, const SpinBasis& basis);
Superoperator lab_frame_generator(const ModelParams& params, const SpinBasis& basis);
// Dissipative (kappa) part only.
SandwichSum lab_dissipator_map(const ModelParams& params, const SpinBasis& basis);

// Rotating-frame generator written as a truncated Fourier series in w t:
//   L(t) = C0 + cos(wt) C1 + sin(wt) S1 + cos(2wt) C2 + sin(2wt) S2.
struct RotatingFrameComponents {
  double omega0 = 0.0;
  SandwichSum constant;
  SandwichSum cos1, sin1, cos2, sin2;

  SandwichSum at(double t) const;
  Matrix apply(double t, const Matrix& rho) const;
};

RotatingFrameComponents rotating_frame_components(const ModelParams& params,
                                                  const SpinBasis& basis);
Superoperator rotating_frame_generator(const ModelParams& params, const SpinBasis& basis,
                                       double t);

enum class FrameDirection { to_lab, to_rotating };

// U(t) = exp(-i w Sx t)
Matrix frame_unitary(const SpinBasis& basis, double omega0, double t);
// to_lab: U rho U^dagger; to_rotating: U^dagger rho U.
DensityMatrix rotate_state(const DensityMatrix& rho, const SpinBasis& basis,
                           const ModelParams& params, double t, FrameDirection direction);

// Matrix-form right-hand side d rho/dt = f(t, rho), written into out.
using MatrixRhs = std::function<void(double t, const Matrix& rho, Matrix& out)>;

MatrixRhs lab_frame_rhs(const ModelParams& params, const SpinBasis& basis);
MatrixRhs rotating_frame_rhs(const ModelParams& params, const SpinBasis& basis);
MatrixRhs time_independent_rhs(SandwichSum map);
MatrixRhs superoperator_rhs(std::function<Superoperator(double)> generator);

}  // namespace btc
