#include "btc/liouville.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace btc {

int Superoperator::state_dim() const {
  return static_cast<int>(std::lround(std::sqrt(static_cast<double>(matrix.rows()))));
}

Matrix Superoperator::apply(const Matrix& rho) const { return devectorize(matrix * vectorize(rho)); }

void ModelParams::validate(bool for_srwa) const {
  if (n_spins < 1) throw std::invalid_argument("n_spins must be >= 1");
  if (!std::isfinite(omega0) || !std::isfinite(kappa)) {
    throw std::invalid_argument("omega0 and kappa must be finite");
  }
  if (omega0 < 0.0) throw std::invalid_argument("omega0 must be >= 0");
  if (kappa < 0.0) throw std::invalid_argument("kappa must be >= 0");
  if (for_srwa && (omega0 <= 0.0 || kappa <= 0.0)) {
    throw std::invalid_argument("SRWA requires omega0 > 0 and kappa > 0");
  }
}

std::optional<std::string> regime_warning(const ModelParams& params) {
  if (params.kappa > 0.0 && params.ratio() < 10.0) {
    std::ostringstream msg;
    msg << "omega0/kappa = " << params.ratio()
        << " < 10: first-order SRWA outside its validity regime";
    return msg.str();
  }
  return std::nullopt;
}

void ensure_dense_allowed(int n_spins) {
  if (n_spins > kMaxDenseSpins) {
    throw MemoryGuardError("dense superoperator requested for N = " + std::to_string(n_spins) +
                           " > " + std::to_string(kMaxDenseSpins) +
                           "; use the matrix-form propagators instead");
  }
}

Vector vectorize(const Matrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

Matrix devectorize(const Vector& v) {
  const auto d = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(v.size()))));
  if (d * d != v.size()) {
    throw std::invalid_argument("devectorize: length " + std::to_string(v.size()) +
                                " is not a perfect square");
  }
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

Matrix sandwich_matrix(const Matrix& a, const Matrix& b) {
  // kron(B^T, A)
  const Eigen::Index n = a.rows();
  const Matrix bt = b.transpose();
  Matrix out(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) out.block(i * n, j * n, n, n) = bt(i, j) * a;
  }
  return out;
}

Superoperator left_mul_super(const Matrix& op) {
  return {sandwich_matrix(op, Matrix::Identity(op.rows(), op.cols())), Frame::lab, Order::exact};
}

Superoperator right_mul_super(const Matrix& op) {
  return {sandwich_matrix(Matrix::Identity(op.rows(), op.cols()), op), Frame::lab, Order::exact};
}

// ---------------------------------------------------------------------------
// SandwichSum

SandwichSum& SandwichSum::add(Complex coeff, const Matrix& left, const Matrix& right) {
  if (left.rows() != left.cols() || right.rows() != right.cols() || left.rows() != right.rows()) {
    throw std::invalid_argument("SandwichSum: factors must be square and of equal size");
  }
  const int d = static_cast<int>(left.rows());
  if (dim_ == 0) dim_ = d;
  if (d != dim_) throw std::invalid_argument("SandwichSum: dimension mismatch");
  if (coeff == Complex(0.0)) return *this;
  Term t{coeff, left.sparseView(), right.sparseView()};
  t.left.prune(Complex(0.0), 1e-300);
  t.right.prune(Complex(0.0), 1e-300);
  t.left.makeCompressed();
  t.right.makeCompressed();
  terms_.push_back(std::move(t));
  return *this;
}

SandwichSum& SandwichSum::add(const SandwichSum& other, Complex scale) {
  if (other.empty()) return *this;
  if (dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_) throw std::invalid_argument("SandwichSum: dimension mismatch");
  if (scale == Complex(0.0)) return *this;
  for (const Term& t : other.terms_) terms_.push_back({t.coeff * scale, t.left, t.right});
  return *this;
}

SandwichSum SandwichSum::scaled(Complex s) const {
  SandwichSum out;
  out.dim_ = dim_;
  out.add(*this, s);
  return out;
}

static double two_norm_bound(const SparseMatrix& a) {
  Eigen::VectorXd col = Eigen::VectorXd::Zero(a.cols());
  Eigen::VectorXd row = Eigen::VectorXd::Zero(a.rows());
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      col(it.col()) += std::abs(it.value());
      row(it.row()) += std::abs(it.value());
    }
  }
  if (a.nonZeros() == 0) return 0.0;
  return std::sqrt(col.maxCoeff() * row.maxCoeff());
}

double SandwichSum::norm_bound() const {
  double total = 0.0;
  for (const Term& t : terms_) total += std::abs(t.coeff) * two_norm_bound(t.left) * two_norm_bound(t.right);
  return total;
}

void SandwichSum::apply_add(const Matrix& rho, Complex scale, Matrix& out) const {
  Matrix tmp(rho.rows(), rho.cols());
  for (const Term& t : terms_) {
    tmp.noalias() = t.left * rho;
    out.noalias() += (scale * t.coeff) * (tmp * t.right);
  }
}

Matrix SandwichSum::apply(const Matrix& rho) const {
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  apply_add(rho, 1.0, out);
  return out;
}

Superoperator SandwichSum::to_superoperator(Frame frame, Order order) const {
  ensure_dense_allowed(dim_ - 1);
  const Eigen::Index n = dim_;
  Matrix out = Matrix::Zero(n * n, n * n);
  for (const Term& t : terms_) {
    const Matrix a = Matrix(t.left);
    // kron(B^T, A): block (i, j) = B(j, i) * A; visit only B's nonzeros.
    for (int k = 0; k < t.right.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(t.right, k); it; ++it) {
        // it.row() = r, it.col() = c  ->  B^T(c, r)
        out.block(it.col() * n, it.row() * n, n, n) += (t.coeff * it.value()) * a;
      }
    }
  }
  return {std::move(out), frame, order};
}

// ---------------------------------------------------------------------------
// LRWord

LRWord::LRWord(Complex coeff, Matrix left, Matrix right)
    : coeff_(coeff), left_(std::move(left)), right_(std::move(right)) {}

LRWord LRWord::left(const Matrix& op) {
  return {1.0, op, Matrix::Identity(op.rows(), op.cols())};
}

LRWord LRWord::right(const Matrix& op) {
  return {1.0, Matrix::Identity(op.rows(), op.cols()), op};
}

LRWord LRWord::operator*(const LRWord& other) const {
  return {coeff_ * other.coeff_, left_ * other.left_, other.right_ * right_};
}

LRWord LRWord::operator*(Complex s) const { return {coeff_ * s, left_, right_}; }

SandwichSum& operator+=(SandwichSum& sum, const LRWord& word) {
  return sum.add(word.coeff(), word.left_factor(), word.right_factor());
}

SandwichSum& operator-=(SandwichSum& sum, const LRWord& word) {
  return sum.add(-word.coeff(), word.left_factor(), word.right_factor());
}

SandwichSum dissipator_block(const Matrix& a, const Matrix& b) {
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix ba = b * a;
  SandwichSum out;
  out.add(2.0, a, b);
  out.add(-1.0, ba, id);
  out.add(-1.0, id, ba);
  return out;
}

// ---------------------------------------------------------------------------
// Generators

SandwichSum lab_dissipator_map(const ModelParams& params, const SpinBasis& basis) {
  const double g = params.kappa / params.n_spins;
  return dissipator_block(basis.sminus(), basis.splus()).scaled(g);
}

SandwichSum lab_frame_map(const ModelParams& params, const SpinBasis& basis) {
  if (params.n_spins != basis.n_spins()) {
    throw std::invalid_argument("lab_frame_map: params and basis disagree on N");
  }
  SandwichSum out;
  const Matrix& id = basis.identity();
  out.add(Complex(0.0, -params.omega0), basis.sx(), id);
  out.add(Complex(0.0, params.omega0), id, basis.sx());
  out.add(lab_dissipator_map(params, basis));
  return out;
}

Superoperator lab_frame_generator(const ModelParams& params, const SpinBasis& basis) {
  return lab_frame_map(params, basis).to_superoperator(Frame::lab, Order::exact);
}

RotatingFrameComponents rotating_frame_components(const ModelParams& params,
                                                  const SpinBasis& basis) {
  if (params.n_spins != basis.n_spins()) {
    throw std::invalid_argument("rotating_frame_components: params and basis disagree on N");
  }
  const Matrix& x = basis.sx();
  const Matrix& y = basis.sy();
  const Matrix& z = basis.sz();
  const double g = params.kappa / params.n_spins;

  RotatingFrameComponents c;
  c.omega0 = params.omega0;
  // (2 x r x - x^2 r - r x^2) + (half-weight y and z dephasing)
  c.constant.add(dissipator_block(x, x), g);
  c.constant.add(dissipator_block(y, y), 0.5 * g);
  c.constant.add(dissipator_block(z, z), 0.5 * g);
  // i cos(wt) [D(x, y) - D(y, x)]
  c.cos1.add(dissipator_block(x, y), kI * g);
  c.cos1.add(dissipator_block(y, x), -kI * g);
  // i sin(wt) [D(z, x) - D(x, z)]
  c.sin1.add(dissipator_block(z, x), kI * g);
  c.sin1.add(dissipator_block(x, z), -kI * g);
  // cos(2wt) [half D(y, y) - half D(z, z)]
  c.cos2.add(dissipator_block(y, y), 0.5 * g);
  c.cos2.add(dissipator_block(z, z), -0.5 * g);
  // -sin(2wt) [half D(y, z) + half D(z, y)]
  c.sin2.add(dissipator_block(y, z), -0.5 * g);
  c.sin2.add(dissipator_block(z, y), -0.5 * g);
  return c;
}

SandwichSum RotatingFrameComponents::at(double t) const {
  const double wt = omega0 * t;
  SandwichSum out = constant;
  out.add(cos1, std::cos(wt));
  out.add(sin1, std::sin(wt));
  out.add(cos2, std::cos(2.0 * wt));
  out.add(sin2, std::sin(2.0 * wt));
  return out;
}

Matrix RotatingFrameComponents::apply(double t, const Matrix& rho) const {
  const double wt = omega0 * t;
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  constant.apply_add(rho, 1.0, out);
  cos1.apply_add(rho, std::cos(wt), out);
  sin1.apply_add(rho, std::sin(wt), out);
  cos2.apply_add(rho, std::cos(2.0 * wt), out);
  sin2.apply_add(rho, std::sin(2.0 * wt), out);
  return out;
}

Superoperator rotating_frame_generator(const ModelParams& params, const SpinBasis& basis,
                                       double t) {
  return rotating_frame_components(params, basis).at(t).to_superoperator(Frame::rotating,
                                                                         Order::exact);
}

Matrix frame_unitary(const SpinBasis& basis, double omega0, double t) {
  if (omega0 * t == 0.0) return basis.identity();
  const Eigen::VectorXd& ev = basis.sx_eigenvalues();
  const Matrix& v = basis.sx_eigenvectors();
  Vector phases(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) phases(k) = std::exp(Complex(0.0, -omega0 * ev(k) * t));
  return v * phases.asDiagonal() * v.adjoint();
}

DensityMatrix rotate_state(const DensityMatrix& rho, const SpinBasis& basis,
                           const ModelParams& params, double t, FrameDirection direction) {
  const Matrix u = frame_unitary(basis, params.omega0, t);
  DensityMatrix out = rho;
  if (direction == FrameDirection::to_lab) {
    out.matrix = u * rho.matrix * u.adjoint();
  } else {
    out.matrix = u.adjoint() * rho.matrix * u;
  }
  return out;
}

MatrixRhs time_independent_rhs(SandwichSum map) {
  return [map = std::move(map)](double, const Matrix& rho, Matrix& out) {
    out.setZero(rho.rows(), rho.cols());
    map.apply_add(rho, 1.0, out);
  };
}

MatrixRhs lab_frame_rhs(const ModelParams& params, const SpinBasis& basis) {
  return time_independent_rhs(lab_frame_map(params, basis));
}

namespace {

// Tridiagonal matrix stored by diagonals: lo(i) = A(i, i-1), up(i) = A(i, i+1).
struct Tridiag {
  Vector lo, di, up;

  static Tridiag of(const Matrix& a) {
    const Eigen::Index d = a.rows();
    Tridiag t{Vector::Zero(d), a.diagonal(), Vector::Zero(d)};
    for (Eigen::Index i = 1; i < d; ++i) {
      t.lo(i) = a(i, i - 1);
      t.up(i - 1) = a(i - 1, i);
    }
    return t;
  }
};

// out = A m
void tri_left(const Tridiag& a, const Matrix& m, Matrix& out) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const Complex* col = m.col(j).data();
    Complex* dst = out.col(j).data();
    for (Eigen::Index i = 0; i < d; ++i) {
      Complex v = a.di(i) * col[i];
      if (i > 0) v += a.lo(i) * col[i - 1];
      if (i + 1 < d) v += a.up(i) * col[i + 1];
      dst[i] = v;
    }
  }
}

// out (+)= scale * m A
void tri_right(const Matrix& m, const Tridiag& a, Complex scale, Matrix& out, bool accumulate) {
  const Eigen::Index d = m.cols();
  for (Eigen::Index j = 0; j < d; ++j) {
    Complex cj = a.di(j), cl = 0.0, cu = 0.0;
    if (j > 0) cl = a.up(j - 1);      // A(j-1, j)
    if (j + 1 < d) cu = a.lo(j + 1);  // A(j+1, j)
    cj *= scale;
    cl *= scale;
    cu *= scale;
    if (accumulate) {
      out.col(j) += cj * m.col(j);
    } else {
      out.col(j) = cj * m.col(j);
    }
    if (j > 0) out.col(j) += cl * m.col(j - 1);
    if (j + 1 < d) out.col(j) += cu * m.col(j + 1);
  }
}

}  // namespace

MatrixRhs rotating_frame_rhs(const ModelParams& params, const SpinBasis& basis) {
  // Same map as the Fourier components, evaluated through the rotated jump
  // operator S-(t) = Sx - i (cos(wt) Sy - sin(wt) Sz), which stays tridiagonal:
  // g (2 X S+ - S+ X - Y S-) with X = S- rho, Y = rho S+.
  const Tridiag x = Tridiag::of(basis.sx());
  const Tridiag y = Tridiag::of(basis.sy());
  const Tridiag z = Tridiag::of(basis.sz());
  const double w = params.omega0;
  const double g = params.kappa / params.n_spins;
  const Eigen::Index d = basis.dim();
  auto xs = std::make_shared<Matrix>(d, d);
  auto ys = std::make_shared<Matrix>(d, d);
  return [x, y, z, w, g, xs, ys](double t, const Matrix& rho, Matrix& out) {
    const double c = std::cos(w * t), s = std::sin(w * t);
    Tridiag sm, sp;
    sm.lo = x.lo - kI * (c * y.lo - s * z.lo);
    sm.di = x.di - kI * (c * y.di - s * z.di);
    sm.up = x.up - kI * (c * y.up - s * z.up);
    sp.lo = x.lo + kI * (c * y.lo - s * z.lo);
    sp.di = x.di + kI * (c * y.di - s * z.di);
    sp.up = x.up + kI * (c * y.up - s * z.up);
    Matrix& xm = *xs;
    Matrix& ym = *ys;
    out.resize(rho.rows(), rho.cols());
    tri_left(sm, rho, xm);
    tri_left(sp, xm, out);
    out *= -g;
    tri_right(xm, sp, 2.0 * g, out, true);
    tri_right(rho, sp, 1.0, ym, false);
    tri_right(ym, sm, -g, out, true);
  };
}

MatrixRhs superoperator_rhs(std::function<Superoperator(double)> generator) {
  return [gen = std::move(generator)](double t, const Matrix& rho, Matrix& out) {
    out = gen(t).apply(rho);
  };
}

}  // namespace btc
