#include "btc/spin_basis.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "btc/density_matrix.hpp"

namespace btc {

std::string_view axis_name(Axis axis) {
  switch (axis) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
    case Axis::plus: return "plus";
    case Axis::minus: return "minus";
    case Axis::identity: return "identity";
  }
  return "?";
}

SpinBasis::SpinBasis(int n_spins) : n_spins_(n_spins) {
  if (n_spins < 1) {
    throw std::invalid_argument("spin count must be >= 1, got " + std::to_string(n_spins));
  }
  const int d = dim();
  const double s = total_spin();
  m_values_.resize(d);
  for (int k = 0; k < d; ++k) m_values_[k] = s - k;

  Matrix sz = Matrix::Zero(d, d);
  Matrix sp = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) sz(k, k) = m_values_[k];
  // <m+1| S+ |m> sits at (row k-1, col k) in descending-m order.
  for (int k = 1; k < d; ++k) {
    const double m = m_values_[k];
    sp(k - 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
  }
  Matrix sm = sp.adjoint();
  Matrix sx = 0.5 * (sp + sm);
  Matrix sy = (sp - sm) / Complex(0.0, 2.0);

  ops_[index(Axis::x)] = {sx, Axis::x};
  ops_[index(Axis::y)] = {sy, Axis::y};
  ops_[index(Axis::z)] = {sz, Axis::z};
  ops_[index(Axis::plus)] = {sp, Axis::plus};
  ops_[index(Axis::minus)] = {sm, Axis::minus};
  ops_[index(Axis::identity)] = {Matrix::Identity(d, d), Axis::identity};
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    sparse_[i] = ops_[i].matrix.sparseView();
    sparse_[i].makeCompressed();
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver(sx);
  sx_evals_ = solver.eigenvalues();
  sx_evecs_ = solver.eigenvectors();
}

SpinBasis build_basis(int n_spins) { return SpinBasis(n_spins); }

int parse_spin_count(std::string_view text) {
  int value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::invalid_argument("spin count must be a positive integer, got '" +
                                std::string(text) + "'");
  }
  if (value < 1) {
    throw std::invalid_argument("spin count must be >= 1, got " + std::to_string(value));
  }
  return value;
}

DensityMatrix spin_coherent_down(const SpinBasis& basis) {
  const int d = basis.dim();
  Matrix rho = Matrix::Zero(d, d);
  rho(d - 1, d - 1) = 1.0;
  return {rho, 0.0};
}

Complex expectation(const Matrix& op, const Matrix& rho) {
  if (op.rows() != rho.rows() || op.cols() != rho.cols() || op.rows() != op.cols()) {
    throw std::invalid_argument("expectation: dimension mismatch (" + std::to_string(op.rows()) +
                                "x" + std::to_string(op.cols()) + " vs " +
                                std::to_string(rho.rows()) + "x" + std::to_string(rho.cols()) +
                                ")");
  }
  // Tr(A B) = sum_ij A_ij B_ji
  return (op.transpose().cwiseProduct(rho)).sum();
}

Complex expectation(const OperatorMatrix& op, const DensityMatrix& rho) {
  return expectation(op.matrix, rho.matrix);
}

}  // namespace btc
