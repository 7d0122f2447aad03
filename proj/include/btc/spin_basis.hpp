// spin_basis.hpp - Symmetric Dicke ladder |S, m> and collective spin operators.
//
// Basis states are ordered by descending m (index 0 is m = S), so S+ is
// strictly upper triangular. Units hbar = 1.

#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "btc/types.hpp"

namespace btc {

enum class Axis { x, y, z, plus, minus, identity };

std::string_view axis_name(Axis axis);

struct OperatorMatrix {
  Matrix matrix;
  Axis axis_label = Axis::identity;
};

class SpinBasis {
 public:
  explicit SpinBasis(int n_spins);

  int n_spins() const { return n_spins_; }
  double total_spin() const { return 0.5 * n_spins_; }
  int dim() const { return n_spins_ + 1; }
  const std::vector<double>& m_values() const { return m_values_; }

  const OperatorMatrix& op(Axis axis) const { return ops_[index(axis)]; }
  const Matrix& sx() const { return ops_[0].matrix; }
  const Matrix& sy() const { return ops_[1].matrix; }
  const Matrix& sz() const { return ops_[2].matrix; }
  const Matrix& splus() const { return ops_[3].matrix; }
  const Matrix& sminus() const { return ops_[4].matrix; }
  const Matrix& identity() const { return ops_[5].matrix; }

  // Banded sparse copies used by the matrix-form right-hand sides.
  const SparseMatrix& sparse(Axis axis) const { return sparse_[index(axis)]; }

  // Spectral data of Sx, used for the frame unitary exp(-i w Sx t).
  const Eigen::VectorXd& sx_eigenvalues() const { return sx_evals_; }
  const Matrix& sx_eigenvectors() const { return sx_evecs_; }

 private:
  static std::size_t index(Axis axis) { return static_cast<std::size_t>(axis); }

  int n_spins_;
  std::vector<double> m_values_;
  std::array<OperatorMatrix, 6> ops_;
  std::array<SparseMatrix, 6> sparse_;
  Eigen::VectorXd sx_evals_;
  Matrix sx_evecs_;
};

// Throws std::invalid_argument for n_spins < 1.
SpinBasis build_basis(int n_spins);

// Parses a spin count from text, rejecting non-integers and values < 1.
int parse_spin_count(std::string_view text);

struct DensityMatrix;
DensityMatrix spin_coherent_down(const SpinBasis& basis);

// Tr(op * rho). Throws std::invalid_argument on a dimension mismatch.
Complex expectation(const Matrix& op, const Matrix& rho);
Complex expectation(const OperatorMatrix& op, const DensityMatrix& rho);

}  // namespace btc
