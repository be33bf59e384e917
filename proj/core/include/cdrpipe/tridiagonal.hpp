#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <vector>

namespace cdr {

/// Square tridiagonal matrix stored by bands.
///
/// lower(i) couples row i+1 to column i, upper(i) couples row i to column i+1,
/// so both off-diagonal bands have size() - 1 entries.
class Tridiagonal {
 public:
  Tridiagonal() = default;
  explicit Tridiagonal(Eigen::Index n);
  Tridiagonal(Eigen::VectorXd lower, Eigen::VectorXd diag, Eigen::VectorXd upper);

  Eigen::Index size() const { return diag_.size(); }

  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& diag() const { return diag_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  Eigen::VectorXd& lower() { return lower_; }
  Eigen::VectorXd& diag() { return diag_; }
  Eigen::VectorXd& upper() { return upper_; }

  /// Entry (i, j); zero outside the three bands.
  double operator()(Eigen::Index i, Eigen::Index j) const;

  /// Accumulate a 2x2 element matrix into rows/cols (i, i+1).
  void add_element(Eigen::Index i, const Eigen::Matrix2d& local);

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd apply_columns(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  /// this + alpha * other
  Tridiagonal axpy(double alpha, const Tridiagonal& other) const;
  Tridiagonal scaled(double alpha) const;

  /// Principal submatrix on the index range [first, first + count).
  Tridiagonal block(Eigen::Index first, Eigen::Index count) const;

  bool is_symmetric() const { return lower_ == upper_; }

  Eigen::MatrixXd to_dense() const;
  Eigen::SparseMatrix<double> to_sparse() const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd diag_;
  Eigen::VectorXd upper_;
};

/// Thomas-algorithm LU factorization of a tridiagonal matrix (no pivoting).
///
/// Factor once, then solve() any number of right-hand sides in O(n).
/// Throws SingularSystemError when a pivot is zero or not finite.
class TridiagonalLU {
 public:
  TridiagonalLU() = default;
  explicit TridiagonalLU(const Tridiagonal& a);

  Eigen::Index size() const { return pivot_inv_.size(); }

  /// Solves in place; x holds the right-hand side on entry.
  void solve_in_place(Eigen::Ref<Eigen::VectorXd> x) const;
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& b) const;

 private:
  Eigen::VectorXd sub_;        // l_i = a_{i+1,i} / u_ii
  Eigen::VectorXd pivot_inv_;  // 1 / u_ii
  Eigen::VectorXd upper_;      // a_{i,i+1} / u_ii
};

}  // namespace cdr
