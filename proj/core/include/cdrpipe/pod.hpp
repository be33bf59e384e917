#pragma once

// Proper orthogonal decomposition of snapshot sets with respect to a
// symmetric positive definite inner product, plus the incremental
// hierarchical approximate POD that streams snapshot blocks.

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace cdr {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// How a POD tolerance is measured.
///   kRelative:     sum_i ||s_i - V V^T P s_i||_P^2 <= tol^2 sum_i ||s_i||_P^2
///   kAbsoluteMean: sum_i ||s_i - V V^T P s_i||_P^2 <= tol^2 * (number of snapshots)
enum class PodErrorMode { kRelative, kAbsoluteMean };

std::string to_string(PodErrorMode mode);
PodErrorMode pod_error_mode_from_string(const std::string& name);

/// Product-orthonormal modes, columns of `basis`.
struct ReducedBasis {
  Eigen::MatrixXd basis;
  Eigen::VectorXd singular_values;  // nonincreasing, positive
  double tolerance = 0.0;
  PodErrorMode error_mode = PodErrorMode::kRelative;
  std::string product_name = "h1";

  Eigen::Index size() const { return basis.cols(); }
  Eigen::Index dim() const { return basis.rows(); }
};

/// Cholesky factor P = L L^T of an inner-product matrix.
/// Throws SingularSystemError when the matrix is not symmetric positive definite.
class InnerProduct {
 public:
  explicit InnerProduct(SparseMatrix product);

  const SparseMatrix& matrix() const { return product_; }
  Eigen::Index dim() const { return product_.rows(); }

  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const { return product_ * x; }
  /// L^T x, so that ||L^T x||_2 = ||x||_P.
  Eigen::MatrixXd to_euclidean(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  /// L^{-T} y
  Eigen::MatrixXd from_euclidean(const Eigen::Ref<const Eigen::MatrixXd>& y) const;
  /// Squared P-norm of every column.
  Eigen::VectorXd column_norms_squared(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

 private:
  SparseMatrix product_;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>> llt_;
};

/// Outcome of a POD truncated to an absolute energy budget.
struct PodStep {
  Eigen::MatrixXd modes;
  Eigen::VectorXd singular_values;
  double total_energy = 0.0;      // sum of all retained-or-discarded eigenvalues
  double discarded_energy = 0.0;  // sum of the dropped eigenvalues
};

/// Eigenvalues below this fraction of the largest one are treated as zero.
inline constexpr double kRankCutoff = 1e-14;

/// POD keeping the fewest modes whose discarded eigenvalue mass stays within
/// `budget` (absolute, squared P-norm units). Uses the m x m snapshot Gramian
/// when there are fewer snapshots than rows, the n x n correlation otherwise.
PodStep pod_with_budget(const Eigen::Ref<const Eigen::MatrixXd>& snapshots,
                        const InnerProduct& product, double budget);

/// Classical POD. With the default relative mode the discarded eigenvalue mass
/// is at most tol^2 times the total mass.
ReducedBasis pod(const Eigen::Ref<const Eigen::MatrixXd>& snapshots, const SparseMatrix& product,
                 double tol, PodErrorMode mode = PodErrorMode::kRelative);

/// Incremental HAPOD over a stream of snapshot blocks.
///
/// Each pushed block is compressed together with the current modes (scaled by
/// their singular values). With B(x) = tol^2 x (absolute mode) or tol^2 E(x)
/// (relative mode, E = energy of the first x snapshots), intermediate steps may
/// discard at most (1 - omega^2) B(n_seen) n_block / n_total, and the final
/// compression spends what remains of B(n_total), at least omega^2 B(n_total).
/// The discarded amounts add up, so the returned modes meet the POD bound of
/// the chosen mode on the whole stream.
/// Memory stays O(n (modes + block)); no global Gramian is formed.
class IncrementalHapod {
 public:
  IncrementalHapod(SparseMatrix product, double tol, double omega, Eigen::Index total_snapshots,
                   PodErrorMode mode = PodErrorMode::kRelative);

  void push(const Eigen::Ref<const Eigen::MatrixXd>& block);
  ReducedBasis finalize() const;

  Eigen::Index snapshots_seen() const { return seen_; }
  Eigen::Index current_modes() const { return modes_.cols(); }
  /// Widest matrix compressed so far (modes + block columns).
  Eigen::Index max_working_columns() const { return max_columns_; }
  double energy_seen() const { return energy_; }
  double discarded_energy() const { return spent_; }

 private:
  InnerProduct product_;
  double tol_;
  double omega_;
  Eigen::Index total_;
  PodErrorMode mode_;
  Eigen::Index seen_ = 0;
  Eigen::Index max_columns_ = 0;
  double energy_ = 0.0;
  double spent_ = 0.0;
  Eigen::MatrixXd modes_;  // P-orthonormal
  Eigen::VectorXd sigma_;
};

/// Convenience wrapper over IncrementalHapod for in-memory blocks.
ReducedBasis inc_hapod(const std::vector<Eigen::MatrixXd>& chunks, const SparseMatrix& product,
                       double tol, double omega = 0.75,
                       PodErrorMode mode = PodErrorMode::kRelative);

/// Accumulates projection errors block by block.
class ProjectionErrorAccumulator {
 public:
  ProjectionErrorAccumulator(const ReducedBasis& basis, const SparseMatrix& product);

  void add(const Eigen::Ref<const Eigen::MatrixXd>& snapshots);
  /// sqrt(sum ||s - V V^T P s||_P^2 / sum ||s||_P^2); zero for an all-zero set.
  double relative_error() const;
  /// sqrt(sum ||s - V V^T P s||_P^2 / number of snapshots)
  double mean_error() const;
  double residual_energy() const { return residual_; }
  double energy() const { return energy_; }

 private:
  Eigen::MatrixXd basis_;
  SparseMatrix product_;
  double residual_ = 0.0;
  double energy_ = 0.0;
  Eigen::Index count_ = 0;
};

/// Relative l2-mean P-norm projection error of a snapshot set onto the basis.
double projection_error(const Eigen::Ref<const Eigen::MatrixXd>& snapshots,
                        const ReducedBasis& basis, const SparseMatrix& product);

/// Re-orthonormalizes columns with two passes of Gram-Schmidt in the
/// P inner product. Columns that collapse below `drop_tol` relative norm are removed.
Eigen::MatrixXd gram_schmidt(const Eigen::Ref<const Eigen::MatrixXd>& vectors,
                             const SparseMatrix& product, double drop_tol = 1e-10);

}  // namespace cdr
