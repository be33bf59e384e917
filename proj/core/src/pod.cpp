#include "cdrpipe/pod.hpp"

#include "cdrpipe/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace cdr {

namespace {

struct Orthonormalized {
  Eigen::MatrixXd vectors;
  std::vector<Eigen::Index> kept;
};

Orthonormalized orthonormalize(const Eigen::Ref<const Eigen::MatrixXd>& vectors,
                               const SparseMatrix& product, double drop_tol) {
  Eigen::MatrixXd q = vectors;
  std::vector<Eigen::Index> kept;
  Eigen::Index out = 0;
  Eigen::VectorXd v(q.rows());
  Eigen::VectorXd pv(q.rows());
  Eigen::VectorXd coeff;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    v = q.col(j);
    pv.noalias() = product * v;
    const double initial = std::sqrt(std::max(0.0, v.dot(pv)));
    if (initial == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      coeff.noalias() = q.leftCols(out).transpose() * pv;
      v.noalias() -= q.leftCols(out) * coeff;
      pv.noalias() = product * v;
    }
    const double norm = std::sqrt(std::max(0.0, v.dot(pv)));
    if (norm <= drop_tol * initial) continue;
    q.col(out++) = v / norm;
    kept.push_back(j);
  }
  return {q.leftCols(out), std::move(kept)};
}

// Two rounds of Cholesky QR in the P inner product. Suited to columns that are
// already close to P-orthonormal; returns nothing when a column looks
// dependent so the caller can fall back to the column-wise path.
std::optional<Eigen::MatrixXd> cholesky_qr2(const Eigen::Ref<const Eigen::MatrixXd>& vectors,
                                            const SparseMatrix& product, double drop_tol) {
  Eigen::MatrixXd q = vectors;
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::MatrixXd pq = product * q;
    Eigen::MatrixXd gram = q.transpose() * pq;
    gram = 0.5 * (gram + gram.transpose()).eval();
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd r = llt.matrixL().toDenseMatrix().diagonal();
    for (Eigen::Index j = 0; j < r.size(); ++j) {
      if (!(r(j) > drop_tol * std::sqrt(gram(j, j)))) return std::nullopt;
    }
    llt.matrixU().solveInPlace<Eigen::OnTheRight>(q);
  }
  return q;
}

}  // namespace

std::string to_string(PodErrorMode mode) {
  return mode == PodErrorMode::kRelative ? "relative" : "absolute";
}

PodErrorMode pod_error_mode_from_string(const std::string& name) {
  if (name == "relative") return PodErrorMode::kRelative;
  if (name == "absolute") return PodErrorMode::kAbsoluteMean;
  throw std::invalid_argument("unknown POD error mode '" + name + "' (expected relative|absolute)");
}

InnerProduct::InnerProduct(SparseMatrix product) : product_(std::move(product)) {
  if (product_.rows() != product_.cols()) throw DimensionError("inner product must be square");
  llt_.compute(product_);
  if (llt_.info() != Eigen::Success) {
    throw SingularSystemError("inner product matrix is not symmetric positive definite");
  }
}

Eigen::MatrixXd InnerProduct::to_euclidean(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  return llt_.matrixU() * x;
}

Eigen::MatrixXd InnerProduct::from_euclidean(const Eigen::Ref<const Eigen::MatrixXd>& y) const {
  return llt_.matrixU().solve(y);
}

Eigen::VectorXd InnerProduct::column_norms_squared(
    const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  const Eigen::MatrixXd px = product_ * x;
  return x.cwiseProduct(px).colwise().sum().transpose();
}

PodStep pod_with_budget(const Eigen::Ref<const Eigen::MatrixXd>& snapshots,
                        const InnerProduct& product, double budget) {
  const Eigen::Index n = snapshots.rows();
  const Eigen::Index m = snapshots.cols();
  if (n != product.dim()) throw DimensionError("pod: snapshot length differs from product size");

  PodStep result;
  result.modes.resize(n, 0);
  if (m == 0) return result;

  const bool use_gramian = m <= n;
  Eigen::MatrixXd correlation;
  Eigen::MatrixXd euclidean;
  if (use_gramian) {
    correlation = snapshots.transpose() * product.apply(snapshots);
  } else {
    euclidean = product.to_euclidean(snapshots);
    correlation = euclidean * euclidean.transpose();
  }
  correlation = 0.5 * (correlation + correlation.transpose()).eval();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(correlation);
  if (eig.info() != Eigen::Success) throw Error("pod: symmetric eigensolver failed");

  const Eigen::Index k = eig.eigenvalues().size();
  Eigen::VectorXd lambda = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

  const double lmax = std::max(lambda(0), 0.0);
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (lambda(i) <= kRankCutoff * lmax || lambda(i) <= 0.0) {
      lambda(i) = 0.0;
    } else {
      ++positive;
    }
  }
  result.total_energy = lambda.sum();
  if (positive == 0) return result;

  Eigen::Index keep = positive;
  double discarded = 0.0;
  while (keep > 0 && discarded + lambda(keep - 1) <= budget) {
    discarded += lambda(keep - 1);
    --keep;
  }

  const Eigen::VectorXd sigma = lambda.head(keep).cwiseSqrt();
  Eigen::MatrixXd modes;
  if (use_gramian) {
    modes = snapshots * vectors.leftCols(keep) * sigma.cwiseInverse().asDiagonal();
  } else {
    modes = product.from_euclidean(vectors.leftCols(keep));
  }

  constexpr double kDropTol = 1e-10;
  Orthonormalized ortho;
  if (auto fast = cholesky_qr2(modes, product.matrix(), kDropTol)) {
    ortho.vectors = std::move(*fast);
    for (Eigen::Index j = 0; j < keep; ++j) ortho.kept.push_back(j);
  } else {
    ortho = orthonormalize(modes, product.matrix(), kDropTol);
  }
  result.modes = std::move(ortho.vectors);
  result.singular_values.resize(static_cast<Eigen::Index>(ortho.kept.size()));
  std::vector<bool> retained(static_cast<std::size_t>(keep), false);
  for (std::size_t i = 0; i < ortho.kept.size(); ++i) {
    result.singular_values(static_cast<Eigen::Index>(i)) = sigma(ortho.kept[i]);
    retained[static_cast<std::size_t>(ortho.kept[i])] = true;
  }
  for (Eigen::Index i = 0; i < keep; ++i) {
    if (!retained[static_cast<std::size_t>(i)]) discarded += lambda(i);
  }
  result.discarded_energy = discarded;
  return result;
}

ReducedBasis pod(const Eigen::Ref<const Eigen::MatrixXd>& snapshots, const SparseMatrix& product,
                 double tol, PodErrorMode mode) {
  if (!(tol > 0.0)) throw std::invalid_argument("pod: tolerance must be positive");
  const InnerProduct inner(product);
  const double scale = mode == PodErrorMode::kRelative
                           ? inner.column_norms_squared(snapshots).sum()
                           : static_cast<double>(snapshots.cols());
  PodStep step = pod_with_budget(snapshots, inner, tol * tol * scale);
  ReducedBasis rb;
  rb.basis = std::move(step.modes);
  rb.singular_values = std::move(step.singular_values);
  rb.tolerance = tol;
  rb.error_mode = mode;
  return rb;
}

IncrementalHapod::IncrementalHapod(SparseMatrix product, double tol, double omega,
                                   Eigen::Index total_snapshots, PodErrorMode mode)
    : product_(std::move(product)), tol_(tol), omega_(omega), total_(total_snapshots), mode_(mode) {
  if (!(tol > 0.0)) throw std::invalid_argument("hapod: tolerance must be positive");
  if (!(omega > 0.0 && omega < 1.0)) throw std::invalid_argument("hapod: omega must lie in (0, 1)");
  if (total_snapshots < 1) throw std::invalid_argument("hapod: total snapshot count must be >= 1");
  modes_.resize(product_.dim(), 0);
}

void IncrementalHapod::push(const Eigen::Ref<const Eigen::MatrixXd>& block) {
  if (block.cols() == 0) return;
  if (block.rows() != product_.dim()) throw DimensionError("hapod: block has wrong row count");
  seen_ += block.cols();
  if (seen_ > total_) throw std::invalid_argument("hapod: more snapshots than announced");

  energy_ += product_.column_norms_squared(block).sum();
  const double share = static_cast<double>(block.cols()) / static_cast<double>(total_);
  const double scale = mode_ == PodErrorMode::kRelative ? energy_ : static_cast<double>(seen_);
  const double budget = (1.0 - omega_ * omega_) * tol_ * tol_ * scale * share;

  Eigen::MatrixXd work(product_.dim(), modes_.cols() + block.cols());
  work << modes_ * sigma_.asDiagonal(), block;
  max_columns_ = std::max(max_columns_, work.cols());

  PodStep step = pod_with_budget(work, product_, budget);
  spent_ += step.discarded_energy;
  modes_ = std::move(step.modes);
  sigma_ = std::move(step.singular_values);
}

ReducedBasis IncrementalHapod::finalize() const {
  const double scale = mode_ == PodErrorMode::kRelative ? energy_ : static_cast<double>(seen_);
  const double budget = std::max(0.0, tol_ * tol_ * scale - spent_);
  const Eigen::MatrixXd scaled = modes_ * sigma_.asDiagonal();
  PodStep step = pod_with_budget(scaled, product_, budget);
  ReducedBasis rb;
  rb.basis = std::move(step.modes);
  rb.singular_values = std::move(step.singular_values);
  rb.tolerance = tol_;
  rb.error_mode = mode_;
  return rb;
}

ReducedBasis inc_hapod(const std::vector<Eigen::MatrixXd>& chunks, const SparseMatrix& product,
                       double tol, double omega, PodErrorMode mode) {
  if (chunks.empty()) throw std::invalid_argument("hapod: no snapshot chunks");
  Eigen::Index total = 0;
  for (const auto& c : chunks) total += c.cols();
  if (total == 0) {
    ReducedBasis rb;
    rb.basis.resize(product.rows(), 0);
    rb.tolerance = tol;
    rb.error_mode = mode;
    return rb;
  }
  IncrementalHapod hapod(product, tol, omega, total, mode);
  for (const auto& c : chunks) hapod.push(c);
  return hapod.finalize();
}

ProjectionErrorAccumulator::ProjectionErrorAccumulator(const ReducedBasis& basis,
                                                       const SparseMatrix& product)
    : basis_(basis.basis), product_(product) {
  if (basis_.rows() != product_.rows()) {
    throw DimensionError("projection error: basis and product dimensions differ");
  }
}

void ProjectionErrorAccumulator::add(const Eigen::Ref<const Eigen::MatrixXd>& snapshots) {
  if (snapshots.rows() != basis_.rows()) {
    throw DimensionError("projection error: snapshot length differs from basis");
  }
  const Eigen::MatrixXd ps = product_ * snapshots;
  energy_ += snapshots.cwiseProduct(ps).sum();
  count_ += snapshots.cols();
  const Eigen::MatrixXd residual = snapshots - basis_ * (basis_.transpose() * ps);
  residual_ += residual.cwiseProduct(product_ * residual).sum();
}

double ProjectionErrorAccumulator::relative_error() const {
  if (energy_ == 0.0) return 0.0;
  return std::sqrt(std::max(0.0, residual_) / energy_);
}

double ProjectionErrorAccumulator::mean_error() const {
  if (count_ == 0) return 0.0;
  return std::sqrt(std::max(0.0, residual_) / static_cast<double>(count_));
}

double projection_error(const Eigen::Ref<const Eigen::MatrixXd>& snapshots,
                        const ReducedBasis& basis, const SparseMatrix& product) {
  ProjectionErrorAccumulator acc(basis, product);
  acc.add(snapshots);
  return acc.relative_error();
}

Eigen::MatrixXd gram_schmidt(const Eigen::Ref<const Eigen::MatrixXd>& vectors,
                             const SparseMatrix& product, double drop_tol) {
  return orthonormalize(vectors, product, drop_tol).vectors;
}

}  // namespace cdr
