#include "cdrpipe/tridiagonal.hpp"

#include "cdrpipe/errors.hpp"

#include <cmath>
#include <string>

namespace cdr {

Tridiagonal::Tridiagonal(Eigen::Index n)
    : lower_(Eigen::VectorXd::Zero(n > 0 ? n - 1 : 0)),
      diag_(Eigen::VectorXd::Zero(n)),
      upper_(Eigen::VectorXd::Zero(n > 0 ? n - 1 : 0)) {}

Tridiagonal::Tridiagonal(Eigen::VectorXd lower, Eigen::VectorXd diag, Eigen::VectorXd upper)
    : lower_(std::move(lower)), diag_(std::move(diag)), upper_(std::move(upper)) {
  const Eigen::Index off = diag_.size() > 0 ? diag_.size() - 1 : 0;
  if (lower_.size() != off || upper_.size() != off) {
    throw DimensionError("tridiagonal bands have inconsistent sizes");
  }
}

double Tridiagonal::operator()(Eigen::Index i, Eigen::Index j) const {
  if (i == j) return diag_(i);
  if (i == j + 1) return lower_(j);
  if (j == i + 1) return upper_(i);
  return 0.0;
}

void Tridiagonal::add_element(Eigen::Index i, const Eigen::Matrix2d& local) {
  diag_(i) += local(0, 0);
  upper_(i) += local(0, 1);
  lower_(i) += local(1, 0);
  diag_(i + 1) += local(1, 1);
}

Eigen::VectorXd Tridiagonal::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::Index n = size();
  if (x.size() != n) throw DimensionError("tridiagonal apply: size mismatch");
  Eigen::VectorXd y = diag_.cwiseProduct(x);
  if (n > 1) {
    y.head(n - 1) += upper_.cwiseProduct(x.tail(n - 1));
    y.tail(n - 1) += lower_.cwiseProduct(x.head(n - 1));
  }
  return y;
}

Eigen::MatrixXd Tridiagonal::apply_columns(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  const Eigen::Index n = size();
  if (x.rows() != n) throw DimensionError("tridiagonal apply: size mismatch");
  Eigen::MatrixXd y = diag_.asDiagonal() * x;
  if (n > 1) {
    y.topRows(n - 1) += upper_.asDiagonal() * x.bottomRows(n - 1);
    y.bottomRows(n - 1) += lower_.asDiagonal() * x.topRows(n - 1);
  }
  return y;
}

Tridiagonal Tridiagonal::axpy(double alpha, const Tridiagonal& other) const {
  if (other.size() != size()) throw DimensionError("tridiagonal axpy: size mismatch");
  return Tridiagonal(lower_ + alpha * other.lower_, diag_ + alpha * other.diag_,
                     upper_ + alpha * other.upper_);
}

Tridiagonal Tridiagonal::scaled(double alpha) const {
  return Tridiagonal(alpha * lower_, alpha * diag_, alpha * upper_);
}

Tridiagonal Tridiagonal::block(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > size()) {
    throw DimensionError("tridiagonal block out of range");
  }
  const Eigen::Index off = count > 0 ? count - 1 : 0;
  return Tridiagonal(lower_.segment(first, off), diag_.segment(first, count),
                     upper_.segment(first, off));
}

Eigen::MatrixXd Tridiagonal::to_dense() const {
  const Eigen::Index n = size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = diag_(i);
    if (i + 1 < n) {
      a(i, i + 1) = upper_(i);
      a(i + 1, i) = lower_(i);
    }
  }
  return a;
}

Eigen::SparseMatrix<double> Tridiagonal::to_sparse() const {
  const Eigen::Index n = size();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(3 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    entries.emplace_back(i, i, diag_(i));
    if (i + 1 < n) {
      entries.emplace_back(i, i + 1, upper_(i));
      entries.emplace_back(i + 1, i, lower_(i));
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

TridiagonalLU::TridiagonalLU(const Tridiagonal& a)
    : sub_(a.lower().size()), pivot_inv_(a.size()), upper_(a.upper()) {
  const Eigen::Index n = a.size();
  double pivot = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    pivot = a.diag()(i);
    if (i > 0) pivot -= sub_(i - 1) * a.upper()(i - 1);
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      throw SingularSystemError("tridiagonal LU: zero pivot in row " + std::to_string(i));
    }
    pivot_inv_(i) = 1.0 / pivot;
    if (i + 1 < n) {
      sub_(i) = a.lower()(i) * pivot_inv_(i);
      upper_(i) *= pivot_inv_(i);
    }
  }
}

void TridiagonalLU::solve_in_place(Eigen::Ref<Eigen::VectorXd> x) const {
  const Eigen::Index n = size();
  if (x.size() != n) throw DimensionError("tridiagonal solve: size mismatch");
  if (n == 0) return;
  double* v = x.data();
  const double* l = sub_.data();
  const double* u = upper_.data();
  const double* p = pivot_inv_.data();
  for (Eigen::Index i = 1; i < n; ++i) v[i] -= l[i - 1] * v[i - 1];
  v[n - 1] *= p[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) v[i] = v[i] * p[i] - u[i] * v[i + 1];
}

Eigen::VectorXd TridiagonalLU::solve(const Eigen::Ref<const Eigen::VectorXd>& b) const {
  Eigen::VectorXd x = b;
  solve_in_place(x);
  return x;
}

}  // namespace cdr
