#include "cdrpipe/errors.hpp"
#include "cdrpipe/fom.hpp"
#include "cdrpipe/sampling.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <numbers>

#include <cmath>
#include <functional>

using namespace cdr;

namespace {

// Hat function i on the uniform grid and its derivative.
double hat(int intervals, Eigen::Index i, double x) {
  const double h = 1.0 / intervals;
  return std::max(0.0, 1.0 - std::abs(x - static_cast<double>(i) * h) / h);
}
double hat_dx(int intervals, Eigen::Index i, double x) {
  const double h = 1.0 / intervals;
  const double xi = static_cast<double>(i) * h;
  if (x > xi - h && x < xi) return 1.0 / h;
  if (x > xi && x < xi + h) return -1.0 / h;
  return 0.0;
}

// Three-point Gauss rule per element, exact for the quadratic integrands here.
double integrate(int intervals, const std::function<double(double)>& f) {
  const double h = 1.0 / intervals;
  const double g[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double sum = 0.0;
  for (int e = 0; e < intervals; ++e) {
    const double mid = (e + 0.5) * h;
    for (int q = 0; q < 3; ++q) sum += w[q] * f(mid + 0.5 * h * g[q]) * 0.5 * h;
  }
  return sum;
}

}  // namespace

TEST_CASE("assemble rejects grids without interior nodes") {
  CHECK_NOTHROW(assemble(Grid1D(2)));
  CHECK_THROWS_AS(Grid1D(1), std::invalid_argument);
  CHECK_THROWS_AS(Grid1D(0), std::invalid_argument);
}

TEST_CASE("two intervals: shapes and hand integrated entries") {
  const AffineOperatorSet ops = assemble(Grid1D(2));
  CHECK(ops.mass.size() == 3);
  CHECK(ops.a_diff.size() == 3);
  CHECK(ops.dirichlet_dofs == std::vector<Eigen::Index>{0});
  CHECK(ops.a_diff(1, 0) == doctest::Approx(-2.0));
  CHECK(ops.a_diff(1, 1) == doctest::Approx(4.0));
  CHECK(ops.a_diff(1, 2) == doctest::Approx(-2.0));
  CHECK(ops.mass(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(ops.mass(1, 0) == doctest::Approx(1.0 / 12.0));
  CHECK(ops.mass(1, 2) == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("assembly agrees with quadrature of the weak forms") {
  const int n = 5;
  const AffineOperatorSet ops = assemble(Grid1D(n));
  for (Eigen::Index i = 0; i <= n; ++i) {
    for (Eigen::Index j = 0; j <= n; ++j) {
      const double m = integrate(n, [&](double x) { return hat(n, j, x) * hat(n, i, x); });
      const double d = integrate(n, [&](double x) { return hat_dx(n, j, x) * hat_dx(n, i, x); });
      double c = integrate(n, [&](double x) { return -hat(n, j, x) * hat_dx(n, i, x); });
      c += hat(n, j, 1.0) * hat(n, i, 1.0);
      CHECK(ops.mass(i, j) == doctest::Approx(m).epsilon(1e-13));
      CHECK(ops.a_diff(i, j) == doctest::Approx(d).epsilon(1e-13));
      CHECK(ops.a_conv(i, j) == doctest::Approx(c).epsilon(1e-13));
    }
  }
  CHECK(ops.lift(0) == 1.0);
  CHECK(ops.lift.tail(n).isZero());
  CHECK(ops.qoi_vector(n) == 1.0);
  CHECK(ops.qoi_lift_offset() == 0.0);
  CHECK(ops.rhs_diff(0) == 0.0);
  CHECK(ops.rhs_diff(1) == doctest::Approx(n));  // -a_diff(1, 0)
}

TEST_CASE("symmetric operators are exactly symmetric") {
  for (int n : {2, 7, 64}) {
    const AffineOperatorSet ops = assemble(Grid1D(n));
    CHECK(ops.mass.is_symmetric());
    CHECK(ops.a_diff.is_symmetric());
    CHECK(ops.a_reac.is_symmetric());
    CHECK(ops.h1_product.is_symmetric());
  }
}

TEST_CASE("convection form is half the squared outflow value") {
  const AffineOperatorSet ops = assemble(Grid1D(13));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Eigen::VectorXd v = test::random_matrix(14, 1, seed);
    v(0) = 0.0;
    const double form = v.dot(ops.a_conv.apply(v));
    const double expect = 0.5 * v(13) * v(13);
    CHECK(std::abs(form - expect) <= 1e-12 * std::max(1.0, v.squaredNorm()));
    CHECK(form >= -1e-14);
  }
}

TEST_CASE("coercivity: smallest eigenvalue at least that of the diffusion block") {
  for (int n : {2, 5, 16}) {
    const AffineOperatorSet ops = assemble(Grid1D(n));
    const Eigen::MatrixXd diff = ops.free_block(ops.a_diff).to_dense();
    const double floor = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(diff).eigenvalues()(0);
    for (const Parameter& mu : sample_parameters(ParameterDomain({0, 0}, {1, 1}), 15, 7)) {
      const Eigen::MatrixXd a = operator_at(ops, mu).matrix.to_dense();
      const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
      const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues()(0);
      CHECK(lo >= floor - 1e-12);
    }
  }
}

TEST_CASE("operator_at is affine in the parameter") {
  const AffineOperatorSet ops = assemble(Grid1D(10));
  const Eigen::VectorXd v = test::random_matrix(10, 1, 42);
  const Parameter mu{0.3, 0.7};
  const AffineSystem sys = operator_at(ops, mu);
  const Eigen::VectorXd expect = ops.free_block(ops.a_diff).apply(v) +
                                 mu.pe * ops.free_block(ops.a_conv).apply(v) +
                                 mu.da * ops.free_block(ops.a_reac).apply(v);
  CHECK((sys.matrix.apply(v) - expect).norm() <= 1e-14 * expect.norm());

  const AffineSystem zero = operator_at(ops, {0, 0});
  CHECK(zero.matrix.to_dense() == ops.free_block(ops.a_diff).to_dense());
  CHECK(zero.load == ops.free_part(ops.rhs_diff));
  const AffineSystem one = operator_at(ops, {1, 1});
  const Tridiagonal sum = ops.a_diff.axpy(1.0, ops.a_conv).axpy(1.0, ops.a_reac);
  CHECK((one.matrix.to_dense() - ops.free_block(sum).to_dense()).norm() < 1e-14);
  CHECK_NOTHROW(operator_at(ops, {1, 1e-3}));
}

TEST_CASE("time points") {
  const Eigen::VectorXd t = time_points(24576, 3.0);
  CHECK(t.size() == 24577);
  CHECK(t(0) == 0.0);
  CHECK(t(24576) == 3.0);
  CHECK(t(1) == std::ldexp(1.0, -13));
  CHECK_THROWS(time_points(0, 1.0));
  CHECK_THROWS(time_points(3, 0.0));
}

TEST_CASE("FOM output matches a dense implicit Euler oracle") {
  const AffineOperatorSet ops = assemble(Grid1D(8));
  for (const Parameter& mu : {Parameter{0.5, 0.2}, Parameter{1e-3, 1}, Parameter{0, 0}}) {
    const Eigen::VectorXd fast = solve_fom_qoi(ops, mu, 40, 3.0);
    const Eigen::VectorXd oracle = test::dense_fom_qoi(8, mu, 40, 3.0);
    CHECK((fast - oracle).norm() <= 1e-12 * oracle.norm());
  }
}

TEST_CASE("initial output vanishes and the state starts from the shifted datum") {
  const AffineOperatorSet ops = assemble(Grid1D(6));
  const Trajectory tr = solve_fom(ops, {0.4, 0.9}, 10, 1.0);
  CHECK(tr.qoi(0) == 0.0);
  CHECK(tr.qoi.size() == 11);
  CHECK(tr.times.size() == 11);
  CHECK(tr.states.rows() == 7);
  CHECK(tr.states.cols() == 11);
  CHECK(tr.states.row(0).isZero());
  CHECK(tr.states.col(0).isZero());
  CHECK(tr.qoi(10) == doctest::Approx(tr.states(6, 10)).epsilon(1e-15));
}

TEST_CASE("streamed blocks cover the trajectory in order") {
  const AffineOperatorSet ops = assemble(Grid1D(6));
  const Parameter mu{0.4, 0.9};
  const Trajectory tr = solve_fom(ops, mu, 25, 1.0);
  Eigen::MatrixXd joined(6, 26);
  Eigen::Index col = 0;
  int blocks = 0;
  solve_fom_qoi(ops, mu, 25, 1.0,
                [&](const Eigen::Ref<const Eigen::MatrixXd>& b) {
                  CHECK(b.cols() <= 7);
                  joined.middleCols(col, b.cols()) = b;
                  col += b.cols();
                  ++blocks;
                },
                7);
  CHECK(col == 26);
  CHECK(blocks == 4);
  CHECK(joined == tr.states.bottomRows(6));
}

TEST_CASE("steady states of the oracle cases") {
  CHECK(steady_qoi_oracle({0, 0}) == 1.0);
  CHECK(steady_qoi_oracle({0, 1}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(steady_qoi_oracle({1, 0}) == doctest::Approx(1.0 / std::cosh(1.0)).epsilon(1e-14));
  CHECK(steady_qoi_oracle({1, 0}) == doctest::Approx(0.648054).epsilon(1e-6));
  CHECK_THROWS(steady_qoi_oracle({-1, 0}));
}

TEST_CASE("steady oracle solves the boundary value problem") {
  // c(x) = A e^{r1 x} + B e^{r2 x}; verify the ODE residual and both boundary
  // conditions with an independent solve of the 2x2 system for A and B.
  for (const Parameter& mu : sample_parameters(ParameterDomain(), 10, 3)) {
    const double s = std::sqrt(mu.pe * mu.pe + 4 * mu.da);
    const double r1 = 0.5 * (mu.pe + s), r2 = 0.5 * (mu.pe - s);
    Eigen::Matrix2d m;
    m << 1, 1, r1 * std::exp(r1), r2 * std::exp(r2);
    const Eigen::Vector2d ab = m.fullPivLu().solve(Eigen::Vector2d(1, 0));
    const double c1 = ab(0) * std::exp(r1) + ab(1) * std::exp(r2);
    CHECK(steady_qoi_oracle(mu) == doctest::Approx(c1).epsilon(1e-12));
  }
}

TEST_CASE("pure diffusion follows the eigenfunction series") {
  // c(1, t) = 1 - sum_k 4 (-1)^k / ((2k+1) pi) exp(-lambda_k t), lambda_k = ((2k+1) pi / 2)^2,
  // with exp(-lambda t) replaced by its implicit Euler counterpart (1 + lambda dt)^-n.
  const double dt = 3.0 / 3072;
  const auto series = [dt](int n) {
    double c = 1.0;
    for (int k = 0; k < 2000; ++k) {
      const double w = (2 * k + 1) * std::numbers::pi;
      c -= 4.0 * (k % 2 == 0 ? 1.0 : -1.0) / w * std::pow(1.0 + 0.25 * w * w * dt, -n);
    }
    return c;
  };
  const AffineOperatorSet ops = assemble(Grid1D(64));
  const Eigen::VectorXd q = solve_fom_qoi(ops, {0, 0}, 3072, 3.0);
  for (int n = 256; n <= 3072; n += 256) CHECK(std::abs(q(n) - series(n)) < 1e-4);
  // The slowest mode has not died out at T, so the stationary value is still off.
  CHECK(std::abs(q(3072) - 1.0) > 5e-4);
}

TEST_CASE("long time outputs approach the steady state") {
  const AffineOperatorSet fine = assemble(Grid1D(256));
  const Eigen::VectorXd reaction = solve_fom_qoi(fine, {1, 0}, 3072, 3.0);
  CHECK(std::abs(reaction(3072) - 1.0 / std::cosh(1.0)) < 1e-3);
}

TEST_CASE("refinement reduces the calibration error") {
  const Parameter mu{0.6, 0.3};
  const double target = steady_qoi_oracle(mu);
  double previous = 1.0;
  for (int level = 3; level <= 6; ++level) {
    const int n = 1 << level;
    const Eigen::VectorXd q = solve_fom_qoi(assemble(Grid1D(n)), mu, 48 * n, 3.0);
    const double err = std::abs(q(q.size() - 1) - target);
    CHECK(err < previous);
    previous = err;
  }
  CHECK(previous <= 1e-4);
}

TEST_CASE("time stepping stays finite for large steps and parameters") {
  const AffineOperatorSet ops = assemble(Grid1D(32));
  for (const Parameter& mu : sample_parameters(ParameterDomain({0, 0}, {50, 50}), 10, 5)) {
    CHECK(solve_fom_qoi(ops, mu, 3, 100.0).allFinite());
  }
}

TEST_CASE("FOM rejects invalid input") {
  const AffineOperatorSet ops = assemble(Grid1D(4));
  CHECK_THROWS_AS(solve_fom_qoi(ops, {-0.1, 0}, 10, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_fom_qoi(ops, {0.1, 0}, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_fom_qoi(ops, {0.1, 0}, 5, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_fom_qoi(ops, {std::nan(""), 0}, 5, 1.0), std::invalid_argument);
}

TEST_CASE("qoi_error") {
  const Eigen::Vector2d b(3, 4);
  CHECK(qoi_error(b, b) == 0.0);
  CHECK(qoi_error(Eigen::Vector2d::Zero(), b) == doctest::Approx(1.0));
  CHECK(qoi_error(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1) * (1 + 1e-4)) ==
        doctest::Approx(1e-4).epsilon(1e-3));
  CHECK_THROWS_AS(qoi_error(b, Eigen::Vector2d::Zero()), ZeroDenominatorError);
  CHECK_THROWS_AS(qoi_error(b, Eigen::Vector3d::Ones()), DimensionError);
}

TEST_CASE("parameter domain validation") {
  CHECK_THROWS(ParameterDomain({1, 0}, {0, 1}));
  CHECK_THROWS(ParameterDomain({-1, 0}, {0, 1}));
  const ParameterDomain box;
  CHECK(box.contains({0.5, 0.5}));
  CHECK_FALSE(box.contains({0, 0.5}));
  CHECK_FALSE(box.degenerate());
  CHECK(ParameterDomain({1, 0}, {1, 1}).degenerate());
}
