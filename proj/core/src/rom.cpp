#include "cdrpipe/rom.hpp"

#include "cdrpipe/errors.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>
#include <string>

namespace cdr {

namespace {

Eigen::MatrixXd galerkin(const Tridiagonal& a, const Eigen::MatrixXd& v) {
  return v.transpose() * a.apply_columns(v);
}

// Propagator form of one implicit Euler step: c_{n+1} = step * c_n + shift.
struct ReducedStepper {
  Eigen::MatrixXd step;
  Eigen::VectorXd shift;
};

ReducedStepper make_stepper(const ReducedOperatorSet& red, const Parameter& mu, int num_steps,
                            double t_end) {
  require_admissible(mu);
  if (num_steps < 1) throw std::invalid_argument("num_steps must be >= 1");
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");

  const double dt = t_end / num_steps;
  const Eigen::MatrixXd mass_dt = red.mass_r / dt;
  const Eigen::MatrixXd system = mass_dt + red.a_diff_r + mu.pe * red.a_conv_r + mu.da * red.a_reac_r;
  const Eigen::VectorXd load = red.rhs_diff_r + mu.pe * red.rhs_conv_r + mu.da * red.rhs_reac_r;

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < pivots.size(); ++i) {
    if (pivots(i) == 0.0 || !std::isfinite(pivots(i))) {
      throw SingularSystemError("reduced system is singular (pivot " + std::to_string(i) + ")");
    }
  }
  return {lu.solve(mass_dt), lu.solve(load)};
}

}  // namespace

ReducedOperatorSet project(const AffineOperatorSet& ops, const ReducedBasis& basis,
                           std::string basis_ref) {
  const Eigen::MatrixXd& v = basis.basis;
  if (v.rows() != ops.num_free()) {
    throw DimensionError("project: basis has " + std::to_string(v.rows()) +
                         " rows, operators have " + std::to_string(ops.num_free()) +
                         " free DoFs");
  }

  ReducedOperatorSet red;
  red.mass_r = galerkin(ops.free_block(ops.mass), v);
  red.a_diff_r = galerkin(ops.free_block(ops.a_diff), v);
  red.a_conv_r = galerkin(ops.free_block(ops.a_conv), v);
  red.a_reac_r = galerkin(ops.free_block(ops.a_reac), v);
  red.rhs_diff_r = v.transpose() * ops.free_part(ops.rhs_diff);
  red.rhs_conv_r = v.transpose() * ops.free_part(ops.rhs_conv);
  red.rhs_reac_r = v.transpose() * ops.free_part(ops.rhs_reac);
  red.qoi_r = v.transpose() * ops.free_part(ops.qoi_vector);
  red.qoi_lift_offset = ops.qoi_lift_offset();
  red.basis_ref = std::move(basis_ref);

  Tridiagonal product;
  if (basis.product_name == "h1") {
    product = ops.free_block(ops.h1_product);
  } else if (basis.product_name == "l2") {
    product = ops.free_block(ops.mass);
  } else {
    throw std::invalid_argument("project: unknown product '" + basis.product_name + "'");
  }
  if (v.cols() > 0) {
    const Eigen::MatrixXd pv = product.apply_columns(v);
    const Eigen::MatrixXd gram = v.transpose() * pv;
    red.initial_r = gram.ldlt().solve(pv.transpose() * shifted_initial_state(ops));
  } else {
    red.initial_r.resize(0);
  }
  return red;
}

Eigen::VectorXd solve_rom(const ReducedOperatorSet& red, const Parameter& mu, int num_steps,
                          double t_end) {
  const ReducedStepper stepper = make_stepper(red, mu, num_steps, t_end);
  Eigen::VectorXd state = red.initial_r;
  Eigen::VectorXd next(state.size());
  Eigen::VectorXd qoi(num_steps + 1);
  qoi(0) = red.qoi_r.dot(state) + red.qoi_lift_offset;
  for (int n = 1; n <= num_steps; ++n) {
    next.noalias() = stepper.step * state;
    next += stepper.shift;
    state.swap(next);
    qoi(n) = red.qoi_r.dot(state) + red.qoi_lift_offset;
  }
  if (!qoi.allFinite()) throw NonFiniteError("reduced time stepping produced non-finite values");
  return qoi;
}

Eigen::MatrixXd solve_rom_states(const ReducedOperatorSet& red, const Parameter& mu,
                                 int num_steps, double t_end) {
  const ReducedStepper stepper = make_stepper(red, mu, num_steps, t_end);
  Eigen::MatrixXd states(red.size(), num_steps + 1);
  states.col(0) = red.initial_r;
  for (int n = 1; n <= num_steps; ++n) {
    states.col(n).noalias() = stepper.step * states.col(n - 1);
    states.col(n) += stepper.shift;
  }
  return states;
}

}  // namespace cdr
