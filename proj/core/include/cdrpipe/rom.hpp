#pragma once

#include "cdrpipe/fom.hpp"
#include "cdrpipe/pod.hpp"

#include <Eigen/Dense>

#include <string>

namespace cdr {

/// Galerkin projection of the affine FOM. Holds nothing of size N_h, so the
/// online phase runs without the full order operators.
struct ReducedOperatorSet {
  Eigen::MatrixXd mass_r;
  Eigen::MatrixXd a_diff_r;
  Eigen::MatrixXd a_conv_r;
  Eigen::MatrixXd a_reac_r;
  Eigen::VectorXd rhs_diff_r;
  Eigen::VectorXd rhs_conv_r;
  Eigen::VectorXd rhs_reac_r;
  Eigen::VectorXd qoi_r;
  Eigen::VectorXd initial_r;  // projected shifted initial state
  double qoi_lift_offset = 0.0;
  std::string basis_ref;      // provenance tag of the basis

  Eigen::Index size() const { return mass_r.rows(); }
};

/// Projects every affine component, the loads, the output functional and the
/// initial state onto span(basis). The initial state is projected orthogonally
/// in the inner product named by basis.product_name ("h1" or "l2").
ReducedOperatorSet project(const AffineOperatorSet& ops, const ReducedBasis& basis,
                           std::string basis_ref = {});

/// Implicit Euler in the reduced space; returns the num_steps + 1 output values.
/// The dense system is LU-factored once per parameter.
Eigen::VectorXd solve_rom(const ReducedOperatorSet& red, const Parameter& mu, int num_steps,
                          double t_end);

/// Reduced state trajectory (N_rb x (num_steps + 1)); used for reconstruction checks.
Eigen::MatrixXd solve_rom_states(const ReducedOperatorSet& red, const Parameter& mu,
                                 int num_steps, double t_end);

}  // namespace cdr
