#pragma once

// Vectorial kernel surrogate built by f-greedy center selection in the
// Newton basis (orthogonal greedy), with a Gaussian kernel on normalized inputs.

#include "cdrpipe/fom.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace cdr {

/// Affine map of a parameter box onto [0, 1]^2. Degenerate axes map to 0.
struct InputNormalization {
  ParameterDomain box;

  Eigen::Vector2d operator()(const Parameter& mu) const;
};

struct KernelConfig {
  double shape_gamma = 1.0;     // k(x, y) = exp(-gamma^2 |x - y|^2)
  double lambda_reg = 0.0;      // weight of the squared RKHS norm in the loss
  int max_points = 100;
  double greedy_tol_rel = 1e-6; // stop when max residual <= this * max |y_i|
  // When > 0, targets are first projected onto their leading left singular
  // vectors, keeping enough modes that the relative Frobenius projection error
  // is at most this value. The greedy then runs on the mode coefficients.
  // The modes come from an eigensolve of Y Y^T, so values below ~1e-7 are
  // resolved only to rounding level.
  double output_tol = 0.0;
  InputNormalization normalization;
};

/// Power function values below this multiple of sqrt(k(x, x)) are never selected.
inline constexpr double kPowerFloor = 1e-7;

inline double gaussian_kernel(const Eigen::Vector2d& x, const Eigen::Vector2d& y, double gamma) {
  return std::exp(-gamma * gamma * (x - y).squaredNorm());
}

enum class StopReason { kMaxPoints, kTolerance, kPowerFloor, kExhausted };

std::string to_string(StopReason reason);

struct KernelModel {
  Eigen::MatrixX2d centers;        // normalized, one per row
  Eigen::MatrixXd coefficients;    // n x r, weights of k(., center_j)
  Eigen::MatrixXd output_basis;    // d_out x r orthonormal columns; empty: r = d_out, identity
  Eigen::MatrixXd newton_factor;   // lower triangular, K_centers (+ reg) = L L^T
  KernelConfig config;
  Eigen::Index d_out = 0;

  // Fit diagnostics.
  std::vector<Eigen::Index> selected;    // training indices in selection order
  std::vector<double> residual_history;  // max_i |y_i - s_n(mu_i)| for n = 0, 1, ...
  StopReason stop_reason = StopReason::kExhausted;
  bool breakdown = false;  // power floor reached while residual above tolerance

  Eigen::Index num_centers() const { return centers.rows(); }
};

/// f-greedy fit. Throws std::invalid_argument for empty or mismatched data,
/// non-finite targets, or inputs that coincide after normalization.
KernelModel fit_fgreedy(const std::vector<Parameter>& inputs, const Eigen::MatrixXd& targets,
                        const KernelConfig& config);

/// Same Newton-basis construction with a prescribed center order (no selection).
KernelModel fit_fixed_centers(const std::vector<Parameter>& inputs, const Eigen::MatrixXd& targets,
                              const KernelConfig& config,
                              const std::vector<Eigen::Index>& order);

/// sum_j coefficients_j k(x, center_j); O(n d_out). Inputs outside the box are
/// extrapolated and not trustworthy.
Eigen::VectorXd predict(const KernelModel& model, const Parameter& mu);

/// Writes the prediction into `out` without allocating (out must have d_out entries).
void predict_into(const KernelModel& model, const Parameter& mu, Eigen::Ref<Eigen::VectorXd> out);

/// sqrt(k(x, x) - |L^{-1} k_X(x)|^2), clamped at zero.
double power_function(const KernelModel& model, const Parameter& mu);

/// Mean squared data misfit plus lambda_reg * trace(coeff^T K coeff).
double loss(const KernelModel& model, const std::vector<Parameter>& inputs,
            const Eigen::MatrixXd& targets);

}  // namespace cdr
