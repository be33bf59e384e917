#pragma once

// Full order model: P1 finite elements on a uniform grid of (0, 1) for
//
//   d_t c - c'' + Pe (u c)' + Da c = 0,   u = 1,
//   c(0, t) = 1,  c'(1, t) = 0,  c(x, 0) = 0,
//
// with implicit Euler time stepping. Unknowns are the shifted state
// c - g_D, where the lift g_D is the hat function of node 0.

#include "cdrpipe/tridiagonal.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace cdr {

/// Model parameter: Damkoehler and Peclet numbers.
struct Parameter {
  double da = 0.0;
  double pe = 0.0;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Throws std::invalid_argument unless both coefficients are finite and >= 0.
void require_admissible(const Parameter& mu);

/// Axis aligned box of parameters.
struct ParameterDomain {
  Parameter lower{1e-3, 1e-3};
  Parameter upper{1.0, 1.0};

  ParameterDomain() = default;
  ParameterDomain(Parameter lo, Parameter hi);

  bool contains(const Parameter& mu) const;
  bool degenerate() const { return lower.da == upper.da || lower.pe == upper.pe; }
};

class Grid1D {
 public:
  explicit Grid1D(int num_intervals);

  int num_intervals() const { return num_intervals_; }
  Eigen::Index num_nodes() const { return num_intervals_ + 1; }
  double h() const { return 1.0 / num_intervals_; }
  double node(Eigen::Index i) const { return static_cast<double>(i) * h(); }

 private:
  int num_intervals_;
};

/// Parameter independent pieces of the discretization. Matrices are over
/// all N_h nodes; load vectors are full length with zero Dirichlet entries.
struct AffineOperatorSet {
  Grid1D grid{2};
  Tridiagonal mass;        // (c, v)_L2
  Tridiagonal a_diff;      // (c', v')
  Tridiagonal a_conv;      // -(c, v') + c(1) v(1)
  Tridiagonal a_reac;      // (c, v)
  Tridiagonal h1_product;  // mass + a_diff
  Eigen::VectorXd rhs_diff;
  Eigen::VectorXd rhs_conv;
  Eigen::VectorXd rhs_reac;
  Eigen::VectorXd qoi_vector;  // point evaluation at x = 1
  Eigen::VectorXd lift;        // nodal values of g_D
  std::vector<Eigen::Index> dirichlet_dofs;

  Eigen::Index num_dofs() const { return grid.num_nodes(); }
  /// Free DoFs are the contiguous range [1, N_h).
  Eigen::Index num_free() const { return grid.num_nodes() - 1; }
  Eigen::Index first_free() const { return 1; }

  Tridiagonal free_block(const Tridiagonal& a) const { return a.block(first_free(), num_free()); }
  Eigen::VectorXd free_part(const Eigen::VectorXd& v) const {
    return v.segment(first_free(), num_free());
  }

  /// Contribution of the lift to the output functional.
  double qoi_lift_offset() const { return qoi_vector.dot(lift); }
};

/// Assembles all affine components with exact P1 element integrals.
/// Throws std::invalid_argument for fewer than two intervals.
AffineOperatorSet assemble(const Grid1D& grid);

/// A_mu and l_mu on the free DoFs.
struct AffineSystem {
  Tridiagonal matrix;
  Eigen::VectorXd load;
};

/// A_mu = a_diff + pe a_conv + da a_reac, l_mu likewise, restricted to free DoFs.
AffineSystem operator_at(const AffineOperatorSet& ops, const Parameter& mu);

/// Equidistant time points t_0 = 0, ..., t_{num_steps} = t_end.
Eigen::VectorXd time_points(int num_steps, double t_end);

/// Shifted initial state on the free DoFs (c_0 - g_D with c_0 = 0).
Eigen::VectorXd shifted_initial_state(const AffineOperatorSet& ops);

struct Trajectory {
  Eigen::MatrixXd states;  // N_h x (N_T + 1), shifted, Dirichlet rows zero
  Eigen::VectorXd times;
  Eigen::VectorXd qoi;     // unshifted outflow value per time point
  Parameter mu;
};

/// Receives consecutive blocks of free-DoF states (columns in time order,
/// starting with the initial state). The block is only valid during the call.
using StateSink = std::function<void(const Eigen::Ref<const Eigen::MatrixXd>&)>;

/// Implicit Euler solve returning only the output time series.
///
/// The system matrix M/dt + A_mu is factored once. When a sink is given, the
/// free-DoF states are streamed to it in blocks of at most chunk_cols columns,
/// so no full trajectory needs to be held in memory.
Eigen::VectorXd solve_fom_qoi(const AffineOperatorSet& ops, const Parameter& mu, int num_steps,
                              double t_end, const StateSink& sink = {},
                              Eigen::Index chunk_cols = 1024);

/// Implicit Euler solve storing every state.
Trajectory solve_fom(const AffineOperatorSet& ops, const Parameter& mu, int num_steps,
                     double t_end);

/// c(1) of the stationary problem -c'' + pe c' + da c = 0, c(0) = 1, c'(1) = 0.
double steady_qoi_oracle(const Parameter& mu);

/// ||a - b||_2 / ||b||_2. Throws ZeroDenominatorError when b vanishes.
double qoi_error(const Eigen::Ref<const Eigen::VectorXd>& approx,
                 const Eigen::Ref<const Eigen::VectorXd>& reference);

}  // namespace cdr
