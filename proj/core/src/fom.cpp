#include "cdrpipe/fom.hpp"

#include "cdrpipe/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cdr {

void require_admissible(const Parameter& mu) {
  if (!(std::isfinite(mu.da) && std::isfinite(mu.pe)) || mu.da < 0.0 || mu.pe < 0.0) {
    throw std::invalid_argument("parameter must satisfy da >= 0 and pe >= 0 (got da=" +
                                std::to_string(mu.da) + ", pe=" + std::to_string(mu.pe) + ")");
  }
}

ParameterDomain::ParameterDomain(Parameter lo, Parameter hi) : lower(lo), upper(hi) {
  require_admissible(lo);
  require_admissible(hi);
  if (lo.da > hi.da || lo.pe > hi.pe) {
    throw std::invalid_argument("parameter domain: lower bound exceeds upper bound");
  }
}

bool ParameterDomain::contains(const Parameter& mu) const {
  return mu.da >= lower.da && mu.da <= upper.da && mu.pe >= lower.pe && mu.pe <= upper.pe;
}

Grid1D::Grid1D(int num_intervals) : num_intervals_(num_intervals) {
  if (num_intervals < 2) {
    throw std::invalid_argument("grid needs at least 2 intervals, got " +
                                std::to_string(num_intervals));
  }
}

AffineOperatorSet assemble(const Grid1D& grid) {
  const Eigen::Index n = grid.num_nodes();
  const double h = grid.h();

  AffineOperatorSet ops;
  ops.grid = grid;
  ops.mass = Tridiagonal(n);
  ops.a_diff = Tridiagonal(n);
  ops.a_conv = Tridiagonal(n);

  Eigen::Matrix2d local_mass;
  local_mass << 2.0, 1.0, 1.0, 2.0;
  local_mass *= h / 6.0;
  Eigen::Matrix2d local_diff;
  local_diff << 1.0, -1.0, -1.0, 1.0;
  local_diff /= h;
  // Rows are test functions: -int phi_j phi_i' with phi_i' = -1/h (left), +1/h (right).
  Eigen::Matrix2d local_conv;
  local_conv << 0.5, 0.5, -0.5, -0.5;

  for (Eigen::Index e = 0; e < grid.num_intervals(); ++e) {
    ops.mass.add_element(e, local_mass);
    ops.a_diff.add_element(e, local_diff);
    ops.a_conv.add_element(e, local_conv);
  }
  // Outflow boundary term c(1) v(1).
  ops.a_conv.diag()(n - 1) += 1.0;

  ops.a_reac = ops.mass;
  ops.h1_product = ops.mass.axpy(1.0, ops.a_diff);

  ops.lift = Eigen::VectorXd::Zero(n);
  ops.lift(0) = 1.0;
  ops.dirichlet_dofs = {0};

  // l_q = -a_q(g_D, .), i.e. minus the first column, with Dirichlet rows zeroed.
  const auto lifted_load = [&](const Tridiagonal& a) {
    Eigen::VectorXd r = -a.apply(ops.lift);
    for (Eigen::Index d : ops.dirichlet_dofs) r(d) = 0.0;
    return r;
  };
  ops.rhs_diff = lifted_load(ops.a_diff);
  ops.rhs_conv = lifted_load(ops.a_conv);
  ops.rhs_reac = lifted_load(ops.a_reac);

  ops.qoi_vector = Eigen::VectorXd::Zero(n);
  ops.qoi_vector(n - 1) = 1.0;
  return ops;
}

AffineSystem operator_at(const AffineOperatorSet& ops, const Parameter& mu) {
  const Tridiagonal full = ops.a_diff.axpy(mu.pe, ops.a_conv).axpy(mu.da, ops.a_reac);
  const Eigen::VectorXd load = ops.rhs_diff + mu.pe * ops.rhs_conv + mu.da * ops.rhs_reac;
  return {ops.free_block(full), ops.free_part(load)};
}

Eigen::VectorXd time_points(int num_steps, double t_end) {
  if (num_steps < 1) throw std::invalid_argument("num_steps must be >= 1");
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  Eigen::VectorXd t(num_steps + 1);
  const double dt = t_end / num_steps;
  for (int n = 0; n <= num_steps; ++n) t(n) = n * dt;
  t(num_steps) = t_end;
  return t;
}

Eigen::VectorXd shifted_initial_state(const AffineOperatorSet& ops) {
  // c_0 = 0, so the shifted datum is -g_D; its free part is what the solver sees.
  return ops.free_part(-ops.lift);
}

Eigen::VectorXd solve_fom_qoi(const AffineOperatorSet& ops, const Parameter& mu, int num_steps,
                              double t_end, const StateSink& sink, Eigen::Index chunk_cols) {
  require_admissible(mu);
  if (num_steps < 1) throw std::invalid_argument("num_steps must be >= 1");
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  if (chunk_cols < 1) throw std::invalid_argument("chunk_cols must be >= 1");

  const double dt = t_end / num_steps;
  const AffineSystem sys = operator_at(ops, mu);
  const Tridiagonal mass_dt = ops.free_block(ops.mass).scaled(1.0 / dt);
  const TridiagonalLU lu(mass_dt.axpy(1.0, sys.matrix));

  const Eigen::Index n = ops.num_free();
  const Eigen::VectorXd qoi_free = ops.free_part(ops.qoi_vector);
  const double qoi_offset = ops.qoi_lift_offset();

  Eigen::VectorXd state = shifted_initial_state(ops);
  Eigen::VectorXd next(n);
  Eigen::VectorXd qoi(num_steps + 1);
  qoi(0) = qoi_free.dot(state) + qoi_offset;

  Eigen::MatrixXd block;
  Eigen::Index filled = 0;
  if (sink) {
    block.resize(n, std::min<Eigen::Index>(chunk_cols, num_steps + 1));
    block.col(filled++) = state;
  }
  const auto flush = [&] {
    if (filled > 0) {
      sink(block.leftCols(filled));
      filled = 0;
    }
  };

  const double* md = mass_dt.diag().data();
  const double* mu_up = mass_dt.upper().data();
  const double* ml = mass_dt.lower().data();
  const double* load = sys.load.data();
  for (int step = 1; step <= num_steps; ++step) {
    const double* c = state.data();
    double* r = next.data();
    if (n == 1) {
      r[0] = md[0] * c[0] + load[0];
    } else {
      r[0] = md[0] * c[0] + mu_up[0] * c[1] + load[0];
      for (Eigen::Index i = 1; i + 1 < n; ++i) {
        r[i] = ml[i - 1] * c[i - 1] + md[i] * c[i] + mu_up[i] * c[i + 1] + load[i];
      }
      r[n - 1] = ml[n - 2] * c[n - 2] + md[n - 1] * c[n - 1] + load[n - 1];
    }
    lu.solve_in_place(next);
    state.swap(next);
    const double q = qoi_free.dot(state) + qoi_offset;
    if (!std::isfinite(q)) {
      throw NonFiniteError("FOM time stepping produced a non-finite value at step " +
                           std::to_string(step));
    }
    qoi(step) = q;
    if (sink) {
      if (filled == block.cols()) flush();
      block.col(filled++) = state;
    }
  }
  if (sink) flush();
  return qoi;
}

Trajectory solve_fom(const AffineOperatorSet& ops, const Parameter& mu, int num_steps,
                     double t_end) {
  Trajectory traj;
  traj.mu = mu;
  traj.times = time_points(num_steps, t_end);
  traj.states = Eigen::MatrixXd::Zero(ops.num_dofs(), num_steps + 1);
  Eigen::Index col = 0;
  const StateSink store = [&](const Eigen::Ref<const Eigen::MatrixXd>& block) {
    traj.states.block(ops.first_free(), col, ops.num_free(), block.cols()) = block;
    col += block.cols();
  };
  traj.qoi = solve_fom_qoi(ops, mu, num_steps, t_end, store);
  if (!traj.states.allFinite()) {
    throw NonFiniteError("FOM trajectory contains non-finite values");
  }
  return traj;
}

double steady_qoi_oracle(const Parameter& mu) {
  require_admissible(mu);
  // c(x) = A e^{r1 x} + B e^{r2 x}, r_{1,2} = (pe +- s) / 2, s = sqrt(pe^2 + 4 da).
  // Eliminating A, B from c(0) = 1 and c'(1) = 0 gives
  //   c(1) = s e^{r2} / (r1 - r2 e^{-s}),
  // which is free of overflow since r2 <= 0 and s >= 0.
  const double s = std::sqrt(mu.pe * mu.pe + 4.0 * mu.da);
  if (s == 0.0) return 1.0;
  const double r1 = 0.5 * (mu.pe + s);
  const double r2 = -2.0 * mu.da / (mu.pe + s);  // (pe - s) / 2 without cancellation
  return s * std::exp(r2) / (r1 - r2 * std::exp(-s));
}

double qoi_error(const Eigen::Ref<const Eigen::VectorXd>& approx,
                 const Eigen::Ref<const Eigen::VectorXd>& reference) {
  if (approx.size() != reference.size()) {
    throw DimensionError("qoi_error: vectors differ in length");
  }
  const double denom = reference.norm();
  if (denom == 0.0) throw ZeroDenominatorError("qoi_error: reference output is zero");
  return (approx - reference).norm() / denom;
}

}  // namespace cdr
