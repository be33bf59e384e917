#include "cdrpipe/kernel.hpp"

#include "cdrpipe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace cdr {

Eigen::Vector2d InputNormalization::operator()(const Parameter& mu) const {
  const auto scale = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };
  return {scale(mu.da, box.lower.da, box.upper.da), scale(mu.pe, box.lower.pe, box.upper.pe)};
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kMaxPoints: return "max_points";
    case StopReason::kTolerance: return "tolerance";
    case StopReason::kPowerFloor: return "power_floor";
    case StopReason::kExhausted: return "exhausted";
  }
  return "unknown";
}

namespace {

void validate(const std::vector<Parameter>& inputs, const Eigen::MatrixXd& targets,
              const KernelConfig& config) {
  if (inputs.empty()) throw std::invalid_argument("kernel fit: no training data");
  if (static_cast<Eigen::Index>(inputs.size()) != targets.rows()) {
    throw std::invalid_argument("kernel fit: inputs and target rows differ");
  }
  if (!targets.allFinite()) throw std::invalid_argument("kernel fit: non-finite targets");
  if (!(config.shape_gamma > 0.0)) throw std::invalid_argument("kernel fit: shape_gamma must be > 0");
  if (!(config.lambda_reg >= 0.0)) throw std::invalid_argument("kernel fit: lambda_reg must be >= 0");
  if (config.max_points < 1) throw std::invalid_argument("kernel fit: max_points must be >= 1");
  if (!(config.output_tol >= 0.0 && config.output_tol < 1.0)) {
    throw std::invalid_argument("kernel fit: output_tol must be in [0, 1)");
  }
}

// Orthonormal d_out x r basis of the target rows from the eigenpairs of Y Y^T.
Eigen::MatrixXd output_modes(const Eigen::MatrixXd& targets, double tol) {
  const Eigen::MatrixXd gram = targets * targets.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw SingularSystemError("kernel fit: output compression failed");
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);  // ascending
  const double total = lambda.sum();
  if (!(total > 0.0)) return Eigen::MatrixXd(targets.cols(), 0);
  Eigen::Index drop = 0;
  double tail = 0.0;
  while (drop < lambda.size() && tail + lambda(drop) <= tol * tol * total) tail += lambda(drop++);
  const Eigen::Index r = lambda.size() - drop;
  const Eigen::MatrixXd modes = targets.transpose() * eig.eigenvectors().rightCols(r);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(modes);
  return qr.householderQ() * Eigen::MatrixXd::Identity(targets.cols(), r);
}

Eigen::MatrixX2d normalize_all(const std::vector<Parameter>& inputs, const KernelConfig& config) {
  Eigen::MatrixX2d z(static_cast<Eigen::Index>(inputs.size()), 2);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    z.row(static_cast<Eigen::Index>(i)) = config.normalization(inputs[i]).transpose();
  }
  // Sort-free duplicate check: inputs are a few hundred points at most.
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < z.rows(); ++j) {
      if (z(i, 0) == z(j, 0) && z(i, 1) == z(j, 1)) {
        throw std::invalid_argument("kernel fit: inputs " + std::to_string(i) + " and " +
                                    std::to_string(j) + " coincide after normalization");
      }
    }
  }
  return z;
}

// Shared Newton-basis greedy loop. With `forced` set, centers are taken in the
// given order and no selection or stopping rule other than exhaustion applies.
KernelModel greedy(const std::vector<Parameter>& inputs, const Eigen::MatrixXd& targets,
                   const KernelConfig& config,
                   const std::optional<std::vector<Eigen::Index>>& forced) {
  validate(inputs, targets, config);
  const Eigen::MatrixX2d z = normalize_all(inputs, config);
  const Eigen::Index n_train = z.rows();

  KernelModel model;
  model.config = config;
  model.d_out = targets.cols();
  Eigen::MatrixXd residual;
  if (config.output_tol > 0.0) {
    model.output_basis = output_modes(targets, config.output_tol);
    residual = (targets * model.output_basis).transpose();
  } else {
    residual = targets.transpose();
  }
  const Eigen::Index d_out = residual.rows();
  const double gamma = config.shape_gamma;
  const double ridge = static_cast<double>(n_train) * config.lambda_reg;
  const double k_diag = 1.0 + ridge;
  const double floor2 = kPowerFloor * kPowerFloor;  // k(x, x) = 1 for the Gaussian

  const Eigen::Index budget =
      forced ? static_cast<Eigen::Index>(forced->size())
             : std::min<Eigen::Index>(config.max_points, n_train);

  // One column per training point keeps the rank-one updates contiguous.
  Eigen::VectorXd res_norm2 = residual.colwise().squaredNorm().transpose();
  Eigen::VectorXd power2 = Eigen::VectorXd::Constant(n_train, k_diag);
  Eigen::MatrixXd newton(n_train, budget);  // Newton basis values at training points
  Eigen::MatrixXd newton_coeff(d_out, budget);
  std::vector<bool> taken(static_cast<std::size_t>(n_train), false);

  const double y_max = std::sqrt(res_norm2.maxCoeff());
  const double tol = config.greedy_tol_rel * y_max;
  model.residual_history.push_back(y_max);

  Eigen::Index n = 0;
  model.stop_reason = StopReason::kExhausted;
  while (n < budget) {
    Eigen::Index pick = -1;
    if (forced) {
      pick = (*forced)[static_cast<std::size_t>(n)];
      if (pick < 0 || pick >= n_train || taken[static_cast<std::size_t>(pick)]) {
        throw std::invalid_argument("kernel fit: invalid forced center order");
      }
    } else {
      if (model.residual_history.back() <= tol) {
        model.stop_reason = StopReason::kTolerance;
        break;
      }
      // argmax of the residual norm over admissible points; lowest index wins ties.
      double best = -1.0;
      for (Eigen::Index i = 0; i < n_train; ++i) {
        if (taken[static_cast<std::size_t>(i)] || power2(i) <= floor2) continue;
        if (res_norm2(i) > best) {
          best = res_norm2(i);
          pick = i;
        }
      }
      if (pick < 0) {
        model.stop_reason = StopReason::kPowerFloor;
        model.breakdown = model.residual_history.back() > tol;
        break;
      }
    }

    const double p2 = power2(pick);
    if (!(p2 > 0.0)) {
      throw SingularSystemError("kernel fit: power function vanished at a forced center");
    }
    const double p = std::sqrt(p2);
    const Eigen::Vector2d zc = z.row(pick).transpose();
    Eigen::VectorXd v(n_train);
    for (Eigen::Index i = 0; i < n_train; ++i) {
      v(i) = gaussian_kernel(z.row(i).transpose(), zc, gamma);
    }
    v(pick) += ridge;
    if (n > 0) v.noalias() -= newton.leftCols(n) * newton.row(pick).head(n).transpose();
    v /= p;

    newton.col(n) = v;
    newton_coeff.col(n) = residual.col(pick) / p;
    const auto c = newton_coeff.col(n);
    for (Eigen::Index i = 0; i < n_train; ++i) {
      auto r = residual.col(i);
      r -= v(i) * c;
      res_norm2(i) = r.squaredNorm();
    }
    power2 -= v.cwiseAbs2();
    taken[static_cast<std::size_t>(pick)] = true;
    model.selected.push_back(pick);
    ++n;
    model.residual_history.push_back(std::sqrt(res_norm2.maxCoeff()));
  }
  if (!forced && n == budget) {
    if (model.residual_history.back() <= tol) {
      model.stop_reason = StopReason::kTolerance;
    } else {
      model.stop_reason = budget == config.max_points ? StopReason::kMaxPoints : StopReason::kExhausted;
    }
  }

  model.centers.resize(n, 2);
  model.newton_factor = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index idx = model.selected[static_cast<std::size_t>(j)];
    model.centers.row(j) = z.row(idx);
    model.newton_factor.row(j).head(j + 1) = newton.row(idx).head(j + 1);
  }
  // coefficients = L^{-T} C, so that s(x) = k_X(x)^T coefficients.
  model.coefficients = model.newton_factor.transpose()
                           .triangularView<Eigen::Upper>()
                           .solve(newton_coeff.leftCols(n).transpose());
  return model;
}

Eigen::VectorXd kernel_column(const KernelModel& model, const Eigen::Vector2d& x) {
  Eigen::VectorXd k(model.num_centers());
  for (Eigen::Index j = 0; j < k.size(); ++j) {
    k(j) = gaussian_kernel(model.centers.row(j).transpose(), x, model.config.shape_gamma);
  }
  return k;
}

}  // namespace

KernelModel fit_fgreedy(const std::vector<Parameter>& inputs, const Eigen::MatrixXd& targets,
                        const KernelConfig& config) {
  return greedy(inputs, targets, config, std::nullopt);
}

KernelModel fit_fixed_centers(const std::vector<Parameter>& inputs, const Eigen::MatrixXd& targets,
                              const KernelConfig& config,
                              const std::vector<Eigen::Index>& order) {
  return greedy(inputs, targets, config, order);
}

void predict_into(const KernelModel& model, const Parameter& mu, Eigen::Ref<Eigen::VectorXd> out) {
  if (out.size() != model.d_out) throw DimensionError("predict: output has wrong length");
  if (model.num_centers() == 0) {
    out.setZero();
    return;
  }
  const Eigen::VectorXd k = kernel_column(model, model.config.normalization(mu));
  if (model.output_basis.size() == 0 && model.coefficients.cols() == model.d_out) {
    out.noalias() = model.coefficients.transpose() * k;
  } else {
    const Eigen::VectorXd modal = model.coefficients.transpose() * k;
    out.noalias() = model.output_basis * modal;
  }
}

Eigen::VectorXd predict(const KernelModel& model, const Parameter& mu) {
  Eigen::VectorXd y(model.d_out);
  predict_into(model, mu, y);
  return y;
}

double power_function(const KernelModel& model, const Parameter& mu) {
  const Eigen::Vector2d x = model.config.normalization(mu);
  if (model.num_centers() == 0) return 1.0;
  const Eigen::VectorXd k = kernel_column(model, x);
  const Eigen::VectorXd v = model.newton_factor.triangularView<Eigen::Lower>().solve(k);
  return std::sqrt(std::max(0.0, 1.0 - v.squaredNorm()));
}

double loss(const KernelModel& model, const std::vector<Parameter>& inputs,
            const Eigen::MatrixXd& targets) {
  if (static_cast<Eigen::Index>(inputs.size()) != targets.rows() || inputs.empty()) {
    throw DimensionError("loss: inputs and targets disagree");
  }
  if (targets.cols() != model.d_out) throw DimensionError("loss: target width differs from model");
  double misfit = 0.0;
  Eigen::VectorXd y(model.d_out);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    predict_into(model, inputs[i], y);
    misfit += (targets.row(static_cast<Eigen::Index>(i)).transpose() - y).squaredNorm();
  }
  misfit /= static_cast<double>(inputs.size());

  const Eigen::Index n = model.num_centers();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      gram(i, j) = gaussian_kernel(model.centers.row(i).transpose(),
                                   model.centers.row(j).transpose(), model.config.shape_gamma);
    }
  }
  const double rkhs = model.coefficients.cwiseProduct(gram * model.coefficients).sum();
  return misfit + model.config.lambda_reg * rkhs;
}

}  // namespace cdr
