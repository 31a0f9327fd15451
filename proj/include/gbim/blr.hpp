#pragma once

// Bayesian linear regression over basis vectors phi(x):
//
//   y = w^T phi(x) + b,  w ~ N(0, sigma_w^2 I),  b ~ N(0, sigma_b^2)
//   A = sigma_b^-2 Phi^T Phi + sigma_w^-2 I
//   m = sigma_b^-2 A^-1 Phi^T y
//   mu(x) = m^T phi(x),  var(x) = phi(x)^T A^-1 phi(x) + sigma_b^2
//
// A is factorized once (Cholesky) and reused for every prediction.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace gbim {

struct BlrPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

class BlrPosterior {
 public:
  // design: N x D, one basis vector per row. Throws NumericalError if A is not
  // positive definite even after one diagonal jitter of 1e-8 * trace(A) / D.
  static BlrPosterior fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                          double weight_variance, double noise_variance);

  BlrPrediction predict(const Eigen::VectorXd& basis) const;

  // One prediction per column of `bases` (D x B).
  std::vector<BlrPrediction> predict_columns(const Eigen::MatrixXd& bases) const;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& weight_mean() const noexcept { return mean_; }
  Eigen::MatrixXd precision() const;  // A
  double weight_variance() const noexcept { return weight_variance_; }
  double noise_variance() const noexcept { return noise_variance_; }
  bool jittered() const noexcept { return jittered_; }

 private:
  BlrPosterior() = default;

  Eigen::LLT<Eigen::MatrixXd> factor_;
  Eigen::VectorXd mean_;
  double weight_variance_ = 1.0;
  double noise_variance_ = 1.0;
  bool jittered_ = false;
};

// Sample variance of residuals, floored at 1e-6; the default noise variance.
double residual_noise_variance(std::span<const double> residuals);

inline constexpr std::size_t kGpOracleMaxPoints = 500;

// Gaussian-process predictive with the linear kernel
// k(x, x') = sigma_w^2 phi(x)^T phi(x'), solved in the N x N data space.
// The returned variance includes the sigma_b^2 noise term so that it is
// comparable with BlrPosterior::predict.
BlrPrediction gp_linear_oracle(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                               double weight_variance, double noise_variance,
                               const Eigen::VectorXd& query);

}  // namespace gbim
