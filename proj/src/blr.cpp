#include "gbim/blr.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "gbim/error.hpp"

namespace gbim {

BlrPosterior BlrPosterior::fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                               double weight_variance, double noise_variance) {
  if (design.rows() < 1) throw ValidationError("BLR needs at least one observation");
  if (design.rows() != targets.size()) throw ValidationError("BLR design and targets disagree");
  if (!(weight_variance > 0.0) || !(noise_variance > 0.0)) {
    throw ValidationError("BLR variances must be positive");
  }
  if (!design.allFinite() || !targets.allFinite()) {
    throw NumericalError("BLR design or targets contain non-finite values");
  }
  const auto dim = design.cols();
  const double inv_noise = 1.0 / noise_variance;

  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(dim, dim) / weight_variance;
  a.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose(), inv_noise);
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();

  BlrPosterior post;
  post.weight_variance_ = weight_variance;
  post.noise_variance_ = noise_variance;
  post.factor_.compute(a);
  if (post.factor_.info() != Eigen::Success) {
    const double jitter = 1e-8 * a.trace() / static_cast<double>(dim);
    a.diagonal().array() += jitter;
    post.factor_.compute(a);
    post.jittered_ = true;
    if (post.factor_.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "BLR precision matrix is not positive definite (D = " << dim
          << ", trace = " << a.trace() << ", min diagonal = " << a.diagonal().minCoeff()
          << ", jitter = " << jitter << ")";
      throw NumericalError(msg.str());
    }
  }
  post.mean_ = post.factor_.solve(design.transpose() * targets) * inv_noise;
  return post;
}

BlrPrediction BlrPosterior::predict(const Eigen::VectorXd& basis) const {
  if (basis.size() != mean_.size()) {
    throw ValidationError("basis has dimension " + std::to_string(basis.size()) + ", expected " +
                          std::to_string(mean_.size()));
  }
  const Eigen::VectorXd half = factor_.matrixL().solve(basis);
  return {mean_.dot(basis), half.squaredNorm() + noise_variance_};
}

std::vector<BlrPrediction> BlrPosterior::predict_columns(const Eigen::MatrixXd& bases) const {
  if (bases.rows() != mean_.size()) throw ValidationError("basis dimension mismatch");
  const Eigen::MatrixXd half = factor_.matrixL().solve(bases);
  const Eigen::VectorXd means = bases.transpose() * mean_;
  std::vector<BlrPrediction> out(static_cast<std::size_t>(bases.cols()));
  for (Eigen::Index c = 0; c < bases.cols(); ++c) {
    out[static_cast<std::size_t>(c)] = {means(c), half.col(c).squaredNorm() + noise_variance_};
  }
  return out;
}

Eigen::MatrixXd BlrPosterior::precision() const { return factor_.reconstructedMatrix(); }

double residual_noise_variance(std::span<const double> residuals) {
  constexpr double kFloor = 1e-6;
  if (residuals.size() < 2) return kFloor;
  const double n = static_cast<double>(residuals.size());
  const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : residuals) ss += (r - mean) * (r - mean);
  return std::max(kFloor, ss / (n - 1.0));
}

BlrPrediction gp_linear_oracle(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                               double weight_variance, double noise_variance,
                               const Eigen::VectorXd& query) {
  const auto n = design.rows();
  if (static_cast<std::size_t>(n) > kGpOracleMaxPoints) {
    throw ValidationError("GP oracle limited to " + std::to_string(kGpOracleMaxPoints) + " points");
  }
  if (n < 1 || targets.size() != n || query.size() != design.cols()) {
    throw ValidationError("GP oracle inputs have inconsistent shapes");
  }
  const Eigen::MatrixXd gram = weight_variance * design * design.transpose();
  const Eigen::VectorXd cross = weight_variance * design * query;
  const double self = weight_variance * query.squaredNorm();
  Eigen::MatrixXd system = gram;
  system.diagonal().array() += noise_variance;
  const auto lu = system.fullPivLu();
  const double mean = cross.dot(lu.solve(targets));
  const double latent = self - cross.dot(lu.solve(cross));
  return {mean, latent + noise_variance};
}

}  // namespace gbim
