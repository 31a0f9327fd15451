#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "gbim/blr.hpp"
#include "gbim/error.hpp"

using namespace gbim;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = normal(rng);
  return out;
}

}  // namespace

TEST_CASE("one-dimensional posterior") {
  Eigen::MatrixXd phi(1, 1);
  phi << 1.0;
  Eigen::VectorXd y(1);
  y << 1.0;
  const auto post = BlrPosterior::fit(phi, y, 1.0, 1.0);
  CHECK(post.precision()(0, 0) == doctest::Approx(2.0));
  CHECK(post.weight_mean()(0) == doctest::Approx(0.5));
  Eigen::VectorXd q(1);
  q << 1.0;
  const auto pred = post.predict(q);
  CHECK(pred.mean == doctest::Approx(0.5));
  CHECK(pred.variance == doctest::Approx(1.5));
}

TEST_CASE("zero targets and zero features") {
  std::mt19937_64 rng(1);
  const auto phi = random_matrix(10, 4, rng);
  const auto post = BlrPosterior::fit(phi, Eigen::VectorXd::Zero(10), 2.0, 0.3);
  CHECK(post.weight_mean().norm() == 0.0);
  const auto pred = post.predict(Eigen::VectorXd::Zero(4));
  CHECK(pred.mean == 0.0);
  CHECK(pred.variance == doctest::Approx(0.3));
}

TEST_CASE("posterior mean solves the normal equations") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto phi = random_matrix(20, 5, rng);
    const Eigen::VectorXd y = random_matrix(20, 1, rng);
    const double sw = 0.7;
    const double sb = 0.2;
    const auto post = BlrPosterior::fit(phi, y, sw, sb);
    const Eigen::MatrixXd a = phi.transpose() * phi / sb + Eigen::MatrixXd::Identity(5, 5) / sw;
    const Eigen::VectorXd m = a.fullPivLu().solve(phi.transpose() * y / sb);
    CHECK((post.weight_mean() - m).norm() < 1e-10);
    CHECK((post.precision() - a).norm() < 1e-10);
    CHECK_FALSE(post.jittered());
  }
}

TEST_CASE("variance never drops below the noise variance") {
  std::mt19937_64 rng(3);
  const auto phi = random_matrix(30, 6, rng);
  const auto post = BlrPosterior::fit(phi, random_matrix(30, 1, rng), 1.0, 0.05);
  const auto queries = random_matrix(6, 50, rng);
  const auto preds = post.predict_columns(queries);
  REQUIRE(preds.size() == 50);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(preds[i].variance >= 0.05);
    const auto single = post.predict(queries.col(static_cast<Eigen::Index>(i)));
    CHECK(preds[i].mean == doctest::Approx(single.mean).epsilon(1e-12));
    CHECK(preds[i].variance == doctest::Approx(single.variance).epsilon(1e-12));
  }
}

TEST_CASE("matches the Gaussian-process form with a linear kernel") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto phi = random_matrix(20, 5, rng);
    const Eigen::VectorXd y = random_matrix(20, 1, rng);
    const auto post = BlrPosterior::fit(phi, y, 1.3, 0.4);
    const Eigen::VectorXd q = random_matrix(5, 1, rng);
    const auto blr = post.predict(q);
    const auto gp = gp_linear_oracle(phi, y, 1.3, 0.4, q);
    CHECK(std::abs(blr.mean - gp.mean) <= 1e-8);
    CHECK(std::abs(blr.variance - gp.variance) <= 1e-8);
  }
}

TEST_CASE("input validation") {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Ones(3, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(BlrPosterior::fit(phi, y, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(BlrPosterior::fit(phi, y, 1.0, -1.0), ValidationError);
  CHECK_THROWS_AS(BlrPosterior::fit(phi, Eigen::VectorXd::Ones(2), 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(BlrPosterior::fit(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), 1.0, 1.0),
                  ValidationError);
  const auto post = BlrPosterior::fit(phi, y, 1.0, 1.0);
  CHECK_THROWS_AS(post.predict(Eigen::VectorXd::Ones(3)), ValidationError);
  Eigen::MatrixXd bad = phi;
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS(BlrPosterior::fit(bad, y, 1.0, 1.0));
}

TEST_CASE("residual noise variance") {
  const std::vector<double> r{1.0, 2.0, 3.0};
  CHECK(residual_noise_variance(r) == doctest::Approx(1.0));
  const std::vector<double> flat{2.0, 2.0};
  CHECK(residual_noise_variance(flat) == 1e-6);
}
