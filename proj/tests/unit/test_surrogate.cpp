#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gbim/checkpoint.hpp"
#include "gbim/error.hpp"
#include "gbim/surrogate.hpp"

using namespace gbim;

namespace {

SurrogateConfig small_config() {
  SurrogateConfig c;
  c.hidden_dim = 6;
  c.random_features = 32;
  c.mlp_hidden = {12, 8};
  return c;
}

Dataset small_data() { return generate_synthetic({20, 60, 5, 4, 11}); }

}  // namespace

TEST_CASE("parameter shapes") {
  const auto d = small_data();
  const auto p = init_surrogate(d.social, d.num_items(), small_config(), 1);
  CHECK(p.item_encoder.rows() == 5);
  CHECK(p.item_encoder.cols() == 6);
  CHECK(p.node_features.rows() == 20);
  CHECK(p.prf.rows() == 32);
  CHECK(p.mlp.size() == 3);
  CHECK(p.mlp.back().weight.rows() == 1);
  CHECK(p.basis_dim() == 8);
  CHECK(p.num_trainable() == 5 * 6 + 20 * 6 + 3 * 36 + (12 * 6 + 12) + (8 * 12 + 8) + (8 + 1));
  auto copy = p;
  std::size_t total = 0;
  for (const auto& b : copy.trainable()) total += static_cast<std::size_t>(b.size());
  CHECK(total == p.num_trainable());
  const auto again = init_surrogate(d.social, d.num_items(), small_config(), 1);
  CHECK(again.node_features == p.node_features);
  CHECK(again.mlp[1].weight == p.mlp[1].weight);
}

TEST_CASE("config validation") {
  auto c = small_config();
  c.mlp_hidden.clear();
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = small_config();
  c.random_features = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("seed encoding") {
  const auto d = small_data();
  const auto p = init_surrogate(d.social, d.num_items(), small_config(), 2);
  const auto x = encode_seed(SeedSet({{3, 1}, {7, 4}}), p);
  CHECK(x.rows() == 20);
  CHECK(x.row(3) == p.item_encoder.row(1));
  CHECK(x.row(7) == p.item_encoder.row(4));
  CHECK(x.row(0).isZero());
  CHECK_THROWS_AS(encode_seed(SeedSet({{25, 0}}), p), ValidationError);
}

TEST_CASE("random features are positive and unbiased on average") {
  Eigen::VectorXd x(3);
  x << 0.3, -0.2, 0.1;
  Eigen::VectorXd y(3);
  y << -0.1, 0.4, 0.2;
  double mean = 0.0;
  const int draws = 400;
  for (int s = 0; s < draws; ++s) {
    const auto w = sample_prf(64, 3, static_cast<std::uint64_t>(s));
    const auto fx = prf_map(x, w);
    CHECK(fx.minCoeff() > 0.0);
    mean += fx.dot(prf_map(y, w));
  }
  mean /= draws;
  CHECK(mean == doctest::Approx(std::exp(x.dot(y))).epsilon(0.03));
}

TEST_CASE("row map equals the vector map") {
  const auto w = sample_prf(16, 4, 3);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 4);
  const auto rows = prf_map_rows(x, w);
  for (Eigen::Index i = 0; i < 5; ++i) {
    CHECK((rows.row(i).transpose() - prf_map(x.row(i).transpose(), w)).norm() < 1e-12);
  }
}

TEST_CASE("linear attention approaches softmax attention") {
  const auto d = small_data();
  auto c = small_config();
  auto p = init_surrogate(d.social, d.num_items(), c, 5);
  const auto x = encode_seed(SeedSet({{1, 0}, {2, 3}}), p);
  const auto exact = gkamp_exact(x, p.node_features, p);
  double coarse = 0.0;
  double fine = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    p.prf = sample_prf(16, c.hidden_dim, s);
    coarse += (gkamp_linear(x, p.node_features, p) - exact).norm();
    p.prf = sample_prf(4096, c.hidden_dim, s);
    fine += (gkamp_linear(x, p.node_features, p) - exact).norm();
  }
  CHECK(fine < coarse);
  CHECK(fine / 5 < 0.05 * exact.norm());
}

TEST_CASE("softmax attention rows are convex combinations") {
  const auto d = small_data();
  const auto p = init_surrogate(d.social, d.num_items(), small_config(), 6);
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(20, 6);
  auto q = p;
  q.w_value.setIdentity();
  const auto z = gkamp_exact(ones, p.node_features, q);
  CHECK((z - ones).cwiseAbs().maxCoeff() < 1e-12);
  const auto zl = gkamp_linear(ones, p.node_features, q);
  CHECK((zl - ones).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pooled vector equals the column sum of X + Z") {
  const auto d = small_data();
  const auto p = init_surrogate(d.social, d.num_items(), small_config(), 7);
  const SeedSet s({{0, 2}, {5, 1}, {19, 4}});
  const auto x = encode_seed(s, p);
  const Eigen::VectorXd full = (x + gkamp_linear(x, p.node_features, p)).colwise().sum().transpose();
  const auto ctx = build_attention_context(p);
  CHECK((pooled_status(s, p, ctx) - full).norm() < 1e-10 * (1.0 + full.norm()));
}

TEST_CASE("prediction is invariant to pair order and batch composition") {
  const auto d = small_data();
  const auto p = init_surrogate(d.social, d.num_items(), small_config(), 8);
  const auto a = forward(SeedSet({{0, 2}, {5, 1}}), p);
  const auto b = forward(SeedSet({{5, 1}, {0, 2}}), p);
  CHECK(a.value == b.value);
  const auto ctx = build_attention_context(p);
  const std::vector<SeedSet> batch{SeedSet({{3, 3}}), SeedSet({{0, 2}, {5, 1}})};
  const auto out = predict_batch(batch, p, ctx);
  CHECK(out.values[1] == doctest::Approx(a.value).epsilon(1e-12));
  CHECK(out.bases.rows() == 8);
  CHECK((out.bases.col(1) - a.basis).norm() < 1e-12);
  CHECK(out.bases.minCoeff() >= 0.0);
}

TEST_CASE("analytic gradient matches finite differences") {
  const auto d = generate_synthetic({5, 8, 3, 2, 4});
  SurrogateConfig c;
  c.hidden_dim = 4;
  c.random_features = 8;
  c.mlp_hidden = {6, 5};
  auto p = init_surrogate(d.social, d.num_items(), c, 9);
  p.target_offset = 1.0;
  p.target_scale = 2.0;
  const std::vector<TrainingExample> ex{{SeedSet({{0, 1}, {3, 2}}), 2.0},
                                        {SeedSet({{4, 0}}), -3.0},
                                        {SeedSet({{1, 2}, {2, 0}, {0, 1}}), 9.0}};
  const auto grad = surrogate_gradient(p, ex);
  auto g = grad;
  const auto analytic = g.trainable();
  auto blocks = p.trainable();
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (Eigen::Index i = 0; i < blocks[b].size(); ++i) {
      const double saved = blocks[b](i);
      blocks[b](i) = saved + h;
      const double up = surrogate_loss(p, ex);
      blocks[b](i) = saved - h;
      const double down = surrogate_loss(p, ex);
      blocks[b](i) = saved;
      const double numeric = (up - down) / (2 * h);
      const double err = std::abs(numeric - analytic[b](i)) /
                         std::max({std::abs(numeric), std::abs(analytic[b](i)), 1e-6});
      worst = std::max(worst, err);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("training lowers the loss and is reproducible") {
  const auto d = small_data();
  auto p = init_surrogate(d.social, d.num_items(), small_config(), 10);
  std::vector<TrainingExample> ex;
  for (UserId u = 0; u < 10; ++u) {
    ex.push_back({SeedSet({{u, static_cast<ItemId>(u % 5)}}), static_cast<double>(u)});
  }
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 4;
  tc.learning_rate = 1e-2;
  auto q = p;
  const auto report = train(p, ex, tc);
  CHECK(report.epoch_losses.size() == 200);
  CHECK(report.steps == 200 * 3);
  CHECK(report.final_loss < 0.5 * report.epoch_losses.front());
  const auto again = train(q, ex, tc);
  CHECK(again.final_loss == report.final_loss);
  CHECK(q.mlp[0].weight == p.mlp[0].weight);
  CHECK(p.target_offset == doctest::Approx(4.5));
}

TEST_CASE("training rejects bad input") {
  const auto d = small_data();
  auto p = init_surrogate(d.social, d.num_items(), small_config(), 10);
  TrainConfig tc;
  CHECK_THROWS_AS(train(p, {}, tc), ValidationError);
  std::vector<TrainingExample> ex{{SeedSet({{0, 0}}), std::nan("")}};
  CHECK_THROWS_AS(train(p, ex, tc), ValidationError);
  std::vector<TrainingExample> out_of_range{{SeedSet({{0, 9}}), 1.0}};
  CHECK_THROWS_AS(train(p, out_of_range, tc), ValidationError);
}

TEST_CASE("checkpoint round trip is exact") {
  const auto d = small_data();
  auto p = init_surrogate(d.social, d.num_items(), small_config(), 12);
  p.target_offset = 3.25;
  p.target_scale = 0.1;
  std::stringstream buffer;
  write_checkpoint(buffer, p);
  const auto back = read_checkpoint(buffer);
  CHECK(back.prf == p.prf);
  CHECK(back.node_features == p.node_features);
  CHECK(back.mlp[2].bias == p.mlp[2].bias);
  CHECK(back.target_scale == 0.1);
  CHECK(back.config.mlp_hidden == p.config.mlp_hidden);
  CHECK(forward(SeedSet({{4, 4}}), back).value == forward(SeedSet({{4, 4}}), p).value);
  std::stringstream truncated(buffer.str().substr(0, buffer.str().size() / 2));
  CHECK_THROWS(read_checkpoint(truncated));
}
