#pragma once

// Learned influence estimator.
//
// A seed set is one-hot encoded as S (n x m) and embedded as X = S * E. Global
// kernelized attention mixes seed status across all users using queries and
// keys built from the node feature table H:
//
//   Z = phi(Q) (phi(K)^T (X W_V)) / diag(phi(Q) (phi(K)^T 1)),
//   Q = H W_Q / d^(1/4),  K = H W_K / d^(1/4),
//
// where phi is the positive random feature map, so the cost is linear in n.
// The status matrix X + Z is summed over users and regressed by an MLP. The
// last hidden activation of the MLP is the basis vector used by the Bayesian
// linear regression head.
//
// Because X has at most k non-zero rows and the attention terms that do not
// depend on the seed set can be computed once, the pooled vector reduces to
//
//   pooled = sum_{(u,v) in x} E_v + a_u (E_v W_V),   a_u = sum_i attn(i, u),
//
// which is what the batched paths evaluate. gkamp_linear / gkamp_exact keep the
// full matrix form for testing and reference.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gbim/diffusion.hpp"
#include "gbim/netdata.hpp"

namespace gbim {

struct SurrogateConfig {
  std::size_t hidden_dim = 64;        // d
  std::size_t random_features = 256;  // t
  std::vector<std::size_t> mlp_hidden{512, 1024, 1024, 1024};
  double node_feature_scale = 0.1;

  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

struct SurrogateParams {
  SurrogateConfig config;
  std::uint64_t prf_seed = 0;

  Eigen::MatrixXd item_encoder;   // E, m x d
  Eigen::MatrixXd node_features;  // H, n x d
  Eigen::MatrixXd w_query;        // d x d
  Eigen::MatrixXd w_key;          // d x d
  Eigen::MatrixXd w_value;        // d x d
  Eigen::MatrixXd prf;            // t x d, rows ~ N(0, I_d); never trained
  std::vector<DenseLayer> mlp;    // hidden layers then a 1-unit output layer

  // Targets are standardized for training; predictions are mapped back.
  double target_offset = 0.0;
  double target_scale = 1.0;

  std::size_t num_users() const { return static_cast<std::size_t>(node_features.rows()); }
  std::size_t num_items() const { return static_cast<std::size_t>(item_encoder.rows()); }
  std::size_t basis_dim() const;

  // Flat views of every trainable array, in a fixed order.
  std::vector<Eigen::Map<Eigen::VectorXd>> trainable();
  std::size_t num_trainable() const;

  // Same shapes, all trainable entries zero.
  SurrogateParams zeros_like() const;
};

// H is small Gaussian noise plus a random projection of each node's
// normalized (in-degree, out-degree), so structure shapes attention from the
// first step.
SurrogateParams init_surrogate(const SocialGraph& social, std::size_t num_items,
                               const SurrogateConfig& config, std::uint64_t seed);

Eigen::MatrixXd sample_prf(std::size_t t, std::size_t d, std::uint64_t seed);

// X = S * E; rows of users outside the seed set are zero.
Eigen::MatrixXd encode_seed(const SeedSet& seeds, const SurrogateParams& params);

// phi(x) = exp(-|x|^2 / 2) / sqrt(t) * [exp(w_1 . x), ..., exp(w_t . x)],
// evaluated in log space.
Eigen::VectorXd prf_map(const Eigen::VectorXd& x, const Eigen::MatrixXd& prf_rows);

// Row-wise prf_map of an (rows x d) matrix.
Eigen::MatrixXd prf_map_rows(const Eigen::MatrixXd& x, const Eigen::MatrixXd& prf_rows);

// Scaled projections Q = H W_Q / d^(1/4) and K = H W_K / d^(1/4).
Eigen::MatrixXd attention_queries(const Eigen::MatrixXd& h, const SurrogateParams& params);
Eigen::MatrixXd attention_keys(const Eigen::MatrixXd& h, const SurrogateParams& params);

// Reference softmax attention, O(n^2).
Eigen::MatrixXd gkamp_exact(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h,
                            const SurrogateParams& params);

// Kernelized attention with random features, O(n t d).
Eigen::MatrixXd gkamp_linear(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h,
                             const SurrogateParams& params);

struct SurrogatePrediction {
  double value = 0.0;
  Eigen::VectorXd basis;
};

// Seed-independent part of the attention, shared by every seed set.
struct AttentionContext {
  Eigen::MatrixXd queries;      // n x d
  Eigen::MatrixXd keys;         // n x d
  Eigen::MatrixXd phi_q;        // n x t, each row rescaled by a positive constant
  Eigen::MatrixXd phi_k;        // n x t, rescaled by one global positive constant
  Eigen::VectorXd key_sum;      // t
  Eigen::VectorXd denom;        // n
  Eigen::VectorXd query_mass;   // t, sum_i phi_q_i / denom_i
  Eigen::VectorXd column_mass;  // n, total attention each user receives
  Eigen::MatrixXd item_values;  // m x d, E W_V
};

AttentionContext build_attention_context(const SurrogateParams& params);

// Pooled status vector (d) of a seed set.
Eigen::VectorXd pooled_status(const SeedSet& seeds, const SurrogateParams& params,
                              const AttentionContext& ctx);

// Full forward pass for one seed set, including the O(n) attention context.
SurrogatePrediction forward(const SeedSet& seeds, const SurrogateParams& params);

struct BatchPrediction {
  std::vector<double> values;
  Eigen::MatrixXd bases;  // basis_dim x batch
};

BatchPrediction predict_batch(std::span<const SeedSet> seeds, const SurrogateParams& params,
                              const AttentionContext& ctx);

struct TrainingExample {
  SeedSet seeds;
  double target;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_losses;  // mean |y - y_hat| in target units
  double final_loss = 0.0;
  std::size_t steps = 0;
};

// Sum over the examples of |standardized target - network output|, using the
// target normalization currently stored in params.
double surrogate_loss(const SurrogateParams& params, std::span<const TrainingExample> examples);

// Analytic gradient of surrogate_loss with respect to every trainable array.
SurrogateParams surrogate_gradient(const SurrogateParams& params,
                                   std::span<const TrainingExample> examples,
                                   double* loss = nullptr);

// Adam on the MAE loss. Target normalization is refit to the examples first.
TrainReport train(SurrogateParams& params, std::span<const TrainingExample> examples,
                  const TrainConfig& config);

}  // namespace gbim
