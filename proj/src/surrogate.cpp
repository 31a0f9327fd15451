#include "gbim/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gbim/error.hpp"
#include "gbim/rng.hpp"

namespace gbim {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd out(rows, cols);
  // Column-major fill order is part of the checkpoint-free reproducibility
  // contract: same seed, same parameters.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = scale * normal(rng);
  return out;
}

MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  MatrixXd out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = bound * (2.0 * uniform01(rng) - 1.0);
  return out;
}

double projection_scale(std::size_t d) { return std::pow(static_cast<double>(d), -0.25); }

// log phi(x) without the constant -log(t)/2, which cancels in attention ratios.
MatrixXd prf_logits(const MatrixXd& x, const MatrixXd& prf_rows) {
  MatrixXd logits = x * prf_rows.transpose();
  logits.colwise() -= 0.5 * x.rowwise().squaredNorm();
  return logits;
}

// Each query row scaled by its own positive constant.
MatrixXd stable_query_features(const MatrixXd& q, const MatrixXd& prf_rows) {
  MatrixXd logits = prf_logits(q, prf_rows);
  logits.colwise() -= logits.rowwise().maxCoeff();
  return logits.array().exp().matrix();
}

// All key rows scaled by one positive constant.
MatrixXd stable_key_features(const MatrixXd& k, const MatrixXd& prf_rows) {
  MatrixXd logits = prf_logits(k, prf_rows);
  if (logits.size() > 0) logits.array() -= logits.maxCoeff();
  return logits.array().exp().matrix();
}

// d(out)/dx for phi rows, given d(out)/dphi: sum_r g_r phi_r (w_r - x).
MatrixXd prf_backward(const MatrixXd& grad_phi, const MatrixXd& phi, const MatrixXd& x,
                      const MatrixXd& prf_rows) {
  const MatrixXd weighted = grad_phi.cwiseProduct(phi);
  MatrixXd gx = weighted * prf_rows;
  gx -= (weighted.rowwise().sum()).asDiagonal() * x;
  return gx;
}

struct MlpTrace {
  std::vector<MatrixXd> activations;  // activations[0] is the input
  Eigen::RowVectorXd output;
};

MlpTrace mlp_forward(const std::vector<DenseLayer>& mlp, MatrixXd input) {
  MlpTrace trace;
  trace.activations.reserve(mlp.size());
  trace.activations.push_back(std::move(input));
  for (std::size_t l = 0; l + 1 < mlp.size(); ++l) {
    MatrixXd z = mlp[l].weight * trace.activations.back();
    z.colwise() += mlp[l].bias;
    trace.activations.push_back(z.cwiseMax(0.0));
  }
  const auto& last = mlp.back();
  MatrixXd out = last.weight * trace.activations.back();
  out.colwise() += last.bias;
  trace.output = out.row(0);
  return trace;
}

MatrixXd pooled_batch(std::span<const TrainingExample> examples, const SurrogateParams& params,
                      const AttentionContext& ctx) {
  MatrixXd pooled(params.config.hidden_dim, static_cast<Eigen::Index>(examples.size()));
  for (std::size_t b = 0; b < examples.size(); ++b) {
    pooled.col(static_cast<Eigen::Index>(b)) = pooled_status(examples[b].seeds, params, ctx);
  }
  return pooled;
}

void check_seed_bounds(const SeedSet& seeds, const SurrogateParams& params) {
  seeds.check_bounds(params.num_users(), params.num_items());
}

}  // namespace

void SurrogateConfig::validate() const {
  if (hidden_dim == 0 || random_features == 0) {
    throw ValidationError("surrogate dimensions must be positive");
  }
  if (mlp_hidden.empty()) throw ValidationError("the MLP needs at least one hidden layer");
  for (auto w : mlp_hidden) {
    if (w == 0) throw ValidationError("MLP layer widths must be positive");
  }
  if (!(node_feature_scale >= 0.0)) throw ValidationError("node feature scale must be >= 0");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  if (!(adam_epsilon > 0.0)) throw ValidationError("adam epsilon must be positive");
}

std::size_t SurrogateParams::basis_dim() const {
  return mlp.size() >= 2 ? static_cast<std::size_t>(mlp.back().weight.cols()) : 0;
}

std::vector<Eigen::Map<VectorXd>> SurrogateParams::trainable() {
  std::vector<Eigen::Map<VectorXd>> blocks;
  auto add = [&](auto& array) { blocks.emplace_back(array.data(), array.size()); };
  add(item_encoder);
  add(node_features);
  add(w_query);
  add(w_key);
  add(w_value);
  for (auto& layer : mlp) {
    add(layer.weight);
    add(layer.bias);
  }
  return blocks;
}

std::size_t SurrogateParams::num_trainable() const {
  std::size_t count = static_cast<std::size_t>(item_encoder.size() + node_features.size() +
                                               w_query.size() + w_key.size() + w_value.size());
  for (const auto& layer : mlp) {
    count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return count;
}

SurrogateParams SurrogateParams::zeros_like() const {
  SurrogateParams z = *this;
  for (auto block : z.trainable()) block.setZero();
  return z;
}

Eigen::MatrixXd sample_prf(std::size_t t, std::size_t d, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x9f1));
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd rows(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index j = 0; j < rows.cols(); ++j) rows(i, j) = normal(rng);
  return rows;
}

SurrogateParams init_surrogate(const SocialGraph& social, std::size_t num_items,
                               const SurrogateConfig& config, std::uint64_t seed) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(social.num_users());
  const auto m = static_cast<Eigen::Index>(num_items);
  const auto d = static_cast<Eigen::Index>(config.hidden_dim);

  SurrogateParams p;
  p.config = config;
  p.prf_seed = derive_seed(seed, 7);

  Rng rng(derive_seed(seed, 1));
  p.item_encoder = gaussian(m, d, rng);

  MatrixXd structure = MatrixXd::Zero(n, 2);
  std::size_t max_in = 0;
  std::size_t max_out = 0;
  for (Eigen::Index u = 0; u < n; ++u) {
    max_in = std::max(max_in, social.in_degree(static_cast<UserId>(u)));
    max_out = std::max(max_out, social.out_degree(static_cast<UserId>(u)));
  }
  for (Eigen::Index u = 0; u < n; ++u) {
    if (max_in > 0) structure(u, 0) = double(social.in_degree(static_cast<UserId>(u))) / double(max_in);
    if (max_out > 0) structure(u, 1) = double(social.out_degree(static_cast<UserId>(u))) / double(max_out);
  }
  Rng h_rng(derive_seed(seed, 2));
  const MatrixXd structure_proj = gaussian(2, d, h_rng);
  p.node_features = gaussian(n, d, h_rng, config.node_feature_scale) + structure * structure_proj;

  Rng w_rng(derive_seed(seed, 3));
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  p.w_query = uniform(d, d, bound, w_rng);
  p.w_key = uniform(d, d, bound, w_rng);
  p.w_value = uniform(d, d, bound, w_rng);

  p.prf = sample_prf(config.random_features, config.hidden_dim, p.prf_seed);

  Rng mlp_rng(derive_seed(seed, 4));
  std::size_t in = config.hidden_dim;
  auto widths = config.mlp_hidden;
  widths.push_back(1);
  for (auto out : widths) {
    const double b = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer;
    layer.weight = uniform(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in), b, mlp_rng);
    layer.bias = uniform(static_cast<Eigen::Index>(out), 1, b, mlp_rng);
    p.mlp.push_back(std::move(layer));
    in = out;
  }
  return p;
}

Eigen::MatrixXd encode_seed(const SeedSet& seeds, const SurrogateParams& params) {
  check_seed_bounds(seeds, params);
  MatrixXd x = MatrixXd::Zero(params.node_features.rows(), params.item_encoder.cols());
  for (const auto& p : seeds.pairs()) x.row(p.user) = params.item_encoder.row(p.item);
  return x;
}

Eigen::VectorXd prf_map(const Eigen::VectorXd& x, const Eigen::MatrixXd& prf_rows) {
  const double t = static_cast<double>(prf_rows.rows());
  VectorXd logits = prf_rows * x;
  logits.array() -= 0.5 * x.squaredNorm() + 0.5 * std::log(t);
  return logits.array().exp().matrix();
}

Eigen::MatrixXd prf_map_rows(const Eigen::MatrixXd& x, const Eigen::MatrixXd& prf_rows) {
  const double t = static_cast<double>(prf_rows.rows());
  MatrixXd logits = prf_logits(x, prf_rows);
  logits.array() -= 0.5 * std::log(t);
  return logits.array().exp().matrix();
}

Eigen::MatrixXd attention_queries(const Eigen::MatrixXd& h, const SurrogateParams& params) {
  return projection_scale(params.config.hidden_dim) * (h * params.w_query);
}

Eigen::MatrixXd attention_keys(const Eigen::MatrixXd& h, const SurrogateParams& params) {
  return projection_scale(params.config.hidden_dim) * (h * params.w_key);
}

Eigen::MatrixXd gkamp_exact(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h,
                            const SurrogateParams& params) {
  const MatrixXd q = attention_queries(h, params);
  const MatrixXd k = attention_keys(h, params);
  MatrixXd scores = q * k.transpose();
  scores.colwise() -= scores.rowwise().maxCoeff();
  MatrixXd weights = scores.array().exp().matrix();
  const VectorXd row_sums = weights.rowwise().sum();
  weights = row_sums.cwiseInverse().asDiagonal() * weights;
  return weights * (x * params.w_value);
}

Eigen::MatrixXd gkamp_linear(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h,
                             const SurrogateParams& params) {
  const MatrixXd phi_q = stable_query_features(attention_queries(h, params), params.prf);
  const MatrixXd phi_k = stable_key_features(attention_keys(h, params), params.prf);
  const MatrixXd kv = phi_k.transpose() * (x * params.w_value);  // t x d
  const VectorXd key_sum = phi_k.colwise().sum().transpose();     // t
  const VectorXd denom = phi_q * key_sum;
  if (denom.size() > 0 && !(denom.minCoeff() > 0.0)) {
    throw NumericalError("kernelized attention normalizer underflowed to zero");
  }
  return denom.cwiseInverse().asDiagonal() * (phi_q * kv);
}

AttentionContext build_attention_context(const SurrogateParams& params) {
  AttentionContext ctx;
  ctx.queries = attention_queries(params.node_features, params);
  ctx.keys = attention_keys(params.node_features, params);
  ctx.phi_q = stable_query_features(ctx.queries, params.prf);
  ctx.phi_k = stable_key_features(ctx.keys, params.prf);
  ctx.key_sum = ctx.phi_k.colwise().sum().transpose();
  ctx.denom = ctx.phi_q * ctx.key_sum;
  if (ctx.denom.size() > 0 && !(ctx.denom.minCoeff() > 0.0)) {
    throw NumericalError("kernelized attention normalizer underflowed to zero");
  }
  ctx.query_mass = ctx.phi_q.transpose() * ctx.denom.cwiseInverse();
  ctx.column_mass = ctx.phi_k * ctx.query_mass;
  ctx.item_values = params.item_encoder * params.w_value;
  return ctx;
}

Eigen::VectorXd pooled_status(const SeedSet& seeds, const SurrogateParams& params,
                              const AttentionContext& ctx) {
  check_seed_bounds(seeds, params);
  VectorXd pooled = VectorXd::Zero(static_cast<Eigen::Index>(params.config.hidden_dim));
  for (const auto& p : seeds.pairs()) {
    pooled += params.item_encoder.row(p.item).transpose();
    pooled += ctx.column_mass(p.user) * ctx.item_values.row(p.item).transpose();
  }
  return pooled;
}

BatchPrediction predict_batch(std::span<const SeedSet> seeds, const SurrogateParams& params,
                              const AttentionContext& ctx) {
  MatrixXd pooled(params.config.hidden_dim, static_cast<Eigen::Index>(seeds.size()));
  for (std::size_t b = 0; b < seeds.size(); ++b) {
    pooled.col(static_cast<Eigen::Index>(b)) = pooled_status(seeds[b], params, ctx);
  }
  auto trace = mlp_forward(params.mlp, std::move(pooled));
  BatchPrediction out;
  out.values.resize(seeds.size());
  for (std::size_t b = 0; b < seeds.size(); ++b) {
    out.values[b] = params.target_offset + params.target_scale * trace.output(static_cast<Eigen::Index>(b));
  }
  out.bases = std::move(trace.activations.back());
  return out;
}

SurrogatePrediction forward(const SeedSet& seeds, const SurrogateParams& params) {
  const auto ctx = build_attention_context(params);
  auto batch = predict_batch(std::span<const SeedSet>(&seeds, 1), params, ctx);
  return {batch.values[0], batch.bases.col(0)};
}

double surrogate_loss(const SurrogateParams& params, std::span<const TrainingExample> examples) {
  const auto ctx = build_attention_context(params);
  const auto trace = mlp_forward(params.mlp, pooled_batch(examples, params, ctx));
  double loss = 0.0;
  for (std::size_t b = 0; b < examples.size(); ++b) {
    const double target = (examples[b].target - params.target_offset) / params.target_scale;
    loss += std::abs(target - trace.output(static_cast<Eigen::Index>(b)));
  }
  return loss;
}

namespace {

// Writes the gradient into `grad`, which must already have the shapes of params.
void gradient_into(const SurrogateParams& params, std::span<const TrainingExample> examples,
                   SurrogateParams& grad, double* loss) {
  const auto ctx = build_attention_context(params);
  const auto trace = mlp_forward(params.mlp, pooled_batch(examples, params, ctx));
  const auto batch = static_cast<Eigen::Index>(examples.size());
  grad.item_encoder.setZero();
  grad.w_value.setZero();

  Eigen::RowVectorXd upstream(batch);
  double total = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double target =
        (examples[static_cast<std::size_t>(b)].target - params.target_offset) / params.target_scale;
    const double residual = trace.output(b) - target;
    total += std::abs(residual);
    upstream(b) = residual > 0.0 ? 1.0 : (residual < 0.0 ? -1.0 : 0.0);
  }
  if (loss) *loss = total;

  // MLP backward.
  MatrixXd delta = upstream;
  for (std::size_t l = params.mlp.size(); l-- > 0;) {
    const MatrixXd& input = trace.activations[l];
    grad.mlp[l].weight.noalias() = delta * input.transpose();
    grad.mlp[l].bias = delta.rowwise().sum();
    MatrixXd back = params.mlp[l].weight.transpose() * delta;
    if (l > 0) back = back.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
    delta = std::move(back);
  }
  const MatrixXd& grad_pooled = delta;  // d x batch

  // Pooling: pooled = sum E_v + a_u (E_v W_V).
  VectorXd grad_mass = VectorXd::Zero(params.node_features.rows());
  for (Eigen::Index b = 0; b < batch; ++b) {
    const VectorXd g = grad_pooled.col(b);
    const VectorXd wg = params.w_value * g;
    for (const auto& p : examples[static_cast<std::size_t>(b)].seeds.pairs()) {
      const double a = ctx.column_mass(p.user);
      grad.item_encoder.row(p.item) += g.transpose() + a * wg.transpose();
      grad.w_value.noalias() += a * params.item_encoder.row(p.item).transpose() * g.transpose();
      grad_mass(p.user) += ctx.item_values.row(p.item).dot(g);
    }
  }

  // column_mass = phi_k * query_mass, query_mass = phi_q^T (1 / denom),
  // denom = phi_q * key_sum, key_sum = phi_k^T 1.
  const VectorXd inv_denom = ctx.denom.cwiseInverse();
  MatrixXd grad_phi_k = grad_mass * ctx.query_mass.transpose();
  const VectorXd grad_query_mass = ctx.phi_k.transpose() * grad_mass;
  MatrixXd grad_phi_q = inv_denom * grad_query_mass.transpose();
  const VectorXd grad_inv_denom = ctx.phi_q * grad_query_mass;
  const VectorXd grad_denom = -grad_inv_denom.cwiseProduct(inv_denom).cwiseProduct(inv_denom);
  grad_phi_q += grad_denom * ctx.key_sum.transpose();
  const VectorXd grad_key_sum = ctx.phi_q.transpose() * grad_denom;
  grad_phi_k.rowwise() += grad_key_sum.transpose();

  const MatrixXd grad_q = prf_backward(grad_phi_q, ctx.phi_q, ctx.queries, params.prf);
  const MatrixXd grad_k = prf_backward(grad_phi_k, ctx.phi_k, ctx.keys, params.prf);

  const double s = projection_scale(params.config.hidden_dim);
  grad.w_query = s * params.node_features.transpose() * grad_q;
  grad.w_key = s * params.node_features.transpose() * grad_k;
  grad.node_features.noalias() = s * (grad_q * params.w_query.transpose());
  grad.node_features.noalias() += s * (grad_k * params.w_key.transpose());
}

}  // namespace

SurrogateParams surrogate_gradient(const SurrogateParams& params,
                                   std::span<const TrainingExample> examples, double* loss) {
  SurrogateParams grad = params.zeros_like();
  gradient_into(params, examples, grad, loss);
  return grad;
}

TrainReport train(SurrogateParams& params, std::span<const TrainingExample> examples,
                  const TrainConfig& config) {
  config.validate();
  if (examples.empty()) throw ValidationError("training needs at least one example");
  for (const auto& ex : examples) {
    check_seed_bounds(ex.seeds, params);
    if (!std::isfinite(ex.target)) throw ValidationError("training target is not finite");
  }

  const double n_ex = static_cast<double>(examples.size());
  double mean = 0.0;
  for (const auto& ex : examples) mean += ex.target;
  mean /= n_ex;
  double var = 0.0;
  for (const auto& ex : examples) var += (ex.target - mean) * (ex.target - mean);
  var /= n_ex;
  params.target_offset = mean;
  params.target_scale = var > 1e-24 ? std::sqrt(var) : 1.0;

  auto blocks = params.trainable();
  std::vector<VectorXd> m1;
  std::vector<VectorXd> m2;
  for (const auto& b : blocks) {
    m1.push_back(VectorXd::Zero(b.size()));
    m2.push_back(VectorXd::Zero(b.size()));
  }

  Rng rng(derive_seed(config.seed, 0x7a11));
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<TrainingExample> batch;
  batch.reserve(config.batch_size);

  SurrogateParams grad = params.zeros_like();
  auto grads = grad.trainable();

  TrainReport report;
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(examples[order[i]]);

      double batch_loss = 0.0;
      gradient_into(params, batch, grad, &batch_loss);
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) +
                             ", batch starting at " + std::to_string(start) +
                             " (learning rate " + std::to_string(config.learning_rate) + ")");
      }
      epoch_loss += batch_loss;

      ++report.steps;
      beta1_pow *= config.adam_beta1;
      beta2_pow *= config.adam_beta2;
      const double inv_batch = 1.0 / static_cast<double>(batch.size());
      const double step = config.learning_rate * std::sqrt(1.0 - beta2_pow) / (1.0 - beta1_pow);
      for (std::size_t k = 0; k < blocks.size(); ++k) {
        grads[k] *= inv_batch;
        m1[k] = config.adam_beta1 * m1[k] + (1.0 - config.adam_beta1) * grads[k];
        m2[k] = config.adam_beta2 * m2[k] + (1.0 - config.adam_beta2) * grads[k].cwiseAbs2();
        // Epsilon scaled by the bias correction matches the textbook update.
        blocks[k].array() -= step * m1[k].array() /
                             (m2[k].array().sqrt() + config.adam_epsilon * std::sqrt(1.0 - beta2_pow));
      }
    }
    report.epoch_losses.push_back(epoch_loss * params.target_scale / n_ex);
  }
  report.final_loss = report.epoch_losses.empty() ? 0.0 : report.epoch_losses.back();
  return report;
}

}  // namespace gbim
