#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pathlet/rng.hpp"

namespace pathlet {

enum class Activation { tanh, relu };

std::string_view to_string(Activation a);
/// Throws ConfigError for unknown names.
Activation parse_activation(std::string_view name);

/// y = W x + b
struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Every trainable tensor of the model, in declaration order: encoder, then
/// the m-decoder, then the p-decoder. Also used to hold gradients.
struct VaeParameters {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder_m;
  std::vector<DenseLayer> decoder_p;

  std::size_t size() const;
  Eigen::VectorXd flatten() const;
  /// Inverse of flatten(); the layer shapes must already be in place.
  void assign(const Eigen::VectorXd& flat);
  /// this += scale * other
  void add_scaled(const VaeParameters& other, double scale);
  /// Zero tensors with the same shapes.
  VaeParameters zeros_like() const;
  bool all_finite() const;
};

/// Bernoulli-output VAE over representation vectors.
///
/// Encoder: [r; c] -> hidden -> (mu, log_var). Decoders: [z; c] -> hidden -> n,
/// with m = exp(f_m) and p = sigmoid(f_p). A bit is 1 with probability 1 - p^m.
class VaeModel {
 public:
  VaeModel() = default;

  /// Glorot-uniform weights, zero biases.
  static VaeModel create(int input_dim, int latent_dim, int cond_dim, std::vector<int> hidden,
                         Activation activation, std::uint64_t seed);

  /// Two hidden layers of width max(64, 2n), capped at 256.
  static std::vector<int> default_hidden(int input_dim);

  int input_dim() const { return input_dim_; }
  int latent_dim() const { return latent_dim_; }
  int cond_dim() const { return cond_dim_; }
  bool conditional() const { return cond_dim_ > 0; }
  const std::vector<int>& hidden() const { return hidden_; }
  Activation activation() const { return activation_; }
  std::uint64_t seed() const { return seed_; }

  /// Number of departure-time buckets folded into the condition vector (0 when unused).
  int time_buckets() const { return time_buckets_; }
  void set_time_buckets(int buckets) { time_buckets_ = buckets; }

  /// Copy restricted to the representation coordinates in `keep` (in that
  /// order): encoder input columns and decoder output rows are sliced.
  VaeModel select_inputs(const std::vector<int>& keep) const;

  VaeParameters& params() { return params_; }
  const VaeParameters& params() const { return params_; }

  friend bool operator==(const VaeModel& a, const VaeModel& b);

 private:
  int input_dim_ = 0;
  int latent_dim_ = 0;
  int cond_dim_ = 0;
  int time_buckets_ = 0;
  std::vector<int> hidden_;
  Activation activation_ = Activation::tanh;
  std::uint64_t seed_ = 0;
  VaeParameters params_;
};

struct EncoderOutput {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_var;
};

struct LatentSample {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_var;
  Eigen::VectorXd z;
  Eigen::VectorXd eps;  // the standard normal draw behind z
};

struct BernoulliParams {
  Eigen::VectorXd m;         // > 0
  Eigen::VectorXd p;         // in (0,1)
  Eigen::VectorXd prob_one;  // 1 - p^m
};

/// Pass an empty `cond` for unconditional models. Throws ShapeError on any
/// dimension mismatch, including a missing condition on a conditional model.
EncoderOutput encode(const Eigen::VectorXd& r, const Eigen::VectorXd& cond, const VaeModel& model);

/// z = mu + exp(log_var / 2) * eps with eps ~ N(0, I).
LatentSample reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var, Rng& rng);

BernoulliParams decode(const Eigen::VectorXd& z, const Eigen::VectorXd& cond, const VaeModel& model);

/// Batched decode: columns of `Z` (K x B) and `cond` (cond_dim x B, or empty).
/// Returns the n x B matrix of prob_one.
Eigen::MatrixXd decode_prob_one(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& cond, const VaeModel& model);

/// Lower clamp on prob_one and on 1 - prob_one before taking logs.
inline constexpr double kProbFloor = 1e-12;

/// sum_j r_j log(q_j) + (1 - r_j) log(1 - q_j), q = clamp(prob_one). Accepts
/// soft targets r in [0,1].
double bernoulli_loglik(const Eigen::VectorXd& r, const BernoulliParams& params);

/// KL(N(mu, diag(exp(log_var))) || N(0, I)).
double kl_gauss(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var);

/// Batch mean of -loglik + KL with one reparameterized z per column.
double elbo_loss(const Eigen::MatrixXd& batch_R, const Eigen::MatrixXd& cond_batch, const VaeModel& model,
                 Rng& rng);

struct ElboEvaluation {
  double loss = 0.0;     // mean over the batch
  double neg_loglik = 0.0;
  double kl = 0.0;
  VaeParameters param_grad;  // d loss / d parameters
  Eigen::MatrixXd input_grad;  // d loss / d batch_R (n x B)
};

/// ELBO loss and its exact gradients for a fixed noise matrix `eps` (K x B).
/// `with_gradients = false` skips the backward pass.
ElboEvaluation elbo_evaluate(const Eigen::MatrixXd& batch_R, const Eigen::MatrixXd& cond_batch,
                             const VaeModel& model, const Eigen::MatrixXd& eps, bool with_gradients = true);

/// Standard normal noise matrix of shape latent_dim x batch.
Eigen::MatrixXd draw_noise(int latent_dim, Eigen::Index batch, Rng& rng);

/// `count` binary samples (n x count): z ~ N(0, I), decode, r_j ~ Bernoulli(prob_one_j).
Eigen::MatrixXd sample_r(const VaeModel& model, const Eigen::VectorXd& cond, int count, Rng& rng);

}  // namespace pathlet
