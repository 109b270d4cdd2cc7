#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pathlet/bvae.hpp"
#include "pathlet/dictlearn.hpp"
#include "pathlet/errors.hpp"
#include "pathlet/spatial.hpp"

namespace pathlet {

struct TrainingConfig {
  double learning_rate = 1e-3;     // delta
  double convergence_tol = 1e-3;   // epsilon
  double rounding_scale = 1.5;     // theta
  double lambda1 = 3.5;
  double lambda2 = 0.1;
  int latent_dim = 8;
  int max_iters = 400;
  int batch_size = 32;
  std::uint64_t seed = 0;
  std::optional<int> dict_size_cap;  // unset: min(N, 4|E|)
  int vae_warmup_iters = 50;

  bool conditional = false;
  int time_buckets = 24;
  Activation activation = Activation::tanh;
  std::vector<int> hidden;  // empty: VaeModel::default_hidden

  // Fit of the VAE to the final binary representation.
  int vae_iters = 3000;
  double vae_learning_rate = 0.05;
  int vae_batch_size = 64;

  // Sparse-coding refit of the final representation.
  int refit_iters = 1000;
  double refit_tol = 1e-7;

  // Greedy removal of rounded atoms while the binary MDL loss decreases.
  bool mdl_prune = true;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

/// Flat `key=value` text; `#` starts a comment. Unknown keys throw ConfigError.
TrainingConfig parse_training_config(std::istream& in, TrainingConfig base = {});
/// Applies one `key=value` assignment.
void set_config_value(TrainingConfig& config, const std::string& key, const std::string& value);
void write_training_config(std::ostream& out, const TrainingConfig& config);

struct TrainingLogEntry {
  int iteration = 0;
  double recon = 0.0;
  double dict_term = 0.0;
  double sparsity_term = 0.0;
  double elbo = 0.0;
  double total = 0.0;

  friend bool operator==(const TrainingLogEntry&, const TrainingLogEntry&) = default;
};

/// Non-finite loss during training; `log` ends with the last finite entry.
class TrainingDivergence : public TrainingError {
 public:
  TrainingDivergence(const std::string& what, std::vector<TrainingLogEntry> log)
      : TrainingError(what), log(std::move(log)) {}
  std::vector<TrainingLogEntry> log;
};

/// Relaxed variables of the joint problem.
struct TrainingState {
  Eigen::MatrixXd D;  // |E| x n
  Eigen::MatrixXd R;  // n x N
  VaeModel vae;
  int iteration = 0;
  Phase phase = Phase::fractional;
};

/// Trajectories drawn for one VAE step and the latent noise used for them.
struct StepBatch {
  std::vector<Eigen::Index> items;
  Eigen::MatrixXd eps;  // K x items.size()
};

struct StepLoss {
  MdlLossBreakdown dict;
  double elbo = 0.0;
  double total = 0.0;
};

/// Evaluates L_dict (full batch) + L_VAE (on `batch`) at the current state,
/// then takes one projected gradient step of size config.learning_rate on D,
/// R and the VAE parameters. VAE gradients on R are withheld while
/// state.iteration < config.vae_warmup_iters.
StepLoss loss_step(TrainingState& state, const Eigen::MatrixXd& X, const Eigen::MatrixXd& cond,
                   const StepBatch& batch, const TrainingConfig& config);

/// Initial (D, R): distinct columns of X, at most `cap` of them sampled
/// uniformly, and each trajectory assigned to its own column or else to the
/// nearest sampled column in Hamming distance.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> initial_factors(const Eigen::MatrixXd& X, int cap, Rng& rng);

/// Dictionary sizes along the pipeline.
struct TrainingSummary {
  int iterations = 0;
  std::size_t initial_atoms = 0;
  std::size_t rounded_atoms = 0;  // effective in the rounded R, distinct and nonzero
  std::size_t final_atoms = 0;
  double vae_final_loss = 0.0;
};

struct TrainedModel {
  std::shared_ptr<const SpatialDomain> domain;
  PathletDictionary dictionary;  // binary
  VaeModel vae;
  RepresentationMatrix final_R;  // binary
  std::vector<TrainingLogEntry> training_log;
  TrainingConfig config;
  bool converged = false;
  TrainingSummary summary;
};

/// Relax, clip and round training on a |E| x N binary matrix. `cond` holds one condition column
/// per trajectory for conditional training and is empty otherwise.
///
/// After rounding, atoms unused by the rounded R are pruned, final_R is refit
/// by sparse coding against the binary dictionary, atoms the refit does not use
/// are dropped, and the VAE is fit to the binary final_R.
/// Throws InputError for empty or non-binary X and TrainingError on divergence.
TrainedModel train(const Eigen::MatrixXd& X, const Eigen::MatrixXd& cond, const TrainingConfig& config);

/// Vectorizes `corpus` over `dom` (building prefix/time conditions when
/// config.conditional) and trains.
TrainedModel train(std::shared_ptr<const SpatialDomain> dom, std::span<const Trajectory> corpus,
                   const TrainingConfig& config);

/// Greedy atom elimination on binary (D, R). Atoms are visited from least to
/// most used; an atom is removed when re-coding its users over the remaining
/// atoms (by single-atom add/remove moves) lowers mdl_loss. Repeats until a
/// full pass removes nothing. Updates R in place and returns the kept atoms.
std::vector<Eigen::Index> mdl_prune(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D, Eigen::MatrixXd& R,
                                    double lambda1, double lambda2);

/// Hamming distance between each trajectory and the union of its atoms, averaged.
double mean_reconstruction_error(const Eigen::MatrixXd& X, const PathletDictionary& D, const Eigen::MatrixXd& R);

}  // namespace pathlet
