#pragma once

#include <Eigen/Core>

#include "pathlet/dictlearn.hpp"
#include "pathlet/generator.hpp"
#include "pathlet/rng.hpp"
#include "pathlet/spatial.hpp"
#include "pathlet/trainer.hpp"

namespace pathlet {

struct SparseCode {
  Eigen::VectorXd r;           // binary
  Eigen::VectorXd fractional;  // relaxed minimizer before rounding
  double objective = 0.0;      // of r
  int iterations = 0;
  bool converged = false;
};

/// ||x - D r||^2 + lambda * ||r||_1
double sparse_objective(const Eigen::VectorXd& x, const Eigen::MatrixXd& D, const Eigen::VectorXd& r, double lambda);

/// Projected gradient descent on the objective over r in [0,1]^n from r = 0,
/// step 1 / (2 ||D||_2^2), stopping once no coordinate moves more than `tol`.
/// The result is rounded with theta = 1. On hitting max_iters the last
/// iterate is rounded and `converged` is false.
SparseCode sparse_code(const Eigen::VectorXd& x, const PathletDictionary& D, double lambda, int max_iters,
                       double tol, Rng& rng);

struct SparseCodeBatch {
  Eigen::MatrixXd R;           // binary, n x N
  Eigen::MatrixXd fractional;  // n x N
  int iterations = 0;
  bool converged = false;
};

/// sparse_code applied to every column of X at once.
SparseCodeBatch sparse_code_batch(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D, double lambda, int max_iters,
                                  double tol, Rng& rng);

struct DenoiseOptions {
  double lambda = 0.1;
  int max_iters = 1000;
  double tol = 1e-7;
  RepairOptions repair;
};

struct DenoiseResult {
  Trajectory trajectory;
  BinaryPathVector reconstruction;  // union of the selected atoms
  Eigen::VectorXd code;
  bool converged = false;
};

/// Sparse-codes the observation against the model's dictionary, takes the
/// union of the selected atoms and repairs it into a connected trajectory.
/// Throws DenoiseError when no atom is selected.
DenoiseResult denoise(const BinaryPathVector& x_noisy, const TrainedModel& model, const DenoiseOptions& options,
                      Rng& rng);

}  // namespace pathlet
