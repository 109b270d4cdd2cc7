#include "pathlet/denoise.hpp"

#include <Eigen/Eigenvalues>

#include "pathlet/errors.hpp"

namespace pathlet {
namespace {

// Largest eigenvalue of D^T D, computed on the smaller Gram matrix.
double spectral_norm_sq(const Eigen::MatrixXd& D) {
  if (D.size() == 0) return 0.0;
  const Eigen::MatrixXd gram = D.rows() < D.cols() ? Eigen::MatrixXd(D * D.transpose())
                                                   : Eigen::MatrixXd(D.transpose() * D);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  return std::max(0.0, solver.eigenvalues().maxCoeff());
}

}  // namespace

double sparse_objective(const Eigen::VectorXd& x, const Eigen::MatrixXd& D, const Eigen::VectorXd& r, double lambda) {
  if (D.rows() != x.size() || D.cols() != r.size()) throw ShapeError("sparse_objective: shapes disagree");
  return (x - D * r).squaredNorm() + lambda * r.cwiseAbs().sum();
}

SparseCodeBatch sparse_code_batch(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D, double lambda, int max_iters,
                                  double tol, Rng& rng) {
  if (D.rows() != X.rows()) throw ShapeError("sparse_code: dictionary and observation lengths differ");
  if (!(lambda >= 0.0)) throw ConfigError("sparse_code: lambda must be >= 0");
  if (max_iters < 1) throw ConfigError("sparse_code: max_iters must be >= 1");

  const Eigen::MatrixXd gram = D.transpose() * D;
  const Eigen::MatrixXd corr = D.transpose() * X;
  const double lipschitz = 2.0 * spectral_norm_sq(D);
  const double step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;

  SparseCodeBatch out;
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(D.cols(), X.cols());
  for (int it = 1; it <= max_iters; ++it) {
    // On the box, ||r||_1 = sum(r), so its gradient is lambda everywhere.
    const Eigen::MatrixXd grad = (2.0 * (gram * R - corr)).array() + lambda;
    Eigen::MatrixXd next = clip_unit_interval(R - step * grad);
    const double moved = (next - R).cwiseAbs().maxCoeff();
    R = std::move(next);
    out.iterations = it;
    if (moved <= tol) {
      out.converged = true;
      break;
    }
  }
  out.fractional = R;
  out.R = round_binary(R, 1.0, rng);
  return out;
}

SparseCode sparse_code(const Eigen::VectorXd& x, const PathletDictionary& D, double lambda, int max_iters, double tol,
                       Rng& rng) {
  const SparseCodeBatch batch = sparse_code_batch(x, D.atoms, lambda, max_iters, tol, rng);
  SparseCode out;
  out.r = batch.R.col(0);
  out.fractional = batch.fractional.col(0);
  out.iterations = batch.iterations;
  out.converged = batch.converged;
  out.objective = sparse_objective(x, D.atoms, out.r, lambda);
  return out;
}

DenoiseResult denoise(const BinaryPathVector& x_noisy, const TrainedModel& model, const DenoiseOptions& options,
                      Rng& rng) {
  if (!model.domain) throw ConfigError("denoise: model has no domain");
  if (x_noisy.size() != model.domain->size() || model.dictionary.num_units() != x_noisy.size()) {
    throw ShapeError("denoise: observation length does not match the model domain");
  }
  const SparseCode code =
      sparse_code(x_noisy.to_eigen(), model.dictionary, options.lambda, options.max_iters, options.tol, rng);
  DenoiseResult out;
  out.code = code.r;
  out.converged = code.converged;
  out.reconstruction = reconstruct(code.r, model.dictionary, 0.5);
  if (out.reconstruction.empty_set()) throw DenoiseError("observation is not explained by any dictionary atom");
  out.trajectory = repair_connectivity(out.reconstruction, *model.domain, options.repair);
  return out;
}

}  // namespace pathlet
