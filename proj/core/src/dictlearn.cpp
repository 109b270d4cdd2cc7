#include "pathlet/dictlearn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pathlet/errors.hpp"

namespace pathlet {
namespace {

void check_shapes(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D, const Eigen::MatrixXd& R) {
  if (D.rows() != X.rows() || D.cols() != R.rows() || R.cols() != X.cols()) {
    throw ShapeError("dictionary shapes disagree: X " + std::to_string(X.rows()) + "x" +
                     std::to_string(X.cols()) + ", D " + std::to_string(D.rows()) + "x" +
                     std::to_string(D.cols()) + ", R " + std::to_string(R.rows()) + "x" +
                     std::to_string(R.cols()));
  }
}

void check_lambdas(double lambda1, double lambda2) {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("lambda1 and lambda2 must be >= 0");
}

}  // namespace

MdlLossBreakdown mdl_loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D, const Eigen::MatrixXd& R,
                          double lambda1, double lambda2) {
  check_shapes(X, D, R);
  check_lambdas(lambda1, lambda2);
  MdlLossBreakdown out;
  out.lambda1 = lambda1;
  out.lambda2 = lambda2;
  out.recon = (X - D * R).squaredNorm();
  if (R.cols() > 0) out.dict_term = R.rowwise().maxCoeff().sum();
  out.sparsity_term = R.cwiseAbs().sum();
  out.total = out.recon + lambda1 * out.dict_term + lambda2 * out.sparsity_term;
  return out;
}

EffectiveAtoms effective_atoms(const Eigen::MatrixXd& R) {
  EffectiveAtoms out;
  out.mask.assign(static_cast<std::size_t>(R.rows()), false);
  for (Eigen::Index j = 0; j < R.rows(); ++j) {
    if (R.cols() > 0 && R.row(j).maxCoeff() > 0.0) {
      out.mask[static_cast<std::size_t>(j)] = true;
      ++out.count;
    }
  }
  return out;
}

MdlGradients mdl_gradients(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D, const Eigen::MatrixXd& R,
                           double lambda1, double lambda2) {
  check_shapes(X, D, R);
  check_lambdas(lambda1, lambda2);
  const Eigen::MatrixXd residual = X - D * R;
  MdlGradients g;
  g.dict.noalias() = -2.0 * residual * R.transpose();
  g.codes.noalias() = -2.0 * D.transpose() * residual;
  if (R.cols() == 0) return g;
  for (Eigen::Index j = 0; j < R.rows(); ++j) {
    Eigen::Index arg = 0;
    R.row(j).maxCoeff(&arg);  // first maximal index
    g.codes(j, arg) += lambda1;
  }
  if (lambda2 != 0.0) {
    g.codes += (R.array() > 0.0).cast<double>().matrix() * lambda2;
    g.codes -= (R.array() < 0.0).cast<double>().matrix() * lambda2;
  }
  return g;
}

std::size_t mdl_description_length(const Eigen::MatrixXd& R, std::size_t num_units) {
  if (!is_binary(R)) throw InputError("mdl_description_length needs a binary representation");
  const auto ones = static_cast<std::size_t>((R.array() == 1.0).count());
  return num_units * effective_atoms(R).count + ones;
}

Eigen::MatrixXd clip_unit_interval(Eigen::MatrixXd M) {
  M = M.cwiseMax(0.0).cwiseMin(1.0);
  return M;
}

Eigen::MatrixXd round_binary(const Eigen::MatrixXd& M, double theta, Rng& rng) {
  if (!(theta >= 1.0)) throw ConfigError("rounding scale theta must be >= 1");
  Eigen::MatrixXd out(M.rows(), M.cols());
  // Column-major traversal fixes the order in which the stream is consumed.
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      const double p = std::min(1.0, theta * M(r, c));
      out(r, c) = rng.uniform() < p ? 1.0 : 0.0;
    }
  }
  return out;
}

bool is_binary(const Eigen::MatrixXd& M) {
  return ((M.array() == 0.0) || (M.array() == 1.0)).all();
}

}  // namespace pathlet
