#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "pathlet/rng.hpp"

namespace pathlet {

/// Relaxed matrices live in [0,1]; rounded ones in {0,1}.
enum class Phase { fractional, binary };

/// |E| x n matrix whose columns are pathlet atoms.
struct PathletDictionary {
  Eigen::MatrixXd atoms;
  Phase phase = Phase::fractional;

  std::size_t num_units() const { return static_cast<std::size_t>(atoms.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(atoms.cols()); }
};

/// n x N matrix; column i is the representation vector of trajectory i.
struct RepresentationMatrix {
  Eigen::MatrixXd codes;
  Phase phase = Phase::fractional;

  std::size_t num_atoms() const { return static_cast<std::size_t>(codes.rows()); }
  std::size_t num_trajectories() const { return static_cast<std::size_t>(codes.cols()); }
};

/// Terms of ||X - DR||^2 + lambda1 * sum_j max_i R_ji + lambda2 * ||R||_1.
struct MdlLossBreakdown {
  double recon = 0.0;
  double dict_term = 0.0;
  double sparsity_term = 0.0;
  double total = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// Dictionary loss with its MDL-derived penalties. Throws ShapeError or
/// ConfigError (negative lambdas).
MdlLossBreakdown mdl_loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D, const Eigen::MatrixXd& R,
                          double lambda1, double lambda2);

struct EffectiveAtoms {
  std::size_t count = 0;
  std::vector<bool> mask;  // mask[j] iff max_i R_ji > 0
};

/// Atoms whose representation row has any positive entry.
EffectiveAtoms effective_atoms(const Eigen::MatrixXd& R);

struct MdlGradients {
  Eigen::MatrixXd dict;   // d/dD
  Eigen::MatrixXd codes;  // d/dR
};

/// Gradient of the reconstruction term plus subgradients of the penalties.
///
/// The row-max penalty contributes lambda1 to one argmax entry per row
/// (lowest column index on ties). The L1 penalty contributes lambda2 to
/// positive entries and nothing to entries at exactly zero.
MdlGradients mdl_gradients(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D, const Eigen::MatrixXd& R,
                           double lambda1, double lambda2);

/// Bits to describe the binary data given the dictionary:
/// num_units * (effective atoms) + ||R||_1. Throws InputError for non-binary R.
std::size_t mdl_description_length(const Eigen::MatrixXd& R, std::size_t num_units);

/// Entrywise projection onto [0,1].
Eigen::MatrixXd clip_unit_interval(Eigen::MatrixXd M);

/// Sets each entry to 1 with probability min(1, theta * M_ij), independently.
/// Throws ConfigError when theta < 1.
Eigen::MatrixXd round_binary(const Eigen::MatrixXd& M, double theta, Rng& rng);

/// True when every entry is exactly 0 or 1.
bool is_binary(const Eigen::MatrixXd& M);

}  // namespace pathlet
