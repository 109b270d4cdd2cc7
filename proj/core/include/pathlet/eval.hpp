#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pathlet/dictlearn.hpp"
#include "pathlet/rng.hpp"
#include "pathlet/spatial.hpp"

namespace pathlet {

struct VisitationDistribution {
  Eigen::VectorXd probs;  // sums to 1
  std::size_t support_count = 0;
};

/// Share of all unit visits that land on each unit; a trajectory counts a
/// unit once however often it revisits it. Throws InputError for an empty corpus.
VisitationDistribution visitation_distribution(std::span<const Trajectory> corpus, const SpatialDomain& dom);

/// Base-2 Jensen-Shannon divergence, in [0, 1]. Throws ShapeError on length mismatch.
double jsd(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double jsd(const VisitationDistribution& p, const VisitationDistribution& q);

/// Removes each visit independently with probability q and drops trajectories
/// left empty. Throws ConfigError unless 0 <= q <= 1.
std::vector<Trajectory> inject_noise(std::span<const Trajectory> corpus, double q, Rng& rng);
/// Clears each set bit independently with probability q.
BinaryPathVector inject_noise(const BinaryPathVector& x, double q, Rng& rng);

struct SynthParams {
  int n_atoms = 20;
  int atom_len_min = 4;
  int atom_len_max = 8;
  int atoms_per_traj_min = 1;
  int atoms_per_traj_max = 3;
  int n_traj = 500;
  int bridge_steps = 3;  // atoms of one trajectory are this close to each other
  int max_extra_bits = 3;
};

struct PlantedCorpus {
  std::vector<Trajectory> corpus;
  PathletDictionary true_dictionary;  // binary, |E| x n_atoms
  RepresentationMatrix true_R;        // binary, n_atoms x n_traj
  std::vector<std::vector<UnitId>> atom_walks;  // each atom in walk order
  SynthParams params;
};

/// Planted-dictionary corpus. Atoms are distinct self-avoiding walks; each
/// trajectory joins k pairwise disjoint atoms, each within bridge_steps of the
/// ones before it, and repairs the union into a connected walk adding at most
/// max_extra_bits units. Throws SynthError when retries run out.
PlantedCorpus synth_corpus(const SpatialDomain& dom, const SynthParams& params, Rng& rng);

/// Bits each trajectory has beyond the union of its planted atoms, and bits
/// of that union it lacks; used to check a planted corpus before use.
struct PlantedCheck {
  std::size_t max_extra = 0;
  std::size_t max_missing = 0;
};
PlantedCheck check_planted(const PlantedCorpus& planted, const SpatialDomain& dom);

struct EvalReport {
  double jsd = 0.0;
  std::size_t n_real = 0;
  std::size_t n_gen = 0;
  std::size_t support_real = 0;
  std::size_t support_gen = 0;
};

EvalReport evaluate(std::span<const Trajectory> real, std::span<const Trajectory> generated, const SpatialDomain& dom);

}  // namespace pathlet
