#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pathlet/dictlearn.hpp"
#include "pathlet/spatial.hpp"
#include "pathlet/trainer.hpp"

namespace pathlet {

/// Bits where (D r)_i >= tau. For binary D and r this is the union of the
/// selected atoms. Throws ShapeError on length mismatch and ConfigError
/// unless 0 < tau < 1.
BinaryPathVector reconstruct(const Eigen::VectorXd& r, const PathletDictionary& D, double tau = 0.5);

struct RepairOptions {
  int gap_limit = 3;  // longest bridge, in steps
};

/// Orders the active set of `x` into a walk whose consecutive units are adjacent.
///
/// Active units are split into weakly connected components ranked by size
/// (ties: smallest unit id). Starting from the top component, other
/// components are merged in rank order whenever a shortest bridge of at most
/// gap_limit steps reaches them; the rest are dropped. Components holding a
/// `required` unit rank first. The merged set is then walked greedily from
/// the unit of smallest id among those with the fewest active predecessors,
/// always moving along the shortest active path to the nearest unvisited unit,
/// so the walk may revisit units. Throws InputError when x is empty.
Trajectory repair_connectivity(const BinaryPathVector& x, const SpatialDomain& dom, const RepairOptions& options = {},
                               const std::vector<bool>& required = {});

/// Hour-of-day style bucket: floor(seconds / (86400 / buckets)) mod buckets.
int time_bucket(double seconds_of_day, int buckets);

/// First half of the trajectory (at least one unit); used as the condition prefix.
Trajectory trajectory_prefix(const Trajectory& t);

/// [prefix bits; one-hot(bucket)], or zeros in the bucket block when bucket < 0.
Eigen::VectorXd condition_vector(const BinaryPathVector& prefix, int bucket, int buckets);

/// Condition columns for a training corpus (prefix = first half, bucket from
/// the timestamp, no bucket bit when the timestamp is missing).
Eigen::MatrixXd corpus_conditions(std::span<const Trajectory> corpus, const SpatialDomain& dom, int buckets);

struct GenerationCondition {
  BinaryPathVector prefix;
  int depart_bucket = 0;
};

struct GenerationRequest {
  int count = 1;
  std::optional<GenerationCondition> condition;
  double threshold = 0.5;
  bool repair = true;
  std::uint64_t seed = 0;
  RepairOptions repair_options;
  int max_resamples = 100;  // per trajectory, when the sampled union is empty
};

/// count trajectories, each from its own (seed, index) random stream:
/// sample_r -> reconstruct -> (prefix bits forced on) -> repair.
/// Throws InputError for count < 1, ConfigError when the condition does not
/// match the model, GenerationError when every resample is empty.
std::vector<Trajectory> generate(const TrainedModel& model, const GenerationRequest& request);

/// Condition from `prefix` and the bucket of `depart_time`. Throws ConfigError
/// for unconditional models and DomainError for invalid prefix units.
std::vector<Trajectory> generate_conditional(const TrainedModel& model, const Trajectory& prefix, double depart_time,
                                             int count, std::uint64_t seed);

}  // namespace pathlet
