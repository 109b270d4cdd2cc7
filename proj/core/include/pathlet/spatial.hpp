#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace pathlet {

/// Dense spatial unit index in [0, |E|).
using UnitId = std::int32_t;

enum class DomainKind { graph, grid };

struct GridSpec {
  int rows = 0;
  int cols = 0;
};

/// One edge of a road network and the edges reachable from it in one step.
struct EdgeSpec {
  std::string id;
  std::vector<std::string> successors;
};

struct GraphSpec {
  std::vector<EdgeSpec> edges;
};

using DomainSpec = std::variant<GridSpec, GraphSpec>;

/// Universe of spatial units plus the one-step adjacency relation.
///
/// Immutable after construction; share freely across threads.
class SpatialDomain {
 public:
  DomainKind kind() const { return kind_; }
  std::size_t size() const { return adjacency_.size(); }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  bool contains(UnitId u) const { return u >= 0 && static_cast<std::size_t>(u) < size(); }
  /// Units reachable from `u` in one step, sorted by id. Throws DomainError for invalid `u`.
  std::span<const UnitId> successors(UnitId u) const;
  /// Units that reach `u` in one step, sorted by id. Equal to successors() on grids.
  std::span<const UnitId> predecessors(UnitId u) const;
  bool adjacent(UnitId from, UnitId to) const;

  /// Edge identifier for graphs, "row,col" for grid cells.
  std::string label(UnitId u) const;
  /// Index of an edge identifier (graphs only).
  std::optional<UnitId> find(std::string_view label) const;

  /// Lossless description that load_domain() turns back into an equal domain.
  DomainSpec spec() const;

  friend bool operator==(const SpatialDomain& a, const SpatialDomain& b);

 private:
  friend SpatialDomain load_domain(const DomainSpec& spec);

  DomainKind kind_ = DomainKind::grid;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::string> labels_;
  std::vector<std::vector<UnitId>> adjacency_;
  std::vector<std::vector<UnitId>> reverse_;
};

/// Validates a domain description and materializes its adjacency.
///
/// Grids use the 8-neighborhood. For graphs, an edge is adjacent to the
/// edges named as its successors; self-successors are dropped so adjacency
/// stays irreflexive. Throws DomainError on duplicate ids or unknown successors.
SpatialDomain load_domain(const DomainSpec& spec);

/// Parses `grid: rows=R cols=C` or the short form `RxC`.
GridSpec parse_grid_spec(std::string_view text);
std::string format_grid_spec(const GridSpec& grid);

/// Reads a CSV edge list with header `edge_id,tail_vertex,head_vertex`.
///
/// Edge e2 succeeds e1 iff head(e1) == tail(e2).
GraphSpec parse_edge_list_csv(std::istream& in);

/// Ordered visit sequence over a domain.
struct Trajectory {
  std::vector<UnitId> units;
  std::optional<double> timestamp;  // departure time, seconds of day

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Trajectory as a length-|E| bit set.
class BinaryPathVector {
 public:
  BinaryPathVector() = default;
  explicit BinaryPathVector(std::size_t size) : bits_(size, 0) {}

  std::size_t size() const { return bits_.size(); }
  bool test(UnitId u) const { return bits_[static_cast<std::size_t>(u)] != 0; }
  void set(UnitId u, bool value = true) { bits_[static_cast<std::size_t>(u)] = value ? 1 : 0; }
  std::size_t count() const;
  bool empty_set() const { return count() == 0; }
  /// Set units in increasing id order.
  std::vector<UnitId> active_units() const;

  Eigen::VectorXd to_eigen() const;
  /// Bits set where `v(i) >= threshold`.
  static BinaryPathVector from_eigen(const Eigen::VectorXd& v, double threshold = 0.5);

  friend bool operator==(const BinaryPathVector&, const BinaryPathVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

std::size_t hamming_distance(const BinaryPathVector& a, const BinaryPathVector& b);

/// Bit vector of the units visited by `t`. Throws DomainError for units outside `dom`.
BinaryPathVector vectorize(const Trajectory& t, const SpatialDomain& dom);

/// Stacks vectorized trajectories as the columns of a |E| x N 0/1 matrix.
Eigen::MatrixXd vectorize_corpus(std::span<const Trajectory> corpus, const SpatialDomain& dom);

/// One-step neighbors of `u` (successors for directed graphs), sorted by id.
std::span<const UnitId> neighbors(UnitId u, const SpatialDomain& dom);

/// True when every consecutive pair of units is adjacent in `dom`.
bool is_connected_walk(const Trajectory& t, const SpatialDomain& dom);

/// Shortest walk (including both endpoints) from any unit of `sources` to any
/// unit with `targets[u]` set, following successor links and using at most
/// `max_steps` steps. Among equally short walks the target with the smallest
/// id wins. Returns an empty vector when no target is reachable.
std::vector<UnitId> shortest_bridge(const SpatialDomain& dom, std::span<const UnitId> sources,
                                    const std::vector<bool>& targets, int max_steps);

}  // namespace pathlet
