#include "pathlet/generator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "pathlet/errors.hpp"

namespace pathlet {
namespace {

struct Component {
  std::vector<UnitId> units;  // sorted
  bool required = false;
};

std::vector<Component> weak_components(const std::vector<bool>& active, const SpatialDomain& dom,
                                       const std::vector<bool>& required) {
  std::vector<Component> comps;
  std::vector<bool> seen(active.size(), false);
  for (UnitId s = 0; static_cast<std::size_t>(s) < active.size(); ++s) {
    if (!active[static_cast<std::size_t>(s)] || seen[static_cast<std::size_t>(s)]) continue;
    Component c;
    std::deque<UnitId> queue{s};
    seen[static_cast<std::size_t>(s)] = true;
    while (!queue.empty()) {
      const UnitId u = queue.front();
      queue.pop_front();
      c.units.push_back(u);
      if (!required.empty() && required[static_cast<std::size_t>(u)]) c.required = true;
      for (auto links : {dom.successors(u), dom.predecessors(u)}) {
        for (UnitId v : links) {
          if (active[static_cast<std::size_t>(v)] && !seen[static_cast<std::size_t>(v)]) {
            seen[static_cast<std::size_t>(v)] = true;
            queue.push_back(v);
          }
        }
      }
    }
    std::sort(c.units.begin(), c.units.end());
    comps.push_back(std::move(c));
  }
  std::stable_sort(comps.begin(), comps.end(), [](const Component& a, const Component& b) {
    if (a.required != b.required) return a.required;
    if (a.units.size() != b.units.size()) return a.units.size() > b.units.size();
    return a.units.front() < b.units.front();
  });
  return comps;
}

// Shortest path inside `allowed` from `from` to the nearest unit with
// `visited` unset (smallest id among the nearest). Excludes `from`.
std::vector<UnitId> path_to_unvisited(UnitId from, const std::vector<bool>& allowed, const std::vector<bool>& visited,
                                      const SpatialDomain& dom) {
  std::vector<UnitId> parent(allowed.size(), -2);
  parent[static_cast<std::size_t>(from)] = -1;
  std::vector<UnitId> frontier{from};
  while (!frontier.empty()) {
    std::vector<UnitId> next;
    for (UnitId u : frontier) {
      for (UnitId v : dom.successors(u)) {
        const auto vi = static_cast<std::size_t>(v);
        if (!allowed[vi] || parent[vi] != -2) continue;
        parent[vi] = u;
        next.push_back(v);
      }
    }
    std::sort(next.begin(), next.end());
    for (UnitId v : next) {
      if (visited[static_cast<std::size_t>(v)]) continue;
      std::vector<UnitId> path;
      for (UnitId w = v; w != from; w = parent[static_cast<std::size_t>(w)]) path.push_back(w);
      std::reverse(path.begin(), path.end());
      return path;
    }
    frontier = std::move(next);
  }
  return {};
}

void check_model(const TrainedModel& model) {
  if (!model.domain) throw ConfigError("model has no domain");
  if (model.dictionary.num_units() != model.domain->size()) {
    throw ConfigError("dictionary has " + std::to_string(model.dictionary.num_units()) + " units, domain has " +
                      std::to_string(model.domain->size()));
  }
  if (static_cast<std::size_t>(model.vae.input_dim()) != model.dictionary.size()) {
    throw ConfigError("VAE input size does not match the dictionary");
  }
}

}  // namespace

BinaryPathVector reconstruct(const Eigen::VectorXd& r, const PathletDictionary& D, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  if (static_cast<std::size_t>(r.size()) != D.size()) throw ShapeError("reconstruct: r length differs from atom count");
  const Eigen::VectorXd x = D.atoms * r;
  BinaryPathVector out(D.num_units());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) >= tau) out.set(static_cast<UnitId>(i));
  }
  return out;
}

Trajectory repair_connectivity(const BinaryPathVector& x, const SpatialDomain& dom, const RepairOptions& options,
                               const std::vector<bool>& required) {
  if (x.size() != dom.size()) throw ShapeError("repair: vector length differs from domain size");
  if (x.empty_set()) throw InputError("repair: no active units");
  if (!required.empty() && required.size() != dom.size()) throw ShapeError("repair: required mask has wrong length");

  std::vector<bool> active(dom.size(), false);
  for (UnitId u : x.active_units()) active[static_cast<std::size_t>(u)] = true;
  const std::vector<Component> comps = weak_components(active, dom, required);

  std::vector<bool> kept(dom.size(), false);
  std::vector<UnitId> kept_units;
  auto keep = [&](UnitId u) {
    if (!kept[static_cast<std::size_t>(u)]) {
      kept[static_cast<std::size_t>(u)] = true;
      kept_units.push_back(u);
    }
  };
  for (UnitId u : comps.front().units) keep(u);
  std::vector<bool> merged(comps.size(), false);
  merged[0] = true;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t c = 1; c < comps.size(); ++c) {
      if (merged[c]) continue;
      std::vector<bool> target(dom.size(), false);
      for (UnitId u : comps[c].units) target[static_cast<std::size_t>(u)] = true;
      std::vector<UnitId> bridge = shortest_bridge(dom, kept_units, target, options.gap_limit);
      const std::vector<UnitId> back = shortest_bridge(dom, comps[c].units, kept, options.gap_limit);
      if (bridge.empty() || (!back.empty() && back.size() < bridge.size())) bridge = back;
      if (bridge.empty()) continue;
      for (UnitId u : bridge) keep(u);
      for (UnitId u : comps[c].units) keep(u);
      merged[c] = true;
      changed = true;
      break;  // higher-ranked components get the next chance
    }
  }

  std::sort(kept_units.begin(), kept_units.end());
  UnitId start = kept_units.front();
  std::size_t fewest = dom.size() + 1;
  for (UnitId u : kept_units) {
    std::size_t indeg = 0;
    for (UnitId p : dom.predecessors(u)) indeg += kept[static_cast<std::size_t>(p)] ? 1 : 0;
    if (indeg < fewest) {
      fewest = indeg;
      start = u;
    }
  }

  Trajectory out;
  std::vector<bool> visited(dom.size(), false);
  std::size_t remaining = kept_units.size();
  UnitId cur = start;
  out.units.push_back(cur);
  visited[static_cast<std::size_t>(cur)] = true;
  --remaining;
  while (remaining > 0) {
    const std::vector<UnitId> path = path_to_unvisited(cur, kept, visited, dom);
    if (path.empty()) break;  // only on directed graphs: the rest is unreachable
    for (UnitId u : path) {
      out.units.push_back(u);
      if (!visited[static_cast<std::size_t>(u)]) {
        visited[static_cast<std::size_t>(u)] = true;
        --remaining;
      }
    }
    cur = path.back();
  }
  return out;
}

int time_bucket(double seconds_of_day, int buckets) {
  if (buckets < 1) throw ConfigError("time_bucket: buckets must be >= 1");
  const double width = 86400.0 / buckets;
  const auto b = static_cast<long long>(std::floor(seconds_of_day / width));
  return static_cast<int>(((b % buckets) + buckets) % buckets);
}

Trajectory trajectory_prefix(const Trajectory& t) {
  if (t.units.empty()) throw InputError("prefix of an empty trajectory");
  const std::size_t len = std::max<std::size_t>(1, t.units.size() / 2);
  return {std::vector<UnitId>(t.units.begin(), t.units.begin() + static_cast<std::ptrdiff_t>(len)), t.timestamp};
}

Eigen::VectorXd condition_vector(const BinaryPathVector& prefix, int bucket, int buckets) {
  if (bucket >= buckets) throw ConfigError("departure bucket out of range");
  const auto n = static_cast<Eigen::Index>(prefix.size());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + buckets);
  c.head(n) = prefix.to_eigen();
  if (bucket >= 0) c(n + bucket) = 1.0;
  return c;
}

Eigen::MatrixXd corpus_conditions(std::span<const Trajectory> corpus, const SpatialDomain& dom, int buckets) {
  Eigen::MatrixXd C(static_cast<Eigen::Index>(dom.size()) + buckets, static_cast<Eigen::Index>(corpus.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Trajectory& t = corpus[i];
    const int bucket = t.timestamp ? time_bucket(*t.timestamp, buckets) : -1;
    C.col(static_cast<Eigen::Index>(i)) = condition_vector(vectorize(trajectory_prefix(t), dom), bucket, buckets);
  }
  return C;
}

std::vector<Trajectory> generate(const TrainedModel& model, const GenerationRequest& request) {
  if (request.count < 1) throw InputError("generate: count must be >= 1");
  if (!(request.threshold > 0.0 && request.threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  if (request.max_resamples < 1) throw ConfigError("max_resamples must be >= 1");
  check_model(model);
  const SpatialDomain& dom = *model.domain;

  Eigen::VectorXd cond;
  std::vector<bool> required;
  if (request.condition) {
    if (!model.vae.conditional()) throw ConfigError("model is unconditional; it takes no prefix or departure time");
    const GenerationCondition& c = *request.condition;
    if (c.prefix.size() != dom.size()) throw ConfigError("prefix length does not match the domain");
    const int buckets = model.vae.time_buckets();
    if (c.depart_bucket < 0 || c.depart_bucket >= buckets) throw ConfigError("departure bucket out of range");
    cond = condition_vector(c.prefix, c.depart_bucket, buckets);
    if (cond.size() != model.vae.cond_dim()) throw ConfigError("condition size does not match the model");
    required.assign(dom.size(), false);
    for (UnitId u : c.prefix.active_units()) required[static_cast<std::size_t>(u)] = true;
  } else if (model.vae.conditional()) {
    throw ConfigError("conditional model needs a prefix and departure time");
  }

  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(request.count));
  for (int i = 0; i < request.count; ++i) {
    Rng rng = Rng::derive(request.seed, "generate", static_cast<std::uint64_t>(i));
    bool done = false;
    for (int attempt = 0; attempt < request.max_resamples && !done; ++attempt) {
      const Eigen::VectorXd r = sample_r(model.vae, cond, 1, rng).col(0);
      BinaryPathVector x = reconstruct(r, model.dictionary, request.threshold);
      if (request.condition) {
        for (UnitId u : request.condition->prefix.active_units()) x.set(u);
      }
      if (x.empty_set()) continue;
      out.push_back(request.repair ? repair_connectivity(x, dom, request.repair_options, required)
                                   : Trajectory{x.active_units(), std::nullopt});
      done = true;
    }
    if (!done) {
      throw GenerationError("sample " + std::to_string(i) + " selected no atoms in " +
                            std::to_string(request.max_resamples) + " draws");
    }
  }
  return out;
}

std::vector<Trajectory> generate_conditional(const TrainedModel& model, const Trajectory& prefix, double depart_time,
                                             int count, std::uint64_t seed) {
  if (!model.vae.conditional()) throw ConfigError("model is unconditional; it takes no prefix or departure time");
  check_model(model);
  GenerationRequest req;
  req.count = count;
  req.seed = seed;
  req.condition = GenerationCondition{vectorize(prefix, *model.domain),
                                      time_bucket(depart_time, model.vae.time_buckets())};
  std::vector<Trajectory> out = generate(model, req);
  for (Trajectory& t : out) t.timestamp = depart_time;
  return out;
}

}  // namespace pathlet
