#include "pathlet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pathlet/errors.hpp"
#include "pathlet/generator.hpp"

namespace pathlet {
namespace {

constexpr int kAttempts = 100;

double kl_to_mixture(const Eigen::VectorXd& p, const Eigen::VectorXd& m) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) s += p(i) * std::log2(p(i) / m(i));
  }
  return s;
}

std::vector<UnitId> random_walk(const SpatialDomain& dom, int length, Rng& rng) {
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::vector<UnitId> walk{static_cast<UnitId>(rng.uniform_index(dom.size()))};
    std::vector<bool> used(dom.size(), false);
    used[static_cast<std::size_t>(walk.front())] = true;
    while (static_cast<int>(walk.size()) < length) {
      std::vector<UnitId> options;
      for (UnitId v : dom.successors(walk.back())) {
        if (!used[static_cast<std::size_t>(v)]) options.push_back(v);
      }
      if (options.empty()) break;
      const UnitId next = options[rng.uniform_index(options.size())];
      used[static_cast<std::size_t>(next)] = true;
      walk.push_back(next);
    }
    if (static_cast<int>(walk.size()) == length) return walk;
  }
  throw SynthError("no self-avoiding walk of length " + std::to_string(length) + " found");
}

bool within_reach(const SpatialDomain& dom, const std::vector<UnitId>& from, const std::vector<UnitId>& to, int steps) {
  std::vector<bool> to_mask(dom.size(), false);
  for (UnitId u : to) to_mask[static_cast<std::size_t>(u)] = true;
  if (!shortest_bridge(dom, from, to_mask, steps).empty()) return true;
  std::vector<bool> from_mask(dom.size(), false);
  for (UnitId u : from) from_mask[static_cast<std::size_t>(u)] = true;
  return !shortest_bridge(dom, to, from_mask, steps).empty();
}

}  // namespace

VisitationDistribution visitation_distribution(std::span<const Trajectory> corpus, const SpatialDomain& dom) {
  if (corpus.empty()) throw InputError("visitation_distribution: empty corpus");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dom.size()));
  for (const Trajectory& t : corpus) counts += vectorize(t, dom).to_eigen();
  const double total = counts.sum();
  if (total <= 0.0) throw InputError("visitation_distribution: corpus visits no units");
  VisitationDistribution out;
  out.probs = counts / total;
  out.support_count = static_cast<std::size_t>((counts.array() > 0.0).count());
  return out;
}

double jsd(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ShapeError("jsd: distributions differ in length");
  const Eigen::VectorXd m = 0.5 * (p + q);
  const double d = 0.5 * kl_to_mixture(p, m) + 0.5 * kl_to_mixture(q, m);
  return std::clamp(d, 0.0, 1.0);
}

double jsd(const VisitationDistribution& p, const VisitationDistribution& q) { return jsd(p.probs, q.probs); }

std::vector<Trajectory> inject_noise(std::span<const Trajectory> corpus, double q, Rng& rng) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("drop rate must lie in [0, 1]");
  std::vector<Trajectory> out;
  out.reserve(corpus.size());
  for (const Trajectory& t : corpus) {
    Trajectory kept{{}, t.timestamp};
    for (UnitId u : t.units) {
      if (!rng.bernoulli(q)) kept.units.push_back(u);
    }
    if (!kept.units.empty()) out.push_back(std::move(kept));
  }
  return out;
}

BinaryPathVector inject_noise(const BinaryPathVector& x, double q, Rng& rng) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("drop rate must lie in [0, 1]");
  BinaryPathVector out = x;
  for (UnitId u : x.active_units()) {
    if (rng.bernoulli(q)) out.set(u, false);
  }
  return out;
}

PlantedCorpus synth_corpus(const SpatialDomain& dom, const SynthParams& params, Rng& rng) {
  if (params.n_atoms < 1 || params.n_traj < 1) throw ConfigError("synth: n_atoms and n_traj must be >= 1");
  if (params.atom_len_min < 1 || params.atom_len_max < params.atom_len_min) throw ConfigError("synth: bad atom length range");
  if (params.atoms_per_traj_min < 1 || params.atoms_per_traj_max < params.atoms_per_traj_min) {
    throw ConfigError("synth: bad atoms-per-trajectory range");
  }
  if (params.atoms_per_traj_max > params.n_atoms) throw ConfigError("synth: more atoms per trajectory than atoms");

  PlantedCorpus out;
  out.params = params;
  std::set<std::vector<UnitId>> distinct;
  for (int a = 0; a < params.n_atoms; ++a) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      std::vector<UnitId> walk = random_walk(dom, rng.uniform_int(params.atom_len_min, params.atom_len_max), rng);
      std::vector<UnitId> key = walk;
      std::sort(key.begin(), key.end());
      if (distinct.insert(key).second) {
        out.atom_walks.push_back(std::move(walk));
        placed = true;
      }
    }
    if (!placed) throw SynthError("could not place a distinct atom");
  }

  const auto E = static_cast<Eigen::Index>(dom.size());
  out.true_dictionary.atoms = Eigen::MatrixXd::Zero(E, params.n_atoms);
  out.true_dictionary.phase = Phase::binary;
  for (int a = 0; a < params.n_atoms; ++a) {
    for (UnitId u : out.atom_walks[static_cast<std::size_t>(a)]) out.true_dictionary.atoms(u, a) = 1.0;
  }
  out.true_R.codes = Eigen::MatrixXd::Zero(params.n_atoms, params.n_traj);
  out.true_R.phase = Phase::binary;

  for (int i = 0; i < params.n_traj; ++i) {
    bool built = false;
    for (int attempt = 0; attempt < kAttempts && !built; ++attempt) {
      const int k = rng.uniform_int(params.atoms_per_traj_min, params.atoms_per_traj_max);
      std::vector<int> chosen{static_cast<int>(rng.uniform_index(static_cast<std::size_t>(params.n_atoms)))};
      std::vector<bool> taken(dom.size(), false);
      std::vector<UnitId> covered;
      auto take = [&](int a) {
        for (UnitId u : out.atom_walks[static_cast<std::size_t>(a)]) {
          taken[static_cast<std::size_t>(u)] = true;
          covered.push_back(u);
        }
      };
      take(chosen.front());
      while (static_cast<int>(chosen.size()) < k) {
        std::vector<int> candidates;
        for (int a = 0; a < params.n_atoms; ++a) {
          const auto& walk = out.atom_walks[static_cast<std::size_t>(a)];
          if (std::any_of(walk.begin(), walk.end(), [&](UnitId u) { return taken[static_cast<std::size_t>(u)]; })) {
            continue;  // overlaps (or is) a chosen atom
          }
          if (within_reach(dom, covered, walk, params.bridge_steps)) candidates.push_back(a);
        }
        if (candidates.empty()) break;
        const int a = candidates[rng.uniform_index(candidates.size())];
        chosen.push_back(a);
        take(a);
      }
      if (static_cast<int>(chosen.size()) < k) continue;

      BinaryPathVector x(dom.size());
      for (UnitId u : covered) x.set(u);
      std::vector<bool> required(dom.size(), false);
      for (UnitId u : covered) required[static_cast<std::size_t>(u)] = true;
      Trajectory t = repair_connectivity(x, dom, RepairOptions{params.bridge_steps}, required);
      const BinaryPathVector y = vectorize(t, dom);
      bool keeps_all = true;
      for (UnitId u : covered) keeps_all = keeps_all && y.test(u);
      if (!keeps_all || y.count() - x.count() > static_cast<std::size_t>(params.max_extra_bits)) continue;
      for (int a : chosen) out.true_R.codes(a, i) = 1.0;
      out.corpus.push_back(std::move(t));
      built = true;
    }
    if (!built) throw SynthError("could not build trajectory " + std::to_string(i));
  }
  return out;
}

PlantedCheck check_planted(const PlantedCorpus& planted, const SpatialDomain& dom) {
  PlantedCheck out;
  const Eigen::MatrixXd X = vectorize_corpus(planted.corpus, dom);
  const Eigen::MatrixXd U =
      ((planted.true_dictionary.atoms * planted.true_R.codes).array() >= 0.5).cast<double>();
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    const auto extra = static_cast<std::size_t>(((X.col(i).array() > 0.5) && (U.col(i).array() < 0.5)).count());
    const auto missing = static_cast<std::size_t>(((X.col(i).array() < 0.5) && (U.col(i).array() > 0.5)).count());
    out.max_extra = std::max(out.max_extra, extra);
    out.max_missing = std::max(out.max_missing, missing);
  }
  return out;
}

EvalReport evaluate(std::span<const Trajectory> real, std::span<const Trajectory> generated, const SpatialDomain& dom) {
  const VisitationDistribution p = visitation_distribution(real, dom);
  const VisitationDistribution q = visitation_distribution(generated, dom);
  return {jsd(p, q), real.size(), generated.size(), p.support_count, q.support_count};
}

}  // namespace pathlet
