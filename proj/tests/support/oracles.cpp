#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

#include "pathlet/rng.hpp"

namespace pathlet::testing {

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x(i);
    x(i) = saved + h;
    const double up = f(x);
    x(i) = saved - h;
    const double down = f(x);
    x(i) = saved;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

double smoothed_mdl_loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D, const Eigen::MatrixXd& R,
                         double lambda1, double lambda2, double temperature) {
  double recon = 0.0;
  for (Eigen::Index e = 0; e < X.rows(); ++e) {
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
      double dr = 0.0;
      for (Eigen::Index j = 0; j < D.cols(); ++j) dr += D(e, j) * R(j, i);
      recon += (X(e, i) - dr) * (X(e, i) - dr);
    }
  }
  double soft_max = 0.0;
  double l1 = 0.0;
  for (Eigen::Index j = 0; j < R.rows(); ++j) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < R.cols(); ++i) top = std::max(top, R(j, i));
    double s = 0.0;
    for (Eigen::Index i = 0; i < R.cols(); ++i) {
      s += std::exp((R(j, i) - top) / temperature);
      l1 += std::abs(R(j, i));
    }
    soft_max += top + temperature * std::log(s);
  }
  return recon + lambda1 * soft_max + lambda2 * l1;
}

double min_top2_gap(const Eigen::MatrixXd& R) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < R.rows(); ++j) {
    std::vector<double> row;
    for (Eigen::Index i = 0; i < R.cols(); ++i) row.push_back(R(j, i));
    std::sort(row.rbegin(), row.rend());
    if (row.size() > 1) gap = std::min(gap, row[0] - row[1]);
  }
  return gap;
}

std::size_t brute_force_mdl_bits(const Eigen::MatrixXd& R, std::size_t num_units) {
  std::size_t rows_used = 0;
  std::size_t ones = 0;
  for (Eigen::Index j = 0; j < R.rows(); ++j) {
    bool used = false;
    for (Eigen::Index i = 0; i < R.cols(); ++i) {
      if (R(j, i) == 1.0) {
        used = true;
        ++ones;
      }
    }
    if (used) ++rows_used;
  }
  return num_units * rows_used + ones;
}

ExhaustiveCode exhaustive_sparse_code(const Eigen::VectorXd& x, const Eigen::MatrixXd& D, double lambda) {
  const auto n = D.cols();
  if (n > 20) throw std::invalid_argument("exhaustive_sparse_code: too many atoms");
  ExhaustiveCode best;
  best.objective = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    double ones = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (mask >> j & 1U) {
        r(j) = 1.0;
        ones += 1.0;
      }
    }
    double err = 0.0;
    for (Eigen::Index e = 0; e < D.rows(); ++e) {
      double v = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) v += D(e, j) * r(j);
      err += (x(e) - v) * (x(e) - v);
    }
    const double obj = err + lambda * ones;
    if (obj < best.objective) {
      best.objective = obj;
      best.r = r;
    }
  }
  return best;
}

int bfs_distance(const SpatialDomain& dom, UnitId from, UnitId to) {
  const auto E = static_cast<UnitId>(dom.size());
  std::vector<int> dist(dom.size(), -1);
  dist[static_cast<std::size_t>(from)] = 0;
  std::deque<UnitId> queue{from};
  while (!queue.empty()) {
    const UnitId u = queue.front();
    queue.pop_front();
    if (u == to) return dist[static_cast<std::size_t>(u)];
    for (UnitId v = 0; v < E; ++v) {
      if (dist[static_cast<std::size_t>(v)] < 0 && dom.adjacent(u, v)) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  return -1;
}

bool walk_is_connected(const Trajectory& t, const SpatialDomain& dom) {
  for (std::size_t i = 1; i < t.units.size(); ++i) {
    if (!dom.adjacent(t.units[i - 1], t.units[i])) return false;
  }
  return true;
}

TwoBranch two_branch_corpus(int n_traj, double p_a_bucket0, double p_a_other, std::uint64_t seed) {
  // Vertices: v0 -s0-> v1 -s1-> v2 -s2-> v3 -s3-> v4, then two chains out of v4.
  GraphSpec spec;
  auto add = [&](const std::string& id, std::vector<std::string> succ) { spec.edges.push_back({id, std::move(succ)}); };
  add("s0", {"s1"});
  add("s1", {"s2"});
  add("s2", {"s3"});
  add("s3", {"a0", "b0"});
  for (const char* side : {"a", "b"}) {
    for (int k = 0; k < 4; ++k) {
      const std::string id = side + std::to_string(k);
      add(id, k < 3 ? std::vector<std::string>{side + std::to_string(k + 1)} : std::vector<std::string>{});
    }
  }
  TwoBranch out;
  out.domain = std::make_shared<const SpatialDomain>(load_domain(spec));
  for (int k = 0; k < 4; ++k) {
    out.stem.push_back(*out.domain->find("s" + std::to_string(k)));
    out.branch_a.push_back(*out.domain->find("a" + std::to_string(k)));
    out.branch_b.push_back(*out.domain->find("b" + std::to_string(k)));
  }
  Rng rng(seed);
  for (int i = 0; i < n_traj; ++i) {
    const bool early = i % 2 == 0;
    const double t = early ? 1800.0 : 45000.0;
    const bool take_a = rng.bernoulli(early ? p_a_bucket0 : p_a_other);
    Trajectory traj{out.stem, t};
    const auto& branch = take_a ? out.branch_a : out.branch_b;
    traj.units.insert(traj.units.end(), branch.begin(), branch.end());
    out.corpus.push_back(std::move(traj));
  }
  return out;
}

bool selects_only(const Trajectory& t, const std::vector<UnitId>& a, const std::vector<UnitId>& b) {
  auto hits = [&](const std::vector<UnitId>& s) {
    return std::any_of(t.units.begin(), t.units.end(),
                       [&](UnitId u) { return std::find(s.begin(), s.end(), u) != s.end(); });
  };
  return hits(a) && !hits(b);
}

PlantedCorpus checked_planted(const SpatialDomain& dom, const SynthParams& params, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, "synth");
  PlantedCorpus planted = synth_corpus(dom, params, rng);
  const PlantedCheck check = check_planted(planted, dom);
  if (check.max_missing != 0 || check.max_extra > static_cast<std::size_t>(params.max_extra_bits)) {
    throw std::runtime_error("planted corpus failed its reconstruction check");
  }
  for (const Trajectory& t : planted.corpus) {
    if (!walk_is_connected(t, dom)) throw std::runtime_error("planted trajectory is not connected");
  }
  return planted;
}

}  // namespace pathlet::testing
