#include "pathlet/spatial.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <sstream>
#include <unordered_map>

#include "pathlet/errors.hpp"

namespace pathlet {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

int parse_positive(std::string_view text, std::string_view what) {
  text = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value <= 0) {
    throw DomainError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

void check_unit(const SpatialDomain& dom, UnitId u) {
  if (!dom.contains(u)) {
    throw DomainError("unit " + std::to_string(u) + " outside domain of " + std::to_string(dom.size()) +
                      " units");
  }
}

}  // namespace

std::span<const UnitId> SpatialDomain::successors(UnitId u) const {
  check_unit(*this, u);
  return adjacency_[static_cast<std::size_t>(u)];
}

std::span<const UnitId> SpatialDomain::predecessors(UnitId u) const {
  check_unit(*this, u);
  return reverse_[static_cast<std::size_t>(u)];
}

bool SpatialDomain::adjacent(UnitId from, UnitId to) const {
  const auto succ = successors(from);
  return std::binary_search(succ.begin(), succ.end(), to);
}

std::string SpatialDomain::label(UnitId u) const {
  check_unit(*this, u);
  if (kind_ == DomainKind::grid) {
    return std::to_string(u / cols_) + "," + std::to_string(u % cols_);
  }
  return labels_[static_cast<std::size_t>(u)];
}

std::optional<UnitId> SpatialDomain::find(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return static_cast<UnitId>(i);
  }
  return std::nullopt;
}

DomainSpec SpatialDomain::spec() const {
  if (kind_ == DomainKind::grid) return GridSpec{rows_, cols_};
  GraphSpec graph;
  graph.edges.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    EdgeSpec edge{labels_[i], {}};
    for (UnitId s : adjacency_[i]) edge.successors.push_back(labels_[static_cast<std::size_t>(s)]);
    graph.edges.push_back(std::move(edge));
  }
  return graph;
}

bool operator==(const SpatialDomain& a, const SpatialDomain& b) {
  return a.kind_ == b.kind_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.labels_ == b.labels_ &&
         a.adjacency_ == b.adjacency_;
}

SpatialDomain load_domain(const DomainSpec& spec) {
  SpatialDomain dom;
  if (const auto* grid = std::get_if<GridSpec>(&spec)) {
    if (grid->rows <= 0 || grid->cols <= 0) throw DomainError("grid dimensions must be positive");
    dom.kind_ = DomainKind::grid;
    dom.rows_ = grid->rows;
    dom.cols_ = grid->cols;
    const std::size_t n = static_cast<std::size_t>(grid->rows) * static_cast<std::size_t>(grid->cols);
    dom.adjacency_.resize(n);
    for (int r = 0; r < grid->rows; ++r) {
      for (int c = 0; c < grid->cols; ++c) {
        auto& adj = dom.adjacency_[static_cast<std::size_t>(r * grid->cols + c)];
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int rr = r + dr;
            const int cc = c + dc;
            if (rr < 0 || rr >= grid->rows || cc < 0 || cc >= grid->cols) continue;
            adj.push_back(rr * grid->cols + cc);
          }
        }
      }
    }
    dom.reverse_ = dom.adjacency_;
    return dom;
  }

  const auto& graph = std::get<GraphSpec>(spec);
  if (graph.edges.empty()) throw DomainError("graph has no edges");
  dom.kind_ = DomainKind::graph;
  std::unordered_map<std::string, UnitId> index;
  for (const auto& edge : graph.edges) {
    if (edge.id.empty()) throw DomainError("empty edge id");
    const auto id = static_cast<UnitId>(dom.labels_.size());
    if (!index.emplace(edge.id, id).second) throw DomainError("duplicate unit id '" + edge.id + "'");
    dom.labels_.push_back(edge.id);
  }
  dom.adjacency_.resize(graph.edges.size());
  dom.reverse_.resize(graph.edges.size());
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    for (const auto& succ : graph.edges[i].successors) {
      const auto it = index.find(succ);
      if (it == index.end()) {
        throw DomainError("edge '" + graph.edges[i].id + "' names unknown successor '" + succ + "'");
      }
      if (static_cast<std::size_t>(it->second) == i) continue;
      dom.adjacency_[i].push_back(it->second);
    }
    auto& adj = dom.adjacency_[i];
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    for (UnitId s : adj) dom.reverse_[static_cast<std::size_t>(s)].push_back(static_cast<UnitId>(i));
  }
  for (auto& rev : dom.reverse_) std::sort(rev.begin(), rev.end());
  return dom;
}

GridSpec parse_grid_spec(std::string_view text) {
  text = trim(text);
  if (text.starts_with("grid:")) {
    GridSpec grid;
    std::istringstream fields{std::string(text.substr(5))};
    std::string token;
    while (fields >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) throw DomainError("malformed grid field '" + token + "'");
      const auto key = token.substr(0, eq);
      const auto value = std::string_view(token).substr(eq + 1);
      if (key == "rows") {
        grid.rows = parse_positive(value, "rows");
      } else if (key == "cols") {
        grid.cols = parse_positive(value, "cols");
      } else {
        throw DomainError("unknown grid field '" + key + "'");
      }
    }
    if (grid.rows <= 0 || grid.cols <= 0) throw DomainError("grid spec needs rows and cols");
    return grid;
  }
  const auto x = text.find_first_of("xX");
  if (x == std::string_view::npos) throw DomainError("unrecognized grid spec '" + std::string(text) + "'");
  return GridSpec{parse_positive(text.substr(0, x), "rows"), parse_positive(text.substr(x + 1), "cols")};
}

std::string format_grid_spec(const GridSpec& grid) {
  return "grid: rows=" + std::to_string(grid.rows) + " cols=" + std::to_string(grid.cols);
}

GraphSpec parse_edge_list_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("edge list is empty");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  const auto header = split_csv_line(line);
  if (header != std::vector<std::string>{"edge_id", "tail_vertex", "head_vertex"}) {
    throw DomainError("edge list header must be 'edge_id,tail_vertex,head_vertex'");
  }
  struct Row {
    std::string id, tail, head;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3 || fields[0].empty()) {
      throw DomainError("edge list line " + std::to_string(line_no) + ": expected 3 fields");
    }
    rows.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
  }
  std::unordered_map<std::string, std::vector<std::size_t>> leaving;
  for (std::size_t i = 0; i < rows.size(); ++i) leaving[rows[i].tail].push_back(i);

  GraphSpec graph;
  graph.edges.reserve(rows.size());
  for (const auto& row : rows) {
    EdgeSpec edge{row.id, {}};
    if (const auto it = leaving.find(row.head); it != leaving.end()) {
      for (std::size_t j : it->second) edge.successors.push_back(rows[j].id);
    }
    graph.edges.push_back(std::move(edge));
  }
  return graph;
}

std::size_t BinaryPathVector::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<UnitId> BinaryPathVector::active_units() const {
  std::vector<UnitId> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(static_cast<UnitId>(i));
  }
  return out;
}

Eigen::VectorXd BinaryPathVector::to_eigen() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(bits_.size()));
  for (std::size_t i = 0; i < bits_.size(); ++i) v(static_cast<Eigen::Index>(i)) = bits_[i];
  return v;
}

BinaryPathVector BinaryPathVector::from_eigen(const Eigen::VectorXd& v, double threshold) {
  BinaryPathVector out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out.bits_[static_cast<std::size_t>(i)] = v(i) >= threshold ? 1 : 0;
  return out;
}

std::size_t hamming_distance(const BinaryPathVector& a, const BinaryPathVector& b) {
  if (a.size() != b.size()) throw ShapeError("hamming_distance: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a.test(static_cast<UnitId>(i)) != b.test(static_cast<UnitId>(i));
  return d;
}

BinaryPathVector vectorize(const Trajectory& t, const SpatialDomain& dom) {
  BinaryPathVector bits(dom.size());
  for (UnitId u : t.units) {
    check_unit(dom, u);
    bits.set(u);
  }
  return bits;
}

Eigen::MatrixXd vectorize_corpus(std::span<const Trajectory> corpus, const SpatialDomain& dom) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dom.size()),
                                            static_cast<Eigen::Index>(corpus.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (UnitId u : corpus[i].units) {
      check_unit(dom, u);
      X(u, static_cast<Eigen::Index>(i)) = 1.0;
    }
  }
  return X;
}

std::span<const UnitId> neighbors(UnitId u, const SpatialDomain& dom) { return dom.successors(u); }

bool is_connected_walk(const Trajectory& t, const SpatialDomain& dom) {
  for (std::size_t i = 1; i < t.units.size(); ++i) {
    if (!dom.adjacent(t.units[i - 1], t.units[i])) return false;
  }
  return true;
}

std::vector<UnitId> shortest_bridge(const SpatialDomain& dom, std::span<const UnitId> sources,
                                    const std::vector<bool>& targets, int max_steps) {
  const std::size_t n = dom.size();
  std::vector<UnitId> parent(n, -2);
  std::vector<UnitId> frontier(sources.begin(), sources.end());
  std::sort(frontier.begin(), frontier.end());
  frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
  for (UnitId s : frontier) {
    check_unit(dom, s);
    parent[static_cast<std::size_t>(s)] = -1;
  }
  auto walk_back = [&](UnitId u) {
    std::vector<UnitId> path;
    for (UnitId v = u; v != -1; v = parent[static_cast<std::size_t>(v)]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
  };
  for (UnitId s : frontier) {
    if (targets[static_cast<std::size_t>(s)]) return {s};
  }
  for (int step = 1; step <= max_steps && !frontier.empty(); ++step) {
    std::vector<UnitId> next;
    for (UnitId u : frontier) {
      for (UnitId v : dom.successors(u)) {
        if (parent[static_cast<std::size_t>(v)] != -2) continue;
        parent[static_cast<std::size_t>(v)] = u;
        next.push_back(v);
      }
    }
    std::sort(next.begin(), next.end());
    for (UnitId v : next) {
      if (targets[static_cast<std::size_t>(v)]) return walk_back(v);
    }
    frontier = std::move(next);
  }
  return {};
}

}  // namespace pathlet
