#include "pathlet/io.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pathlet/errors.hpp"

namespace pathlet {
namespace {

using json = nlohmann::ordered_json;

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string(what) + ": " + e.what());
  }
}

template <class T>
T field(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string(what) + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string(what) + ": bad '" + key + "': " + e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<Trajectory> read_corpus(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "corpus line " + std::to_string(lineno);
    const json j = parse_json(line, where.c_str());
    Trajectory t;
    t.units = field<std::vector<UnitId>>(j, "units", where.c_str());
    if (t.units.empty()) throw InputError(where + ": empty trajectory");
    if (j.contains("t") && !j.at("t").is_null()) t.timestamp = field<double>(j, "t", where.c_str());
    out.push_back(std::move(t));
  }
  return out;
}

void write_corpus(std::ostream& out, std::span<const Trajectory> corpus) {
  for (const Trajectory& t : corpus) {
    json j;
    j["units"] = t.units;
    j["t"] = t.timestamp ? json(*t.timestamp) : json(nullptr);
    out << j.dump() << '\n';
  }
}

std::vector<Trajectory> read_corpus_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus " + path.string());
  return read_corpus(in);
}

void write_corpus_file(const std::filesystem::path& path, std::span<const Trajectory> corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_corpus(out, corpus);
}

std::string domain_to_json(const SpatialDomain& dom) {
  json j;
  const DomainSpec spec = dom.spec();
  if (const auto* g = std::get_if<GridSpec>(&spec)) {
    j["kind"] = "grid";
    j["rows"] = g->rows;
    j["cols"] = g->cols;
  } else {
    j["kind"] = "graph";
    json edges = json::array();
    for (const EdgeSpec& e : std::get<GraphSpec>(spec).edges) edges.push_back({{"id", e.id}, {"successors", e.successors}});
    j["edges"] = std::move(edges);
  }
  return j.dump();
}

SpatialDomain domain_from_json(const std::string& text) {
  const json j = parse_json(text, "domain");
  const auto kind = field<std::string>(j, "kind", "domain");
  if (kind == "grid") return load_domain(GridSpec{field<int>(j, "rows", "domain"), field<int>(j, "cols", "domain")});
  if (kind != "graph") throw InputError("domain: unknown kind '" + kind + "'");
  GraphSpec g;
  for (const json& e : field<json>(j, "edges", "domain")) {
    g.edges.push_back({field<std::string>(e, "id", "domain edge"),
                       field<std::vector<std::string>>(e, "successors", "domain edge")});
  }
  return load_domain(g);
}

std::string dictionary_to_json(const PathletDictionary& D) {
  json atoms = json::array();
  for (Eigen::Index c = 0; c < D.atoms.cols(); ++c) {
    std::vector<int> units;
    for (Eigen::Index r = 0; r < D.atoms.rows(); ++r) {
      if (D.atoms(r, c) > 0.5) units.push_back(static_cast<int>(r));
    }
    atoms.push_back(units);
  }
  json j;
  j["num_units"] = D.atoms.rows();
  j["atoms"] = std::move(atoms);
  return j.dump();
}

PathletDictionary dictionary_from_json(const std::string& text) {
  const json j = parse_json(text, "dictionary");
  const auto units = field<Eigen::Index>(j, "num_units", "dictionary");
  const auto atoms = field<std::vector<std::vector<Eigen::Index>>>(j, "atoms", "dictionary");
  PathletDictionary D;
  D.phase = Phase::binary;
  D.atoms = Eigen::MatrixXd::Zero(units, static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t c = 0; c < atoms.size(); ++c) {
    for (Eigen::Index u : atoms[c]) {
      if (u < 0 || u >= units) throw InputError("dictionary: unit index out of range");
      D.atoms(u, static_cast<Eigen::Index>(c)) = 1.0;
    }
  }
  return D;
}

std::string representation_to_json(const RepresentationMatrix& R) {
  json cols = json::array();
  for (Eigen::Index c = 0; c < R.codes.cols(); ++c) {
    std::vector<int> used;
    for (Eigen::Index r = 0; r < R.codes.rows(); ++r) {
      if (R.codes(r, c) > 0.5) used.push_back(static_cast<int>(r));
    }
    cols.push_back(used);
  }
  json j;
  j["num_atoms"] = R.codes.rows();
  j["num_trajectories"] = R.codes.cols();
  j["columns"] = std::move(cols);
  return j.dump();
}

RepresentationMatrix representation_from_json(const std::string& text) {
  const json j = parse_json(text, "representation");
  const auto n = field<Eigen::Index>(j, "num_atoms", "representation");
  const auto N = field<Eigen::Index>(j, "num_trajectories", "representation");
  const auto cols = field<std::vector<std::vector<Eigen::Index>>>(j, "columns", "representation");
  if (static_cast<Eigen::Index>(cols.size()) != N) throw InputError("representation: column count mismatch");
  RepresentationMatrix R;
  R.phase = Phase::binary;
  R.codes = Eigen::MatrixXd::Zero(n, N);
  for (Eigen::Index c = 0; c < N; ++c) {
    for (Eigen::Index a : cols[static_cast<std::size_t>(c)]) {
      if (a < 0 || a >= n) throw InputError("representation: atom index out of range");
      R.codes(a, c) = 1.0;
    }
  }
  return R;
}

void write_vae(std::ostream& out, const VaeModel& model) {
  json h;
  h["input_dim"] = model.input_dim();
  h["latent_dim"] = model.latent_dim();
  h["cond_dim"] = model.cond_dim();
  h["hidden"] = model.hidden();
  h["activation"] = std::string(to_string(model.activation()));
  h["seed"] = model.seed();
  h["time_buckets"] = model.time_buckets();
  out << h.dump() << '\n';
  const Eigen::VectorXd flat = model.params().flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    std::uint64_t bits = 0;
    const double v = flat(i);
    std::memcpy(&bits, &v, sizeof bits);
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    out.write(bytes, 8);
  }
}

VaeModel read_vae(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw InputError("vae model: missing header");
  const json h = parse_json(header, "vae model header");
  VaeModel model = VaeModel::create(field<int>(h, "input_dim", "vae model"), field<int>(h, "latent_dim", "vae model"),
                                    field<int>(h, "cond_dim", "vae model"),
                                    field<std::vector<int>>(h, "hidden", "vae model"),
                                    parse_activation(field<std::string>(h, "activation", "vae model")),
                                    field<std::uint64_t>(h, "seed", "vae model"));
  model.set_time_buckets(field<int>(h, "time_buckets", "vae model"));
  Eigen::VectorXd flat(static_cast<Eigen::Index>(model.params().size()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw InputError("vae model: truncated payload");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof v);
    flat(i) = v;
  }
  if (in.peek() != std::char_traits<char>::eof()) throw InputError("vae model: trailing bytes");
  model.params().assign(flat);
  return model;
}

void write_log_csv(std::ostream& out, std::span<const TrainingLogEntry> log) {
  out << "iteration,recon,dict_term,sparsity_term,elbo,total\n";
  for (const TrainingLogEntry& e : log) {
    out << e.iteration << ',' << fmt(e.recon) << ',' << fmt(e.dict_term) << ',' << fmt(e.sparsity_term) << ','
        << fmt(e.elbo) << ',' << fmt(e.total) << '\n';
  }
}

std::vector<TrainingLogEntry> read_log_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "iteration,recon,dict_term,sparsity_term,elbo,total") {
    throw InputError("log.csv: bad header");
  }
  std::vector<TrainingLogEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    TrainingLogEntry e;
    char c1, c2, c3, c4, c5;
    if (!(ss >> e.iteration >> c1 >> e.recon >> c2 >> e.dict_term >> c3 >> e.sparsity_term >> c4 >> e.elbo >> c5 >>
          e.total)) {
      throw InputError("log.csv: bad row '" + line + "'");
    }
    out.push_back(e);
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

void save_checkpoint(const std::filesystem::path& dir, const TrainedModel& model) {
  if (!model.domain) throw ConfigError("checkpoint: model has no domain");
  std::filesystem::create_directories(dir);
  write_text_file(dir / "dict.json", dictionary_to_json(model.dictionary) + "\n");
  write_text_file(dir / "repr.json", representation_to_json(model.final_R) + "\n");
  write_text_file(dir / "domain.json", domain_to_json(*model.domain) + "\n");
  {
    std::ofstream out(dir / "vae.model", std::ios::binary);
    if (!out) throw InputError("cannot write " + (dir / "vae.model").string());
    write_vae(out, model.vae);
  }
  {
    std::ofstream out(dir / "log.csv", std::ios::binary);
    write_log_csv(out, model.training_log);
  }
  {
    std::ofstream out(dir / "config.txt", std::ios::binary);
    write_training_config(out, model.config);
  }
}

TrainedModel load_checkpoint(const std::filesystem::path& dir) {
  for (const char* name : {"dict.json", "vae.model", "repr.json", "domain.json"}) {
    if (!std::filesystem::exists(dir / name)) throw InputError("checkpoint " + dir.string() + " lacks " + name);
  }
  TrainedModel model;
  model.domain = std::make_shared<const SpatialDomain>(domain_from_json(read_text_file(dir / "domain.json")));
  model.dictionary = dictionary_from_json(read_text_file(dir / "dict.json"));
  model.final_R = representation_from_json(read_text_file(dir / "repr.json"));
  {
    std::ifstream in(dir / "vae.model", std::ios::binary);
    model.vae = read_vae(in);
  }
  if (std::filesystem::exists(dir / "log.csv")) {
    std::ifstream in(dir / "log.csv", std::ios::binary);
    model.training_log = read_log_csv(in);
  }
  if (std::filesystem::exists(dir / "config.txt")) {
    std::ifstream in(dir / "config.txt");
    model.config = parse_training_config(in);
  }
  if (model.dictionary.num_units() != model.domain->size()) throw ConfigError("checkpoint: dictionary/domain mismatch");
  if (model.final_R.num_atoms() != model.dictionary.size()) throw ConfigError("checkpoint: repr/dictionary mismatch");
  if (static_cast<std::size_t>(model.vae.input_dim()) != model.dictionary.size()) {
    throw ConfigError("checkpoint: VAE/dictionary mismatch");
  }
  return model;
}

std::uint64_t checkpoint_hash(const std::filesystem::path& dir) {
  return fnv1a64(read_text_file(dir / "dict.json") + read_text_file(dir / "vae.model"));
}

std::string eval_report_to_json(const EvalReport& r) {
  json j;
  j["jsd"] = r.jsd;
  j["n_real"] = r.n_real;
  j["n_gen"] = r.n_gen;
  j["support_real"] = r.support_real;
  j["support_gen"] = r.support_gen;
  return j.dump();
}

}  // namespace pathlet
