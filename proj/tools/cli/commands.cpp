#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pathlet/denoise.hpp"
#include "pathlet/errors.hpp"
#include "pathlet/eval.hpp"
#include "pathlet/generator.hpp"
#include "pathlet/io.hpp"
#include "pathlet/trainer.hpp"

namespace pathlet::cli {
namespace {

namespace fs = std::filesystem;

struct DomainArgs {
  std::string grid;
  std::string graph;
  std::string domain;

  void attach(CLI::App* app) {
    app->add_option("--grid", grid, "Grid domain, RxC or 'grid: rows=R cols=C'");
    app->add_option("--graph", graph, "Road network edge list CSV (edge_id,tail_vertex,head_vertex)");
    app->add_option("--domain", domain, "Domain JSON as written into checkpoints");
  }
  bool given() const { return !grid.empty() || !graph.empty() || !domain.empty(); }

  std::shared_ptr<const SpatialDomain> load() const {
    const int n = !grid.empty() + !graph.empty() + !domain.empty();
    if (n != 1) throw ConfigError("give exactly one of --grid, --graph, --domain");
    if (!grid.empty()) return std::make_shared<const SpatialDomain>(load_domain(parse_grid_spec(grid)));
    if (!domain.empty()) return std::make_shared<const SpatialDomain>(domain_from_json(read_text_file(domain)));
    std::ifstream in(graph);
    if (!in) throw InputError("cannot open " + graph);
    return std::make_shared<const SpatialDomain>(load_domain(parse_edge_list_csv(in)));
  }
};

std::pair<int, int> parse_range(const std::string& text, const char* what) {
  const auto dash = text.find('-');
  auto num = [&](std::string_view s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ConfigError(std::string(what) + ": expected N or N-M, got '" + text + "'");
    }
    return v;
  };
  const std::string_view sv(text);
  if (dash == std::string::npos) {
    const int v = num(sv);
    return {v, v};
  }
  return {num(sv.substr(0, dash)), num(sv.substr(dash + 1))};
}

Trajectory parse_prefix(const std::string& text, const SpatialDomain& dom) {
  Trajectory t;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (item.empty()) continue;
    int v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec == std::errc() && res.ptr == item.data() + item.size()) {
      t.units.push_back(v);
    } else if (const auto id = dom.find(item)) {
      t.units.push_back(*id);
    } else {
      throw DomainError("prefix unit '" + item + "' is not in the domain");
    }
  }
  if (t.units.empty()) throw ConfigError("--prefix is empty");
  vectorize(t, dom);  // validates every unit
  return t;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

int cmd_train(const fs::path& corpus_path, const DomainArgs& dom_args, const std::string& config_path,
              const std::vector<std::string>& sets, const TrainingConfig& flags, bool latent_set, bool seed_set,
              bool iters_set, bool conditional, const fs::path& out_dir, std::ostream& out) {
  TrainingConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw InputError("cannot open config " + config_path);
    config = parse_training_config(in);
  }
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (latent_set) config.latent_dim = flags.latent_dim;
  if (seed_set) config.seed = flags.seed;
  if (iters_set) config.max_iters = flags.max_iters;
  if (conditional) config.conditional = true;
  config.validate();

  const auto dom = dom_args.load();
  const std::vector<Trajectory> corpus = read_corpus_file(corpus_path);
  if (corpus.empty()) throw InputError("corpus " + corpus_path.string() + " is empty");
  const TrainedModel model = train(dom, corpus, config);
  save_checkpoint(out_dir, model);
  out << "trained on " << corpus.size() << " trajectories: " << model.summary.iterations << " iterations, "
      << model.dictionary.size() << " atoms, mean reconstruction error "
      << mean_reconstruction_error(vectorize_corpus(corpus, *dom), model.dictionary, model.final_R.codes)
      << " bits\n";
  return 0;
}

}  // namespace

double parse_time_of_day(const std::string& text) {
  if (text.find(':') == std::string::npos) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) throw ConfigError("bad time '" + text + "'");
    return v;
  }
  int h = 0, m = 0, s = 0;
  char extra = 0;
  const int got = std::sscanf(text.c_str(), "%d:%d:%d%c", &h, &m, &s, &extra);
  if (got < 2 || got > 3 || h < 0 || h > 23 || m < 0 || m > 59 || s < 0 || s > 59) {
    throw ConfigError("bad time '" + text + "', expected HH:MM[:SS]");
  }
  return h * 3600.0 + m * 60.0 + s;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pathlet dictionary learning and trajectory generation", "pathlet"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // train
  auto* train_cmd = app.add_subcommand("train", "Learn a dictionary and VAE from a corpus");
  std::string corpus_path, config_path, train_out;
  std::vector<std::string> sets;
  DomainArgs train_dom;
  TrainingConfig flags;
  bool conditional = false;
  train_cmd->add_option("--corpus", corpus_path, "Training corpus (JSON lines)")->required();
  train_dom.attach(train_cmd);
  train_cmd->add_option("--config", config_path, "key=value config file");
  train_cmd->add_option("--set", sets, "Config override key=value (repeatable)");
  auto* latent_opt = train_cmd->add_option("--latent", flags.latent_dim, "Latent dimension K");
  auto* seed_opt = train_cmd->add_option("--seed", flags.seed, "Random seed");
  auto* iters_opt = train_cmd->add_option("--max-iters", flags.max_iters, "Iteration budget");
  train_cmd->add_flag("--conditional", conditional, "Train a conditional model (prefix + departure time)");
  train_cmd->add_option("--out", train_out, "Checkpoint directory")->required();

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Sample trajectories from a checkpoint");
  std::string ckpt, gen_out, prefix_text, time_text;
  int count = 0;
  GenerationRequest req;
  bool no_repair = false;
  gen_cmd->add_option("--ckpt", ckpt, "Checkpoint directory")->required();
  gen_cmd->add_option("--count", count, "Number of trajectories")->required();
  gen_cmd->add_option("--out", gen_out, "Output corpus (JSON lines)")->required();
  gen_cmd->add_option("--seed", req.seed, "Random seed");
  gen_cmd->add_option("--prefix", prefix_text, "Comma-separated prefix units (conditional models)");
  gen_cmd->add_option("--time", time_text, "Departure time HH:MM[:SS] or seconds (conditional models)");
  gen_cmd->add_option("--threshold", req.threshold, "Reconstruction threshold in (0,1)");
  gen_cmd->add_option("--gap-limit", req.repair_options.gap_limit, "Longest bridge, in steps");
  gen_cmd->add_flag("--no-repair", no_repair, "Emit raw unions without connectivity repair");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "JSD between the visitation distributions of two corpora");
  std::string real_path, cand_path, eval_out, eval_ckpt;
  DomainArgs eval_dom;
  double noise = 0.0;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--real", real_path, "Reference corpus")->required();
  eval_cmd->add_option("--gen", cand_path, "Compared corpus")->required();
  eval_dom.attach(eval_cmd);
  eval_cmd->add_option("--ckpt", eval_ckpt, "Take the domain from this checkpoint");
  eval_cmd->add_option("--noise", noise, "Erasure rate applied to the reference corpus first");
  eval_cmd->add_option("--seed", eval_seed, "Random seed for --noise");
  eval_cmd->add_option("--out", eval_out, "Also write the report here");

  // denoise
  auto* den_cmd = app.add_subcommand("denoise", "Recover trajectories from noisy observations");
  std::string den_ckpt, den_in, den_out, den_report;
  DomainArgs den_dom;
  double lambda = -1.0;
  std::uint64_t den_seed = 0;
  den_cmd->add_option("--ckpt", den_ckpt, "Checkpoint directory")->required();
  den_cmd->add_option("--in", den_in, "Noisy corpus (JSON lines)")->required();
  den_cmd->add_option("--out", den_out, "Cleaned corpus (JSON lines)")->required();
  den_cmd->add_option("--report", den_report, "Per-trajectory CSV (default: <out>.report.csv)");
  den_cmd->add_option("--lambda", lambda, "Sparsity weight (default: the checkpoint's lambda2)");
  den_cmd->add_option("--seed", den_seed, "Random seed");
  den_dom.attach(den_cmd);

  // synth
  auto* syn_cmd = app.add_subcommand("synth", "Write a planted-dictionary corpus");
  DomainArgs syn_dom;
  SynthParams sp;
  std::string atom_len = "4-8", per_traj = "1-3", syn_out;
  std::uint64_t syn_seed = 0;
  syn_dom.attach(syn_cmd);
  syn_cmd->add_option("--atoms", sp.n_atoms, "Number of planted atoms");
  syn_cmd->add_option("--traj", sp.n_traj, "Number of trajectories");
  syn_cmd->add_option("--atom-len", atom_len, "Atom length range N-M");
  syn_cmd->add_option("--per-traj", per_traj, "Atoms per trajectory N-M");
  syn_cmd->add_option("--seed", syn_seed, "Random seed");
  syn_cmd->add_option("--out", syn_out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) {
      return cmd_train(corpus_path, train_dom, config_path, sets, flags, latent_opt->count() > 0,
                       seed_opt->count() > 0, iters_opt->count() > 0, conditional, train_out, out);
    }

    if (gen_cmd->parsed()) {
      if (count <= 0) throw ConfigError("--count must be positive");
      const TrainedModel model = load_checkpoint(ckpt);
      req.count = count;
      req.repair = !no_repair;
      std::optional<double> depart;
      if (!prefix_text.empty() || !time_text.empty()) {
        if (!model.vae.conditional()) {
          throw ConfigError("--prefix/--time need a conditional model; this checkpoint is unconditional");
        }
        if (prefix_text.empty() || time_text.empty()) throw ConfigError("conditional generation needs --prefix and --time");
        const Trajectory prefix = parse_prefix(prefix_text, *model.domain);
        depart = parse_time_of_day(time_text);
        req.condition =
            GenerationCondition{vectorize(prefix, *model.domain), time_bucket(*depart, model.vae.time_buckets())};
      }
      std::vector<Trajectory> trajectories = generate(model, req);
      for (Trajectory& t : trajectories) t.timestamp = depart;
      write_corpus_file(gen_out, trajectories);
      nlohmann::ordered_json meta;
      meta["model_hash"] = hex64(checkpoint_hash(ckpt));
      meta["seed"] = req.seed;
      meta["count"] = req.count;
      meta["threshold"] = req.threshold;
      meta["repair"] = req.repair;
      meta["gap_limit"] = req.repair_options.gap_limit;
      meta["prefix"] = prefix_text.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(prefix_text);
      meta["time"] = depart ? nlohmann::ordered_json(*depart) : nlohmann::ordered_json(nullptr);
      write_text_file(gen_out + ".meta.json", meta.dump() + "\n");
      out << "wrote " << trajectories.size() << " trajectories to " << gen_out << "\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      std::shared_ptr<const SpatialDomain> dom;
      if (!eval_ckpt.empty()) {
        if (eval_dom.given()) throw ConfigError("give either --ckpt or a domain option, not both");
        dom = std::make_shared<const SpatialDomain>(domain_from_json(read_text_file(fs::path(eval_ckpt) / "domain.json")));
      } else {
        dom = eval_dom.load();
      }
      std::vector<Trajectory> real = read_corpus_file(real_path);
      const std::vector<Trajectory> cand = read_corpus_file(cand_path);
      if (noise > 0.0) {
        Rng rng = Rng::derive(eval_seed, "noise");
        real = inject_noise(real, noise, rng);
      }
      if (real.empty() || cand.empty()) throw InputError("eval needs two non-empty corpora");
      const std::string report = eval_report_to_json(evaluate(real, cand, *dom));
      if (!eval_out.empty()) write_text_file(eval_out, report + "\n");
      out << report << "\n";
      return 0;
    }

    if (den_cmd->parsed()) {
      const TrainedModel model = load_checkpoint(den_ckpt);
      if (den_dom.given() && !(*den_dom.load() == *model.domain)) {
        throw ConfigError("the given domain does not match the checkpoint's domain");
      }
      DenoiseOptions opt;
      opt.lambda = lambda >= 0.0 ? lambda : model.config.lambda2;
      const std::vector<Trajectory> noisy = read_corpus_file(den_in);
      Rng rng = Rng::derive(den_seed, "denoise");
      std::vector<Trajectory> cleaned;
      std::ostringstream report;
      report << "bits_in,bits_out,recon_error,atoms_used\n";
      for (const Trajectory& t : noisy) {
        const BinaryPathVector x = vectorize(t, *model.domain);
        try {
          DenoiseResult res = denoise(x, model, opt, rng);
          res.trajectory.timestamp = t.timestamp;
          report << x.count() << ',' << vectorize(res.trajectory, *model.domain).count() << ','
                 << hamming_distance(x, res.reconstruction) << ',' << res.code.sum() << '\n';
          cleaned.push_back(std::move(res.trajectory));
        } catch (const DenoiseError&) {
          // Unexplained observations pass through unchanged.
          report << x.count() << ',' << x.count() << ',' << x.count() << ",0\n";
          cleaned.push_back(t);
        }
      }
      write_corpus_file(den_out, cleaned);
      write_text_file(den_report.empty() ? den_out + ".report.csv" : den_report, report.str());
      out << "denoised " << cleaned.size() << " trajectories into " << den_out << "\n";
      return 0;
    }

    if (syn_cmd->parsed()) {
      std::tie(sp.atom_len_min, sp.atom_len_max) = parse_range(atom_len, "--atom-len");
      std::tie(sp.atoms_per_traj_min, sp.atoms_per_traj_max) = parse_range(per_traj, "--per-traj");
      const auto dom = syn_dom.load();
      Rng rng = Rng::derive(syn_seed, "synth");
      const PlantedCorpus planted = synth_corpus(*dom, sp, rng);
      fs::create_directories(syn_out);
      write_corpus_file(fs::path(syn_out) / "corpus.jsonl", planted.corpus);
      write_text_file(fs::path(syn_out) / "truth_dict.json", dictionary_to_json(planted.true_dictionary) + "\n");
      write_text_file(fs::path(syn_out) / "truth_repr.json", representation_to_json(planted.true_R) + "\n");
      write_text_file(fs::path(syn_out) / "domain.json", domain_to_json(*dom) + "\n");
      out << "wrote " << planted.corpus.size() << " trajectories over " << sp.n_atoms << " atoms to " << syn_out
          << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace pathlet::cli
