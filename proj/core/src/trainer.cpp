#include "pathlet/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "pathlet/denoise.hpp"
#include "pathlet/errors.hpp"
#include "pathlet/generator.hpp"

namespace pathlet {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError("config " + key + ": not a number: '" + v + "'");
  return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError("config " + key + ": not an integer: '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config " + key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

MatrixXd gather_columns(const MatrixXd& M, const std::vector<Index>& cols) {
  MatrixXd out(M.rows(), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Index>(i)) = M.col(cols[i]);
  return out;
}

StepBatch draw_batch(Index N, int batch_size, int latent_dim, Rng& items, Rng& noise) {
  StepBatch batch;
  const auto B = std::min<Index>(batch_size, N);
  batch.items.resize(static_cast<std::size_t>(B));
  for (auto& i : batch.items) i = static_cast<Index>(items.uniform_index(static_cast<std::size_t>(N)));
  batch.eps = draw_noise(latent_dim, B, noise);
  return batch;
}

// Best-improvement single-flip search on ||x - D r||^2 + lambda2 |r| over
// atoms with allowed[j]. `y` holds D r and is kept in sync. Returns the cost.
double improve_code(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::VectorXd& y,
                    const std::vector<std::vector<Index>>& atom_units, const std::vector<bool>& allowed,
                    double lambda2) {
  for (;;) {
    double best = -1e-12;
    Index best_atom = -1;
    for (std::size_t j = 0; j < atom_units.size(); ++j) {
      const bool on = r(static_cast<Index>(j)) > 0.5;
      if (!on && !allowed[j]) continue;
      double delta = on ? -lambda2 : lambda2;
      for (Index u : atom_units[j]) {
        const double d = x(u) - y(u);
        delta += on ? 1.0 + 2.0 * d : 1.0 - 2.0 * d;
      }
      if (delta < best) {
        best = delta;
        best_atom = static_cast<Index>(j);
      }
    }
    if (best_atom < 0) break;
    const double sign = r(best_atom) > 0.5 ? -1.0 : 1.0;
    r(best_atom) += sign;
    for (Index u : atom_units[static_cast<std::size_t>(best_atom)]) y(u) += sign;
  }
  return (x - y).squaredNorm() + lambda2 * r.sum();
}

}  // namespace

std::vector<Index> mdl_prune(const MatrixXd& X, const MatrixXd& D, MatrixXd& R, double lambda1, double lambda2) {
  if (D.rows() != X.rows() || D.cols() != R.rows() || R.cols() != X.cols()) throw ShapeError("mdl_prune: shapes disagree");
  if (!is_binary(D) || !is_binary(R)) throw ConfigError("mdl_prune needs binary D and R");
  const auto n = static_cast<std::size_t>(D.cols());
  std::vector<std::vector<Index>> atom_units(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (Index u = 0; u < D.rows(); ++u) {
      if (D(u, static_cast<Index>(j)) > 0.5) atom_units[j].push_back(u);
    }
  }
  std::vector<bool> alive(n);
  for (std::size_t j = 0; j < n; ++j) alive[j] = R.row(static_cast<Index>(j)).sum() > 0.0;

  for (bool removed = true; removed;) {
    removed = false;
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t j = 0; j < n; ++j) {
      if (alive[j]) order.emplace_back(R.row(static_cast<Index>(j)).sum(), j);
    }
    std::sort(order.begin(), order.end());
    for (const auto& [usage_at_start, j] : order) {
      const auto jj = static_cast<Index>(j);
      // Only atoms already in use may absorb the load, so no new lambda1 is paid.
      std::vector<bool> allowed(n);
      for (std::size_t a = 0; a < n; ++a) allowed[a] = a != j && alive[a] && R.row(static_cast<Index>(a)).sum() > 0.0;
      double delta = -lambda1;
      std::vector<std::pair<Index, Eigen::VectorXd>> recoded;
      for (Index i = 0; i < R.cols(); ++i) {
        if (R(jj, i) < 0.5) continue;
        const Eigen::VectorXd x = X.col(i);
        Eigen::VectorXd r = R.col(i);
        const double before = (x - D * r).squaredNorm() + lambda2 * r.sum();
        r(jj) = 0.0;
        Eigen::VectorXd y = D * r;
        delta += improve_code(x, r, y, atom_units, allowed, lambda2) - before;
        recoded.emplace_back(i, std::move(r));
      }
      if (delta < -1e-9) {
        alive[j] = false;
        for (auto& [i, r] : recoded) R.col(i) = r;
        removed = true;
      }
    }
  }
  std::vector<Index> kept;
  for (std::size_t j = 0; j < n; ++j) {
    if (alive[j] && R.row(static_cast<Index>(j)).sum() > 0.0) kept.push_back(static_cast<Index>(j));
  }
  return kept;
}

void TrainingConfig::validate() const {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be > 0");
  require(convergence_tol > 0.0, "convergence_tol must be > 0");
  require(rounding_scale >= 1.0, "rounding_scale must be >= 1");
  require(lambda1 >= 0.0 && lambda2 >= 0.0, "lambda1 and lambda2 must be >= 0");
  require(latent_dim >= 1, "latent_dim must be >= 1");
  require(max_iters >= 1, "max_iters must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(!dict_size_cap || *dict_size_cap >= 1, "dict_size_cap must be >= 1");
  require(vae_warmup_iters >= 0, "vae_warmup_iters must be >= 0");
  require(time_buckets >= 1, "time_buckets must be >= 1");
  require(std::all_of(hidden.begin(), hidden.end(), [](int w) { return w >= 1; }), "hidden widths must be >= 1");
  require(vae_iters >= 0, "vae_iters must be >= 0");
  require(vae_learning_rate > 0.0, "vae_learning_rate must be > 0");
  require(vae_batch_size >= 1, "vae_batch_size must be >= 1");
  require(refit_iters >= 1, "refit_iters must be >= 1");
  require(refit_tol > 0.0, "refit_tol must be > 0");
}

void set_config_value(TrainingConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "learning_rate") c.learning_rate = to_double(key, v);
  else if (key == "convergence_tol") c.convergence_tol = to_double(key, v);
  else if (key == "rounding_scale") c.rounding_scale = to_double(key, v);
  else if (key == "lambda1") c.lambda1 = to_double(key, v);
  else if (key == "lambda2") c.lambda2 = to_double(key, v);
  else if (key == "latent_dim") c.latent_dim = to_int<int>(key, v);
  else if (key == "max_iters") c.max_iters = to_int<int>(key, v);
  else if (key == "batch_size") c.batch_size = to_int<int>(key, v);
  else if (key == "seed") c.seed = to_int<std::uint64_t>(key, v);
  else if (key == "dict_size_cap") c.dict_size_cap = v == "auto" ? std::nullopt : std::optional<int>(to_int<int>(key, v));
  else if (key == "vae_warmup_iters") c.vae_warmup_iters = to_int<int>(key, v);
  else if (key == "conditional") c.conditional = to_bool(key, v);
  else if (key == "time_buckets") c.time_buckets = to_int<int>(key, v);
  else if (key == "activation") c.activation = parse_activation(v);
  else if (key == "hidden") {
    c.hidden.clear();
    if (v != "auto") {
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) c.hidden.push_back(to_int<int>(key, trim(item)));
    }
  } else if (key == "vae_iters") c.vae_iters = to_int<int>(key, v);
  else if (key == "vae_learning_rate") c.vae_learning_rate = to_double(key, v);
  else if (key == "vae_batch_size") c.vae_batch_size = to_int<int>(key, v);
  else if (key == "refit_iters") c.refit_iters = to_int<int>(key, v);
  else if (key == "refit_tol") c.refit_tol = to_double(key, v);
  else if (key == "mdl_prune") c.mdl_prune = to_bool(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

TrainingConfig parse_training_config(std::istream& in, TrainingConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

void write_training_config(std::ostream& out, const TrainingConfig& c) {
  out << "learning_rate=" << fmt(c.learning_rate) << '\n'
      << "convergence_tol=" << fmt(c.convergence_tol) << '\n'
      << "rounding_scale=" << fmt(c.rounding_scale) << '\n'
      << "lambda1=" << fmt(c.lambda1) << '\n'
      << "lambda2=" << fmt(c.lambda2) << '\n'
      << "latent_dim=" << c.latent_dim << '\n'
      << "max_iters=" << c.max_iters << '\n'
      << "batch_size=" << c.batch_size << '\n'
      << "seed=" << c.seed << '\n'
      << "dict_size_cap=" << (c.dict_size_cap ? std::to_string(*c.dict_size_cap) : "auto") << '\n'
      << "vae_warmup_iters=" << c.vae_warmup_iters << '\n'
      << "conditional=" << (c.conditional ? "true" : "false") << '\n'
      << "time_buckets=" << c.time_buckets << '\n'
      << "activation=" << to_string(c.activation) << '\n'
      << "hidden=";
  if (c.hidden.empty()) out << "auto";
  for (std::size_t i = 0; i < c.hidden.size(); ++i) out << (i ? "," : "") << c.hidden[i];
  out << '\n'
      << "vae_iters=" << c.vae_iters << '\n'
      << "vae_learning_rate=" << fmt(c.vae_learning_rate) << '\n'
      << "vae_batch_size=" << c.vae_batch_size << '\n'
      << "refit_iters=" << c.refit_iters << '\n'
      << "refit_tol=" << fmt(c.refit_tol) << '\n'
      << "mdl_prune=" << (c.mdl_prune ? "true" : "false") << '\n';
}

StepLoss loss_step(TrainingState& state, const MatrixXd& X, const MatrixXd& cond, const StepBatch& batch,
                   const TrainingConfig& config) {
  if (state.phase != Phase::fractional) throw ConfigError("loss_step needs a fractional state");
  StepLoss out;
  out.dict = mdl_loss(X, state.D, state.R, config.lambda1, config.lambda2);
  MdlGradients grad = mdl_gradients(X, state.D, state.R, config.lambda1, config.lambda2);

  ElboEvaluation vae;
  if (!batch.items.empty()) {
    const MatrixXd Rb = gather_columns(state.R, batch.items);
    const MatrixXd Cb = cond.size() ? gather_columns(cond, batch.items) : MatrixXd();
    vae = elbo_evaluate(Rb, Cb, state.vae, batch.eps, true);
    out.elbo = vae.loss;
  }
  out.total = out.dict.total + out.elbo;
  if (!std::isfinite(out.total)) return out;

  if (!batch.items.empty() && state.iteration >= config.vae_warmup_iters) {
    for (std::size_t b = 0; b < batch.items.size(); ++b) {
      grad.codes.col(batch.items[b]) += vae.input_grad.col(static_cast<Index>(b));
    }
  }
  const double step = config.learning_rate;
  state.D = clip_unit_interval(state.D - step * grad.dict);
  state.R = clip_unit_interval(state.R - step * grad.codes);
  if (!batch.items.empty()) state.vae.params().add_scaled(vae.param_grad, -step);
  ++state.iteration;
  return out;
}

std::pair<MatrixXd, MatrixXd> initial_factors(const MatrixXd& X, int cap, Rng& rng) {
  const Index N = X.cols();
  // Distinct columns in first-occurrence order.
  std::map<std::vector<bool>, Index> seen;
  std::vector<Index> distinct;
  std::vector<Index> owner(static_cast<std::size_t>(N));
  for (Index i = 0; i < N; ++i) {
    std::vector<bool> key(static_cast<std::size_t>(X.rows()));
    for (Index r = 0; r < X.rows(); ++r) key[static_cast<std::size_t>(r)] = X(r, i) > 0.5;
    auto [it, inserted] = seen.emplace(std::move(key), static_cast<Index>(distinct.size()));
    if (inserted) distinct.push_back(i);
    owner[static_cast<std::size_t>(i)] = it->second;
  }
  std::vector<Index> chosen(distinct.size());
  for (std::size_t k = 0; k < chosen.size(); ++k) chosen[k] = static_cast<Index>(k);
  if (static_cast<std::size_t>(cap) < distinct.size()) {
    // Partial Fisher-Yates; keep the sampled set in original order.
    for (std::size_t k = 0; k < static_cast<std::size_t>(cap); ++k) {
      const std::size_t j = k + rng.uniform_index(chosen.size() - k);
      std::swap(chosen[k], chosen[j]);
    }
    chosen.resize(static_cast<std::size_t>(cap));
    std::sort(chosen.begin(), chosen.end());
  }
  const auto n = static_cast<Index>(chosen.size());
  MatrixXd D(X.rows(), n);
  std::vector<Index> slot(distinct.size(), -1);
  for (Index j = 0; j < n; ++j) {
    D.col(j) = X.col(distinct[static_cast<std::size_t>(chosen[static_cast<std::size_t>(j)])]);
    slot[static_cast<std::size_t>(chosen[static_cast<std::size_t>(j)])] = j;
  }
  MatrixXd R = MatrixXd::Zero(n, N);
  for (Index i = 0; i < N; ++i) {
    Index j = slot[static_cast<std::size_t>(owner[static_cast<std::size_t>(i)])];
    if (j < 0) {
      double best = 0.0;
      for (Index c = 0; c < n; ++c) {
        const double d = (D.col(c) - X.col(i)).cwiseAbs().sum();
        if (j < 0 || d < best) {
          best = d;
          j = c;
        }
      }
    }
    R(j, i) = 1.0;
  }
  return {std::move(D), std::move(R)};
}

double mean_reconstruction_error(const MatrixXd& X, const PathletDictionary& D, const MatrixXd& R) {
  if (D.atoms.rows() != X.rows() || D.atoms.cols() != R.rows() || R.cols() != X.cols()) {
    throw ShapeError("mean_reconstruction_error: shapes disagree");
  }
  if (X.cols() == 0) return 0.0;
  const MatrixXd union_bits = ((D.atoms * R).array() >= 0.5).cast<double>();
  return (union_bits - X).cwiseAbs().sum() / static_cast<double>(X.cols());
}

TrainedModel train(const MatrixXd& X, const MatrixXd& cond, const TrainingConfig& config) {
  config.validate();
  if (X.size() == 0) throw InputError("train: empty data matrix");
  if (!is_binary(X)) throw InputError("train: data matrix must be binary");
  const Index N = X.cols();
  const Index units = X.rows();
  if (config.conditional && cond.cols() != N) throw ShapeError("train: conditional training needs one condition per trajectory");
  if (!config.conditional && cond.size() != 0) throw ConfigError("train: conditions given for an unconditional model");
  const int cond_dim = config.conditional ? static_cast<int>(cond.rows()) : 0;

  const std::uint64_t seed = config.seed;
  const int cap = config.dict_size_cap.value_or(static_cast<int>(std::min<Index>(N, 4 * units)));
  Rng init_rng = Rng::derive(seed, "init");
  TrainingState state;
  std::tie(state.D, state.R) = initial_factors(X, cap, init_rng);
  const auto n = static_cast<int>(state.D.cols());
  state.vae = VaeModel::create(n, config.latent_dim, cond_dim,
                               config.hidden.empty() ? VaeModel::default_hidden(n) : config.hidden,
                               config.activation, seed);

  TrainedModel model;
  model.config = config;
  model.summary.initial_atoms = static_cast<std::size_t>(n);

  Rng item_rng = Rng::derive(seed, "batch");
  Rng noise_rng = Rng::derive(seed, "latent");
  double previous = 0.0;
  for (int k = 0; k < config.max_iters; ++k) {
    const StepBatch batch = draw_batch(N, config.batch_size, config.latent_dim, item_rng, noise_rng);
    const StepLoss loss = loss_step(state, X, cond, batch, config);
    if (!std::isfinite(loss.total)) {
      throw TrainingDivergence("training diverged at iteration " + std::to_string(k), model.training_log);
    }
    model.training_log.push_back(
        {k, loss.dict.recon, loss.dict.dict_term, loss.dict.sparsity_term, loss.elbo, loss.total});
    // The dictionary loss is deterministic; the mini-batch ELBO is not.
    if (k > 0 && std::abs(loss.dict.total - previous) < config.convergence_tol) {
      model.converged = true;
      break;
    }
    previous = loss.dict.total;
  }
  model.summary.iterations = static_cast<int>(model.training_log.size());

  Rng round_rng = Rng::derive(seed, "rounding");
  const MatrixXd R_round = round_binary(state.R, config.rounding_scale, round_rng);
  const MatrixXd D_round = round_binary(state.D, config.rounding_scale, round_rng);

  // Atoms that survive rounding: used, nonempty and not a repeat.
  std::vector<Index> kept;
  std::map<std::vector<bool>, Index> seen;
  for (Index j = 0; j < n; ++j) {
    if (R_round.row(j).maxCoeff() <= 0.0 || D_round.col(j).maxCoeff() <= 0.0) continue;
    std::vector<bool> key(static_cast<std::size_t>(units));
    for (Index r = 0; r < units; ++r) key[static_cast<std::size_t>(r)] = D_round(r, j) > 0.5;
    if (seen.emplace(std::move(key), j).second) kept.push_back(j);
  }
  model.summary.rounded_atoms = kept.size();
  if (kept.empty()) kept.push_back(0);

  Rng refit_rng = Rng::derive(seed, "refit");
  MatrixXd D_fit = gather_columns(D_round, kept);
  SparseCodeBatch refit =
      sparse_code_batch(X, D_fit, config.lambda2, config.refit_iters, config.refit_tol, refit_rng);
  if (config.mdl_prune) {
    const std::vector<Index> survivors = mdl_prune(X, D_fit, refit.R, config.lambda1, config.lambda2);
    if (!survivors.empty() && survivors.size() < static_cast<std::size_t>(D_fit.cols())) {
      D_fit = gather_columns(D_fit, survivors);
      refit = sparse_code_batch(X, D_fit, config.lambda2, config.refit_iters, config.refit_tol, refit_rng);
    }
  }

  std::vector<Index> final_rows;
  for (Index j = 0; j < D_fit.cols(); ++j) {
    if (refit.R.row(j).maxCoeff() > 0.0) final_rows.push_back(j);
  }
  if (final_rows.empty()) final_rows.push_back(0);
  const auto n_final = static_cast<Index>(final_rows.size());
  model.dictionary.atoms = gather_columns(D_fit, final_rows);
  model.dictionary.phase = Phase::binary;
  model.final_R.codes.resize(n_final, N);
  for (Index j = 0; j < n_final; ++j) model.final_R.codes.row(j) = refit.R.row(final_rows[static_cast<std::size_t>(j)]);
  model.final_R.phase = Phase::binary;
  model.summary.final_atoms = static_cast<std::size_t>(n_final);

  // The joint-phase VAE saw a representation over the unpruned atoms; a fresh
  // network sized for the final dictionary is fit to the binary final_R.
  const int nf = static_cast<int>(n_final);
  model.vae = VaeModel::create(nf, config.latent_dim, cond_dim,
                               config.hidden.empty() ? VaeModel::default_hidden(nf) : config.hidden,
                               config.activation, mix_seed(seed ^ fnv1a64("vae-final")));
  Rng fit_items = Rng::derive(seed, "vae-batch");
  Rng fit_noise = Rng::derive(seed, "vae-latent");
  for (int it = 0; it < config.vae_iters; ++it) {
    const StepBatch batch = draw_batch(N, config.vae_batch_size, config.latent_dim, fit_items, fit_noise);
    const MatrixXd Rb = gather_columns(model.final_R.codes, batch.items);
    const MatrixXd Cb = cond_dim ? gather_columns(cond, batch.items) : MatrixXd();
    const ElboEvaluation ev = elbo_evaluate(Rb, Cb, model.vae, batch.eps, true);
    if (!std::isfinite(ev.loss)) {
      throw TrainingDivergence("VAE fit diverged at iteration " + std::to_string(it), model.training_log);
    }
    model.vae.params().add_scaled(ev.param_grad, -config.vae_learning_rate);
    model.summary.vae_final_loss = ev.loss;
  }
  if (config.conditional) model.vae.set_time_buckets(config.time_buckets);
  return model;
}

TrainedModel train(std::shared_ptr<const SpatialDomain> dom, std::span<const Trajectory> corpus,
                   const TrainingConfig& config) {
  if (!dom) throw InputError("train: no domain");
  if (corpus.empty()) throw InputError("train: empty corpus");
  const MatrixXd X = vectorize_corpus(corpus, *dom);
  const MatrixXd cond = config.conditional ? corpus_conditions(corpus, *dom, config.time_buckets) : MatrixXd();
  TrainedModel model = train(X, cond, config);
  model.domain = std::move(dom);
  return model;
}

}  // namespace pathlet
