#include "pathlet/bvae.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pathlet/errors.hpp"

namespace pathlet {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

MatrixXd activate(const MatrixXd& a, Activation act) {
  switch (act) {
    case Activation::tanh:
      return a.array().tanh().matrix();
    case Activation::relu:
      return a.cwiseMax(0.0);
  }
  return a;
}

// Derivative expressed through the activation output h.
MatrixXd activation_slope(const MatrixXd& h, Activation act) {
  switch (act) {
    case Activation::tanh:
      return (1.0 - h.array().square()).matrix();
    case Activation::relu:
      return (h.array() > 0.0).cast<double>().matrix();
  }
  return MatrixXd::Ones(h.rows(), h.cols());
}

// Forward through a stack of dense layers. `inputs` receives the input of
// every layer (inputs[0] = x), which is all the backward pass needs.
MatrixXd mlp_forward(const std::vector<DenseLayer>& layers, const MatrixXd& x, Activation act,
                     std::vector<MatrixXd>* inputs) {
  MatrixXd h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (inputs) inputs->push_back(h);
    MatrixXd a = layers[l].weight * h;
    a.colwise() += layers[l].bias;
    h = (l + 1 < layers.size()) ? activate(a, act) : std::move(a);
  }
  return h;
}

MatrixXd mlp_backward(const std::vector<DenseLayer>& layers, const std::vector<MatrixXd>& inputs,
                      MatrixXd grad_out, Activation act, std::vector<DenseLayer>& grads) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads[l].weight.noalias() += grad_out * inputs[l].transpose();
    grads[l].bias += grad_out.rowwise().sum();
    MatrixXd grad_in = layers[l].weight.transpose() * grad_out;
    if (l > 0) grad_in.array() *= activation_slope(inputs[l], act).array();
    grad_out = std::move(grad_in);
  }
  return grad_out;
}

std::vector<DenseLayer> make_stack(int in, const std::vector<int>& hidden, int out, Rng& rng) {
  std::vector<DenseLayer> layers;
  int fan_in = in;
  auto push = [&](int fan_out) {
    DenseLayer layer;
    layer.weight.resize(fan_out, fan_in);
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = (2.0 * rng.uniform() - 1.0) * a;
    }
    layer.bias = VectorXd::Zero(fan_out);
    layers.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (int w : hidden) push(w);
  push(out);
  return layers;
}

template <class F>
void visit_layers(std::vector<DenseLayer>& a, F&& f) {
  for (auto& l : a) f(l);
}

void check_cond(const VaeModel& model, Eigen::Index rows, Eigen::Index cols, Eigen::Index expected_cols) {
  if (model.cond_dim() == 0) {
    if (rows != 0 && cols != 0) throw ShapeError("unconditional model given a condition");
    return;
  }
  if (rows != model.cond_dim() || cols != expected_cols) {
    throw ShapeError("condition must have " + std::to_string(model.cond_dim()) + " rows for this model");
  }
}

MatrixXd stack_rows(const MatrixXd& top, const MatrixXd& bottom, Eigen::Index cols) {
  if (bottom.size() == 0) return top;
  MatrixXd out(top.rows() + bottom.rows(), cols);
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

struct DecoderPass {
  MatrixXd f_m;
  MatrixXd f_p;
  std::vector<MatrixXd> m_inputs;
  std::vector<MatrixXd> p_inputs;
};

DecoderPass decoder_forward(const VaeModel& model, const MatrixXd& zc, bool keep) {
  DecoderPass pass;
  pass.f_m = mlp_forward(model.params().decoder_m, zc, model.activation(), keep ? &pass.m_inputs : nullptr);
  pass.f_p = mlp_forward(model.params().decoder_p, zc, model.activation(), keep ? &pass.p_inputs : nullptr);
  return pass;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
  }
  return "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t VaeParameters::size() const {
  std::size_t n = 0;
  for (const auto* stack : {&encoder, &decoder_m, &decoder_p}) {
    for (const auto& l : *stack) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

Eigen::VectorXd VaeParameters::flatten() const {
  VectorXd flat(static_cast<Eigen::Index>(size()));
  Eigen::Index pos = 0;
  for (const auto* stack : {&encoder, &decoder_m, &decoder_p}) {
    for (const auto& l : *stack) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat(pos++) = l.weight(r, c);
      }
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) flat(pos++) = l.bias(i);
    }
  }
  return flat;
}

void VaeParameters::assign(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != size()) throw ShapeError("parameter vector length mismatch");
  Eigen::Index pos = 0;
  for (auto* stack : {&encoder, &decoder_m, &decoder_p}) {
    for (auto& l : *stack) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat(pos++);
      }
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = flat(pos++);
    }
  }
}

void VaeParameters::add_scaled(const VaeParameters& other, double scale) {
  auto add = [scale](std::vector<DenseLayer>& dst, const std::vector<DenseLayer>& src) {
    if (dst.size() != src.size()) throw ShapeError("parameter layout mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i].weight += scale * src[i].weight;
      dst[i].bias += scale * src[i].bias;
    }
  };
  add(encoder, other.encoder);
  add(decoder_m, other.decoder_m);
  add(decoder_p, other.decoder_p);
}

VaeParameters VaeParameters::zeros_like() const {
  VaeParameters z = *this;
  for (auto* stack : {&z.encoder, &z.decoder_m, &z.decoder_p}) {
    visit_layers(*stack, [](DenseLayer& l) {
      l.weight.setZero();
      l.bias.setZero();
    });
  }
  return z;
}

bool VaeParameters::all_finite() const {
  for (const auto* stack : {&encoder, &decoder_m, &decoder_p}) {
    for (const auto& l : *stack) {
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
  }
  return true;
}

VaeModel VaeModel::create(int input_dim, int latent_dim, int cond_dim, std::vector<int> hidden,
                          Activation activation, std::uint64_t seed) {
  if (input_dim < 1 || latent_dim < 1 || cond_dim < 0) {
    throw ConfigError("VAE needs input_dim >= 1, latent_dim >= 1, cond_dim >= 0");
  }
  for (int w : hidden) {
    if (w < 1) throw ConfigError("hidden widths must be positive");
  }
  VaeModel model;
  model.input_dim_ = input_dim;
  model.latent_dim_ = latent_dim;
  model.cond_dim_ = cond_dim;
  model.hidden_ = std::move(hidden);
  model.activation_ = activation;
  model.seed_ = seed;
  Rng rng = Rng::derive(seed, "vae-init");
  model.params_.encoder = make_stack(input_dim + cond_dim, model.hidden_, 2 * latent_dim, rng);
  model.params_.decoder_m = make_stack(latent_dim + cond_dim, model.hidden_, input_dim, rng);
  model.params_.decoder_p = make_stack(latent_dim + cond_dim, model.hidden_, input_dim, rng);
  return model;
}

std::vector<int> VaeModel::default_hidden(int input_dim) {
  const int width = std::min(256, std::max(64, 2 * input_dim));
  return {width, width};
}

VaeModel VaeModel::select_inputs(const std::vector<int>& keep) const {
  for (int j : keep) {
    if (j < 0 || j >= input_dim_) throw ShapeError("select_inputs: index out of range");
  }
  if (keep.empty()) throw ShapeError("select_inputs: nothing to keep");
  VaeModel out = *this;
  out.input_dim_ = static_cast<int>(keep.size());
  const auto k = static_cast<Eigen::Index>(keep.size());

  DenseLayer& first = out.params_.encoder.front();
  const DenseLayer& src = params_.encoder.front();
  first.weight.resize(src.weight.rows(), k + cond_dim_);
  for (Eigen::Index i = 0; i < k; ++i) first.weight.col(i) = src.weight.col(keep[static_cast<std::size_t>(i)]);
  first.weight.rightCols(cond_dim_) = src.weight.rightCols(cond_dim_);

  auto slice_out = [&](DenseLayer& dst, const DenseLayer& from) {
    dst.weight.resize(k, from.weight.cols());
    dst.bias.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      dst.weight.row(i) = from.weight.row(keep[static_cast<std::size_t>(i)]);
      dst.bias(i) = from.bias(keep[static_cast<std::size_t>(i)]);
    }
  };
  slice_out(out.params_.decoder_m.back(), params_.decoder_m.back());
  slice_out(out.params_.decoder_p.back(), params_.decoder_p.back());
  return out;
}

bool operator==(const VaeModel& a, const VaeModel& b) {
  return a.input_dim_ == b.input_dim_ && a.latent_dim_ == b.latent_dim_ && a.cond_dim_ == b.cond_dim_ &&
         a.time_buckets_ == b.time_buckets_ && a.hidden_ == b.hidden_ && a.activation_ == b.activation_ &&
         a.seed_ == b.seed_ && a.params_.flatten() == b.params_.flatten();
}

EncoderOutput encode(const Eigen::VectorXd& r, const Eigen::VectorXd& cond, const VaeModel& model) {
  if (r.size() != model.input_dim()) throw ShapeError("encode: r has wrong length");
  check_cond(model, cond.size(), cond.size() == 0 ? 0 : 1, 1);
  const MatrixXd out = mlp_forward(model.params().encoder, stack_rows(r, cond, 1), model.activation(), nullptr);
  const auto K = model.latent_dim();
  return {out.col(0).head(K), out.col(0).tail(K)};
}

LatentSample reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var, Rng& rng) {
  if (mu.size() != log_var.size()) throw ShapeError("reparameterize: mu and log_var differ in length");
  LatentSample s{mu, log_var, VectorXd(mu.size()), VectorXd(mu.size())};
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    s.eps(k) = rng.normal();
    s.z(k) = mu(k) + std::exp(0.5 * log_var(k)) * s.eps(k);
  }
  return s;
}

BernoulliParams decode(const Eigen::VectorXd& z, const Eigen::VectorXd& cond, const VaeModel& model) {
  if (z.size() != model.latent_dim()) throw ShapeError("decode: z has wrong length");
  check_cond(model, cond.size(), cond.size() == 0 ? 0 : 1, 1);
  const DecoderPass pass = decoder_forward(model, stack_rows(z, cond, 1), false);
  const auto n = model.input_dim();
  BernoulliParams out{VectorXd(n), VectorXd(n), VectorXd(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const double fm = pass.f_m(j, 0);
    const double fp = pass.f_p(j, 0);
    out.m(j) = std::exp(fm);
    out.p(j) = sigmoid(fp);
    // p^m = exp(m * log p) = exp(-m * softplus(-f_p))
    out.prob_one(j) = -std::expm1(-out.m(j) * softplus(-fp));
  }
  return out;
}

Eigen::MatrixXd decode_prob_one(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& cond, const VaeModel& model) {
  if (Z.rows() != model.latent_dim()) throw ShapeError("decode: Z has wrong row count");
  check_cond(model, cond.rows(), cond.cols(), Z.cols());
  const DecoderPass pass = decoder_forward(model, stack_rows(Z, cond, Z.cols()), false);
  MatrixXd q(pass.f_m.rows(), pass.f_m.cols());
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    for (Eigen::Index j = 0; j < q.rows(); ++j) {
      q(j, c) = -std::expm1(-std::exp(pass.f_m(j, c)) * softplus(-pass.f_p(j, c)));
    }
  }
  return q;
}

double bernoulli_loglik(const Eigen::VectorXd& r, const BernoulliParams& params) {
  if (r.size() != params.prob_one.size()) throw ShapeError("bernoulli_loglik: length mismatch");
  double ll = 0.0;
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    const double q = std::clamp(params.prob_one(j), kProbFloor, 1.0 - kProbFloor);
    ll += r(j) * std::log(q) + (1.0 - r(j)) * std::log1p(-q);
  }
  return ll;
}

double kl_gauss(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var) {
  if (mu.size() != log_var.size()) throw ShapeError("kl_gauss: mu and log_var differ in length");
  return 0.5 * (mu.array().square() + log_var.array().exp() - log_var.array() - 1.0).sum();
}

ElboEvaluation elbo_evaluate(const Eigen::MatrixXd& batch_R, const Eigen::MatrixXd& cond_batch,
                             const VaeModel& model, const Eigen::MatrixXd& eps, bool with_gradients) {
  const Eigen::Index B = batch_R.cols();
  const int n = model.input_dim();
  const int K = model.latent_dim();
  if (B == 0) throw InputError("elbo: empty batch");
  if (batch_R.rows() != n) throw ShapeError("elbo: batch has wrong row count");
  if (eps.rows() != K || eps.cols() != B) throw ShapeError("elbo: noise matrix has wrong shape");
  check_cond(model, cond_batch.rows(), cond_batch.cols(), B);

  const Activation act = model.activation();
  std::vector<MatrixXd> enc_inputs;
  const MatrixXd enc_out =
      mlp_forward(model.params().encoder, stack_rows(batch_R, cond_batch, B), act, with_gradients ? &enc_inputs : nullptr);
  const MatrixXd mu = enc_out.topRows(K);
  const MatrixXd log_var = enc_out.bottomRows(K);
  const MatrixXd sigma = (0.5 * log_var.array()).exp().matrix();
  const MatrixXd z = mu + sigma.cwiseProduct(eps);

  DecoderPass dec = decoder_forward(model, stack_rows(z, cond_batch, B), with_gradients);

  ElboEvaluation out;
  MatrixXd grad_fm;
  MatrixXd grad_fp;
  if (with_gradients) {
    grad_fm.resize(n, B);
    grad_fp.resize(n, B);
    out.input_grad.resize(n, B);
  }
  const double inv_b = 1.0 / static_cast<double>(B);
  double neg_ll = 0.0;
  for (Eigen::Index c = 0; c < B; ++c) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double m = std::exp(dec.f_m(j, c));
      const double sp = softplus(-dec.f_p(j, c));
      const double u = m * sp;  // -log(1 - q)
      const double q = -std::expm1(-u);
      const double r = batch_R(j, c);
      double log_q;
      double log_1mq;
      double dl_du = 0.0;  // d(-loglik)/du
      if (q < kProbFloor) {
        log_q = std::log(kProbFloor);
        log_1mq = std::log1p(-kProbFloor);
      } else if (q > 1.0 - kProbFloor) {
        log_q = std::log1p(-kProbFloor);
        log_1mq = std::log(kProbFloor);
      } else {
        log_q = std::log(q);
        log_1mq = -u;
        // d log q / du = exp(-u) / q = 1 / expm1(u)
        dl_du = -r / std::expm1(u) + (1.0 - r);
      }
      neg_ll -= r * log_q + (1.0 - r) * log_1mq;
      if (with_gradients) {
        grad_fm(j, c) = dl_du * u * inv_b;
        grad_fp(j, c) = dl_du * (-m * sigmoid(-dec.f_p(j, c))) * inv_b;
        out.input_grad(j, c) = -(log_q - log_1mq) * inv_b;
      }
    }
  }
  const double kl = 0.5 * (mu.array().square() + log_var.array().exp() - log_var.array() - 1.0).sum();
  out.neg_loglik = neg_ll * inv_b;
  out.kl = kl * inv_b;
  out.loss = out.neg_loglik + out.kl;
  if (!with_gradients) return out;

  out.param_grad = model.params().zeros_like();
  MatrixXd grad_zc = mlp_backward(model.params().decoder_m, dec.m_inputs, std::move(grad_fm), act,
                                  out.param_grad.decoder_m);
  grad_zc += mlp_backward(model.params().decoder_p, dec.p_inputs, std::move(grad_fp), act, out.param_grad.decoder_p);
  const MatrixXd grad_z = grad_zc.topRows(K);

  MatrixXd grad_enc_out(2 * K, B);
  grad_enc_out.topRows(K) = grad_z + mu * inv_b;
  grad_enc_out.bottomRows(K) = (grad_z.array() * 0.5 * sigma.array() * eps.array() +
                                0.5 * (log_var.array().exp() - 1.0) * inv_b)
                                   .matrix();
  const MatrixXd grad_in =
      mlp_backward(model.params().encoder, enc_inputs, std::move(grad_enc_out), act, out.param_grad.encoder);
  out.input_grad += grad_in.topRows(n);
  return out;
}

Eigen::MatrixXd draw_noise(int latent_dim, Eigen::Index batch, Rng& rng) {
  MatrixXd eps(latent_dim, batch);
  for (Eigen::Index c = 0; c < batch; ++c) {
    for (Eigen::Index k = 0; k < latent_dim; ++k) eps(k, c) = rng.normal();
  }
  return eps;
}

double elbo_loss(const Eigen::MatrixXd& batch_R, const Eigen::MatrixXd& cond_batch, const VaeModel& model,
                 Rng& rng) {
  const MatrixXd eps = draw_noise(model.latent_dim(), batch_R.cols(), rng);
  return elbo_evaluate(batch_R, cond_batch, model, eps, false).loss;
}

Eigen::MatrixXd sample_r(const VaeModel& model, const Eigen::VectorXd& cond, int count, Rng& rng) {
  if (count < 1) throw InputError("sample_r: count must be >= 1");
  check_cond(model, cond.size(), cond.size() == 0 ? 0 : 1, 1);
  const MatrixXd Z = draw_noise(model.latent_dim(), count, rng);
  MatrixXd C;
  if (model.conditional()) C = cond.replicate(1, count);
  const MatrixXd q = decode_prob_one(Z, C, model);
  MatrixXd r(q.rows(), q.cols());
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    for (Eigen::Index j = 0; j < q.rows(); ++j) r(j, c) = rng.uniform() < q(j, c) ? 1.0 : 0.0;
  }
  return r;
}

}  // namespace pathlet
