#include <benchmark/benchmark.h>

#include "pathlet/denoise.hpp"
#include "pathlet/dictlearn.hpp"
#include "pathlet/eval.hpp"
#include "pathlet/generator.hpp"

namespace {

using namespace pathlet;
using Eigen::MatrixXd;

MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = rng.uniform();
  return M;
}

PlantedCorpus planted(const SpatialDomain& dom, int n_traj) {
  SynthParams sp;
  sp.n_traj = n_traj;
  Rng rng = Rng::derive(1, "synth");
  return synth_corpus(dom, sp, rng);
}

void BM_MdlLossAndGradients(benchmark::State& state) {
  const SpatialDomain dom = load_domain(GridSpec{10, 10});
  const PlantedCorpus p = planted(dom, static_cast<int>(state.range(0)));
  const MatrixXd X = vectorize_corpus(p.corpus, dom);
  Rng rng(2);
  const MatrixXd D = uniform_matrix(X.rows(), 64, rng);
  const MatrixXd R = uniform_matrix(64, X.cols(), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mdl_loss(X, D, R, 3.5, 0.1));
    benchmark::DoNotOptimize(mdl_gradients(X, D, R, 3.5, 0.1));
  }
  state.SetItemsProcessed(state.iterations() * X.cols());
}
BENCHMARK(BM_MdlLossAndGradients)->Arg(100)->Arg(500);

void BM_ElboEvaluate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const VaeModel m = VaeModel::create(n, 8, 0, VaeModel::default_hidden(n), Activation::tanh, 3);
  Rng rng(4);
  MatrixXd R = uniform_matrix(n, 64, rng);
  R = (R.array() < 0.1).cast<double>();
  const MatrixXd eps = draw_noise(8, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(elbo_evaluate(R, MatrixXd(), m, eps, true).loss);
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_ElboEvaluate)->Arg(20)->Arg(100);

void BM_SparseCode(benchmark::State& state) {
  const SpatialDomain dom = load_domain(GridSpec{10, 10});
  const PlantedCorpus p = planted(dom, 100);
  Rng rng(5);
  std::size_t i = 0;
  for (auto _ : state) {
    const Eigen::VectorXd x = vectorize(p.corpus[i++ % p.corpus.size()], dom).to_eigen();
    benchmark::DoNotOptimize(sparse_code(x, p.true_dictionary, 0.1, 1000, 1e-7, rng).objective);
  }
}
BENCHMARK(BM_SparseCode);

void BM_RepairConnectivity(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const SpatialDomain dom = load_domain(GridSpec{side, side});
  Rng rng(6);
  std::vector<BinaryPathVector> inputs;
  for (int k = 0; k < 64; ++k) {
    BinaryPathVector x(dom.size());
    for (std::size_t u = 0; u < dom.size(); ++u) {
      if (rng.bernoulli(0.05)) x.set(static_cast<UnitId>(u));
    }
    x.set(0);
    inputs.push_back(std::move(x));
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(repair_connectivity(inputs[i++ % inputs.size()], dom).units.size());
}
BENCHMARK(BM_RepairConnectivity)->Arg(10)->Arg(40);

}  // namespace

BENCHMARK_MAIN();
