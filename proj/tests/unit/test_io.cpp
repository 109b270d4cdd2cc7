#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pathlet/errors.hpp"
#include "pathlet/io.hpp"

namespace pathlet {
namespace {

namespace fs = std::filesystem;
using Eigen::MatrixXd;

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("pathlet_io_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string corpus_text(const std::vector<Trajectory>& corpus) {
  std::ostringstream out;
  write_corpus(out, corpus);
  return out.str();
}

std::vector<Trajectory> corpus_from(const std::string& text) {
  std::istringstream in(text);
  return read_corpus(in);
}

std::string file_bytes(const fs::path& p) { return read_text_file(p); }

TrainedModel small_trained_model(std::uint64_t seed) {
  auto dom = std::make_shared<const SpatialDomain>(load_domain(GridSpec{5, 5}));
  SynthParams sp;
  sp.n_atoms = 4;
  sp.atom_len_min = 3;
  sp.atom_len_max = 4;
  sp.atoms_per_traj_max = 2;
  sp.n_traj = 30;
  const PlantedCorpus planted = testing::checked_planted(*dom, sp, seed);
  TrainingConfig c;
  c.max_iters = 30;
  c.vae_iters = 50;
  c.latent_dim = 2;
  c.hidden = {6};
  c.vae_warmup_iters = 5;
  c.refit_iters = 200;
  c.seed = seed;
  return train(dom, planted.corpus, c);
}

TEST(CorpusIo, Examples) {
  const std::vector<Trajectory> corpus{{{0, 1, 2}, 3600.0}, {{5}, std::nullopt}, {{4}, 0.5}};
  EXPECT_EQ(corpus_from(corpus_text(corpus)), corpus);
  const std::vector<Trajectory> parsed = corpus_from("{\"units\":[3,4],\"t\":null}\n\n{\"units\":[1],\"t\":7.25}\n");
  ASSERT_EQ(parsed.size(), 2U);
  EXPECT_EQ(parsed[0], (Trajectory{{3, 4}, std::nullopt}));
  EXPECT_EQ(parsed[1], (Trajectory{{1}, 7.25}));
  EXPECT_EQ(corpus_from("{\"units\":[2]}\n").front().timestamp, std::nullopt);
}

TEST(CorpusIo, MalformedInputThrows) {
  EXPECT_THROW(corpus_from("{\"units\":[1,2]\n"), InputError);
  EXPECT_THROW(corpus_from("{\"t\":1.0}\n"), InputError);
  EXPECT_THROW(corpus_from("{\"units\":[\"a\"]}\n"), InputError);
  EXPECT_THROW(corpus_from("[1,2,3]\n"), InputError);
  EXPECT_THROW(corpus_from("{\"units\":[]}\n"), InputError);
  try {
    corpus_from("{\"units\":[1]}\n{\"units\":oops}\n");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
  EXPECT_THROW(read_corpus_file("/nonexistent/corpus.jsonl"), InputError);
}

TEST(DomainIo, RoundTrip) {
  for (const DomainSpec& spec : {DomainSpec{GridSpec{3, 7}}, DomainSpec{GraphSpec{{{"a", {"b", "c"}}, {"b", {"c"}}, {"c", {"a"}}}}}}) {
    const SpatialDomain dom = load_domain(spec);
    const std::string text = domain_to_json(dom);
    const SpatialDomain back = domain_from_json(text);
    EXPECT_EQ(back.size(), dom.size());
    EXPECT_EQ(back.kind(), dom.kind());
    for (UnitId u = 0; u < static_cast<UnitId>(dom.size()); ++u) {
      EXPECT_EQ(std::vector<UnitId>(back.successors(u).begin(), back.successors(u).end()),
                std::vector<UnitId>(dom.successors(u).begin(), dom.successors(u).end()));
      EXPECT_EQ(back.label(u), dom.label(u));
    }
    EXPECT_EQ(domain_to_json(back), text);
  }
  EXPECT_THROW(domain_from_json("{\"kind\":\"torus\"}"), InputError);
  EXPECT_THROW(domain_from_json("not json"), InputError);
}

TEST(DictionaryIo, RoundTripAndErrors) {
  MatrixXd atoms = MatrixXd::Zero(6, 2);
  atoms(0, 0) = atoms(1, 0) = atoms(4, 1) = 1.0;
  const PathletDictionary D{atoms, Phase::binary};
  const std::string text = dictionary_to_json(D);
  EXPECT_EQ(text, "{\"num_units\":6,\"atoms\":[[0,1],[4]]}");
  EXPECT_EQ(dictionary_from_json(text).atoms, atoms);
  EXPECT_THROW(dictionary_from_json("{\"num_units\":3,\"atoms\":[[5]]}"), InputError);
  EXPECT_THROW(dictionary_from_json("{\"atoms\":[]}"), InputError);
}

TEST(RepresentationIo, RoundTripAndErrors) {
  MatrixXd codes = MatrixXd::Zero(3, 2);
  codes(0, 0) = codes(2, 0) = codes(1, 1) = 1.0;
  const RepresentationMatrix R{codes, Phase::binary};
  const std::string text = representation_to_json(R);
  EXPECT_EQ(representation_from_json(text).codes, codes);
  EXPECT_EQ(representation_to_json(representation_from_json(text)), text);
  EXPECT_THROW(representation_from_json("{\"num_atoms\":1,\"num_trajectories\":1,\"columns\":[[3]]}"), InputError);
  EXPECT_THROW(representation_from_json("{\"num_atoms\":1,\"num_trajectories\":2,\"columns\":[[0]]}"), InputError);
}

TEST(VaeIo, RoundTripIsExact) {
  for (int cond : {0, 3}) {
    const VaeModel m = VaeModel::create(5, 2, cond, {7, 4}, Activation::tanh, 11);
    std::stringstream buf;
    write_vae(buf, m);
    const std::string bytes = buf.str();
    const VaeModel back = read_vae(buf);
    EXPECT_EQ(back.input_dim(), 5);
    EXPECT_EQ(back.cond_dim(), cond);
    EXPECT_EQ(back.params().flatten(), m.params().flatten());
    std::stringstream again;
    write_vae(again, back);
    EXPECT_EQ(again.str(), bytes);
  }
  std::stringstream truncated;
  write_vae(truncated, VaeModel::create(5, 2, 0, {4}, Activation::relu, 1));
  std::string cut = truncated.str();
  cut.resize(cut.size() - 8);
  std::stringstream cut_in(cut);
  EXPECT_THROW(read_vae(cut_in), InputError);
  std::stringstream garbage("{\"bad\":1}\n");
  EXPECT_THROW(read_vae(garbage), InputError);
}

TEST(LogIo, RoundTrip) {
  const std::vector<TrainingLogEntry> log{{0, 1.5, 2.25, 0.1, -3.0, 0.85}, {1, 1.0 / 3.0, 2.0, 0.0, 1e-17, 3.0}};
  std::stringstream buf;
  write_log_csv(buf, log);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, bytes.find('\n')), "iteration,recon,dict_term,sparsity_term,elbo,total");
  EXPECT_EQ(read_log_csv(buf), log);
  std::stringstream bad("iteration,recon\n1,2\n");
  EXPECT_THROW(read_log_csv(bad), InputError);
}

TEST(Checkpoint, RoundTripIsByteIdentical) {
  TempDir tmp;
  const TrainedModel m = small_trained_model(3);
  save_checkpoint(tmp.path() / "a", m);
  for (const char* name : {"dict.json", "vae.model", "repr.json", "log.csv", "config.txt", "domain.json"}) {
    EXPECT_TRUE(fs::exists(tmp.path() / "a" / name)) << name;
  }
  const TrainedModel back = load_checkpoint(tmp.path() / "a");
  EXPECT_EQ(back.dictionary.atoms, m.dictionary.atoms);
  EXPECT_EQ(back.final_R.codes, m.final_R.codes);
  EXPECT_EQ(back.vae.params().flatten(), m.vae.params().flatten());
  EXPECT_EQ(back.training_log, m.training_log);
  EXPECT_EQ(back.config, m.config);
  save_checkpoint(tmp.path() / "b", back);
  for (const char* name : {"dict.json", "vae.model", "repr.json", "log.csv", "config.txt", "domain.json"}) {
    EXPECT_EQ(file_bytes(tmp.path() / "a" / name), file_bytes(tmp.path() / "b" / name)) << name;
  }
  EXPECT_EQ(checkpoint_hash(tmp.path() / "a"), checkpoint_hash(tmp.path() / "b"));
}

TEST(Checkpoint, MismatchAndMissingFiles) {
  TempDir tmp;
  const TrainedModel m = small_trained_model(4);
  save_checkpoint(tmp.path(), m);
  write_text_file(tmp.path() / "domain.json", domain_to_json(load_domain(GridSpec{4, 4})) + "\n");
  EXPECT_THROW(load_checkpoint(tmp.path()), ConfigError);
  fs::remove(tmp.path() / "vae.model");
  EXPECT_THROW(load_checkpoint(tmp.path()), InputError);
}

TEST(EvalReportIo, Fields) {
  const EvalReport r{0.25, 10, 20, 3, 4};
  EXPECT_EQ(eval_report_to_json(r), "{\"jsd\":0.25,\"n_real\":10,\"n_gen\":20,\"support_real\":3,\"support_gen\":4}");
}

// Properties.

TEST(IoProperty, CorpusWriteReadWriteIsByteIdentical) {
  const SpatialDomain dom = load_domain(GridSpec{8, 8});
  Rng rng(9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthParams sp;
    sp.n_atoms = 6;
    sp.atom_len_min = 2;
    sp.atom_len_max = 6;
    sp.n_traj = 40;
    PlantedCorpus planted = testing::checked_planted(dom, sp, seed);
    for (Trajectory& t : planted.corpus) {
      if (rng.bernoulli(0.7)) t.timestamp = 86400.0 * rng.uniform();
    }
    const std::string once = corpus_text(planted.corpus);
    EXPECT_EQ(corpus_from(once), planted.corpus);
    EXPECT_EQ(corpus_text(corpus_from(once)), once);
    const std::string dict = dictionary_to_json(planted.true_dictionary);
    EXPECT_EQ(dictionary_to_json(dictionary_from_json(dict)), dict);
    const std::string repr = representation_to_json(planted.true_R);
    EXPECT_EQ(representation_to_json(representation_from_json(repr)), repr);
  }
}

}  // namespace
}  // namespace pathlet
