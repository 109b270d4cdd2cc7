#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "pathlet/io.hpp"

namespace pathlet {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("pathlet_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run_cli(args, out_, err_);
  }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  // Small synthetic corpus plus a quick checkpoint trained on it.
  void synth_and_train(const std::string& ckpt, const std::vector<std::string>& extra = {}) {
    ASSERT_EQ(run({"synth", "--grid", "6x6", "--atoms", "5", "--traj", "40", "--atom-len", "3-4", "--per-traj",
                   "1-2", "--seed", "1", "--out", p("synth")}),
              0)
        << err_.str();
    std::vector<std::string> args{"train",          "--corpus",      p("synth/corpus.jsonl"),
                                  "--grid",         "6x6",           "--latent",
                                  "2",              "--max-iters",   "30",
                                  "--set",          "vae_iters=60",  "--set",
                                  "hidden=8",       "--set",         "refit_iters=200",
                                  "--set",          "vae_warmup_iters=5", "--seed",
                                  "7",              "--out",         p(ckpt)};
    args.insert(args.end(), extra.begin(), extra.end());
    ASSERT_EQ(run(args), 0) << err_.str();
  }

  static std::size_t line_count(const std::string& path) {
    std::ifstream in(path);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST(ParseTimeOfDay, Formats) {
  EXPECT_DOUBLE_EQ(cli::parse_time_of_day("08:30"), 30600.0);
  EXPECT_DOUBLE_EQ(cli::parse_time_of_day("23:59:59"), 86399.0);
  EXPECT_DOUBLE_EQ(cli::parse_time_of_day("3600"), 3600.0);
  EXPECT_ANY_THROW(cli::parse_time_of_day("25:00"));
  EXPECT_ANY_THROW(cli::parse_time_of_day("noon"));
}

TEST_F(CliTest, SynthWritesCorpusAndTruth) {
  ASSERT_EQ(run({"synth", "--grid", "10x10", "--atoms", "20", "--traj", "500", "--seed", "1", "--out", p("s")}), 0)
      << err_.str();
  EXPECT_TRUE(fs::exists(p("s/corpus.jsonl")));
  EXPECT_TRUE(fs::exists(p("s/truth_dict.json")));
  EXPECT_EQ(line_count(p("s/corpus.jsonl")), 500U);
  EXPECT_EQ(dictionary_from_json(read_text_file(p("s/truth_dict.json"))).size(), 20U);
  ASSERT_EQ(run({"synth", "--grid", "10x10", "--atoms", "20", "--traj", "500", "--seed", "1", "--out", p("t")}), 0);
  EXPECT_EQ(read_text_file(p("s/corpus.jsonl")), read_text_file(p("t/corpus.jsonl")));
}

TEST_F(CliTest, TrainWritesCheckpointDeterministically) {
  synth_and_train("a");
  for (const char* name : {"dict.json", "vae.model", "repr.json", "log.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / name)) << name;
  }
  synth_and_train("b");
  for (const char* name : {"dict.json", "vae.model", "repr.json", "log.csv", "config.txt", "domain.json"}) {
    EXPECT_EQ(read_text_file(dir_ / "a" / name), read_text_file(dir_ / "b" / name)) << name;
  }
}

TEST_F(CliTest, TrainUsageErrors) {
  EXPECT_EQ(run({"train", "--grid", "4x4", "--out", p("x")}), 2);
  EXPECT_NE(err_.str().find("--corpus"), std::string::npos);
  EXPECT_EQ(run({"train", "--corpus", p("missing.jsonl"), "--grid", "4x4", "--out", p("x")}), 2);
  EXPECT_FALSE(err_.str().empty());
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"bogus"}), 2);
  write_text_file(p("c.jsonl"), "{\"units\":[0,1]}\n");
  EXPECT_EQ(run({"train", "--corpus", p("c.jsonl"), "--out", p("x")}), 2);
  EXPECT_EQ(run({"train", "--corpus", p("c.jsonl"), "--grid", "4x4", "--set", "nonsense=1", "--out", p("x")}), 2);
}

TEST_F(CliTest, HelpForEverySubcommand) {
  for (const char* cmd : {"train", "generate", "eval", "denoise", "synth"}) {
    EXPECT_EQ(run({cmd, "--help"}), 0) << cmd;
    EXPECT_NE(out_.str().find("--"), std::string::npos) << cmd;
  }
}

TEST_F(CliTest, GenerateWritesCorpusAndSidecar) {
  synth_and_train("ckpt");
  ASSERT_EQ(run({"generate", "--ckpt", p("ckpt"), "--count", "100", "--out", p("g.jsonl")}), 0) << err_.str();
  EXPECT_EQ(line_count(p("g.jsonl")), 100U);
  const auto meta = nlohmann::json::parse(read_text_file(p("g.jsonl.meta.json")));
  EXPECT_EQ(meta.at("count"), 100);
  EXPECT_TRUE(meta.contains("model_hash"));
  const std::string first = read_text_file(p("g.jsonl"));
  ASSERT_EQ(run({"generate", "--ckpt", p("ckpt"), "--count", "100", "--out", p("g.jsonl")}), 0);
  EXPECT_EQ(read_text_file(p("g.jsonl")), first);
  EXPECT_EQ(run({"generate", "--ckpt", p("ckpt"), "--count", "0", "--out", p("z.jsonl")}), 2);
  EXPECT_EQ(run({"generate", "--ckpt", p("ckpt"), "--count", "-3", "--out", p("z.jsonl")}), 2);
  EXPECT_EQ(run({"generate", "--ckpt", p("ckpt"), "--count", "5", "--prefix", "0,1", "--time", "08:30", "--out",
                 p("z.jsonl")}),
            2);
  EXPECT_NE(err_.str().find("conditional"), std::string::npos);
  EXPECT_EQ(run({"generate", "--ckpt", p("nope"), "--count", "5", "--out", p("z.jsonl")}), 2);
}

TEST_F(CliTest, ConditionalGenerateKeepsPrefix) {
  synth_and_train("cond", {"--conditional"});
  const TrainedModel m = load_checkpoint(p("cond"));
  ASSERT_GT(m.dictionary.size(), 0U);
  const std::vector<UnitId> prefix{7, 8, 9};
  ASSERT_EQ(run({"generate", "--ckpt", p("cond"), "--count", "10", "--prefix", "7,8,9", "--time", "08:30", "--out",
                 p("c.jsonl")}),
            0)
      << err_.str();
  const std::vector<Trajectory> gen = read_corpus_file(p("c.jsonl"));
  ASSERT_EQ(gen.size(), 10U);
  for (const Trajectory& t : gen) {
    const BinaryPathVector bits = vectorize(t, *m.domain);
    for (UnitId u : prefix) EXPECT_TRUE(bits.test(u));
  }
  EXPECT_EQ(run({"generate", "--ckpt", p("cond"), "--count", "2", "--prefix", "7,8", "--out", p("c.jsonl")}), 2);
}

TEST_F(CliTest, EvalReports) {
  synth_and_train("ckpt");
  const std::string corpus = p("synth/corpus.jsonl");
  ASSERT_EQ(run({"eval", "--real", corpus, "--gen", corpus, "--grid", "6x6"}), 0) << err_.str();
  EXPECT_EQ(nlohmann::json::parse(out_.str()).at("jsd"), 0.0);
  ASSERT_EQ(run({"eval", "--real", corpus, "--gen", corpus, "--ckpt", p("ckpt"), "--noise", "0.1", "--seed", "3",
                 "--out", p("r1.json")}),
            0);
  const std::string first = out_.str();
  ASSERT_EQ(run({"eval", "--real", corpus, "--gen", corpus, "--ckpt", p("ckpt"), "--noise", "0.1", "--seed", "3",
                 "--out", p("r2.json")}),
            0);
  EXPECT_EQ(out_.str(), first);
  EXPECT_EQ(read_text_file(p("r1.json")), read_text_file(p("r2.json")));
  EXPECT_GT(nlohmann::json::parse(first).at("jsd").get<double>(), 0.0);
  EXPECT_EQ(run({"eval", "--real", corpus, "--gen", corpus, "--grid", "3x3"}), 2);
  write_text_file(p("empty.jsonl"), "");
  EXPECT_EQ(run({"eval", "--real", p("empty.jsonl"), "--gen", corpus, "--grid", "6x6"}), 2);
}

TEST_F(CliTest, DenoiseWritesReport) {
  synth_and_train("ckpt");
  ASSERT_EQ(run({"denoise", "--ckpt", p("ckpt"), "--in", p("synth/corpus.jsonl"), "--out", p("clean.jsonl")}), 0)
      << err_.str();
  EXPECT_EQ(line_count(p("clean.jsonl")), 40U);
  ASSERT_TRUE(fs::exists(p("clean.jsonl.report.csv")));
  std::ifstream report(p("clean.jsonl.report.csv"));
  std::string header;
  std::getline(report, header);
  EXPECT_EQ(header, "bits_in,bits_out,recon_error,atoms_used");
  EXPECT_EQ(line_count(p("clean.jsonl.report.csv")), 41U);
  EXPECT_EQ(run({"denoise", "--ckpt", p("ckpt"), "--in", p("synth/corpus.jsonl"), "--grid", "5x5", "--out",
                 p("clean2.jsonl")}),
            2);
}

}  // namespace
}  // namespace pathlet
