#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pathlet/generator.hpp"
#include "pathlet/trainer.hpp"

namespace pathlet {
namespace {

constexpr double kEarly = 1800.0;

TrainedModel train_branching(const testing::TwoBranch& tb) {
  TrainingConfig c;
  c.conditional = true;
  c.max_iters = 300;
  return train(tb.domain, tb.corpus, c);
}

double branch_a_share(const TrainedModel& m, const testing::TwoBranch& tb, int count, std::uint64_t seed) {
  const Trajectory prefix{tb.stem, std::nullopt};
  const std::vector<Trajectory> out = generate_conditional(m, prefix, kEarly, count, seed);
  int a = 0;
  for (const Trajectory& t : out) {
    EXPECT_TRUE(testing::walk_is_connected(t, *tb.domain));
    a += testing::selects_only(t, tb.branch_a, tb.branch_b);
  }
  return static_cast<double>(a) / count;
}

TEST(ConditionalModel, DeterministicBranchIsFollowed) {
  const testing::TwoBranch tb = testing::two_branch_corpus(400, 1.0, 0.0, 21);
  const TrainedModel m = train_branching(tb);
  EXPECT_GE(branch_a_share(m, tb, 200, 3), 0.95);
}

TEST(ConditionalModel, EvenSplitIsReproduced) {
  const testing::TwoBranch tb = testing::two_branch_corpus(400, 0.5, 0.5, 22);
  const TrainedModel m = train_branching(tb);
  const double share = branch_a_share(m, tb, 1000, 4);
  EXPECT_GE(share, 0.40);
  EXPECT_LE(share, 0.60);
}

}  // namespace
}  // namespace pathlet
