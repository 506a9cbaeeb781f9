#include <cmath>

#include <gtest/gtest.h>

#include "invariant_checks.h"
#include "oracles.h"
#include "srn/errors.h"
#include "srn/srn_env.h"

namespace srn {
namespace {

constexpr double kNoise = 3.981071705534973e-15;  // 10^-14.4 W

SystemParams Params() {
  SystemParams p;
  p.tx_power_w = 10.0;
  p.noise_w = kNoise;
  p.spreading = 50;
  return p;
}

double Log2(double x) { return std::log(x) / std::log(2.0); }

TEST(Units, DbmConversion) {
  EXPECT_DOUBLE_EQ(DbmToWatts(40.0), 10.0);
  EXPECT_NEAR(DbmToWatts(-114.0) / kNoise, 1.0, 1e-12);
  EXPECT_NEAR(WattsToDbm(10.0), 40.0, 1e-12);
}

TEST(SystemParams, Validation) {
  SystemParams p;
  EXPECT_NO_THROW(p.Validate());
  p.reflection = {1.5, 0.0};
  EXPECT_THROW(p.Validate(), ContractError);
  p = SystemParams{};
  p.spreading = 0;
  EXPECT_THROW(p.Validate(), ContractError);
  p = SystemParams{};
  p.noise_w = 0.0;
  EXPECT_THROW(p.Validate(), ContractError);
}

ChannelState UnitChannel(int num_users, int num_devices) {
  ChannelState c;
  c.large.user = Eigen::VectorXd::Ones(num_users);
  c.large.device = Eigen::VectorXd::Ones(num_devices);
  c.large.link = Eigen::MatrixXd::Ones(num_users, num_devices);
  c.small.user = Eigen::VectorXcd::Ones(num_users);
  c.small.device = Eigen::VectorXcd::Ones(num_devices);
  c.small.link = Eigen::MatrixXcd::Ones(num_users, num_devices);
  return c;
}

TEST(BackscatterGain, HandMultiplication) {
  ChannelState c = UnitChannel(1, 1);
  c.small.device(0) = {0.0, std::sqrt(2.0)};
  c.small.link(0, 0) = {std::sqrt(1.5), std::sqrt(1.5)};
  const LinkGains h = BackscatterGain(c, SystemParams{});
  EXPECT_NEAR(h(0, 0), 3.84, 1e-12);
}

TEST(BackscatterGain, ZeroReflectionZeroesColumn) {
  ChannelState c = UnitChannel(3, 2);
  SystemParams p;
  p.device_reflection = {{0.0, 0.0}, {0.8, 0.0}};
  const LinkGains h = BackscatterGain(c, p);
  EXPECT_TRUE((h.col(0).array() == 0.0).all());
  EXPECT_TRUE((h.col(1).array() > 0.0).all());
}

TEST(BackscatterGain, PhaseInvariant) {
  ChannelState a = UnitChannel(2, 2);
  ChannelState b = a;
  b.small.device *= std::polar(1.0, 0.7);
  b.small.link *= std::polar(1.0, -2.1);
  const LinkGains ha = BackscatterGain(a, SystemParams{});
  const LinkGains hb = BackscatterGain(b, SystemParams{});
  EXPECT_TRUE(ha.isApprox(hb, 1e-14));
}

TEST(InterferenceSets, SingleDeviceEmpty) {
  Eigen::MatrixXd h(1, 1);
  h << 1e-10;
  const auto sets = ComputeInterferenceSets(h, Association::FromUsers(1, {0}), 0, 0);
  EXPECT_TRUE(sets.interferers.empty());
  EXPECT_TRUE(sets.interfered.empty());
}

TEST(InterferenceSets, StrongerAndWeaker) {
  Eigen::MatrixXd h(1, 2);
  h << 2e-10, 1e-10;
  const Association a = Association::FromUsers(1, {0, 0});
  const auto strong = ComputeInterferenceSets(h, a, 0, 0);
  const auto weak = ComputeInterferenceSets(h, a, 1, 0);
  EXPECT_EQ(strong.interferers, std::vector<int>{1});
  EXPECT_TRUE(strong.interfered.empty());
  EXPECT_EQ(weak.interfered, std::vector<int>{0});
  EXPECT_TRUE(weak.interferers.empty());
}

TEST(InterferenceSets, TieGoesToLowerIndex) {
  Eigen::MatrixXd h(1, 2);
  h << 1e-10, 1e-10;
  const Association a = Association::FromUsers(1, {0, 0});
  EXPECT_EQ(ComputeInterferenceSets(h, a, 0, 0).interferers, std::vector<int>{1});
  EXPECT_EQ(ComputeInterferenceSets(h, a, 1, 0).interfered, std::vector<int>{0});
}

TEST(InterferenceSets, NotAssociatedIsContractError) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Constant(2, 1, 1e-10);
  EXPECT_THROW(ComputeInterferenceSets(h, Association::FromUsers(2, {0}), 0, 1),
               ContractError);
}

TEST(Sinr, SoleDeviceSubstitution) {
  Eigen::MatrixXd h(1, 1);
  h << 1e-10;
  const double sinr = Sinr(h, Association::FromUsers(1, {0}), Params(), 0, 0);
  // 50 * 10 * 1e-10 / 10^-14.4 = 5 * 10^6.4
  EXPECT_NEAR(sinr, 5.0 * std::pow(10.0, 6.4), 1.0);
  EXPECT_NEAR(sinr / 1.256e7, 1.0, 1e-3);
}

TEST(Sinr, UnassociatedIsZero) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Constant(2, 1, 1e-10);
  EXPECT_EQ(Sinr(h, Association::FromUsers(2, {0}), Params(), 1, 0), 0.0);
}

TEST(Sinr, StrongerSharedDevice) {
  Eigen::MatrixXd h(1, 2);
  h << 3e-10, 1e-10;
  const double kp = 500.0;
  const double expected = kp * 3e-10 / (kp * 1e-10 + kNoise);
  EXPECT_NEAR(Sinr(h, Association::FromUsers(1, {0, 0}), Params(), 0, 0) / expected,
              1.0, 1e-14);
}

TEST(Rate, Examples) {
  EXPECT_EQ(Rate(0.0, 1, 50), 0.0);
  EXPECT_DOUBLE_EQ(Rate(1.0, 1, 50), 0.02);
  EXPECT_EQ(Rate(1e6, 0, 50), 0.0);
}

TEST(EvaluateFrame, ZeroGainsZeroRate) {
  const Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 3);
  EXPECT_EQ(EvaluateFrame(h, Association::FromUsers(2, {0, 1, 1}), Params()).sum_rate, 0.0);
}

TEST(EvaluateFrame, DistinctUsersClosedForm) {
  Rng rng = MakeStream(1, 99);
  const Eigen::MatrixXd h = verify::RandomGains(3, 3, rng);
  const FrameOutcome out = EvaluateFrame(h, Association::FromUsers(3, {2, 0, 1}), Params());
  const double expected = (Log2(1 + 500 * h(2, 0) / kNoise) +
                           Log2(1 + 500 * h(0, 1) / kNoise) +
                           Log2(1 + 500 * h(1, 2) / kNoise)) / 50.0;
  EXPECT_NEAR(out.sum_rate / expected, 1.0, 1e-12);
  EXPECT_EQ(out.interferer_power.sum(), 0.0);
  EXPECT_EQ(out.interfered_power.sum(), 0.0);
}

TEST(EvaluateFrame, RatesOnlyOnAssociatedPairs) {
  Rng rng = MakeStream(2, 99);
  const Eigen::MatrixXd h = verify::RandomGains(3, 4, rng);
  const Association a = Association::FromUsers(3, {1, 1, 0, 1});
  const FrameOutcome out = EvaluateFrame(h, a, Params());
  for (int m = 0; m < 3; ++m) {
    for (int n = 0; n < 4; ++n) {
      if (a(m, n) == 0) {
        EXPECT_EQ(out.rate(m, n), 0.0);
      }
    }
  }
  EXPECT_NEAR(out.sum_rate, out.rate.sum(), 1e-15);
}

TEST(EvaluateFrame, PermutingDevicesPermutesOutcome) {
  Rng rng = MakeStream(3, 99);
  const Eigen::MatrixXd h = verify::RandomGains(2, 3, rng);
  const std::vector<int> users{0, 0, 1};
  const std::vector<int> perm{2, 0, 1};  // new device i is old device perm[i]
  Eigen::MatrixXd hp(2, 3);
  std::vector<int> up(3);
  for (int i = 0; i < 3; ++i) {
    hp.col(i) = h.col(perm[i]);
    up[i] = users[perm[i]];
  }
  const FrameOutcome a = EvaluateFrame(h, Association::FromUsers(2, users), Params());
  const FrameOutcome b = EvaluateFrame(hp, Association::FromUsers(2, up), Params());
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(b.rate(up[i], i), a.rate(users[perm[i]], perm[i]));
  }
}

TEST(EvaluateFrame, ColumnSumViolationRejected) {
  Eigen::MatrixXi bad(2, 2);
  bad << 1, 1, 1, 0;
  EXPECT_THROW(EvaluateFrame(Eigen::MatrixXd::Ones(2, 2), Association(bad), Params()),
               ContractError);
}

TEST(EvaluateFrame, MatchesTermByTermOracle) {
  const auto r = verify::CheckFrameOracle(100, 4, 5);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(EvaluateFrame, InterferencePowersAreKpWeighted) {
  Eigen::MatrixXd h(1, 3);
  h << 3e-10, 2e-10, 1e-10;
  const FrameOutcome out = EvaluateFrame(h, Association::FromUsers(1, {0, 0, 0}), Params());
  EXPECT_NEAR(out.interferer_power(0), 500 * 3e-10, 1e-20);
  EXPECT_NEAR(out.interfered_power(2), 500 * 5e-10, 1e-20);
  EXPECT_EQ(out.interferer_power(2), 0.0);
}

TEST(Rewards, CentralizedEqualsSumRate) {
  Rng rng = MakeStream(4, 99);
  const Eigen::MatrixXd h = verify::RandomGains(3, 3, rng);
  const FrameOutcome out = EvaluateFrame(h, Association::FromUsers(3, {0, 0, 2}), Params());
  EXPECT_EQ(CentralizedReward(out), out.sum_rate);
  const verify::PlainSystem sys{10.0, kNoise, 50};
  EXPECT_NEAR(CentralizedReward(out) / verify::SumRateByTerms(h, {0, 0, 2}, sys), 1.0, 1e-12);
}

TEST(Rewards, SoleDeviceRewardIsOwnRate) {
  Eigen::MatrixXd h(2, 1);
  h << 1e-10, 4e-11;
  const Association a = Association::FromUsers(2, {1});
  const FrameOutcome out = EvaluateFrame(h, a, Params());
  EXPECT_EQ(DistributedReward(out, h, a, Params(), 0), out.rate(1, 0));
}

TEST(Rewards, NoSharingRewardsSumToSumRate) {
  Rng rng = MakeStream(5, 99);
  const Eigen::MatrixXd h = verify::RandomGains(3, 3, rng);
  const Association a = Association::FromUsers(3, {1, 2, 0});
  const FrameOutcome out = EvaluateFrame(h, a, Params());
  double sum = 0.0;
  for (int n = 0; n < 3; ++n) sum += DistributedReward(out, h, a, Params(), n);
  EXPECT_NEAR(sum, out.sum_rate, 1e-15);
}

TEST(Rewards, SharedUserPenaltyHandComputed) {
  Eigen::MatrixXd h(1, 2);
  h << 4e-10, 1e-10;
  const Association a = Association::FromUsers(1, {0, 0});
  const FrameOutcome out = EvaluateFrame(h, a, Params());
  const double strong_alone = Log2(1 + 500 * 4e-10 / kNoise) / 50;
  const double strong_shared = Log2(1 + 500 * 4e-10 / (500 * 1e-10 + kNoise)) / 50;
  const double weak = Log2(1 + 500 * 1e-10 / kNoise) / 50;
  EXPECT_NEAR(DistributedReward(out, h, a, Params(), 1),
              weak - (strong_alone - strong_shared), 1e-14);
  EXPECT_NEAR(DistributedReward(out, h, a, Params(), 0), strong_shared, 1e-14);
}

TEST(Counterfactual, Examples) {
  Eigen::MatrixXd h(1, 3);
  h << 4e-10, 2e-10, 1e-10;
  const Association a = Association::FromUsers(1, {0, 0, 0});
  const FrameOutcome out = EvaluateFrame(h, a, Params());
  // Device 0 does not interfere with anyone below it.
  EXPECT_EQ(CounterfactualRate(h, a, Params(), 0, 2, 0), out.rate(0, 2));
  EXPECT_GE(CounterfactualRate(h, a, Params(), 0, 0, 1), out.rate(0, 0));
  Eigen::MatrixXd h2(1, 2);
  h2 << 4e-10, 1e-10;
  const Association a2 = Association::FromUsers(1, {0, 0});
  EXPECT_NEAR(CounterfactualRate(h2, a2, Params(), 0, 0, 1),
              Log2(1 + 500 * 4e-10 / kNoise) / 50, 1e-14);
}

TEST(Rewards, InvariantsOnRandomInstances) {
  const auto r = verify::CheckRewardInvariants(500, 6);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(History, FreshStateAtFloor) {
  const HistoryStore history(3, 3);
  const GainScale scale(-18.0, -8.0);
  const Eigen::VectorXd s = CentralizedState(history, scale);
  EXPECT_EQ(s.size(), 9);
  EXPECT_TRUE((s.array() == 0.0).all());
  const Eigen::VectorXd d = DistributedState(history, scale, Params(), 0, 3);
  EXPECT_EQ(d.size(), 9);
  EXPECT_EQ(d(7), 0.0);
  EXPECT_EQ(d(8), 0.0);
}

TEST(History, OneObservationPerDevicePerFrame) {
  Rng rng = MakeStream(7, 99);
  const Eigen::MatrixXd h = verify::RandomGains(3, 3, rng);
  const Association a = Association::FromUsers(3, {0, 0, 2});
  const HistoryStore next =
      UpdateHistory(HistoryStore(3, 3), a, h, EvaluateFrame(h, a, Params()));
  const GainScale scale(-18.0, -6.0);
  const Eigen::VectorXd s = CentralizedState(next, scale);
  EXPECT_EQ((s.array() != 0.0).count(), 3);
  EXPECT_EQ(next.last_gain(0, 1), h(0, 1));
  EXPECT_EQ(next.last_gain(1, 1), 0.0);
}

TEST(History, RoundRobinCoversRow) {
  Rng rng = MakeStream(8, 99);
  HistoryStore history(3, 2);
  for (int t = 0; t < 3; ++t) {
    const Eigen::MatrixXd h = verify::RandomGains(3, 2, rng);
    const Association a = Association::FromUsers(3, {t, (t + 1) % 3});
    history = UpdateHistory(history, a, h, EvaluateFrame(h, a, Params()));
  }
  EXPECT_TRUE((history.last_gain.array() > 0.0).all());
}

TEST(History, UnassociatedEntriesRetained) {
  Rng rng = MakeStream(9, 99);
  const Eigen::MatrixXd h1 = verify::RandomGains(2, 1, rng);
  const Eigen::MatrixXd h2 = verify::RandomGains(2, 1, rng);
  const Association on0 = Association::FromUsers(2, {0});
  const Association on1 = Association::FromUsers(2, {1});
  HistoryStore history =
      UpdateHistory(HistoryStore(2, 1), on0, h1, EvaluateFrame(h1, on0, Params()));
  history = UpdateHistory(history, on1, h2, EvaluateFrame(h2, on1, Params()));
  EXPECT_EQ(history.last_gain(0, 0), h1(0, 0));
  EXPECT_EQ(history.last_gain(1, 0), h2(1, 0));
  EXPECT_EQ(history.last_action[0], 1);
}

TEST(DistributedState, LayoutAndIdentity) {
  Eigen::MatrixXd h(3, 2);
  h << 1e-12, 1e-13, 1e-11, 1e-12, 1e-14, 1e-13;
  const Association a = Association::FromUsers(3, {1, 1});
  const FrameOutcome out = EvaluateFrame(h, a, Params());
  const HistoryStore history = UpdateHistory(HistoryStore(3, 2), a, h, out);
  const GainScale scale(-16.0, -10.0);
  const Eigen::VectorXd s = DistributedState(history, scale, Params(), 1, 4);
  ASSERT_EQ(s.size(), 9);
  EXPECT_EQ(s(0), 0.0);
  EXPECT_NEAR(s(1), (-12.0 + 16.0) / 6.0, 1e-12);
  EXPECT_EQ(s(2), 0.0);
  EXPECT_EQ(s(3), 0.0);
  EXPECT_EQ(s(4), 1.0);
  EXPECT_EQ(s(5), 0.0);
  EXPECT_DOUBLE_EQ(s(6), 2.0 / 4.0);
  EXPECT_EQ(s(7), 0.0);  // weakest device: nobody below it
  EXPECT_NEAR(s(8), (-11.0 + 16.0) / 6.0, 1e-12);
  EXPECT_THROW(DistributedState(history, scale, Params(), 2, 4), ContractError);
}

TEST(GainScale, MonotoneAndClamped) {
  const GainScale scale(-16.0, -8.0);
  EXPECT_EQ(scale.Normalize(0.0), 0.0);
  EXPECT_EQ(scale.Normalize(1e-20), 0.0);
  EXPECT_EQ(scale.Normalize(1e-3), 1.0);
  EXPECT_DOUBLE_EQ(scale.Normalize(1e-12), 0.5);
  EXPECT_LT(scale.Normalize(1e-13), scale.Normalize(2e-13));
  EXPECT_THROW(GainScale(-8.0, -16.0), ContractError);
}

TEST(GainScale, CoversSampledCell) {
  TopologyConfig config;
  config.seed = 3;
  SrnEnvironment env(config, SystemParams{}, 0.5);
  const GainScale& scale = env.gain_scale();
  int clamped = 0;
  for (int t = 0; t < 2000; ++t) {
    const LinkGains& h = env.Advance();
    for (int i = 0; i < h.size(); ++i) {
      const double x = scale.Normalize(h.data()[i]);
      if (x == 0.0 || x == 1.0) ++clamped;
    }
  }
  EXPECT_LT(clamped, 2000 * 9 / 100);
}

TEST(Environment, SameSeedSameGains) {
  TopologyConfig config;
  config.seed = 21;
  SrnEnvironment a(config, SystemParams{}, 0.99);
  SrnEnvironment b(config, SystemParams{}, 0.99);
  for (int t = 0; t < 20; ++t) EXPECT_EQ(a.Advance(), b.Advance());
  EXPECT_EQ(a.frame_index(), 20u);
}

TEST(Environment, ResizeKeepsRetainedLinks) {
  TopologyConfig config;
  config.seed = 22;
  SrnEnvironment env(config, SystemParams{}, 1.0);
  const LinkGains before = env.Advance();
  env.ResizeDevices(2);
  EXPECT_EQ(env.num_devices(), 2);
  EXPECT_EQ(env.gains(), before.leftCols(2));
  env.ResizeDevices(4);
  EXPECT_EQ(env.num_devices(), 4);
  EXPECT_EQ(env.gains().leftCols(2), before.leftCols(2));
  EXPECT_TRUE((env.gains().array() > 0.0).all());
}

}  // namespace
}  // namespace srn
