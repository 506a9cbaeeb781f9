#include <benchmark/benchmark.h>

#include "invariant_checks.h"
#include "srn/drl_agents.h"
#include "srn/oracle_policies.h"
#include "srn/srn_env.h"

namespace {

srn::Association RoundRobin(int num_users, int num_devices) {
  std::vector<int> users(num_devices);
  for (int n = 0; n < num_devices; ++n) users[n] = n % num_users;
  return srn::Association::FromUsers(num_users, users);
}

void BM_EvaluateFrame(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  srn::Rng rng = srn::MakeStream(1, 0);
  const auto gains = srn::verify::RandomGains(size, size, rng);
  const auto assoc = RoundRobin(size, size);
  const srn::SystemParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(srn::EvaluateFrame(gains, assoc, params));
  }
}
BENCHMARK(BM_EvaluateFrame)->Arg(3)->Arg(8);

void BM_OptimalPolicy(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  srn::Rng rng = srn::MakeStream(1, 0);
  const auto gains = srn::verify::RandomGains(size, size, rng);
  const srn::SystemParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(srn::OptimalPolicy(gains, params));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(srn::AssociationCount(size, size)));
}
BENCHMARK(BM_OptimalPolicy)->Arg(3)->Arg(5);

// One Adam step on a Z=64 minibatch.
void BM_TrainMinibatch(benchmark::State& state, std::vector<int> sizes) {
  srn::Rng rng = srn::MakeStream(1, 0);
  srn::QNetwork net(sizes, rng);
  const srn::QNetwork target = net;
  srn::AdamOptimizer adam(net, {});
  const auto batch =
      srn::verify::RandomBatch(sizes.front(), sizes.back(), 64, rng);
  std::vector<const srn::Experience*> view;
  for (const auto& e : batch) view.push_back(&e);
  for (auto _ : state) {
    benchmark::DoNotOptimize(srn::TrainMinibatch(net, target, adam, view, 0.3));
  }
}
BENCHMARK_CAPTURE(BM_TrainMinibatch, distributed_3, std::vector<int>{9, 128, 64, 32, 3});
BENCHMARK_CAPTURE(BM_TrainMinibatch, centralized_3x3, std::vector<int>{9, 256, 128, 64, 27});

void BM_DistributedStep(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  srn::TopologyConfig topo;
  topo.num_users = size;
  topo.num_devices = size;
  topo.seed = 1;
  srn::SrnEnvironment env(topo, srn::SystemParams{}, 0.5);
  srn::DistributedAgent agent(size, size, size, srn::AgentConfig{},
                              env.gain_scale(), srn::MakeStream(1, 17));
  for (auto _ : state) {
    benchmark::DoNotOptimize(srn::DistributedFrameStep(agent, env));
  }
}
BENCHMARK(BM_DistributedStep)->Arg(3)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
