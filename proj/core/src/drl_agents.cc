#include "srn/drl_agents.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "srn/errors.h"

namespace srn {

EpsilonSchedule DecayEpsilon(const EpsilonSchedule& schedule) {
  EpsilonSchedule next = schedule;
  next.epsilon =
      std::max(schedule.minimum, (1.0 - schedule.decay) * schedule.epsilon);
  return next;
}

int ArgMax(const Eigen::VectorXd& values) {
  if (values.size() == 0) throw ContractError("argmax of an empty vector");
  int best = 0;
  for (int i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return best;
}

int EpsilonGreedy(const Eigen::VectorXd& q_values, double epsilon, Rng& rng) {
  if (q_values.size() == 0) throw ContractError("no actions to choose from");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::domain_error("epsilon must lie in [0,1]");
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(
        0, static_cast<int>(q_values.size()) - 1);
    return pick(rng);
  }
  return ArgMax(q_values);
}

std::vector<int> DecodeJointAction(std::uint64_t index, int num_users,
                                   int num_devices) {
  if (num_users < 1 || num_devices < 1) {
    throw ContractError("joint action needs M >= 1 and N >= 1");
  }
  std::vector<int> users(num_devices);
  std::uint64_t rest = index;
  for (int n = num_devices - 1; n >= 0; --n) {
    users[n] = static_cast<int>(rest % static_cast<std::uint64_t>(num_users));
    rest /= static_cast<std::uint64_t>(num_users);
  }
  if (rest != 0) {
    throw ContractError("joint action index " + std::to_string(index) +
                        " out of range");
  }
  return users;
}

std::uint64_t EncodeJointAction(const std::vector<int>& users, int num_users) {
  std::uint64_t index = 0;
  for (int u : users) {
    if (u < 0 || u >= num_users) throw ContractError("user index out of range");
    index = index * static_cast<std::uint64_t>(num_users) +
            static_cast<std::uint64_t>(u);
  }
  return index;
}

ReplayMemory::ReplayMemory(std::size_t capacity) : buffer_(capacity) {
  if (capacity == 0) throw ContractError("replay capacity must be positive");
}

void ReplayMemory::Add(Experience experience) {
  buffer_[head_] = std::move(experience);
  head_ = (head_ + 1) % buffer_.size();
  size_ = std::min(size_ + 1, buffer_.size());
}

const Experience& ReplayMemory::at(std::size_t i) const {
  if (i >= size_) throw ContractError("replay index out of range");
  const std::size_t oldest = (head_ + buffer_.size() - size_) % buffer_.size();
  return buffer_[(oldest + i) % buffer_.size()];
}

std::vector<const Experience*> ReplayMemory::Sample(std::size_t count,
                                                    Rng& rng) const {
  if (count > size_) {
    throw ContractError("cannot sample more experiences than stored");
  }
  std::vector<std::size_t> order(size_);
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Experience*> batch;
  batch.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, size_ - 1);
    std::swap(order[i], order[pick(rng)]);
    batch.push_back(&at(order[i]));
  }
  return batch;
}

void AgentConfig::Validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ContractError("gamma must lie in [0,1]");
  }
  if (batch_size < 1 || target_period < 1 || replay_capacity < 1) {
    throw ContractError("batch size, target period and replay capacity must be positive");
  }
  if (batch_size > replay_capacity) {
    throw ContractError("batch size cannot exceed the replay capacity");
  }
  if (!(adam.learning_rate > 0.0)) {
    throw ContractError("learning rate must be positive");
  }
  const auto& e = epsilon;
  if (!(e.minimum >= 0.0 && e.minimum <= e.epsilon && e.epsilon <= 1.0) ||
      !(e.decay >= 0.0 && e.decay <= 1.0)) {
    throw ContractError("epsilon schedule must satisfy 0 <= min <= eps <= 1");
  }
  for (const auto* hidden : {&centralized_hidden, &distributed_hidden}) {
    for (int width : *hidden) {
      if (width < 1) throw ContractError("hidden layer widths must be positive");
    }
  }
  if (clip_norm < 0.0) throw ContractError("clip norm must be non-negative");
}

DqnLearner::DqnLearner(std::vector<int> layer_sizes, const AgentConfig& config,
                       Rng rng)
    : config_(config),
      rng_(std::move(rng)),
      replay_(static_cast<std::size_t>(config.replay_capacity)),
      schedule_(config.epsilon) {
  config_.Validate();
  net_ = QNetwork(std::move(layer_sizes), rng_);
  target_ = net_;
  adam_ = AdamOptimizer(net_, config_.adam);
}

bool DqnLearner::warming_up() const {
  return replay_.size() < static_cast<std::size_t>(config_.batch_size);
}

int DqnLearner::SelectAction(const Eigen::VectorXd& state) {
  return EpsilonGreedy(net_.Forward(state), schedule_.epsilon, rng_);
}

int DqnLearner::RandomAction(int num_actions) {
  std::uniform_int_distribution<int> pick(0, num_actions - 1);
  return pick(rng_);
}

void DqnLearner::Store(Experience experience) {
  if (experience.state.size() != net_.input_size() ||
      experience.next_state.size() != net_.input_size()) {
    throw ContractError("experience width does not match the network input");
  }
  replay_.Add(std::move(experience));
}

std::optional<double> DqnLearner::MaybeTrain() {
  if (warming_up()) return std::nullopt;
  const auto batch =
      replay_.Sample(static_cast<std::size_t>(config_.batch_size), rng_);
  const double loss = TrainMinibatch(net_, target_, adam_, batch, config_.gamma,
                                     config_.clip_norm);
  ++train_steps_;
  return loss;
}

bool DqnLearner::EndFrame() {
  ++frame_;
  bool synced = false;
  if (frame_ % static_cast<std::uint64_t>(config_.target_period) == 0) {
    SyncTarget(net_, target_);
    ++sync_count_;
    synced = true;
  }
  schedule_ = DecayEpsilon(schedule_);
  return synced;
}

void DqnLearner::SaveCheckpoint(std::ostream& out) const {
  out << "srn-agent-checkpoint 1\n";
  out << "frame " << frame_ << "\n";
  out << "sync_count " << sync_count_ << "\n";
  out << "train_steps " << train_steps_ << "\n";
  out.precision(17);
  out << "epsilon " << schedule_.epsilon << "\n";
  out << "network\n";
  SaveParameters(net_, out);
  out << "target\n";
  SaveParameters(target_, out);
}

void DqnLearner::RestoreCheckpoint(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "srn-agent-checkpoint" || version != 1) {
    throw ContractError("not an agent checkpoint");
  }
  auto expect = [&](const char* name) {
    if (!(in >> tag) || tag != name) {
      throw ContractError(std::string("checkpoint missing field ") + name);
    }
  };
  std::uint64_t frame = 0, syncs = 0, steps = 0;
  double epsilon = 0.0;
  expect("frame");
  in >> frame;
  expect("sync_count");
  in >> syncs;
  expect("train_steps");
  in >> steps;
  expect("epsilon");
  in >> epsilon;
  expect("network");
  QNetwork net = LoadParameters(in);
  expect("target");
  QNetwork target = LoadParameters(in);
  if (!in || net.layer_sizes() != net_.layer_sizes() ||
      target.layer_sizes() != net_.layer_sizes()) {
    throw ContractError("checkpoint network shape does not match the agent");
  }
  net_ = std::move(net);
  target_ = std::move(target);
  // Optimizer moments are not part of the checkpoint and restart from zero.
  adam_ = AdamOptimizer(net_, config_.adam);
  frame_ = frame;
  sync_count_ = syncs;
  train_steps_ = steps;
  schedule_.epsilon = epsilon;
}

namespace {

std::uint64_t JointActionCount(int num_users, int num_devices,
                               std::uint64_t cap) {
  std::uint64_t count = 1;
  for (int n = 0; n < num_devices; ++n) {
    if (count > cap / static_cast<std::uint64_t>(num_users)) {
      throw UnsupportedOperation(
          "centralized agent is not scalable: " + std::to_string(num_users) +
          "^" + std::to_string(num_devices) + " joint actions exceed " +
          std::to_string(cap));
    }
    count *= static_cast<std::uint64_t>(num_users);
  }
  return count;
}

std::vector<int> WithIO(int input, const std::vector<int>& hidden, int output) {
  std::vector<int> sizes;
  sizes.push_back(input);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(output);
  return sizes;
}

}  // namespace

CentralizedAgent::CentralizedAgent(int num_users, int num_devices,
                                   const AgentConfig& config,
                                   const GainScale& scale, Rng rng)
    : num_users_(num_users),
      num_devices_(num_devices),
      num_actions_(JointActionCount(num_users, num_devices,
                                    config.max_joint_actions)),
      scale_(scale),
      history_(num_users, num_devices),
      learner_(WithIO(num_users * num_devices, config.centralized_hidden,
                      static_cast<int>(num_actions_)),
               config, std::move(rng)) {}

Eigen::VectorXd CentralizedAgent::CurrentState() const {
  return CentralizedState(history_, scale_);
}

FrameLog CentralizedAgent::Step(const LinkGains& gains,
                                const SystemParams& params) {
  if (gains.rows() != num_users_ || gains.cols() != num_devices_) {
    throw ContractError("link gains do not match the centralized agent");
  }
  FrameLog log;
  log.num_devices = num_devices_;
  log.epsilon = learner_.schedule().epsilon;
  log.explored_randomly = learner_.warming_up();

  Eigen::VectorXd state = CurrentState();
  const int action =
      log.explored_randomly
          ? learner_.RandomAction(static_cast<int>(num_actions_))
          : learner_.SelectAction(state);
  log.assoc = Association::FromUsers(
      num_users_, DecodeJointAction(static_cast<std::uint64_t>(action),
                                    num_users_, num_devices_));

  const FrameOutcome outcome = EvaluateFrame(gains, log.assoc, params);
  const double reward = CentralizedReward(outcome);
  history_ = UpdateHistory(history_, log.assoc, gains, outcome);
  learner_.Store({std::move(state), action, reward, CurrentState()});
  log.rewards.push_back(reward);
  log.sum_rate = outcome.sum_rate;

  log.loss = learner_.MaybeTrain();
  log.synced_target = learner_.EndFrame();
  log.frame = learner_.frame();
  return log;
}

void CentralizedAgent::ResizeDevices(int num_devices) {
  if (num_devices == num_devices_) return;
  throw UnsupportedOperation(
      "centralized agent is not scalable: its action space is fixed at M^N "
      "and cannot follow a change of N from " +
      std::to_string(num_devices_) + " to " + std::to_string(num_devices));
}

DistributedAgent::DistributedAgent(int num_users, int num_devices,
                                   int max_devices, const AgentConfig& config,
                                   const GainScale& scale, Rng rng)
    : num_users_(num_users),
      max_devices_(max_devices),
      scale_(scale),
      history_(num_users, num_devices),
      learner_(WithIO(DistributedStateSize(num_users),
                      config.distributed_hidden, num_users),
               config, std::move(rng)) {
  if (max_devices < num_devices) {
    throw ContractError("max_devices must be at least the initial device count");
  }
}

Eigen::VectorXd DistributedAgent::DeviceState(int n,
                                              const SystemParams& params) const {
  return DistributedState(history_, scale_, params, n, max_devices_);
}

FrameLog DistributedAgent::Step(const LinkGains& gains,
                                const SystemParams& params) {
  const int num_devices = history_.num_devices();
  if (gains.rows() != num_users_ || gains.cols() != num_devices) {
    throw ContractError("link gains do not match the distributed agent");
  }
  FrameLog log;
  log.num_devices = num_devices;
  log.epsilon = learner_.schedule().epsilon;
  log.explored_randomly = learner_.warming_up();

  // Every unit acts on the same parameters before any update this frame.
  std::vector<Eigen::VectorXd> states(num_devices);
  std::vector<int> users(num_devices);
  for (int n = 0; n < num_devices; ++n) {
    states[n] = DeviceState(n, params);
    users[n] = log.explored_randomly ? learner_.RandomAction(num_users_)
                                     : learner_.SelectAction(states[n]);
  }
  log.assoc = Association::FromUsers(num_users_, users);

  const FrameOutcome outcome = EvaluateFrame(gains, log.assoc, params);
  std::vector<double> rewards(num_devices);
  for (int n = 0; n < num_devices; ++n) {
    rewards[n] = DistributedReward(outcome, gains, log.assoc, params, n);
  }
  history_ = UpdateHistory(history_, log.assoc, gains, outcome);
  for (int n = 0; n < num_devices; ++n) {
    learner_.Store({std::move(states[n]), users[n], rewards[n],
                    DeviceState(n, params)});
  }
  log.rewards = std::move(rewards);
  log.sum_rate = outcome.sum_rate;

  log.loss = learner_.MaybeTrain();
  log.synced_target = learner_.EndFrame();
  log.frame = learner_.frame();
  return log;
}

void DistributedAgent::ResizeDevices(int num_devices) {
  if (num_devices > max_devices_) {
    throw ContractError("device count " + std::to_string(num_devices) +
                        " exceeds the identity range " +
                        std::to_string(max_devices_));
  }
  history_.ResizeDevices(num_devices);
}

FrameLog CentralizedFrameStep(CentralizedAgent& agent, SrnEnvironment& env) {
  const LinkGains& gains = env.Advance();
  return agent.Step(gains, env.params());
}

FrameLog DistributedFrameStep(DistributedAgent& agent, SrnEnvironment& env) {
  const LinkGains& gains = env.Advance();
  return agent.Step(gains, env.params());
}

}  // namespace srn
