#ifndef SRN_DRL_AGENTS_H_
#define SRN_DRL_AGENTS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "srn/neural_core.h"
#include "srn/random.h"
#include "srn/srn_env.h"

namespace srn {

struct EpsilonSchedule {
  double epsilon = 0.2;
  double minimum = 0.005;
  double decay = 0.005;
};

// epsilon <- max(minimum, (1 - decay) * epsilon).
EpsilonSchedule DecayEpsilon(const EpsilonSchedule& schedule);

// Index of the largest entry, lowest index on ties.
int ArgMax(const Eigen::VectorXd& values);

// One uniform draw decides exploration; exploring consumes a second draw for
// the action. Otherwise the greedy action.
int EpsilonGreedy(const Eigen::VectorXd& q_values, double epsilon, Rng& rng);

// Base-M digits of a joint action index, device 0 most significant.
// Returned users are 0-based. Throws ContractError for index >= M^N.
std::vector<int> DecodeJointAction(std::uint64_t index, int num_users,
                                   int num_devices);
std::uint64_t EncodeJointAction(const std::vector<int>& users, int num_users);

// FIFO ring of experiences; the oldest entry is evicted at capacity.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  void Add(Experience experience);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return buffer_.size(); }
  bool empty() const { return size_ == 0; }
  // 0 is the oldest stored experience.
  const Experience& at(std::size_t i) const;

  // `count` distinct experiences chosen uniformly (partial Fisher-Yates).
  std::vector<const Experience*> Sample(std::size_t count, Rng& rng) const;

 private:
  std::vector<Experience> buffer_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
};

struct AgentConfig {
  double gamma = 0.3;
  int batch_size = 64;        // Z, also the warmup length in experiences
  int target_period = 100;    // T_u, frames
  int replay_capacity = 800;  // N_E
  AdamConfig adam{};
  EpsilonSchedule epsilon{};
  std::vector<int> centralized_hidden{256, 128, 64};
  std::vector<int> distributed_hidden{128, 64, 32};
  double clip_norm = 0.0;  // 0 disables clipping
  // Largest joint action space the centralized agent accepts.
  std::uint64_t max_joint_actions = 1u << 16;

  void Validate() const;
};

struct FrameLog {
  std::uint64_t frame = 0;  // 1-based index of the frame just played
  int num_devices = 0;
  Association assoc;
  double sum_rate = 0.0;
  double epsilon = 0.0;  // schedule value in effect during the frame
  bool explored_randomly = false;  // warmup frame
  std::optional<double> loss;      // set when a gradient step ran
  bool synced_target = false;
  std::vector<double> rewards;  // one per experience stored this frame
};

// Network, target copy, optimizer, replay and schedule shared by both agents.
class DqnLearner {
 public:
  DqnLearner(std::vector<int> layer_sizes, const AgentConfig& config, Rng rng);

  bool warming_up() const;
  int SelectAction(const Eigen::VectorXd& state);
  int RandomAction(int num_actions);
  void Store(Experience experience);
  // One minibatch step once the replay holds batch_size experiences.
  std::optional<double> MaybeTrain();
  // Advances the frame counter, syncs the target every target_period frames
  // and decays epsilon. Returns true when the target was synced.
  bool EndFrame();

  const QNetwork& network() const { return net_; }
  const QNetwork& target() const { return target_; }
  const AdamOptimizer& optimizer() const { return adam_; }
  const ReplayMemory& replay() const { return replay_; }
  const EpsilonSchedule& schedule() const { return schedule_; }
  const AgentConfig& config() const { return config_; }
  std::uint64_t frame() const { return frame_; }
  std::uint64_t sync_count() const { return sync_count_; }
  std::uint64_t train_steps() const { return train_steps_; }

  void SaveCheckpoint(std::ostream& out) const;
  void RestoreCheckpoint(std::istream& in);

 private:
  AgentConfig config_;
  Rng rng_;
  QNetwork net_;
  QNetwork target_;
  AdamOptimizer adam_;
  ReplayMemory replay_;
  EpsilonSchedule schedule_;
  std::uint64_t frame_ = 0;
  std::uint64_t sync_count_ = 0;
  std::uint64_t train_steps_ = 0;
};

// The BS picks one joint association out of M^N from the stale
// backscatter-gain history of all pairs.
class CentralizedAgent {
 public:
  CentralizedAgent(int num_users, int num_devices, const AgentConfig& config,
                   const GainScale& scale, Rng rng);

  // Plays one frame against `gains` (already evolved for this frame).
  FrameLog Step(const LinkGains& gains, const SystemParams& params);

  // Always throws UnsupportedOperation unless num_devices is unchanged: the
  // action space is fixed by N.
  void ResizeDevices(int num_devices);

  Eigen::VectorXd CurrentState() const;
  std::uint64_t num_actions() const { return num_actions_; }
  int num_users() const { return num_users_; }
  int num_devices() const { return num_devices_; }
  const HistoryStore& history() const { return history_; }
  const DqnLearner& learner() const { return learner_; }
  DqnLearner& learner() { return learner_; }

 private:
  int num_users_;
  int num_devices_;
  std::uint64_t num_actions_;
  GainScale scale_;
  HistoryStore history_;
  DqnLearner learner_;
};

// One shared network evaluated once per device on local state. Input width
// 2M+3 does not depend on N, so the device set can change mid-run.
class DistributedAgent {
 public:
  DistributedAgent(int num_users, int num_devices, int max_devices,
                   const AgentConfig& config, const GainScale& scale, Rng rng);

  FrameLog Step(const LinkGains& gains, const SystemParams& params);

  // Keeps network, target, optimizer and replay; new devices start with an
  // unobserved history row.
  void ResizeDevices(int num_devices);

  Eigen::VectorXd DeviceState(int n, const SystemParams& params) const;
  int num_users() const { return num_users_; }
  int num_devices() const { return history_.num_devices(); }
  int max_devices() const { return max_devices_; }
  const HistoryStore& history() const { return history_; }
  const DqnLearner& learner() const { return learner_; }
  DqnLearner& learner() { return learner_; }

 private:
  int num_users_;
  int max_devices_;
  GainScale scale_;
  HistoryStore history_;
  DqnLearner learner_;
};

// Advance the environment one frame, then let the agent play it.
FrameLog CentralizedFrameStep(CentralizedAgent& agent, SrnEnvironment& env);
FrameLog DistributedFrameStep(DistributedAgent& agent, SrnEnvironment& env);

}  // namespace srn

#endif  // SRN_DRL_AGENTS_H_
