#ifndef SRN_EXPERIMENT_H_
#define SRN_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srn/drl_agents.h"
#include "srn/oracle_policies.h"
#include "srn/srn_env.h"

namespace srn {

enum class PolicyKind { kCentralized, kDistributed, kOptimal, kRandom };

inline constexpr PolicyKind kAllPolicies[] = {
    PolicyKind::kCentralized, PolicyKind::kDistributed, PolicyKind::kOptimal,
    PolicyKind::kRandom};

std::string_view PolicyName(PolicyKind kind);
PolicyKind ParsePolicy(std::string_view name);  // ContractError if unknown

struct DeviceCountChange {
  std::uint64_t frame = 0;  // first frame played with the new count
  int num_devices = 0;
};

// Everything needed to replay a run. Field names double as the config-file
// keys; defaults reproduce the reference scenario.
struct ExperimentConfig {
  std::string scenario = "default";
  int num_users = 3;
  int num_devices = 3;
  double rho = 0.99;
  std::uint64_t frames = 10000;
  std::vector<PolicyKind> policies{std::begin(kAllPolicies),
                                   std::end(kAllPolicies)};
  std::vector<DeviceCountChange> n_changes;
  int max_devices = 0;  // 0: largest count the schedule reaches

  // System
  double tx_power_dbm = 40.0;
  double noise_dbm = -114.0;
  double reflection = 0.8;
  int spreading = 50;

  // Topology
  double region_side = 100.0;
  double min_dist = 10.0;
  double max_dist = 100.0;
  double carrier_freq_mhz = 2400.0;
  double tx_gain_db = 2.5;
  double rx_gain_db = 2.5;

  // Agents
  double gamma = 0.3;
  int batch_size = 64;
  int target_period = 100;
  int replay_capacity = 800;
  double learning_rate = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double epsilon_initial = 0.2;
  double epsilon_min = 0.005;
  double epsilon_decay = 0.005;
  std::vector<int> centralized_hidden{256, 128, 64};
  std::vector<int> distributed_hidden{128, 64, 32};
  double clip_norm = 0.0;
  std::uint64_t max_joint_actions = 1u << 16;

  // Harness
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  int moving_average_window = 200;
  double tail_fraction = 0.2;
  std::uint64_t seed = 0;
  std::string output_dir = ".";

  void Validate() const;
  bool Has(PolicyKind kind) const;
  int EffectiveMaxDevices() const;

  TopologyConfig Topology() const;
  SystemParams System() const;
  AgentConfig Agent() const;

  // Canonical text form (JSON, keys sorted). Parsing rejects unknown keys;
  // absent keys keep their defaults.
  std::string Serialize() const;
  static ExperimentConfig Parse(std::string_view text);
  static ExperimentConfig Load(const std::filesystem::path& path);

  // Overrides one field from "key=value"; the value is read as JSON when it
  // parses, otherwise as a string.
  void Override(std::string_view assignment);
};

struct FrameRecord {
  std::uint64_t frame = 0;
  PolicyKind policy = PolicyKind::kRandom;
  int n_devices = 0;
  double sum_rate = 0.0;
  double moving_avg = 0.0;
  std::optional<double> epsilon;
  std::optional<double> loss;
  std::uint64_t gain_digest = 0;  // hash of the link gains the policy saw
};

struct RunTrace {
  std::vector<PolicyKind> policies;  // in column order
  std::vector<FrameRecord> records;  // frame-major, then policy order
  int window = 200;
  std::vector<std::string> warnings;

  bool Has(PolicyKind kind) const;
  std::vector<const FrameRecord*> Of(PolicyKind kind) const;
};

// Stable 64-bit hash of a gain matrix (dimensions and raw values).
std::uint64_t GainDigest(const LinkGains& gains);

// out[t] = mean of series[max(0, t-window+1) .. t]; partial windows at the
// start average over what is available.
std::vector<double> MovingAverage(std::span<const double> series, int window);

// A policy as driven by the harness: one frame at a time on shared gains.
class PolicyRunner {
 public:
  virtual ~PolicyRunner() = default;
  virtual PolicyKind kind() const = 0;
  virtual bool learns() const = 0;
  virtual FrameLog Step(const LinkGains& gains, const SystemParams& params) = 0;
  // Throws UnsupportedOperation when the policy cannot follow a change of N.
  virtual void ResizeDevices(int num_devices) = 0;
};

// Agent streams are keyed by policy kind so a policy's draws do not depend
// on which other policies share the run.
std::unique_ptr<PolicyRunner> MakeRunner(PolicyKind kind,
                                         const ExperimentConfig& config,
                                         const SrnEnvironment& env);

// Resizes the environment and every runner. Fails before touching anything
// if some runner cannot follow the change.
void ApplyDeviceCountChange(SrnEnvironment& env,
                            std::span<const std::unique_ptr<PolicyRunner>> runners,
                            int num_devices);

// Runs every requested policy on the same channel realization. Throws
// NumericalFault if any metric goes non-finite and UnsupportedOperation if a
// device-count change is combined with the centralized agent. An intractable
// oracle is dropped with a warning.
RunTrace RunExperiment(const ExperimentConfig& config);

struct PolicySummary {
  PolicyKind policy = PolicyKind::kRandom;
  double tail_mean = 0.0;
  std::optional<double> ratio_vs_optimal;
  std::optional<double> ratio_vs_random;
};

struct RunSummary {
  std::vector<PolicySummary> policies;
  const PolicySummary* Find(PolicyKind kind) const;
};

// Mean moving average over the final ceil(tail_fraction * frames) frames.
RunSummary Summarize(const RunTrace& trace, double tail_fraction);

// Mean moving average of one policy over frames [first, last] inclusive.
double MeanMovingAverage(const RunTrace& trace, PolicyKind kind,
                         std::uint64_t first, std::uint64_t last);

// Header: frame,policy,n_devices,sum_rate,moving_avg_<window>,epsilon,loss.
// Not-applicable epsilon/loss fields are left empty.
void WriteTraceCsv(const RunTrace& trace, std::ostream& out);
// "<policy>.<key>=<value>" lines; keys tail_mean, ratio_vs_optimal,
// ratio_vs_random (ratios omitted when the reference policy is absent).
void WriteSummary(const RunSummary& summary, std::ostream& out);

struct RunOutputs {
  std::filesystem::path csv;
  std::filesystem::path summary_file;
  RunSummary summary;
  std::vector<std::string> warnings;
};

// RunExperiment plus <output_dir>/<scenario>_seed<seed>.csv and
// .summary.txt.
RunOutputs RunAndWrite(const ExperimentConfig& config);

}  // namespace srn

#endif  // SRN_EXPERIMENT_H_
