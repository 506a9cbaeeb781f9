#ifndef SRN_SRN_ENV_H_
#define SRN_SRN_ENV_H_

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "srn/random.h"
#include "srn/rf_channel.h"

namespace srn {

double DbmToWatts(double dbm);
double WattsToDbm(double watts);

struct SystemParams {
  double tx_power_w = DbmToWatts(40.0);
  double noise_w = DbmToWatts(-114.0);
  // Reflection coefficient shared by devices without an explicit entry.
  std::complex<double> reflection{0.8, 0.0};
  // Optional per-device reflection coefficients, indexed by device.
  std::vector<std::complex<double>> device_reflection;
  int spreading = 50;  // K

  std::complex<double> ReflectionOf(int n) const;
  // Throws ContractError on non-positive power/noise, |alpha| outside (0,1]
  // or K < 1.
  void Validate() const;
};

// Binary user-association matrix a[m][n], M x N. Each column is expected to
// hold exactly one 1; Validate() enforces it.
class Association {
 public:
  Association() = default;
  Association(int num_users, int num_devices);  // all zeros (invalid)
  explicit Association(Eigen::MatrixXi matrix);

  // users[n] is the 0-based user index of device n.
  static Association FromUsers(int num_users, const std::vector<int>& users);

  int num_users() const { return static_cast<int>(matrix_.rows()); }
  int num_devices() const { return static_cast<int>(matrix_.cols()); }
  int operator()(int m, int n) const { return matrix_(m, n); }
  void Set(int m, int n, int value) { matrix_(m, n) = value; }
  const Eigen::MatrixXi& matrix() const { return matrix_; }

  // User serving device n; requires a valid column.
  int UserOf(int n) const;
  std::vector<int> Users() const;

  bool IsValid() const;
  void Validate() const;  // throws ContractError on a column-sum violation

  friend bool operator==(const Association& a, const Association& b) {
    return a.matrix_ == b.matrix_;
  }

 private:
  Eigen::MatrixXi matrix_;
};

// h[m][n] = |alpha_n|^2 |f_n|^2 |g_{m,n}|^2, M x N.
using LinkGains = Eigen::MatrixXd;

LinkGains BackscatterGain(const ChannelState& channel,
                          const SystemParams& params);

// Strict SIC decoding order on one user's gains: l is decoded before n when
// its gain is larger, ties going to the lower device index.
inline bool DecodedBefore(const LinkGains& gains, int m, int l, int n) {
  const double hl = gains(m, l);
  const double hn = gains(m, n);
  return hl > hn || (hl == hn && l < n);
}

struct InterferenceSets {
  std::vector<int> interferers;  // I~_n: devices weaker than n at user m
  std::vector<int> interfered;   // O~_n: devices stronger than n at user m
};

// Membership is over all devices l != n; power sums additionally mask by
// a[m][l]. Throws ContractError if device n is not associated with m.
InterferenceSets ComputeInterferenceSets(const LinkGains& gains,
                                         const Association& assoc, int n,
                                         int m);

double Sinr(const LinkGains& gains, const Association& assoc,
            const SystemParams& params, int m, int n);

// (1/K) a log2(1 + sinr) in bits/frame/Hz.
double Rate(double sinr, int associated, int spreading);

struct FrameOutcome {
  Eigen::MatrixXd sinr;  // M x N
  Eigen::MatrixXd rate;  // M x N
  double sum_rate = 0.0;
  Eigen::VectorXd interferer_power;  // I_n, K p weighted
  Eigen::VectorXd interfered_power;  // O_n, K p weighted
};

FrameOutcome EvaluateFrame(const LinkGains& gains, const Association& assoc,
                           const SystemParams& params);

// Rate of device l at user m with device n's term removed from l's
// interference sum.
double CounterfactualRate(const LinkGains& gains, const Association& assoc,
                          const SystemParams& params, int m, int l,
                          int excluded);

// Own rate minus the rate loss inflicted on the stronger devices sharing
// the same user.
double DistributedReward(const FrameOutcome& outcome, const LinkGains& gains,
                         const Association& assoc, const SystemParams& params,
                         int n);

// Sum rate; identical to outcome.sum_rate.
double CentralizedReward(const FrameOutcome& outcome);

// Affine map of log10(gain) onto [0,1] with fixed bounds. Zero (unobserved)
// maps to 0.
class GainScale {
 public:
  GainScale() = default;
  GainScale(double log10_floor, double log10_ceiling);

  // Bounds from the weakest and strongest backscatter path the topology
  // config admits, widened by a fixed fading margin.
  static GainScale FromTopology(const TopologyConfig& topology,
                                const SystemParams& params);
  // Bounds from the weakest and strongest large-scale backscatter path of a
  // sampled cell, widened by the same kind of margin. Much tighter than
  // FromTopology, so differences between users stay visible.
  static GainScale FromLargeScale(const LargeScaleGains& large,
                                  const SystemParams& params);

  double Normalize(double gain) const;
  double log10_floor() const { return log10_floor_; }
  double log10_ceiling() const { return log10_ceiling_; }

 private:
  double log10_floor_ = -20.0;
  double log10_ceiling_ = -5.0;
};

// Per-device backscatter observations available to the BS.
struct HistoryStore {
  Eigen::MatrixXd last_gain;      // M x N, 0 = never observed
  std::vector<int> last_action;   // -1 before the first frame
  Eigen::VectorXd last_interferer_power;
  Eigen::VectorXd last_interfered_power;

  HistoryStore() = default;
  HistoryStore(int num_users, int num_devices);

  int num_users() const { return static_cast<int>(last_gain.rows()); }
  int num_devices() const { return static_cast<int>(last_gain.cols()); }

  // Drops trailing devices or appends unobserved ones.
  void ResizeDevices(int num_devices);
};

// Refreshes only the entries of associated (m, n) pairs.
HistoryStore UpdateHistory(const HistoryStore& history,
                           const Association& assoc, const LinkGains& gains,
                           const FrameOutcome& outcome);

// Normalized last_gain, flattened with m as the outer index. Length M*N.
Eigen::VectorXd CentralizedState(const HistoryStore& history,
                                 const GainScale& scale);

// [gain row of n (M) | one-hot last action (M) | (n+1)/max_devices |
//  norm I_n | norm O_n], length 2M+3. Interference powers are normalized
// as gains after dividing by K p.
Eigen::VectorXd DistributedState(const HistoryStore& history,
                                 const GainScale& scale,
                                 const SystemParams& params, int n,
                                 int max_devices);

inline int DistributedStateSize(int num_users) { return 2 * num_users + 3; }

// One cell: topology, large-scale gains and the evolving small-scale state.
// Topology draws and channel draws come from separate substreams of
// topology.seed.
class SrnEnvironment {
 public:
  SrnEnvironment(const TopologyConfig& topology, const SystemParams& params,
                 double rho);

  // Evolves the small-scale fading by one frame and returns the new gains.
  const LinkGains& Advance();

  // Removes trailing devices or places new ones per the topology config.
  void ResizeDevices(int num_devices);

  const TopologyConfig& topology_config() const { return config_; }
  const Topology& topology() const { return topology_; }
  const SystemParams& params() const { return params_; }
  const ChannelState& channel() const { return channel_; }
  const LinkGains& gains() const { return gains_; }
  const GainScale& gain_scale() const { return scale_; }
  int num_users() const { return channel_.num_users(); }
  int num_devices() const { return channel_.num_devices(); }
  std::uint64_t frame_index() const { return channel_.small.frame_index; }

 private:
  TopologyConfig config_;
  SystemParams params_;
  Rng topology_rng_;
  Rng channel_rng_;
  Topology topology_;
  ChannelState channel_;
  LinkGains gains_;
  GainScale scale_;
};

}  // namespace srn

#endif  // SRN_SRN_ENV_H_
