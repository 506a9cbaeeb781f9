#ifndef SRN_RF_CHANNEL_H_
#define SRN_RF_CHANNEL_H_

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "srn/random.h"

namespace srn {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

double Distance(const Position& a, const Position& b);

// Placement and antenna parameters of one cell. Distances in meters,
// frequency in MHz, gains in dB.
struct TopologyConfig {
  int num_users = 3;
  int num_devices = 3;
  // Side of the square deployment region; the BS sits at its center. Nodes
  // are placed uniformly over the annulus [min_dist, max_dist] around the
  // BS, which may extend past the square.
  double region_side = 100.0;
  double min_dist = 10.0;
  double max_dist = 100.0;
  double carrier_freq_mhz = 2400.0;
  double tx_gain_db = 2.5;
  double rx_gain_db = 2.5;
  std::uint64_t seed = 0;

  Position bs_position() const { return {region_side / 2.0, region_side / 2.0}; }

  // Throws ContractError if the config cannot produce a valid topology.
  void Validate() const;
};

// Device-to-user distances below this are clamped before path loss.
inline constexpr double kMinLinkDistance = 1.0;

// Free-space style path loss:
//   32.45 + 20 log10(f_MHz) + 20 log10(d_km) - Gt - Gr   [dB]
// Throws std::domain_error for non-positive frequency or distance.
double PathLossDb(double freq_mhz, double dist_km, double gt_db, double gr_db);

// Linear power gain for a loss in dB: 10^(-dB/10).
double LossDbToGain(double loss_db);

// Path-loss gain for a hop of `dist_m` meters using the config's carrier and
// antenna gains.
double LinkGain(const TopologyConfig& config, double dist_m);

struct Topology {
  std::vector<Position> users;
  std::vector<Position> devices;
};

// Large-scale power gains. Constant for a fixed topology.
struct LargeScaleGains {
  Eigen::VectorXd user;    // BS -> user m
  Eigen::VectorXd device;  // BS -> device n
  Eigen::MatrixXd link;    // device n -> user m, M x N

  int num_users() const { return static_cast<int>(user.size()); }
  int num_devices() const { return static_cast<int>(device.size()); }
};

// One node position uniform over the annulus, rejection sampled from its
// bounding square (x then y per attempt).
Position SamplePosition(const TopologyConfig& config, Rng& rng);

// Users first, then devices, each in index order.
Topology SampleTopology(const TopologyConfig& config, Rng& rng);

LargeScaleGains ComputeLargeScaleGains(const TopologyConfig& config,
                                       const Topology& topology);

// Normalized Gauss-Markov small-scale fading, one entry per link.
struct SmallScaleState {
  Eigen::VectorXcd user;    // h~_m
  Eigen::VectorXcd device;  // f~_n
  Eigen::MatrixXcd link;    // g~_{m,n}, M x N
  std::uint64_t frame_index = 0;
  double rho = 0.0;

  int num_users() const { return static_cast<int>(user.size()); }
  int num_devices() const { return static_cast<int>(device.size()); }
};

// Fresh CN(0,1) entries. Draw order: user[0..M), device[0..N), then link
// row-major (m outer, n inner). Throws std::domain_error if rho is outside
// [0,1] and ContractError if M or N is not positive.
SmallScaleState InitSmallScale(int num_users, int num_devices, double rho,
                               Rng& rng);

// x(t) = rho x(t-1) + e(t), e ~ CN(0, 1 - rho^2), same draw order as
// InitSmallScale. Draws are consumed even when rho == 1.
SmallScaleState EvolveSmallScale(const SmallScaleState& state, Rng& rng);

// Changes the device count. Retained devices keep their state, new devices
// (appended at the end) get fresh CN(0,1) draws: device entries first, then
// their link column entries user by user.
SmallScaleState ResizeSmallScaleDevices(const SmallScaleState& state,
                                        int num_devices, Rng& rng);

struct ChannelState {
  LargeScaleGains large;
  SmallScaleState small;

  int num_users() const { return large.num_users(); }
  int num_devices() const { return large.num_devices(); }

  // Full coefficients: sqrt(lambda) * small-scale.
  std::complex<double> user_coeff(int m) const;
  std::complex<double> device_coeff(int n) const;
  std::complex<double> link_coeff(int m, int n) const;
};

}  // namespace srn

#endif  // SRN_RF_CHANNEL_H_
