#ifndef SRN_TESTING_INVARIANT_CHECKS_H_
#define SRN_TESTING_INVARIANT_CHECKS_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "srn/neural_core.h"
#include "srn/random.h"

namespace srn::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Random gains with log10 uniform in [-16, -8], the range a real cell
// produces.
Eigen::MatrixXd RandomGains(int num_users, int num_devices, Rng& rng);

// Random (s, a, r, s') batch for a network of the given widths; states and
// rewards uniform in [0, 1].
std::vector<Experience> RandomBatch(int input, int actions, int size, Rng& rng);

struct ChannelStats {
  double max_autocorr_error = 0.0;  // |lag-1 autocorrelation - rho|
  double max_variance_error = 0.0;  // |E|x - mean|^2 - 1|
  int entries = 0;
};

// Runs the small-scale process for `frames` frames on an M x N cell and
// measures every entry.
ChannelStats MeasureChannel(double rho, std::uint64_t frames, int num_users,
                            int num_devices, std::uint64_t seed);

CheckResult CheckChannelStatistics(double rho, std::uint64_t frames,
                                   std::uint64_t seed);

// Library frame evaluation against SinrByTerms on random instances with
// 1 <= M, N <= max_dim.
CheckResult CheckFrameOracle(int instances, int max_dim, std::uint64_t seed);

// OptimalPolicy against BruteForceOptimal on random 3 x 3 instances, and
// optimal >= random on each of them.
CheckResult CheckOptimalPolicy(int instances, std::uint64_t seed);

// Backprop against central differences on `inits` random networks.
CheckResult CheckGradients(const std::vector<int>& layer_sizes, int inits,
                           std::uint64_t seed, double step = 1e-5);

// Reward and SIC invariants on random shared-user instances.
CheckResult CheckRewardInvariants(int instances, std::uint64_t seed);

// Everything `srn check` runs.
std::vector<CheckResult> RunAllChecks(std::uint64_t seed);

}  // namespace srn::verify

#endif  // SRN_TESTING_INVARIANT_CHECKS_H_
