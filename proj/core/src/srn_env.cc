#include "srn/srn_env.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "srn/errors.h"

namespace srn {

namespace {

// Fading headroom applied around the large-scale extremes when fixing the
// normalization bounds: the product |f~|^2 |g~|^2 rarely leaves
// [-30 dB, +15 dB].
constexpr double kFadingCeilingLog10 = 1.5;
constexpr double kFadingFloorLog10 = -3.0;
// Margins for bounds taken from a sampled cell.
constexpr double kSampledCeilingLog10 = 1.0;
constexpr double kSampledFloorLog10 = -2.5;

void CheckDevice(const LinkGains& gains, const Association& assoc, int m,
                 int n) {
  if (gains.rows() != assoc.num_users() || gains.cols() != assoc.num_devices()) {
    throw ContractError("link gains and association dimensions differ");
  }
  if (m < 0 || m >= assoc.num_users() || n < 0 || n >= assoc.num_devices()) {
    throw ContractError("user or device index out of range");
  }
}

// Sum of h[m][l] over devices l on user m decoded after n, optionally
// skipping one device.
double WeakerPowerSum(const LinkGains& gains, const Association& assoc, int m,
                      int n, int skip = -1) {
  double sum = 0.0;
  for (int l = 0; l < assoc.num_devices(); ++l) {
    if (l == n || l == skip || assoc(m, l) == 0) continue;
    if (DecodedBefore(gains, m, n, l)) sum += gains(m, l);
  }
  return sum;
}

double StrongerPowerSum(const LinkGains& gains, const Association& assoc,
                        int m, int n) {
  double sum = 0.0;
  for (int l = 0; l < assoc.num_devices(); ++l) {
    if (l == n || assoc(m, l) == 0) continue;
    if (DecodedBefore(gains, m, l, n)) sum += gains(m, l);
  }
  return sum;
}

double SinrFromSums(const SystemParams& params, double own_gain,
                    double interference_gain) {
  const double kp = params.spreading * params.tx_power_w;
  return kp * own_gain / (kp * interference_gain + params.noise_w);
}

}  // namespace

double DbmToWatts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double WattsToDbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

std::complex<double> SystemParams::ReflectionOf(int n) const {
  if (n >= 0 && n < static_cast<int>(device_reflection.size())) {
    return device_reflection[n];
  }
  return reflection;
}

void SystemParams::Validate() const {
  if (!(tx_power_w > 0.0)) throw ContractError("tx power must be positive");
  if (!(noise_w > 0.0)) throw ContractError("noise power must be positive");
  if (spreading < 1) throw ContractError("spreading factor K must be >= 1");
  auto check = [](std::complex<double> alpha) {
    const double mag = std::abs(alpha);
    if (!(mag > 0.0 && mag <= 1.0)) {
      throw ContractError("reflection coefficient magnitude must be in (0,1]");
    }
  };
  check(reflection);
  for (const auto& alpha : device_reflection) check(alpha);
}

Association::Association(int num_users, int num_devices)
    : matrix_(Eigen::MatrixXi::Zero(num_users, num_devices)) {}

Association::Association(Eigen::MatrixXi matrix) : matrix_(std::move(matrix)) {}

Association Association::FromUsers(int num_users,
                                   const std::vector<int>& users) {
  Association assoc(num_users, static_cast<int>(users.size()));
  for (int n = 0; n < static_cast<int>(users.size()); ++n) {
    if (users[n] < 0 || users[n] >= num_users) {
      throw ContractError("user index " + std::to_string(users[n]) +
                          " out of range for device " + std::to_string(n));
    }
    assoc.matrix_(users[n], n) = 1;
  }
  return assoc;
}

int Association::UserOf(int n) const {
  for (int m = 0; m < num_users(); ++m) {
    if (matrix_(m, n) != 0) return m;
  }
  throw ContractError("device " + std::to_string(n) + " is not associated");
}

std::vector<int> Association::Users() const {
  std::vector<int> users(num_devices());
  for (int n = 0; n < num_devices(); ++n) users[n] = UserOf(n);
  return users;
}

bool Association::IsValid() const {
  if (num_users() < 1 || num_devices() < 1) return false;
  for (int n = 0; n < num_devices(); ++n) {
    int sum = 0;
    for (int m = 0; m < num_users(); ++m) {
      const int a = matrix_(m, n);
      if (a != 0 && a != 1) return false;
      sum += a;
    }
    if (sum != 1) return false;
  }
  return true;
}

void Association::Validate() const {
  if (!IsValid()) {
    throw ContractError(
        "association must be binary with exactly one user per device");
  }
}

LinkGains BackscatterGain(const ChannelState& channel,
                          const SystemParams& params) {
  const int num_users = channel.num_users();
  const int num_devices = channel.num_devices();
  LinkGains gains(num_users, num_devices);
  for (int n = 0; n < num_devices; ++n) {
    const double reflect = std::norm(params.ReflectionOf(n));
    const double forward = std::norm(channel.device_coeff(n));
    for (int m = 0; m < num_users; ++m) {
      gains(m, n) = reflect * forward * std::norm(channel.link_coeff(m, n));
    }
  }
  return gains;
}

InterferenceSets ComputeInterferenceSets(const LinkGains& gains,
                                         const Association& assoc, int n,
                                         int m) {
  CheckDevice(gains, assoc, m, n);
  if (assoc(m, n) != 1) {
    throw ContractError("device " + std::to_string(n) +
                        " is not associated with user " + std::to_string(m));
  }
  InterferenceSets sets;
  for (int l = 0; l < assoc.num_devices(); ++l) {
    if (l == n) continue;
    if (DecodedBefore(gains, m, n, l)) {
      sets.interferers.push_back(l);
    } else {
      sets.interfered.push_back(l);
    }
  }
  return sets;
}

double Sinr(const LinkGains& gains, const Association& assoc,
            const SystemParams& params, int m, int n) {
  CheckDevice(gains, assoc, m, n);
  if (assoc(m, n) == 0) return 0.0;
  return SinrFromSums(params, gains(m, n), WeakerPowerSum(gains, assoc, m, n));
}

double Rate(double sinr, int associated, int spreading) {
  if (associated == 0) return 0.0;
  return std::log2(1.0 + sinr) / spreading;
}

FrameOutcome EvaluateFrame(const LinkGains& gains, const Association& assoc,
                           const SystemParams& params) {
  assoc.Validate();
  if (gains.rows() != assoc.num_users() || gains.cols() != assoc.num_devices()) {
    throw ContractError("link gains and association dimensions differ");
  }
  const int num_users = assoc.num_users();
  const int num_devices = assoc.num_devices();
  const double kp = params.spreading * params.tx_power_w;
  FrameOutcome out;
  out.sinr = Eigen::MatrixXd::Zero(num_users, num_devices);
  out.rate = Eigen::MatrixXd::Zero(num_users, num_devices);
  out.interferer_power = Eigen::VectorXd::Zero(num_devices);
  out.interfered_power = Eigen::VectorXd::Zero(num_devices);
  for (int n = 0; n < num_devices; ++n) {
    const int m = assoc.UserOf(n);
    const double weaker = WeakerPowerSum(gains, assoc, m, n);
    const double stronger = StrongerPowerSum(gains, assoc, m, n);
    out.sinr(m, n) = SinrFromSums(params, gains(m, n), weaker);
    out.rate(m, n) = Rate(out.sinr(m, n), 1, params.spreading);
    out.interferer_power(n) = kp * weaker;
    out.interfered_power(n) = kp * stronger;
    out.sum_rate += out.rate(m, n);
  }
  return out;
}

double CounterfactualRate(const LinkGains& gains, const Association& assoc,
                          const SystemParams& params, int m, int l,
                          int excluded) {
  CheckDevice(gains, assoc, m, l);
  if (assoc(m, l) == 0) return 0.0;
  const double sinr = SinrFromSums(params, gains(m, l),
                                   WeakerPowerSum(gains, assoc, m, l, excluded));
  return Rate(sinr, 1, params.spreading);
}

double DistributedReward(const FrameOutcome& outcome, const LinkGains& gains,
                         const Association& assoc, const SystemParams& params,
                         int n) {
  const int m = assoc.UserOf(n);
  double penalty = 0.0;
  for (int l = 0; l < assoc.num_devices(); ++l) {
    if (l == n || assoc(m, l) == 0) continue;
    if (!DecodedBefore(gains, m, l, n)) continue;
    penalty +=
        CounterfactualRate(gains, assoc, params, m, l, n) - outcome.rate(m, l);
  }
  return outcome.rate(m, n) - penalty;
}

double CentralizedReward(const FrameOutcome& outcome) {
  return outcome.sum_rate;
}

GainScale::GainScale(double log10_floor, double log10_ceiling)
    : log10_floor_(log10_floor), log10_ceiling_(log10_ceiling) {
  if (!(log10_ceiling > log10_floor)) {
    throw ContractError("gain scale needs ceiling > floor");
  }
}

GainScale GainScale::FromTopology(const TopologyConfig& topology,
                                  const SystemParams& params) {
  double reflect_min = std::norm(params.reflection);
  double reflect_max = reflect_min;
  for (const auto& alpha : params.device_reflection) {
    reflect_min = std::min(reflect_min, std::norm(alpha));
    reflect_max = std::max(reflect_max, std::norm(alpha));
  }
  const double far_bs = topology.max_dist;
  const double near_bs = std::max(topology.min_dist, kMinLinkDistance);
  const double strongest = reflect_max * LinkGain(topology, near_bs) *
                           LinkGain(topology, kMinLinkDistance);
  const double weakest = reflect_min * LinkGain(topology, far_bs) *
                         LinkGain(topology, 2.0 * far_bs);
  return GainScale(std::log10(weakest) + kFadingFloorLog10,
                   std::log10(strongest) + kFadingCeilingLog10);
}

GainScale GainScale::FromLargeScale(const LargeScaleGains& large,
                                    const SystemParams& params) {
  if (large.num_users() < 1 || large.num_devices() < 1) {
    throw ContractError("gain scale needs at least one link");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int n = 0; n < large.num_devices(); ++n) {
    const double reflect = std::norm(params.ReflectionOf(n));
    for (int m = 0; m < large.num_users(); ++m) {
      const double g = std::log10(reflect * large.device(n) * large.link(m, n));
      lo = std::min(lo, g);
      hi = std::max(hi, g);
    }
  }
  return GainScale(lo + kSampledFloorLog10, hi + kSampledCeilingLog10);
}

double GainScale::Normalize(double gain) const {
  if (!(gain > 0.0)) return 0.0;
  const double x =
      (std::log10(gain) - log10_floor_) / (log10_ceiling_ - log10_floor_);
  return std::clamp(x, 0.0, 1.0);
}

HistoryStore::HistoryStore(int num_users, int num_devices)
    : last_gain(Eigen::MatrixXd::Zero(num_users, num_devices)),
      last_action(num_devices, -1),
      last_interferer_power(Eigen::VectorXd::Zero(num_devices)),
      last_interfered_power(Eigen::VectorXd::Zero(num_devices)) {}

void HistoryStore::ResizeDevices(int num_devices) {
  if (num_devices < 1) throw ContractError("device count must stay positive");
  const int old = this->num_devices();
  const int kept = std::min(old, num_devices);
  Eigen::MatrixXd gain = Eigen::MatrixXd::Zero(num_users(), num_devices);
  gain.leftCols(kept) = last_gain.leftCols(kept);
  last_gain = std::move(gain);
  last_action.resize(num_devices, -1);
  Eigen::VectorXd interferer = Eigen::VectorXd::Zero(num_devices);
  Eigen::VectorXd interfered = Eigen::VectorXd::Zero(num_devices);
  interferer.head(kept) = last_interferer_power.head(kept);
  interfered.head(kept) = last_interfered_power.head(kept);
  last_interferer_power = std::move(interferer);
  last_interfered_power = std::move(interfered);
}

HistoryStore UpdateHistory(const HistoryStore& history,
                           const Association& assoc, const LinkGains& gains,
                           const FrameOutcome& outcome) {
  if (history.num_users() != assoc.num_users() ||
      history.num_devices() != assoc.num_devices()) {
    throw ContractError("history and association dimensions differ");
  }
  HistoryStore next = history;
  for (int n = 0; n < assoc.num_devices(); ++n) {
    const int m = assoc.UserOf(n);
    next.last_gain(m, n) = gains(m, n);
    next.last_action[n] = m;
    next.last_interferer_power(n) = outcome.interferer_power(n);
    next.last_interfered_power(n) = outcome.interfered_power(n);
  }
  return next;
}

Eigen::VectorXd CentralizedState(const HistoryStore& history,
                                 const GainScale& scale) {
  const int num_users = history.num_users();
  const int num_devices = history.num_devices();
  Eigen::VectorXd state(num_users * num_devices);
  for (int m = 0; m < num_users; ++m) {
    for (int n = 0; n < num_devices; ++n) {
      state(m * num_devices + n) = scale.Normalize(history.last_gain(m, n));
    }
  }
  return state;
}

Eigen::VectorXd DistributedState(const HistoryStore& history,
                                 const GainScale& scale,
                                 const SystemParams& params, int n,
                                 int max_devices) {
  const int num_users = history.num_users();
  if (n < 0 || n >= history.num_devices()) {
    throw ContractError("device index out of range for distributed state");
  }
  if (max_devices < history.num_devices()) {
    throw ContractError("max_devices smaller than the current device count");
  }
  const double kp = params.spreading * params.tx_power_w;
  Eigen::VectorXd state = Eigen::VectorXd::Zero(DistributedStateSize(num_users));
  for (int m = 0; m < num_users; ++m) {
    state(m) = scale.Normalize(history.last_gain(m, n));
  }
  if (history.last_action[n] >= 0) state(num_users + history.last_action[n]) = 1.0;
  state(2 * num_users) = static_cast<double>(n + 1) / max_devices;
  state(2 * num_users + 1) =
      scale.Normalize(history.last_interferer_power(n) / kp);
  state(2 * num_users + 2) =
      scale.Normalize(history.last_interfered_power(n) / kp);
  return state;
}

SrnEnvironment::SrnEnvironment(const TopologyConfig& topology,
                               const SystemParams& params, double rho)
    : config_(topology),
      params_(params),
      topology_rng_(MakeStream(topology.seed, Stream::kTopology)),
      channel_rng_(MakeStream(topology.seed, Stream::kChannel)) {
  config_.Validate();
  params_.Validate();
  topology_ = SampleTopology(config_, topology_rng_);
  channel_.large = ComputeLargeScaleGains(config_, topology_);
  channel_.small = InitSmallScale(config_.num_users, config_.num_devices, rho,
                                  channel_rng_);
  gains_ = BackscatterGain(channel_, params_);
  scale_ = GainScale::FromLargeScale(channel_.large, params_);
}

const LinkGains& SrnEnvironment::Advance() {
  channel_.small = EvolveSmallScale(channel_.small, channel_rng_);
  gains_ = BackscatterGain(channel_, params_);
  return gains_;
}

void SrnEnvironment::ResizeDevices(int num_devices) {
  if (num_devices < 1) throw ContractError("device count must stay positive");
  if (num_devices == config_.num_devices) return;
  if (num_devices < config_.num_devices) {
    topology_.devices.resize(num_devices);
  } else {
    while (static_cast<int>(topology_.devices.size()) < num_devices) {
      topology_.devices.push_back(SamplePosition(config_, topology_rng_));
    }
  }
  config_.num_devices = num_devices;
  channel_.large = ComputeLargeScaleGains(config_, topology_);
  channel_.small =
      ResizeSmallScaleDevices(channel_.small, num_devices, channel_rng_);
  gains_ = BackscatterGain(channel_, params_);
}

}  // namespace srn
