#include "srn/rf_channel.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "srn/errors.h"

namespace srn {

Rng MakeStream(std::uint64_t master_seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  return Rng(seq);
}

std::complex<double> SampleComplexGaussian(Rng& rng, double variance) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::sqrt(variance / 2.0);
  const double re = normal(rng);
  const double im = normal(rng);
  return {scale * re, scale * im};
}

double Distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

void TopologyConfig::Validate() const {
  if (num_users < 1 || num_devices < 1) {
    throw ContractError("topology needs at least one user and one device");
  }
  if (!(min_dist >= 0.0) || !(max_dist >= min_dist)) {
    throw ContractError("topology distance bounds must satisfy 0 <= min <= max");
  }
  if (!(region_side > 0.0)) {
    throw ContractError("region_side must be positive");
  }
  if (!(max_dist > 0.0)) {
    throw ContractError("max_dist must be positive");
  }
  if (!(carrier_freq_mhz > 0.0)) {
    throw ContractError("carrier frequency must be positive");
  }
}

double PathLossDb(double freq_mhz, double dist_km, double gt_db,
                  double gr_db) {
  if (!(freq_mhz > 0.0)) {
    throw std::domain_error("path loss: frequency must be positive, got " +
                            std::to_string(freq_mhz));
  }
  if (!(dist_km > 0.0)) {
    throw std::domain_error("path loss: distance must be positive, got " +
                            std::to_string(dist_km));
  }
  return 32.45 + 20.0 * std::log10(freq_mhz) + 20.0 * std::log10(dist_km) -
         gt_db - gr_db;
}

double LossDbToGain(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

double LinkGain(const TopologyConfig& config, double dist_m) {
  return LossDbToGain(PathLossDb(config.carrier_freq_mhz, dist_m / 1000.0,
                                 config.tx_gain_db, config.rx_gain_db));
}

Position SamplePosition(const TopologyConfig& config, Rng& rng) {
  std::uniform_real_distribution<double> coord(-config.max_dist,
                                               config.max_dist);
  const Position bs = config.bs_position();
  for (;;) {
    const double dx = coord(rng);
    const double dy = coord(rng);
    const double d = std::hypot(dx, dy);
    if (d >= config.min_dist && d <= config.max_dist) {
      return {bs.x + dx, bs.y + dy};
    }
  }
}

Topology SampleTopology(const TopologyConfig& config, Rng& rng) {
  config.Validate();
  Topology topo;
  topo.users.reserve(config.num_users);
  topo.devices.reserve(config.num_devices);
  for (int m = 0; m < config.num_users; ++m) {
    topo.users.push_back(SamplePosition(config, rng));
  }
  for (int n = 0; n < config.num_devices; ++n) {
    topo.devices.push_back(SamplePosition(config, rng));
  }
  return topo;
}

LargeScaleGains ComputeLargeScaleGains(const TopologyConfig& config,
                                       const Topology& topology) {
  const int num_users = static_cast<int>(topology.users.size());
  const int num_devices = static_cast<int>(topology.devices.size());
  LargeScaleGains gains;
  gains.user.resize(num_users);
  gains.device.resize(num_devices);
  gains.link.resize(num_users, num_devices);
  for (int m = 0; m < num_users; ++m) {
    gains.user(m) =
        LinkGain(config, Distance(config.bs_position(), topology.users[m]));
  }
  for (int n = 0; n < num_devices; ++n) {
    gains.device(n) =
        LinkGain(config, Distance(config.bs_position(), topology.devices[n]));
  }
  for (int m = 0; m < num_users; ++m) {
    for (int n = 0; n < num_devices; ++n) {
      const double d = Distance(topology.users[m], topology.devices[n]);
      gains.link(m, n) = LinkGain(config, std::max(d, kMinLinkDistance));
    }
  }
  return gains;
}

SmallScaleState InitSmallScale(int num_users, int num_devices, double rho,
                               Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::domain_error("small-scale correlation rho must lie in [0,1]");
  }
  if (num_users < 1 || num_devices < 1) {
    throw ContractError("small-scale state needs M >= 1 and N >= 1");
  }
  SmallScaleState s;
  s.rho = rho;
  s.frame_index = 0;
  s.user.resize(num_users);
  s.device.resize(num_devices);
  s.link.resize(num_users, num_devices);
  for (int m = 0; m < num_users; ++m) s.user(m) = SampleComplexGaussian(rng);
  for (int n = 0; n < num_devices; ++n) {
    s.device(n) = SampleComplexGaussian(rng);
  }
  for (int m = 0; m < num_users; ++m) {
    for (int n = 0; n < num_devices; ++n) {
      s.link(m, n) = SampleComplexGaussian(rng);
    }
  }
  return s;
}

SmallScaleState EvolveSmallScale(const SmallScaleState& state, Rng& rng) {
  const double rho = state.rho;
  const double innovation = 1.0 - rho * rho;
  SmallScaleState next = state;
  auto step = [&](std::complex<double> x) {
    return rho * x + SampleComplexGaussian(rng, innovation);
  };
  for (int m = 0; m < state.num_users(); ++m) next.user(m) = step(state.user(m));
  for (int n = 0; n < state.num_devices(); ++n) {
    next.device(n) = step(state.device(n));
  }
  for (int m = 0; m < state.num_users(); ++m) {
    for (int n = 0; n < state.num_devices(); ++n) {
      next.link(m, n) = step(state.link(m, n));
    }
  }
  ++next.frame_index;
  return next;
}

SmallScaleState ResizeSmallScaleDevices(const SmallScaleState& state,
                                        int num_devices, Rng& rng) {
  if (num_devices < 1) {
    throw ContractError("device count must stay positive");
  }
  const int kept = std::min(num_devices, state.num_devices());
  SmallScaleState next = state;
  next.device.resize(num_devices);
  next.link.resize(state.num_users(), num_devices);
  next.device.head(kept) = state.device.head(kept);
  next.link.leftCols(kept) = state.link.leftCols(kept);
  for (int n = kept; n < num_devices; ++n) {
    next.device(n) = SampleComplexGaussian(rng);
    for (int m = 0; m < state.num_users(); ++m) {
      next.link(m, n) = SampleComplexGaussian(rng);
    }
  }
  return next;
}

std::complex<double> ChannelState::user_coeff(int m) const {
  return std::sqrt(large.user(m)) * small.user(m);
}

std::complex<double> ChannelState::device_coeff(int n) const {
  return std::sqrt(large.device(n)) * small.device(n);
}

std::complex<double> ChannelState::link_coeff(int m, int n) const {
  return std::sqrt(large.link(m, n)) * small.link(m, n);
}

}  // namespace srn
