#ifndef SRN_RANDOM_H_
#define SRN_RANDOM_H_

#include <complex>
#include <cstdint>
#include <random>

namespace srn {

using Rng = std::mt19937_64;

// Fixed substream identifiers. Every experiment draws from exactly these
// streams so that runs replay bit-for-bit and policies see paired channels.
enum class Stream : std::uint64_t {
  kTopology = 0,
  kChannel = 1,
  kAgentBase = 16,  // kAgentBase + policy slot
};

// Independent generator derived from (master seed, stream id).
Rng MakeStream(std::uint64_t master_seed, std::uint64_t stream_id);
inline Rng MakeStream(std::uint64_t master_seed, Stream stream) {
  return MakeStream(master_seed, static_cast<std::uint64_t>(stream));
}

// Circularly-symmetric complex Gaussian with the given total variance:
// real and imaginary parts are independent N(0, variance / 2), drawn real
// first.
std::complex<double> SampleComplexGaussian(Rng& rng, double variance = 1.0);

}  // namespace srn

#endif  // SRN_RANDOM_H_
