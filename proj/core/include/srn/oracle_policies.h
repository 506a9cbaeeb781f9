#ifndef SRN_ORACLE_POLICIES_H_
#define SRN_ORACLE_POLICIES_H_

#include <cstdint>
#include <functional>

#include "srn/random.h"
#include "srn/srn_env.h"

namespace srn {

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

struct PolicyDecision {
  Association assoc;
  double achieved_sum_rate = 0.0;
};

// M^N, or IntractableError when it exceeds `cap` (or overflows).
std::uint64_t AssociationCount(int num_users, int num_devices,
                               std::uint64_t cap = kDefaultEnumerationCap);

// Visits all M^N associations in lexicographic order of (b_1, ..., b_N),
// b_N varying fastest. Throws IntractableError above the cap.
void ForEachAssociation(int num_users, int num_devices,
                        const std::function<void(const Association&)>& visit,
                        std::uint64_t cap = kDefaultEnumerationCap);

// Exhaustive search on the true instantaneous gains. The first association
// (in enumeration order) attaining the maximum sum rate wins.
PolicyDecision OptimalPolicy(const LinkGains& gains, const SystemParams& params,
                             std::uint64_t cap = kDefaultEnumerationCap);

// Each device picks a user uniformly and independently, device 0 first.
Association RandomPolicy(int num_users, int num_devices, Rng& rng);

}  // namespace srn

#endif  // SRN_ORACLE_POLICIES_H_
