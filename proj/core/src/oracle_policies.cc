#include "srn/oracle_policies.h"

#include <limits>
#include <string>
#include <vector>

#include "srn/errors.h"

namespace srn {

std::uint64_t AssociationCount(int num_users, int num_devices,
                               std::uint64_t cap) {
  if (num_users < 1 || num_devices < 1) {
    throw ContractError("enumeration needs M >= 1 and N >= 1");
  }
  std::uint64_t count = 1;
  for (int n = 0; n < num_devices; ++n) {
    if (count > cap / static_cast<std::uint64_t>(num_users)) {
      throw IntractableError(
          "enumerating " + std::to_string(num_users) + "^" +
          std::to_string(num_devices) + " associations exceeds the cap of " +
          std::to_string(cap));
    }
    count *= static_cast<std::uint64_t>(num_users);
  }
  if (count > cap) {
    throw IntractableError("association count exceeds the enumeration cap");
  }
  return count;
}

void ForEachAssociation(int num_users, int num_devices,
                        const std::function<void(const Association&)>& visit,
                        std::uint64_t cap) {
  const std::uint64_t count = AssociationCount(num_users, num_devices, cap);
  // Odometer over (b_1..b_N); the last device is the least significant.
  std::vector<int> users(num_devices, 0);
  Association assoc = Association::FromUsers(num_users, users);
  for (std::uint64_t i = 0; i < count; ++i) {
    visit(assoc);
    for (int n = num_devices - 1; n >= 0; --n) {
      assoc.Set(users[n], n, 0);
      if (++users[n] < num_users) {
        assoc.Set(users[n], n, 1);
        break;
      }
      users[n] = 0;
      assoc.Set(0, n, 1);
    }
  }
}

PolicyDecision OptimalPolicy(const LinkGains& gains, const SystemParams& params,
                             std::uint64_t cap) {
  const int num_users = static_cast<int>(gains.rows());
  const int num_devices = static_cast<int>(gains.cols());
  PolicyDecision best;
  best.achieved_sum_rate = -std::numeric_limits<double>::infinity();
  ForEachAssociation(
      num_users, num_devices,
      [&](const Association& assoc) {
        const double rate = EvaluateFrame(gains, assoc, params).sum_rate;
        if (rate > best.achieved_sum_rate) {
          best.achieved_sum_rate = rate;
          best.assoc = assoc;
        }
      },
      cap);
  return best;
}

Association RandomPolicy(int num_users, int num_devices, Rng& rng) {
  if (num_users < 1 || num_devices < 1) {
    throw ContractError("random policy needs M >= 1 and N >= 1");
  }
  std::uniform_int_distribution<int> pick(0, num_users - 1);
  std::vector<int> users(num_devices);
  for (auto& u : users) u = pick(rng);
  return Association::FromUsers(num_users, users);
}

}  // namespace srn
