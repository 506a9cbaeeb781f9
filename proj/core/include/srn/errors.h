#ifndef SRN_ERRORS_H_
#define SRN_ERRORS_H_

#include <stdexcept>
#include <string>

namespace srn {

// Precondition violated by the caller (bad dimensions, invalid association,
// out-of-range index). Domain errors on numeric arguments use
// std::domain_error instead.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Exhaustive enumeration requested beyond the configured cap.
class IntractableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation the component does not support, e.g. resizing the device set of
// the centralized agent.
class UnsupportedOperation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss, gradient or metric.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace srn

#endif  // SRN_ERRORS_H_
