#pragma once

#include <stdexcept>
#include <string>

namespace scu {

/// A caller broke an operation's precondition (wrong action level, short
/// buffer, stepping a finished episode, ...).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// A post-condition the shields are supposed to guarantee did not hold.
/// Raising one of these means the simulator itself is wrong.
class InvariantFailure : public std::runtime_error {
 public:
  explicit InvariantFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace scu
