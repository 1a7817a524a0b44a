#pragma once

#include <stdexcept>
#include <string>

namespace cpv {

// Malformed or out-of-range input (bad labels, non-product sets, schema violations).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configured cap (profile count, enumeration size, search budget) would be exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called on objects that violate its documented precondition,
// e.g. a privacy check on a protocol that does not implement the rule.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cpv
