#pragma once

#include <stdexcept>
#include <string>

namespace spn {

/// Domain error: invalid networks, malformed queries, failed preconditions.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File and format errors (missing files, bad headers, truncated records).
struct IoError : Error {
  using Error::Error;
};

}  // namespace spn
