#pragma once

#include <stdexcept>
#include <string>

namespace dyndsg {

/// Raised for caller mistakes: unknown vertices, self-loops, deleting an
/// absent edge, malformed streams, exceeded capacities.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dyndsg
