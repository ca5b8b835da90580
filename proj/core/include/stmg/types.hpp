#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stmg {

using Index = std::int64_t;
using Vec2 = std::array<double, 2>;
using Vector = std::vector<double>;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stmg
