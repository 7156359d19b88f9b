#include "camr/dual.hpp"

#include <ostream>

namespace camr {

std::ostream& operator<<(std::ostream& os, const Dual& d) {
  return os << d.v << "+" << d.d << "e";
}

}  // namespace camr
