#ifndef CAMR_DUAL_HPP
#define CAMR_DUAL_HPP

#include <Eigen/Core>
#include <cmath>
#include <iosfwd>

namespace camr {

// Forward-mode scalar carrying one tangent component. The candidate
// pipeline is templated on the scalar type so that derivatives with
// respect to the learned Fourier coefficients are exact rather than
// finite-differenced.
struct Dual {
  double v = 0.0;  // value
  double d = 0.0;  // derivative along the seeded direction

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit from constants
  Dual(double value, double deriv) : v(value), d(deriv) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator+(const Dual& a) { return a; }

inline bool operator==(const Dual& a, const Dual& b) { return a.v == b.v; }
inline bool operator!=(const Dual& a, const Dual& b) { return a.v != b.v; }
inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

inline Dual sqrt(const Dual& a) {
  const double r = std::sqrt(a.v);
  return {r, r > 0.0 ? a.d / (2.0 * r) : 0.0};
}
inline Dual abs(const Dual& a) {
  return {std::abs(a.v), a.v > 0.0 ? a.d : (a.v < 0.0 ? -a.d : 0.0)};
}
inline Dual cos(const Dual& a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual sin(const Dual& a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual max(const Dual& a, const Dual& b) { return a.v >= b.v ? a : b; }

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

std::ostream& operator<<(std::ostream& os, const Dual& d);

}  // namespace camr

namespace Eigen {
template <>
struct NumTraits<camr::Dual> : NumTraits<double> {
  using Real = camr::Dual;
  using NonInteger = camr::Dual;
  using Nested = camr::Dual;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 2,
    MulCost = 4,
  };
};
}  // namespace Eigen

#endif
