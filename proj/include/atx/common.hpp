// Shared scalar/vector types and error taxonomy for the attenuated
// X-ray transform toolkit.

#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace atx {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
  // rotation by +pi/2
  Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Base for all toolkit errors; subtypes mirror the failure modes of the
// individual operations so callers can catch selectively.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct StepCapExceeded : Error {
  explicit StepCapExceeded(const std::string& m) : Error(m) {}
};
struct NotUnitSpeed : Error {
  explicit NotUnitSpeed(const std::string& m) : Error(m) {}
};
struct ParityViolation : Error {
  explicit ParityViolation(const std::string& m) : Error(m) {}
};
struct DegreeViolation : Error {
  explicit DegreeViolation(const std::string& m) : Error(m) {}
};
struct BoundaryNonvanishing : Error {
  explicit BoundaryNonvanishing(const std::string& m) : Error(m) {}
};
struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& m) : Error(m) {}
};
struct SizeGuard : Error {
  explicit SizeGuard(const std::string& m) : Error(m) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(m) {}
};

}  // namespace atx
