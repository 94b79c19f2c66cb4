#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lgf {

inline constexpr const char* kToolVersion = "0.1.0";

// Spatial point (cell center, face center, ...). 1D problems use x only.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Small dense vector for gradients and dual fields. In 1D the y component
// is identically zero, which keeps every norm and pairing dimension-agnostic.
struct Vec {
  double x = 0.0;
  double y = 0.0;

  friend Vec operator+(Vec a, Vec b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec operator-(Vec a, Vec b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec operator*(double s, Vec a) { return {s * a.x, s * a.y}; }
};

inline double dot(Vec a, Vec b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec a) { return std::hypot(a.x, a.y); }

// Compensated (Kahan) accumulator. Reductions over fields use a fixed index
// order plus compensation so functional values are deterministic and stay
// accurate enough for the 1e-12 relative identities.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidParam : Error {
  explicit InvalidParam(const std::string& msg) : Error(msg) {}
};

struct GridMismatch : Error {
  explicit GridMismatch(const std::string& msg) : Error(msg) {}
};

struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& msg) : Error(msg) {}
};

struct NotDifferentiable : Error {
  explicit NotDifferentiable(const std::string& msg) : Error(msg) {}
};

struct InvalidConfig : Error {
  explicit InvalidConfig(const std::string& msg) : Error(msg) {}
};

struct EmptySeries : Error {
  explicit EmptySeries(const std::string& msg) : Error(msg) {}
};

struct MissingDual : Error {
  explicit MissingDual(const std::string& msg) : Error(msg) {}
};

struct CylinderOutOfDomain : Error {
  explicit CylinderOutOfDomain(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace lgf
