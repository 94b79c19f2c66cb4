#pragma once

#include <cmath>
#include <ostream>

namespace lgf {

// Extended nonnegative-or-real value: Finite(v) or PosInfinity. Convex
// conjugates of linear-growth integrands take the value +inf outside the
// dual ball; a tagged type keeps comparisons total instead of leaning on
// IEEE inf arithmetic in certificate code.
class ExtReal {
 public:
  ExtReal() = default;
  static ExtReal finite(double v) { return ExtReal(v, true); }
  static ExtReal pos_infinity() { return ExtReal(0.0, false); }

  bool is_finite() const { return finite_; }
  bool is_infinite() const { return !finite_; }

  // Only meaningful for finite values; infinite values surface as a huge
  // sentinel so max-reductions in reports still behave.
  double value_or_huge() const {
    return finite_ ? v_ : 1e300;
  }
  double value() const { return v_; }

  friend ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.is_infinite() || b.is_infinite()) return pos_infinity();
    return finite(a.v_ + b.v_);
  }
  friend ExtReal operator+(ExtReal a, double b) { return a + finite(b); }
  friend ExtReal operator-(ExtReal a, double b) {
    if (a.is_infinite()) return pos_infinity();
    return finite(a.v_ - b);
  }

  friend bool operator<(ExtReal a, ExtReal b) {
    if (a.is_infinite()) return false;
    if (b.is_infinite()) return true;
    return a.v_ < b.v_;
  }
  friend bool operator<=(ExtReal a, ExtReal b) { return !(b < a); }
  friend bool operator==(ExtReal a, ExtReal b) {
    if (a.is_infinite() || b.is_infinite())
      return a.is_infinite() == b.is_infinite();
    return a.v_ == b.v_;
  }

  friend bool operator<=(ExtReal a, double b) { return a <= finite(b); }
  friend bool operator<(double a, ExtReal b) { return finite(a) < b; }

  friend std::ostream& operator<<(std::ostream& os, ExtReal a) {
    if (a.is_infinite()) return os << "+inf";
    return os << a.v_;
  }

 private:
  ExtReal(double v, bool finite) : v_(v), finite_(finite) {}
  double v_ = 0.0;
  bool finite_ = true;
};

}  // namespace lgf
