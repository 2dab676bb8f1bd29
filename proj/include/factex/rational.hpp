#pragma once
// Exact rational arithmetic on 128-bit integers. Effect estimates are exact
// dyadic-denominator fractions of small counts, and the enumeration oracle
// sums products of assignment counts, which can exceed 64 bits; every
// operation here is overflow-checked and throws instead of wrapping.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace factex {

using int128 = __int128;

inline int128 checked_add(int128 a, int128 b) {
  int128 r;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("rational: add overflow");
  return r;
}

inline int128 checked_mul(int128 a, int128 b) {
  int128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("rational: mul overflow");
  return r;
}

inline int128 gcd128(int128 a, int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

class Rat {
 public:
  Rat() = default;
  Rat(long long n) : num_(n), den_(1) {}  // NOLINT: implicit by design
  Rat(int128 num, int128 den) : num_(num), den_(den) {
    if (den_ == 0) throw std::domain_error("rational: zero denominator");
    normalize();
  }

  int128 num() const { return num_; }
  int128 den() const { return den_; }

  Rat operator-() const { return Rat(-num_, den_); }

  Rat& operator+=(const Rat& o) {
    // a/b + c/d = (a*(d/g) + c*(b/g)) / (b*(d/g)) with g = gcd(b, d)
    int128 g = gcd128(den_, o.den_);
    int128 db = den_ / g, dd = o.den_ / g;
    num_ = checked_add(checked_mul(num_, dd), checked_mul(o.num_, db));
    den_ = checked_mul(den_, dd);
    normalize();
    return *this;
  }
  Rat& operator-=(const Rat& o) { return *this += -o; }
  Rat& operator*=(const Rat& o) {
    int128 g1 = gcd128(num_, o.den_), g2 = gcd128(o.num_, den_);
    num_ = checked_mul(num_ / g1, o.num_ / g2);
    den_ = checked_mul(den_ / g2, o.den_ / g1);
    normalize();
    return *this;
  }
  Rat& operator/=(const Rat& o) {
    if (o.num_ == 0) throw std::domain_error("rational: division by zero");
    return *this *= Rat(o.den_, o.num_);
  }

  friend Rat operator+(Rat a, const Rat& b) { return a += b; }
  friend Rat operator-(Rat a, const Rat& b) { return a -= b; }
  friend Rat operator*(Rat a, const Rat& b) { return a *= b; }
  friend Rat operator/(Rat a, const Rat& b) { return a /= b; }

  friend bool operator==(const Rat& a, const Rat& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
  friend bool operator<(const Rat& a, const Rat& b) {
    // denominators are positive after normalization
    return checked_mul(a.num_, b.den_) < checked_mul(b.num_, a.den_);
  }
  friend bool operator<=(const Rat& a, const Rat& b) { return a < b || a == b; }
  friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
  friend bool operator>=(const Rat& a, const Rat& b) { return b <= a; }

  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  // "num/den", or just "num" when the denominator is 1
  std::string str() const;

 private:
  int128 num_ = 0;
  int128 den_ = 1;

  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    if (num_ == 0) {
      den_ = 1;
      return;
    }
    int128 g = gcd128(num_, den_);
    num_ /= g;
    den_ /= g;
  }
};

std::string int128_to_string(int128 v);

inline std::string Rat::str() const {
  if (den_ == 1) return int128_to_string(num_);
  return int128_to_string(num_) + "/" + int128_to_string(den_);
}

}  // namespace factex
