#pragma once

// Exact rational scalar used throughout the geometry kernel.
// Backed by GMP; every value is kept canonical (reduced, denominator > 0).

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace pwadyn {

class RatParseError : public std::runtime_error {
 public:
  explicit RatParseError(const std::string& what) : std::runtime_error(what) {}
};

class Rat {
 public:
  Rat() : v_(0) {}
  Rat(long num) : v_(static_cast<long>(num)) {}          // NOLINT(google-explicit-constructor)
  Rat(long num, long den) {
    if (den == 0) throw std::domain_error("Rat: zero denominator");
    v_ = mpq_class(num, den);
    v_.canonicalize();
  }
  explicit Rat(mpq_class q) : v_(std::move(q)) { v_.canonicalize(); }
  Rat(const mpz_class& num, const mpz_class& den) {
    if (den == 0) throw std::domain_error("Rat: zero denominator");
    v_ = mpq_class(num, den);
    v_.canonicalize();
  }

  // Accepts "p", "-p", "p/q" with arbitrary-precision decimal digits.
  static Rat parse(std::string_view text) {
    const auto bad = [&] { throw RatParseError("invalid rational literal '" + std::string(text) + "'"); };
    if (text.empty()) bad();
    const auto slash = text.find('/');
    const auto check_int = [&](std::string_view s) {
      if (s.empty()) bad();
      std::size_t i = (s[0] == '-') ? 1 : 0;
      if (i == s.size()) bad();
      for (; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') bad();
    };
    if (slash == std::string_view::npos) {
      check_int(text);
      return Rat(mpq_class(std::string(text)));
    }
    const auto num = text.substr(0, slash);
    const auto den = text.substr(slash + 1);
    check_int(num);
    check_int(den);
    if (den[0] == '-') bad();
    const mpz_class n{std::string(num)};
    const mpz_class d{std::string(den)};
    if (d == 0) throw RatParseError("zero denominator in '" + std::string(text) + "'");
    return Rat(n, d);
  }

  const mpz_class num() const { return v_.get_num(); }
  const mpz_class den() const { return v_.get_den(); }

  int sign() const { return sgn(v_); }
  bool is_zero() const { return sgn(v_) == 0; }
  bool is_integer() const { return v_.get_den() == 1; }

  double to_double() const { return v_.get_d(); }

  // log|x| computed safely even when num/den exceed double range.
  double log_abs() const {
    if (is_zero()) return -std::numeric_limits<double>::infinity();
    signed long ne = 0, de = 0;
    const double nd = mpz_get_d_2exp(&ne, v_.get_num().get_mpz_t());
    const double dd = mpz_get_d_2exp(&de, v_.get_den().get_mpz_t());
    return std::log(std::fabs(nd)) - std::log(std::fabs(dd)) +
           (static_cast<double>(ne) - static_cast<double>(de)) * std::numbers::ln2_v<double>;
  }

  std::string str() const {
    if (v_.get_den() == 1) return v_.get_num().get_str();
    return v_.get_num().get_str() + "/" + v_.get_den().get_str();
  }

  mpz_class floor() const {
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), v_.get_num().get_mpz_t(), v_.get_den().get_mpz_t());
    return q;
  }

  // Fractional part in [0,1).
  Rat mod1() const { return *this - Rat(floor(), mpz_class(1)); }

  Rat operator-() const { return Rat(mpq_class(-v_), already_canonical{}); }
  Rat& operator+=(const Rat& o) { v_ += o.v_; return *this; }
  Rat& operator-=(const Rat& o) { v_ -= o.v_; return *this; }
  Rat& operator*=(const Rat& o) { v_ *= o.v_; return *this; }
  Rat& operator/=(const Rat& o) {
    if (o.is_zero()) throw std::domain_error("Rat: division by zero");
    v_ /= o.v_;
    return *this;
  }

  friend Rat operator+(Rat a, const Rat& b) { return a += b; }
  friend Rat operator-(Rat a, const Rat& b) { return a -= b; }
  friend Rat operator*(Rat a, const Rat& b) { return a *= b; }
  friend Rat operator/(Rat a, const Rat& b) { return a /= b; }

  friend bool operator==(const Rat& a, const Rat& b) { return a.v_ == b.v_; }
  friend bool operator!=(const Rat& a, const Rat& b) { return a.v_ != b.v_; }
  friend bool operator<(const Rat& a, const Rat& b) { return a.v_ < b.v_; }
  friend bool operator<=(const Rat& a, const Rat& b) { return a.v_ <= b.v_; }
  friend bool operator>(const Rat& a, const Rat& b) { return a.v_ > b.v_; }
  friend bool operator>=(const Rat& a, const Rat& b) { return a.v_ >= b.v_; }

  friend Rat abs(const Rat& a) { return a.sign() < 0 ? -a : a; }
  friend Rat min(const Rat& a, const Rat& b) { return a <= b ? a : b; }
  friend Rat max(const Rat& a, const Rat& b) { return a >= b ? a : b; }

  friend std::ostream& operator<<(std::ostream& os, const Rat& r) { return os << r.str(); }

 private:
  struct already_canonical {};
  Rat(mpq_class q, already_canonical) : v_(std::move(q)) {}
  mpq_class v_;
};

}  // namespace pwadyn
