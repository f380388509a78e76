#pragma once

// Exact rational numbers. Values whose numerator and denominator fit in a
// signed 64-bit word are kept inline and combined through 128-bit
// intermediates; anything larger spills to a GMP rational and is demoted
// again as soon as it fits.

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>

#include "ctx/error.hpp"

namespace ctx {

class Rational {
 public:
  Rational() noexcept = default;

  Rational(std::int64_t value) {  // NOLINT(google-explicit-constructor)
    if (value == kMin) {
      big_ = std::make_unique<mpq_class>(to_mpz(value));
    } else {
      num_ = value;
    }
  }

  Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw Error(ErrorKind::DivisionByZero, "zero denominator");
    if (num == kMin || den == kMin) {
      mpq_class q(to_mpz(num), to_mpz(den));
      q.canonicalize();
      assign(std::move(q));
      return;
    }
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const auto g = static_cast<std::int64_t>(
        std::gcd(static_cast<std::uint64_t>(num < 0 ? -num : num), static_cast<std::uint64_t>(den)));
    num_ = num / g;
    den_ = den / g;
  }

  explicit Rational(mpq_class q) {
    q.canonicalize();
    assign(std::move(q));
  }

  Rational(const Rational& other)
      : num_(other.num_), den_(other.den_),
        big_(other.big_ ? std::make_unique<mpq_class>(*other.big_) : nullptr) {}

  Rational(Rational&&) noexcept = default;

  Rational& operator=(const Rational& other) {
    if (this != &other) {
      num_ = other.num_;
      den_ = other.den_;
      big_ = other.big_ ? std::make_unique<mpq_class>(*other.big_) : nullptr;
    }
    return *this;
  }

  Rational& operator=(Rational&&) noexcept = default;
  ~Rational() = default;

  /// Parses `n`, `+n`, `-n` or `n/d`. Decimal notation is rejected so that no
  /// value ever passes through a binary float.
  static Rational parse(std::string_view text) {
    const auto fail = [&](const std::string& why) {
      return Error(ErrorKind::ParseError, "bad rational '" + std::string(text) + "': " + why);
    };
    if (text.empty()) throw fail("empty literal");
    if (text.find('.') != std::string_view::npos || text.find('e') != std::string_view::npos ||
        text.find('E') != std::string_view::npos) {
      throw fail("decimal literals are not accepted; write an exact fraction such as 1/4");
    }
    const auto slash = text.find('/');
    const std::string_view num_text = text.substr(0, slash);
    const std::string_view den_text =
        slash == std::string_view::npos ? std::string_view("1") : text.substr(slash + 1);
    const auto digits_ok = [](std::string_view s, bool allow_sign) {
      std::size_t i = 0;
      if (allow_sign && !s.empty() && (s[0] == '+' || s[0] == '-')) i = 1;
      if (i >= s.size()) return false;
      for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
      }
      return true;
    };
    if (!digits_ok(num_text, true) || !digits_ok(den_text, false)) throw fail("expected num/den or an integer");
    std::string num_str(num_text);
    if (num_str[0] == '+') num_str.erase(0, 1);
    mpz_class num(num_str, 10);
    mpz_class den(std::string(den_text), 10);
    if (den == 0) throw fail("zero denominator");
    return Rational(mpq_class(num, den));
  }

  bool is_zero() const noexcept { return big_ ? sgn(*big_) == 0 : num_ == 0; }
  int sign() const noexcept {
    if (big_) return sgn(*big_);
    return (num_ > 0) - (num_ < 0);
  }
  bool is_integer() const { return big_ ? big_->get_den() == 1 : den_ == 1; }

  mpq_class to_mpq() const {
    if (big_) return *big_;
    return mpq_class(to_mpz(num_), to_mpz(den_));
  }

  double to_double() const { return big_ ? big_->get_d() : static_cast<double>(num_) / static_cast<double>(den_); }

  std::string str() const {
    if (big_) return big_->get_str(10);
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  Rational operator-() const {
    if (big_) return Rational(mpq_class(-*big_));
    Rational r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
      if (a.num_ == 0) return b;
      if (b.num_ == 0) return a;
      if (a.den_ == b.den_) {
        const i128 n = static_cast<i128>(a.num_) + b.num_;
        const std::uint64_t g = gcd128(n, static_cast<std::uint64_t>(a.den_));
        if (Rational r; r.try_set(n / static_cast<i128>(g), a.den_ / static_cast<std::int64_t>(g))) return r;
      } else {
        const auto g = static_cast<std::int64_t>(
            std::gcd(static_cast<std::uint64_t>(a.den_), static_cast<std::uint64_t>(b.den_)));
        if (g == 1) {
          const i128 n = static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_;
          const i128 d = static_cast<i128>(a.den_) * b.den_;
          if (Rational r; r.try_set(n, d)) return r;
        } else {
          const i128 t = static_cast<i128>(a.num_) * (b.den_ / g) + static_cast<i128>(b.num_) * (a.den_ / g);
          const std::uint64_t g2 = gcd128(t, static_cast<std::uint64_t>(g));
          const i128 d = static_cast<i128>(a.den_ / g) * (b.den_ / static_cast<std::int64_t>(g2));
          if (Rational r; r.try_set(t / static_cast<i128>(g2), d)) return r;
        }
      }
    }
    return Rational(mpq_class(a.to_mpq() + b.to_mpq()));
  }

  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

  friend Rational operator*(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
      if (a.num_ == 0 || b.num_ == 0) return Rational();
      const auto g1 = static_cast<std::int64_t>(
          std::gcd(static_cast<std::uint64_t>(a.num_ < 0 ? -a.num_ : a.num_), static_cast<std::uint64_t>(b.den_)));
      const auto g2 = static_cast<std::int64_t>(
          std::gcd(static_cast<std::uint64_t>(b.num_ < 0 ? -b.num_ : b.num_), static_cast<std::uint64_t>(a.den_)));
      const i128 n = static_cast<i128>(a.num_ / g1) * (b.num_ / g2);
      const i128 d = static_cast<i128>(a.den_ / g2) * (b.den_ / g1);
      if (Rational r; r.try_set(n, d)) return r;
    }
    return Rational(mpq_class(a.to_mpq() * b.to_mpq()));
  }

  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.is_zero()) throw Error(ErrorKind::DivisionByZero, "division by zero");
    return a * b.reciprocal();
  }

  Rational reciprocal() const {
    if (is_zero()) throw Error(ErrorKind::DivisionByZero, "reciprocal of zero");
    if (big_) return Rational(mpq_class(1 / *big_));
    Rational r;
    r.num_ = num_ < 0 ? -den_ : den_;
    r.den_ = num_ < 0 ? -num_ : num_;
    return r;
  }

  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) return a.num_ == b.num_ && a.den_ == b.den_;
    if (a.big_ && b.big_) return *a.big_ == *b.big_;
    // Canonical form guarantees a spilled value never equals an inline one.
    return false;
  }

  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
      const i128 l = static_cast<i128>(a.num_) * b.den_;
      const i128 r = static_cast<i128>(b.num_) * a.den_;
      return l <=> r;
    }
    const int c = cmp(a.to_mpq(), b.to_mpq());
    return c <=> 0;
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  using i128 = __int128;
  static constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min();
  static constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();

  static mpz_class to_mpz(std::int64_t v) {
    mpz_class z;
    const bool neg = v < 0;
    const std::uint64_t mag = neg ? static_cast<std::uint64_t>(0) - static_cast<std::uint64_t>(v)
                                  : static_cast<std::uint64_t>(v);
    mpz_import(z.get_mpz_t(), 1, 1, sizeof(mag), 0, 0, &mag);
    if (neg) z = -z;
    return z;
  }

  static std::uint64_t gcd128(i128 n, std::uint64_t m) {
    using u128 = unsigned __int128;
    const u128 mag = n < 0 ? static_cast<u128>(-(n + 1)) + 1 : static_cast<u128>(n);
    return std::gcd(static_cast<std::uint64_t>(mag % m), m);
  }

  // Stores an already reduced n/d (d > 0) if it fits inline.
  bool try_set(i128 n, i128 d) {
    if (n > kMax || n < -kMax || d > kMax) return false;
    num_ = static_cast<std::int64_t>(n);
    den_ = static_cast<std::int64_t>(d);
    if (num_ == 0) den_ = 1;
    return true;
  }

  static bool fits(const mpz_class& z) {
    return mpz_sizeinbase(z.get_mpz_t(), 2) <= 63;
  }

  void assign(mpq_class q) {
    if (fits(q.get_num()) && fits(q.get_den())) {
      num_ = to_i64(q.get_num());
      den_ = to_i64(q.get_den());
      big_.reset();
    } else {
      big_ = std::make_unique<mpq_class>(std::move(q));
    }
  }

  static std::int64_t to_i64(const mpz_class& z) {
    std::uint64_t mag = 0;
    mpz_export(&mag, nullptr, 1, sizeof(mag), 0, 0, z.get_mpz_t());
    const auto v = static_cast<std::int64_t>(mag);
    return sgn(z) < 0 ? -v : v;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  std::unique_ptr<mpq_class> big_;
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }

inline Rational square(const Rational& r) { return r * r; }

}  // namespace ctx
