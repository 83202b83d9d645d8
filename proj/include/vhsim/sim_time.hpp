#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vhsim {

/// Simulated time with a fixed resolution of one microsecond.
///
/// All arithmetic is integer arithmetic so the ordering of events is
/// identical on every platform. Differences may be negative; absolute
/// instants handed to the kernel never are.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime from_us(std::int64_t us) { return SimTime(us); }
  static constexpr SimTime from_ms(std::int64_t ms) { return SimTime(ms * 1000); }
  static constexpr SimTime from_seconds(std::int64_t s) { return SimTime(s * 1000000); }
  static constexpr SimTime zero() { return SimTime(0); }
  static constexpr SimTime max() { return SimTime(std::numeric_limits<std::int64_t>::max()); }

  /// Parses decimal seconds ("12", "0.25", "10.000125"). More than six
  /// fractional digits cannot be represented and are rejected.
  static SimTime parse(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty time value");
    bool negative = false;
    if (text.front() == '-') {
      negative = true;
      text.remove_prefix(1);
    }
    auto dot = text.find('.');
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw std::invalid_argument("malformed time value");
    if (frac.size() > 6) throw std::invalid_argument("time value finer than 1 microsecond");
    std::int64_t secs = 0;
    if (!whole.empty()) parse_digits(whole, secs);
    std::int64_t micros = 0;
    if (!frac.empty()) {
      parse_digits(frac, micros);
      for (std::size_t i = frac.size(); i < 6; ++i) micros *= 10;
    }
    if (secs > std::numeric_limits<std::int64_t>::max() / 1000000 - 1)
      throw std::invalid_argument("time value out of range");
    std::int64_t us = secs * 1000000 + micros;
    return SimTime(negative ? -us : us);
  }

  constexpr std::int64_t us() const { return us_; }
  constexpr double seconds() const { return static_cast<double>(us_) / 1e6; }
  constexpr double millis() const { return static_cast<double>(us_) / 1e3; }

  /// Fixed six-decimal rendering, e.g. "10.205000". Exact; parse() inverts it.
  std::string str() const {
    std::int64_t v = us_;
    const char* sign = "";
    if (v < 0) {
      sign = "-";
      v = -v;
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld.%06lld", sign, static_cast<long long>(v / 1000000),
                  static_cast<long long>(v % 1000000));
    return buf;
  }

  /// Milliseconds with three decimals, e.g. "285.000".
  std::string ms_str() const {
    std::int64_t v = us_;
    const char* sign = "";
    if (v < 0) {
      sign = "-";
      v = -v;
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld.%03lld", sign, static_cast<long long>(v / 1000),
                  static_cast<long long>(v % 1000));
    return buf;
  }

  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime(a.us_ + b.us_); }
  friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime(a.us_ - b.us_); }
  friend constexpr SimTime operator*(SimTime a, std::int64_t k) { return SimTime(a.us_ * k); }
  friend constexpr SimTime operator*(std::int64_t k, SimTime a) { return SimTime(a.us_ * k); }
  friend constexpr SimTime operator/(SimTime a, std::int64_t k) { return SimTime(a.us_ / k); }
  constexpr SimTime& operator+=(SimTime o) {
    us_ += o.us_;
    return *this;
  }
  constexpr SimTime& operator-=(SimTime o) {
    us_ -= o.us_;
    return *this;
  }
  friend constexpr auto operator<=>(SimTime, SimTime) = default;

 private:
  constexpr explicit SimTime(std::int64_t us) : us_(us) {}

  static void parse_digits(std::string_view s, std::int64_t& out) {
    for (char c : s)
      if (c < '0' || c > '9') throw std::invalid_argument("malformed time value");
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::invalid_argument("malformed time value");
  }

  std::int64_t us_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, SimTime t) { return os << t.str() << 's'; }

namespace literals {
constexpr SimTime operator""_us(unsigned long long v) { return SimTime::from_us(static_cast<std::int64_t>(v)); }
constexpr SimTime operator""_ms(unsigned long long v) { return SimTime::from_ms(static_cast<std::int64_t>(v)); }
constexpr SimTime operator""_s(unsigned long long v) { return SimTime::from_seconds(static_cast<std::int64_t>(v)); }
}  // namespace literals

}  // namespace vhsim
