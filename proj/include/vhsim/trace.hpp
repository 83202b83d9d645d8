#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "vhsim/sim_time.hpp"

namespace vhsim {

/// One trace line: `<time_s> <event> <node> <k=v ...>`. Written when the
/// builder goes out of scope.
class TraceLine {
 public:
  TraceLine(std::ostream* out, SimTime t, std::string_view event, std::string_view node) : out_(out) {
    if (!out_) return;
    buf_.reserve(96);
    buf_ += t.str();
    buf_ += ' ';
    buf_ += event;
    buf_ += ' ';
    buf_ += node;
  }
  TraceLine(const TraceLine&) = delete;
  TraceLine& operator=(const TraceLine&) = delete;
  ~TraceLine() {
    if (!out_) return;
    buf_ += '\n';
    out_->write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  }

  TraceLine& kv(std::string_view key, std::string_view value) {
    if (out_) {
      buf_ += ' ';
      buf_ += key;
      buf_ += '=';
      buf_ += value;
    }
    return *this;
  }
  TraceLine& kv(std::string_view key, const char* value) { return kv(key, std::string_view(value)); }
  TraceLine& kv(std::string_view key, const std::string& value) { return kv(key, std::string_view(value)); }
  TraceLine& kv(std::string_view key, SimTime value) {
    if (out_) kv(key, std::string_view(value.str()));
    return *this;
  }
  TraceLine& kv(std::string_view key, bool value) { return kv(key, std::string_view(value ? "1" : "0")); }
  template <typename T>
    requires std::is_integral_v<T>
  TraceLine& kv(std::string_view key, T value) {
    if (out_) kv(key, std::string_view(std::to_string(value)));
    return *this;
  }

 private:
  std::ostream* out_;
  std::string buf_;
};

class Trace {
 public:
  explicit Trace(std::ostream* out = nullptr) : out_(out) {}
  bool enabled() const { return out_ != nullptr; }
  TraceLine line(SimTime t, std::string_view event, std::string_view node) const {
    return TraceLine(out_, t, event, node);
  }

 private:
  std::ostream* out_;
};

}  // namespace vhsim
