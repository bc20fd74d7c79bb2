#pragma once

// Text form of ECM models "{8 ‖ 4 | 4 | 4 | 6.1+2.9}" and predictions
// "{8 ⌉ 8 ⌉ 12 ⌉ 21}".

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

#include "ecmdot/ecm.hpp"
#include "ecmdot/error.hpp"

namespace ecmdot {

inline constexpr std::string_view double_bar = "‖";  // ‖
inline constexpr std::string_view right_ceil = "⌉";   // ⌉

/// Rounds to `decimals` places, then drops trailing zeros and a bare point.
/// A negative `decimals` gives the shortest text that reads back exactly.
inline std::string format_trimmed(double v, int decimals) {
  char buf[400];
  auto [p, ec] = decimals < 0
                     ? std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed)
                     : std::to_chars(buf, buf + sizeof buf, v,
                                     std::chars_format::fixed, decimals);
  std::string s(buf, p);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v,
                               std::chars_format::fixed, decimals);
  return std::string(buf, p);
}

struct shorthand_style {
  int core_decimals = 2;    // t_ol, t_nol, t_l1l2, t_l2l3; negative: exact
  int memory_decimals = 1;  // t_l3mem and penalty; negative: exact
  bool ascii = false;       // "||" instead of "‖"
};

inline std::string format_shorthand(const ecm_model& m, shorthand_style style = {}) {
  auto core = [&](double v) { return format_trimmed(v, style.core_decimals); };
  auto mem = [&](double v) { return format_trimmed(v, style.memory_decimals); };
  std::string s = "{" + core(m.t_ol) + " " +
                  std::string(style.ascii ? "||" : double_bar) + " " +
                  core(m.t_nol) + " | " + core(m.t_l1l2) + " | " +
                  core(m.t_l2l3) + " | " + mem(m.t_l3mem);
  if (m.penalty != 0) s += "+" + mem(m.penalty);
  return s + "}";
}

/// `fixed` renders every value with exactly `decimals` places (table style);
/// otherwise trailing zeros are trimmed.
inline std::string format_levels(const std::array<double, 4>& v, int decimals,
                                 bool fixed, bool ascii = false) {
  const std::string sep =
      " " + std::string(ascii ? "]" : right_ceil) + " ";
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += fixed ? format_fixed(v[i], decimals) : format_trimmed(v[i], decimals);
  }
  return s + "}";
}

namespace detail {

class shorthand_parser {
 public:
  explicit shorthand_parser(std::string_view s) : s_(s) {}

  ecm_model parse() {
    ecm_model m;
    skip_ws();
    expect("{");
    m.t_ol = number();
    skip_ws();
    if (!accept(double_bar) && !accept("||"))
      fail("expected '‖' or '||'");
    m.t_nol = number();
    bar();
    m.t_l1l2 = number();
    bar();
    m.t_l2l3 = number();
    bar();
    m.t_l3mem = number();
    skip_ws();
    if (accept("+")) m.penalty = number();
    skip_ws();
    expect("}");
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return m;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw parse_error(pos_, "shorthand parse error at offset " +
                                std::to_string(pos_) + ": " + what);
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }
  bool accept(std::string_view tok) {
    if (s_.substr(pos_).starts_with(tok)) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }
  void bar() {
    skip_ws();
    expect("|");
  }
  double number() {
    skip_ws();
    double v = 0;
    auto first = s_.data() + pos_;
    auto [p, ec] = std::from_chars(first, s_.data() + s_.size(), v,
                                   std::chars_format::fixed);
    if (ec != std::errc{} || p == first) fail("expected a number");
    if (!(v >= 0)) fail("cycle counts must be non-negative");
    pos_ += static_cast<std::size_t>(p - first);
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline ecm_model parse_shorthand(std::string_view text) {
  return detail::shorthand_parser(text).parse();
}

}  // namespace ecmdot
