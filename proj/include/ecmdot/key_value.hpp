#pragma once

// Line-oriented `key = value` documents with `[section]` headers and `#`
// comments. Shared by machine and kernel descriptor files.

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ecmdot/error.hpp"

namespace ecmdot::kv {

struct entry {
  std::string value;
  std::size_t line = 0;
};

struct section {
  std::string name;  // empty for the top-level block
  std::size_t line = 0;
  std::map<std::string, entry, std::less<>> entries;
};

struct document {
  std::vector<section> sections;  // sections[0] is always the top-level block
};

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline document parse(std::string_view text) {
  document doc;
  doc.sections.push_back(section{});
  std::set<std::string, std::less<>> seen_sections;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }

    if (line.front() == '[') {
      if (line.back() != ']')
        throw parse_error(line_no, "line " + std::to_string(line_no) +
                                       ": unterminated section header");
      auto name = std::string(trim(line.substr(1, line.size() - 2)));
      if (name.empty())
        throw parse_error(line_no, "line " + std::to_string(line_no) +
                                       ": empty section name");
      if (!seen_sections.insert(name).second)
        throw parse_error(line_no, "line " + std::to_string(line_no) +
                                       ": duplicate section [" + name + "]");
      doc.sections.push_back(section{std::move(name), line_no, {}});
    } else {
      auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw parse_error(line_no, "line " + std::to_string(line_no) +
                                       ": expected 'key = value'");
      auto key = std::string(trim(line.substr(0, eq)));
      auto value = std::string(trim(line.substr(eq + 1)));
      if (key.empty())
        throw parse_error(line_no,
                          "line " + std::to_string(line_no) + ": empty key");
      auto& entries = doc.sections.back().entries;
      if (entries.contains(key))
        throw parse_error(line_no, "line " + std::to_string(line_no) +
                                       ": duplicate key '" + key + "'");
      entries.emplace(std::move(key), entry{std::move(value), line_no});
    }
    if (eol == text.size()) break;
  }
  return doc;
}

/// Reads typed values out of one section and tracks which keys were used so
/// leftovers can be reported as unknown.
class reader {
 public:
  explicit reader(const section& s) : s_(s) {}

  std::optional<std::string> text(std::string_view key) {
    auto it = s_.entries.find(key);
    if (it == s_.entries.end()) return std::nullopt;
    used_.insert(it->first);
    return it->second.value;
  }

  std::string required_text(std::string_view key) {
    auto v = text(key);
    if (!v) throw_missing(key);
    return *v;
  }

  std::optional<double> number(std::string_view key) {
    auto it = s_.entries.find(key);
    if (it == s_.entries.end()) return std::nullopt;
    used_.insert(it->first);
    const auto& v = it->second.value;
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
      throw parse_error(it->second.line,
                        "line " + std::to_string(it->second.line) + ": '" +
                            std::string(key) + "' is not a number: '" + v +
                            "'");
    return out;
  }

  double required_number(std::string_view key) {
    auto v = number(key);
    if (!v) throw_missing(key);
    return *v;
  }

  std::optional<std::uint64_t> integer(std::string_view key) {
    auto it = s_.entries.find(key);
    if (it == s_.entries.end()) return std::nullopt;
    used_.insert(it->first);
    const auto& v = it->second.value;
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
      throw parse_error(it->second.line,
                        "line " + std::to_string(it->second.line) + ": '" +
                            std::string(key) +
                            "' is not a non-negative integer: '" + v + "'");
    return out;
  }

  std::uint64_t required_integer(std::string_view key) {
    auto v = integer(key);
    if (!v) throw_missing(key);
    return *v;
  }

  void reject_unknown() const {
    for (const auto& [key, e] : s_.entries)
      if (!used_.contains(key))
        throw parse_error(e.line, "line " + std::to_string(e.line) +
                                      ": unknown key '" + key + "'" +
                                      where());
  }

 private:
  [[noreturn]] void throw_missing(std::string_view key) const {
    throw invariant_error(qualified(key), "required field is missing");
  }
  std::string qualified(std::string_view key) const {
    return s_.name.empty() ? std::string(key)
                           : s_.name + "." + std::string(key);
  }
  std::string where() const {
    return s_.name.empty() ? std::string() : " in [" + s_.name + "]";
  }

  const section& s_;
  std::set<std::string, std::less<>> used_;
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace ecmdot::kv
