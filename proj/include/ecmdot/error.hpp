#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecmdot {

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed descriptor or shorthand text. `where` is a 1-based line number
/// for descriptor files and a 0-based byte offset for shorthand strings.
class parse_error : public error {
 public:
  parse_error(std::size_t where, const std::string& what)
      : error(what), where_(where) {}
  std::size_t where() const noexcept { return where_; }

 private:
  std::size_t where_;
};

/// A field that is present but violates a descriptor invariant.
class invariant_error : public error {
 public:
  invariant_error(std::string field, const std::string& what)
      : error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class not_found_error : public error {
 public:
  using error::error;
};

/// Kernel cannot be modeled on the given machine/ISA (e.g. it needs a unit
/// the port table says is absent).
class model_error : public error {
 public:
  using error::error;
};

class measurement_error : public error {
 public:
  using error::error;
};

}  // namespace ecmdot
