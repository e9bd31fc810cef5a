#pragma once

// The subset of TOML used by the harness config files: tables, dotted table
// headers, bare/quoted keys, strings, integers, floats, booleans, arrays and
// inline tables. No dates, no arrays of tables, no multi-line strings.

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace sieve::toml {

class Error : public std::runtime_error {
 public:
  Error(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

nlohmann::json parse(std::string_view text);
nlohmann::json parse_file(const std::string& path);

/// Renders a two-level object (scalars at the top, tables below).
std::string render(const nlohmann::json& doc);

}  // namespace sieve::toml
