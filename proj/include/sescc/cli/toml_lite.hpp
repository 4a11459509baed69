#pragma once

// Reader/writer for the TOML subset used by run configurations: tables,
// arrays of tables, strings, integers, floats, booleans and (nested) arrays.
// Documents are held as JSON trees.

#include "json.hpp"

#include <stdexcept>
#include <string>

namespace sescc::cli {

class TomlError : public std::runtime_error {
 public:
  TomlError(const std::string& msg, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

nlohmann::json parse_toml(const std::string& text);

/// Scalars first, then sub-tables, then arrays of tables. Floats use the shortest form that reads back exactly.
std::string write_toml(const nlohmann::json& doc);

}  // namespace sescc::cli
