#pragma once

#include <map>
#include <string>
#include <vector>

#include "lgf/common.hpp"

namespace lgf {
namespace toml {

// Minimal TOML subset for solver configs: [table] headers, key = value
// with strings, numbers, booleans and flat arrays, # comments. Keys are
// flattened to "table.key". Anything outside the subset is a parse error
// with a line diagnostic.
struct Value {
  enum class Kind { String, Number, Boolean, Array } kind = Kind::String;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<Value> items;
};

using Table = std::map<std::string, Value>;

struct ParseError : Error {
  int line;
  ParseError(int line_, const std::string& msg)
      : Error("toml: line " + std::to_string(line_) + ": " + msg),
        line(line_) {}
};

Table parse(const std::string& text);

}  // namespace toml
}  // namespace lgf
