#include "lgf/toml_lite.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

namespace lgf {
namespace toml {

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Removes a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

Value parse_scalar(const std::string& tok, int line) {
  if (tok.empty()) throw ParseError(line, "empty value");
  Value v;
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"')
      throw ParseError(line, "unterminated string");
    v.kind = Value::Kind::String;
    v.str = tok.substr(1, tok.size() - 2);
    return v;
  }
  if (tok == "true" || tok == "false") {
    v.kind = Value::Kind::Boolean;
    v.boolean = tok == "true";
    return v;
  }
  char* end = nullptr;
  const double num = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw ParseError(line, "cannot parse value '" + tok + "'");
  v.kind = Value::Kind::Number;
  v.num = num;
  return v;
}

Value parse_value(const std::string& tok, int line) {
  if (!tok.empty() && tok.front() == '[') {
    if (tok.back() != ']') throw ParseError(line, "unterminated array");
    Value v;
    v.kind = Value::Kind::Array;
    std::string body = tok.substr(1, tok.size() - 2);
    std::string cur;
    bool quoted = false;
    for (char ch : body) {
      if (ch == '"') quoted = !quoted;
      if (ch == ',' && !quoted) {
        const std::string item = strip(cur);
        if (!item.empty()) v.items.push_back(parse_scalar(item, line));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    const std::string item = strip(cur);
    if (!item.empty()) v.items.push_back(parse_scalar(item, line));
    return v;
  }
  return parse_scalar(tok, line);
}

}  // namespace

Table parse(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = strip(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError(line, "unterminated table header");
      section = strip(s.substr(1, s.size() - 2));
      if (section.empty()) throw ParseError(line, "empty table name");
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ParseError(line, "expected key = value");
    const std::string key = strip(s.substr(0, eq));
    const std::string val = strip(s.substr(eq + 1));
    if (key.empty()) throw ParseError(line, "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (table.count(full)) throw ParseError(line, "duplicate key '" + full + "'");
    table[full] = parse_value(val, line);
  }
  return table;
}

}  // namespace toml
}  // namespace lgf
