#include "sescc/cli/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <regex>
#include <sstream>
#include <vector>

namespace sescc::cli {

namespace {

using json = nlohmann::json;

class ValueParser {
 public:
  ValueParser(const std::string& s, int line) : s_(s), line_(line) {}

  json parse_all() {
    json v = value();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters after value");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw TomlError(msg, line_); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  json value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    return bare();
  }

  json basic_string() {
    std::string out;
    ++pos_;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json literal_string() {
    const auto end = s_.find('\'', pos_ + 1);
    if (end == std::string::npos) fail("unterminated string");
    std::string out = s_.substr(pos_ + 1, end - pos_ - 1);
    pos_ = end + 1;
    return out;
  }

  json array() {
    json arr = json::array();
    ++pos_;
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(value());
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != ']') fail("expected ',' or ']' in array");
    }
  }

  json bare() {
    const auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    std::string tok = s_.substr(start, pos_ - start);
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char c : tok)
      if (c != '_') digits += c;
    static const std::regex int_re(R"([+-]?\d+)");
    static const std::regex float_re(R"([+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?|[+-]?(inf|nan))");
    if (std::regex_match(digits, int_re)) {
      std::int64_t v = 0;
      const char* b = digits.data() + (digits[0] == '+' ? 1 : 0);
      auto [p, ec] = std::from_chars(b, digits.data() + digits.size(), v);
      if (ec != std::errc() || p != digits.data() + digits.size()) fail("integer out of range: " + tok);
      return v;
    }
    if (std::regex_match(digits, float_re)) {
      try {
        return std::stod(digits);
      } catch (const std::exception&) {
        fail("bad number: " + tok);
      }
    }
    fail("unrecognized value: " + tok);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_;
};

std::string strip_comment(const std::string& line) {
  bool in_basic = false, in_literal = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_basic) {
      if (c == '\\') ++i;
      else if (c == '"') in_basic = false;
    } else if (in_literal) {
      if (c == '\'') in_literal = false;
    } else if (c == '"') {
      in_basic = true;
    } else if (c == '\'') {
      in_literal = true;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

int bracket_depth(const std::string& s) {
  int depth = 0;
  bool in_basic = false, in_literal = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_basic) {
      if (c == '\\') ++i;
      else if (c == '"') in_basic = false;
    } else if (in_literal) {
      if (c == '\'') in_literal = false;
    } else if (c == '"') {
      in_basic = true;
    } else if (c == '\'') {
      in_literal = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
    }
  }
  return depth;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool bare_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

std::vector<std::string> header_path(const std::string& inner, int line) {
  std::vector<std::string> parts;
  std::stringstream ss(inner);
  std::string part;
  while (std::getline(ss, part, '.')) {
    part = trim(part);
    if (!bare_key(part)) throw TomlError("bad table name '" + inner + "'", line);
    parts.push_back(part);
  }
  if (parts.empty()) throw TomlError("empty table name", line);
  return parts;
}

// Walks to the table named by `path`, stepping into the last element of arrays of tables.
json* descend(json& root, const std::vector<std::string>& path, std::size_t n, int line) {
  json* cur = &root;
  for (std::size_t i = 0; i < n; ++i) {
    json& next = (*cur)[path[i]];
    if (next.is_null()) next = json::object();
    if (next.is_array()) {
      if (next.empty() || !next.back().is_object()) throw TomlError("'" + path[i] + "' is not a table", line);
      cur = &next.back();
    } else if (next.is_object()) {
      cur = &next;
    } else {
      throw TomlError("'" + path[i] + "' is not a table", line);
    }
  }
  return cur;
}

bool is_table_array(const json& v) {
  if (!v.is_array() || v.empty()) return false;
  for (const auto& e : v)
    if (!e.is_object()) return false;
  return true;
}

std::string format_scalar(const json& v) {
  if (v.is_string()) {
    std::string out = "\"";
    for (char c : v.get<std::string>()) {
      if (c == '"' || c == '\\') out += '\\';
      if (c == '\n') {
        out += "\\n";
        continue;
      }
      if (c == '\t') {
        out += "\\t";
        continue;
      }
      out += c;
    }
    return out + "\"";
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_float()) {
    const double x = v.get<double>();
    char buf[40];
    for (int digits = 15; digits <= 17; ++digits) {
      std::snprintf(buf, sizeof buf, "%.*g", digits, x);
      if (std::strtod(buf, nullptr) == x) break;
    }
    std::string s = buf;
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }
  if (v.is_array()) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ", ";
      out += format_scalar(v[i]);
    }
    return out + "]";
  }
  throw std::domain_error("value cannot be written inline");
}

void write_table(std::ostringstream& os, const json& t, const std::string& prefix) {
  for (auto it = t.begin(); it != t.end(); ++it) {
    if (it->is_object() || is_table_array(*it)) continue;
    os << it.key() << " = " << format_scalar(*it) << "\n";
  }
  for (auto it = t.begin(); it != t.end(); ++it) {
    if (!it->is_object()) continue;
    const std::string name = prefix.empty() ? it.key() : prefix + "." + it.key();
    os << "\n[" << name << "]\n";
    write_table(os, *it, name);
  }
  for (auto it = t.begin(); it != t.end(); ++it) {
    if (!is_table_array(*it)) continue;
    const std::string name = prefix.empty() ? it.key() : prefix + "." + it.key();
    for (const auto& e : *it) {
      os << "\n[[" << name << "]]\n";
      write_table(os, e, name);
    }
  }
}

}  // namespace

json parse_toml(const std::string& text) {
  json root = json::object();
  json* current = &root;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const int start_line = line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.rfind("[[", 0) == 0) {
      if (line.size() < 4 || line.substr(line.size() - 2) != "]]") throw TomlError("bad array-of-tables header", line_no);
      const auto path = header_path(line.substr(2, line.size() - 4), line_no);
      json* parent = descend(root, path, path.size() - 1, line_no);
      json& arr = (*parent)[path.back()];
      if (arr.is_null()) arr = json::array();
      if (!arr.is_array()) throw TomlError("'" + path.back() + "' already defined as a non-array", line_no);
      arr.push_back(json::object());
      current = &arr.back();
      continue;
    }
    if (line[0] == '[') {
      if (line.back() != ']') throw TomlError("bad table header", line_no);
      const auto path = header_path(line.substr(1, line.size() - 2), line_no);
      json* parent = descend(root, path, path.size() - 1, line_no);
      json& t = (*parent)[path.back()];
      if (!t.is_null() && !(t.is_object() && t.empty())) throw TomlError("table '" + path.back() + "' redefined", line_no);
      t = json::object();
      current = &t;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw TomlError("expected key = value", line_no);
    std::string key = trim(line.substr(0, eq));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
    else if (!bare_key(key)) throw TomlError("bad key '" + key + "'", line_no);
    std::string value = trim(line.substr(eq + 1));
    while (bracket_depth(value) > 0) {
      if (!std::getline(in, raw)) throw TomlError("unterminated array", start_line);
      ++line_no;
      value += " " + trim(strip_comment(raw));
    }
    if (current->contains(key)) throw TomlError("duplicate key '" + key + "'", start_line);
    (*current)[key] = ValueParser(value, start_line).parse_all();
  }
  return root;
}

std::string write_toml(const json& doc) {
  if (!doc.is_object()) throw std::domain_error("TOML document must be a table");
  std::ostringstream os;
  write_table(os, doc, "");
  std::string s = os.str();
  if (!s.empty() && s.front() == '\n') s.erase(0, 1);
  return s;
}

}  // namespace sescc::cli
