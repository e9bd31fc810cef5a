#include "toml.hpp"

#include <set>

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace sieve::toml {

namespace {

using nlohmann::json;

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  json run() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        if (peek() == '[') fail("arrays of tables are not supported");
        std::vector<std::string> path = key_path();
        skip_ws();
        expect(']');
        std::string joined;
        for (const std::string& k : path) joined += (joined.empty() ? "" : ".") + k;
        if (!headers_.insert(joined).second) fail("table [" + joined + "] defined twice");
        table = &root;
        for (const std::string& k : path) {
          json& next = (*table)[k];
          if (next.is_null()) next = json::object();
          if (!next.is_object()) fail("'" + k + "' is not a table");
          table = &next;
        }
      } else {
        std::vector<std::string> path = key_path();
        skip_ws();
        expect('=');
        skip_ws();
        json* target = table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
          json& next = (*target)[path[i]];
          if (next.is_null()) next = json::object();
          target = &next;
        }
        if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
        (*target)[path.back()] = value();
      }
      end_of_line();
    }
    return root;
  }

 private:
  std::set<std::string> headers_;

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) line += s_[i] == '\n';
    throw Error(line, msg);
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }

  // whitespace, comments and newlines (inside arrays and between statements)
  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (!eof() && peek() != '\n') fail("unexpected trailing characters");
  }

  std::string key() {
    if (peek() == '"' || peek() == '\'') return string();
    std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<std::string> key_path() {
    skip_ws();
    std::vector<std::string> path{key()};
    skip_ws();
    while (peek() == '.') {
      ++pos_;
      skip_ws();
      path.push_back(key());
      skip_ws();
    }
    return path;
  }

  std::string string() {
    const char quote = peek();
    ++pos_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = s_[pos_++];
      if (c == quote) break;
      if (c == '\\' && quote == '"') {
        if (eof()) fail("unterminated string");
        char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  json value() {
    const char c = peek();
    if (c == '"' || c == '\'') return string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    std::size_t start = pos_;
    while (!eof() && peek() != ',' && peek() != ']' && peek() != '}' && peek() != '#' &&
           peek() != '\n' && peek() != '\r' && peek() != ' ' && peek() != '\t') {
      ++pos_;
    }
    std::string tok(s_.substr(start, pos_ - start));
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char ch : tok) {
      if (ch != '_') digits += ch;
    }
    if (digits.empty()) fail("expected a value");
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), i);
    if (ec == std::errc{} && p == digits.data() + digits.size()) return i;
    try {
      std::size_t used = 0;
      double d = std::stod(digits, &used);
      if (used == digits.size()) return d;
    } catch (const std::exception&) {
    }
    fail("bad value '" + tok + "'");
  }

  json array() {
    expect('[');
    json out = json::array();
    while (true) {
      skip_blank_lines();
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      out.push_back(value());
      skip_blank_lines();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']'");
      }
    }
  }

  json inline_table() {
    expect('{');
    json out = json::object();
    skip_ws();
    if (peek() == '}') {
      ++pos_;
      return out;
    }
    while (true) {
      std::vector<std::string> path = key_path();
      if (path.size() != 1) fail("dotted keys are not supported in inline tables");
      skip_ws();
      expect('=');
      skip_ws();
      out[path[0]] = value();
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      return out;
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string scalar(const json& v) {
  if (v.is_string()) return json(v.get<std::string>()).dump();
  if (v.is_array()) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + scalar(v[i]);
    return out + "]";
  }
  if (v.is_object()) {
    std::string out = "{";
    bool first = true;
    for (const auto& [k, x] : v.items()) {
      out += (first ? "" : ", ") + k + " = " + scalar(x);
      first = false;
    }
    return out + "}";
  }
  return v.dump();
}

}  // namespace

json parse(std::string_view text) { return Parser(text).run(); }

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const Error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string render(const json& doc) {
  std::string out;
  for (const auto& [k, v] : doc.items()) {
    if (!v.is_object()) out += k + " = " + scalar(v) + "\n";
  }
  for (const auto& [k, v] : doc.items()) {
    if (!v.is_object()) continue;
    out += "\n[" + k + "]\n";
    for (const auto& [k2, v2] : v.items()) out += k2 + " = " + scalar(v2) + "\n";
  }
  return out;
}

}  // namespace sieve::toml
