#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sdwave/errors.hpp"

namespace sdwave::cli {

using json = nlohmann::json;

/// Reader for the subset of TOML used by experiment files:
///
///   # comment
///   key = "string" | 1 | 2.5e-3 | true | [1, 2, "a"]
///   [section]            [section.sub]
///   "quoted.key" = ...   dotted.key = ...
///
/// Arrays may span several lines. Produces a JSON object tree.
class ConfigReader {
 public:
  static json parse(std::string_view text, const std::string& origin = "<config>") {
    ConfigReader r(text, origin);
    return r.run();
  }

  static json load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

 private:
  ConfigReader(std::string_view text, std::string origin) : text_(text), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_) + ": " + msg);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void skip_blank() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  // Skips whitespace, newlines and comments (inside arrays).
  void skip_all() {
    for (;;) {
      skip_blank();
      if (peek() == '#') {
        while (!at_end() && peek() != '\n') ++pos_;
      } else if (peek() == '\n') {
        ++pos_;
        ++line_;
      } else {
        return;
      }
    }
  }

  void end_of_line() {
    skip_blank();
    if (peek() == '#') {
      while (!at_end() && peek() != '\n') ++pos_;
    }
    if (!at_end()) {
      if (peek() != '\n') fail("unexpected text after value");
      ++pos_;
      ++line_;
    }
  }

  static bool bare_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string string_literal() {
    ++pos_;  // opening quote
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (at_end()) fail("unterminated escape");
        const char e = text_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> parts;
    for (;;) {
      skip_blank();
      if (peek() == '"') {
        parts.push_back(string_literal());
      } else {
        const std::size_t start = pos_;
        while (!at_end() && bare_char(peek())) ++pos_;
        if (pos_ == start) fail("expected a key");
        parts.emplace_back(text_.substr(start, pos_ - start));
      }
      skip_blank();
      if (peek() != '.') return parts;
      ++pos_;
    }
  }

  json value() {
    skip_blank();
    const char c = peek();
    if (c == '"') return string_literal();
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      for (;;) {
        skip_all();
        if (peek() == ']') {
          ++pos_;
          return arr;
        }
        arr.push_back(value());
        skip_all();
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
    }
    const std::size_t start = pos_;
    while (!at_end() && (bare_char(peek()) || peek() == '.' || peek() == '+')) ++pos_;
    const std::string_view tok = text_.substr(start, pos_ - start);
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.empty()) fail("expected a value");
    const bool integral = tok.find_first_of(".eE") == std::string_view::npos &&
                          tok != "inf" && tok != "+inf" && tok != "-inf" && tok != "nan";
    const char* first = tok.data() + (tok.front() == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    if (integral) {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && ptr == last) return v;
    }
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, d);
    if (ec != std::errc() || ptr != last) fail("malformed value '" + std::string(tok) + "'");
    return d;
  }

  json& descend(json& root, const std::vector<std::string>& path, std::size_t count) {
    json* node = &root;
    for (std::size_t k = 0; k < count; ++k) {
      json& child = (*node)[path[k]];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) fail("key '" + path[k] + "' is both a value and a table");
      node = &child;
    }
    return *node;
  }

  json run() {
    json root = json::object();
    json* table = &root;
    for (;;) {
      skip_all();
      if (at_end()) return root;
      if (peek() == '[') {
        ++pos_;
        const auto path = key_path();
        if (peek() != ']') fail("expected ']' after table name");
        ++pos_;
        end_of_line();
        table = &descend(root, path, path.size());
        continue;
      }
      const auto path = key_path();
      skip_blank();
      if (peek() != '=') fail("expected '=' after key");
      ++pos_;
      json v = value();
      end_of_line();
      json& parent = descend(*table, path, path.size() - 1);
      if (parent.contains(path.back())) fail("duplicate key '" + path.back() + "'");
      parent[path.back()] = std::move(v);
    }
  }

  std::string_view text_;
  std::string origin_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace sdwave::cli
