// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include "asymdial/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "asymdial/error.hpp"

namespace asymdial {

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

std::vector<std::string> split_trimmed(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) pos = text.size();
    std::string item = trim(text.substr(start, pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = pos + 1;
  }
  return out;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::string section;
  std::size_t offset = 0;
  std::size_t line_no = 0;
  while (offset <= text.size()) {
    std::size_t eol = text.find('\n', offset);
    if (eol == std::string_view::npos) eol = text.size();
    std::string line = trim(text.substr(offset, eol - offset));
    ++line_no;
    const std::size_t line_offset = offset;
    offset = eol + 1;
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError("config line " + std::to_string(line_no) + ": unterminated section header",
                         line_offset);
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected key = value",
                       line_offset);
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) {
      throw ParseError("config line " + std::to_string(line_no) + ": empty key", line_offset);
    }
    if (!section.empty()) key = section + "." + key;
    cfg.entries_[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_or(std::string_view key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

int KeyValueConfig::get_int(std::string_view key, int fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  int out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError("config key '" + std::string(key) + "' is not an integer: " + *v);
  }
  return out;
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  double out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError("config key '" + std::string(key) + "' is not a number: " + *v);
  }
  return out;
}

bool KeyValueConfig::get_bool(std::string_view key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "' is not a boolean: " + *v);
}

std::vector<std::string> KeyValueConfig::get_list(std::string_view key) const {
  auto v = get(key);
  if (!v) return {};
  return split_trimmed(*v, '|');
}

std::map<std::string, std::string> KeyValueConfig::with_prefix(std::string_view prefix) const {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : entries_) {
    if (k.size() > prefix.size() && k.compare(0, prefix.size(), prefix) == 0) {
      out.emplace(k.substr(prefix.size()), v);
    }
  }
  return out;
}

}  // namespace asymdial
