// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace asymdial {

// Flat key-value configuration.
//
//   # comment
//   [backends]
//   rpm = 60            -> key "backends.rpm"
//   pool.age_group = 18-24 | 25-34
//
// List values are separated by '|'; pool values may contain commas.
class KeyValueConfig {
 public:
  using Entries = std::map<std::string, std::string, std::less<>>;

  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  std::optional<std::string> get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string fallback) const;
  int get_int(std::string_view key, int fallback) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<std::string> get_list(std::string_view key) const;

  // Keys starting with prefix, with the prefix removed.
  std::map<std::string, std::string> with_prefix(std::string_view prefix) const;

  void set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }
  const Entries& entries() const { return entries_; }

 private:
  Entries entries_;
};

std::string trim(std::string_view text);
std::vector<std::string> split_trimmed(std::string_view text, char sep);

}  // namespace asymdial
