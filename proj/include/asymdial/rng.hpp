// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace asymdial {

// Mixes a parent seed with a stream id so that sub-generators for distinct
// profile components are independent (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic generator. Index and real draws are computed here rather than
// through <random> distributions so that output is identical across standard
// library implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  // Uniform in [lo, hi].
  int between(int lo, int hi);

  // Uniform in [0, 1).
  double unit();

  bool bernoulli(double p) { return unit() < p; }

  template <typename T>
  const T& pick(std::span<const T> values) {
    return values[index(values.size())];
  }
  const std::string& pick(const std::vector<std::string>& values) {
    return values[index(values.size())];
  }

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

  // k distinct values, in draw order. k is clamped to values.size().
  std::vector<std::string> sample(const std::vector<std::string>& values, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

// 64-bit FNV-1a; used for stable digests of canonical text.
std::uint64_t fnv1a64(std::string_view text);
std::string hex_digest(std::string_view text);

}  // namespace asymdial
