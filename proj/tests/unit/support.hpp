#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

inline std::filesystem::path target_path(const std::string& name) {
  return std::filesystem::path(FPSEL_SOURCE_DIR) / "targets" / name;
}
inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(FPSEL_SOURCE_DIR) / "tests" / "data" / name;
}

// Test-local generator so test inputs do not depend on library internals.
struct Rng {
  std::uint64_t s;
  explicit Rng(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};
