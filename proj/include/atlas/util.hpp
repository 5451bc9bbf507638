// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace atlas {

std::vector<std::string_view> split(std::string_view s, char sep);
// The views would dangle.
template <class T>
  requires std::is_same_v<T, std::string>
std::vector<std::string_view> split(T&& s, char sep) = delete;
std::string_view trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// FNV-1a, 64-bit. Stable across platforms; not a cryptographic hash.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
// Pass a previous result as `h` to hash in chunks.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = kFnvOffset);
std::string hex64(std::uint64_t v);

std::uint64_t splitmix64(std::uint64_t x);

// Child seed for one named unit of work (a pair, an object, a prompt).
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view key) {
  return splitmix64(root ^ fnv1a64(key));
}

// mt19937_64 with distribution helpers that do not depend on the standard
// library's implementation-defined distributions, so streams are
// reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n > 0.
  std::size_t below(std::size_t n);
  bool chance(double p) { return uniform() < p; }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  // Index drawn according to non-negative weights.
  std::size_t weighted(const std::vector<double>& weights);

 private:
  std::mt19937_64 engine_;
};

// Runs body(i) for i in [0, n) on a small worker pool. The caller must make
// every body(i) write to a distinct location.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);
std::size_t worker_count();

// Shortest text that parses back to the same double.
std::string format_double(double v);
// Whole-string parse; empty on any trailing characters.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Half-up rounding of a ratio rendered as a percentage with one decimal.
std::string format_percent(double ratio);
double round_percent(double ratio);

}  // namespace atlas
