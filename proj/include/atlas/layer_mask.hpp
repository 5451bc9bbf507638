// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace atlas {

inline constexpr std::size_t kLayerWidth = 2048;
inline constexpr std::size_t kLayerCount = 8;
inline constexpr std::size_t kMaskWords = kLayerWidth / 64;
inline constexpr std::size_t kMaskBytes = kLayerWidth / 8;
inline constexpr std::size_t kRecordValues = kLayerCount * kLayerWidth;

// Fixed-width neuron set for one layer. Bit i lives in word i / 64 at
// position i % 64, which serialises to byte i / 8, bit i % 8.
class LayerMask {
 public:
  using Words = std::array<std::uint64_t, kMaskWords>;

  LayerMask() = default;
  static LayerMask from_indices(std::span<const std::uint16_t> idx);
  static LayerMask from_indices(std::initializer_list<std::uint16_t> idx) {
    return from_indices(std::span<const std::uint16_t>(idx.begin(), idx.size()));
  }
  static LayerMask from_bytes(std::span<const std::uint8_t, kMaskBytes> bytes);
  static LayerMask full();

  void set(std::size_t i) { check(i), words_[i >> 6] |= bit(i); }
  void reset(std::size_t i) { check(i), words_[i >> 6] &= ~bit(i); }
  bool test(std::size_t i) const { return check(i), (words_[i >> 6] & bit(i)) != 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  bool empty() const {
    for (auto w : words_)
      if (w) return false;
    return true;
  }
  bool subset_of(const LayerMask& o) const {
    for (std::size_t k = 0; k < kMaskWords; ++k)
      if (words_[k] & ~o.words_[k]) return false;
    return true;
  }

  LayerMask& operator&=(const LayerMask& o) {
    for (std::size_t k = 0; k < kMaskWords; ++k) words_[k] &= o.words_[k];
    return *this;
  }
  LayerMask& operator|=(const LayerMask& o) {
    for (std::size_t k = 0; k < kMaskWords; ++k) words_[k] |= o.words_[k];
    return *this;
  }
  LayerMask& operator^=(const LayerMask& o) {
    for (std::size_t k = 0; k < kMaskWords; ++k) words_[k] ^= o.words_[k];
    return *this;
  }
  friend LayerMask operator&(LayerMask a, const LayerMask& b) { return a &= b; }
  friend LayerMask operator|(LayerMask a, const LayerMask& b) { return a |= b; }
  friend LayerMask operator^(LayerMask a, const LayerMask& b) { return a ^= b; }
  // this \ o
  LayerMask minus(const LayerMask& o) const {
    LayerMask r;
    for (std::size_t k = 0; k < kMaskWords; ++k) r.words_[k] = words_[k] & ~o.words_[k];
    return r;
  }

  std::size_t intersection_count(const LayerMask& o) const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < kMaskWords; ++k) n += static_cast<std::size_t>(std::popcount(words_[k] & o.words_[k]));
    return n;
  }
  std::size_t union_count(const LayerMask& o) const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < kMaskWords; ++k) n += static_cast<std::size_t>(std::popcount(words_[k] | o.words_[k]));
    return n;
  }

  std::vector<std::uint16_t> indices() const;
  void to_bytes(std::span<std::uint8_t, kMaskBytes> out) const;

  const Words& words() const { return words_; }
  Words& words() { return words_; }

  bool operator==(const LayerMask&) const = default;

 private:
  static std::uint64_t bit(std::size_t i) { return std::uint64_t{1} << (i & 63); }
  static void check(std::size_t i) {
    if (i >= kLayerWidth) throw std::out_of_range("neuron index out of range");
  }

  Words words_{};
};

// One mask per layer, L0..L7.
struct LayerStack {
  std::array<LayerMask, kLayerCount> layers{};

  LayerMask& operator[](std::size_t l) { return layers.at(l); }
  const LayerMask& operator[](std::size_t l) const { return layers.at(l); }
  bool subset_of(const LayerStack& o) const {
    for (std::size_t l = 0; l < kLayerCount; ++l)
      if (!layers[l].subset_of(o.layers[l])) return false;
    return true;
  }
  bool operator==(const LayerStack&) const = default;
};

}  // namespace atlas
