// SPDX-License-Identifier: Apache-2.0
#include "atlas/layer_mask.hpp"

namespace atlas {

LayerMask LayerMask::from_indices(std::span<const std::uint16_t> idx) {
  LayerMask m;
  for (auto i : idx) m.set(i);
  return m;
}

LayerMask LayerMask::from_bytes(std::span<const std::uint8_t, kMaskBytes> bytes) {
  LayerMask m;
  for (std::size_t j = 0; j < kMaskBytes; ++j)
    m.words_[j / 8] |= static_cast<std::uint64_t>(bytes[j]) << (8 * (j % 8));
  return m;
}

LayerMask LayerMask::full() {
  LayerMask m;
  m.words_.fill(~std::uint64_t{0});
  return m;
}

std::vector<std::uint16_t> LayerMask::indices() const {
  std::vector<std::uint16_t> out;
  out.reserve(count());
  for (std::size_t k = 0; k < kMaskWords; ++k) {
    auto w = words_[k];
    while (w) {
      const int b = std::countr_zero(w);
      out.push_back(static_cast<std::uint16_t>(k * 64 + static_cast<std::size_t>(b)));
      w &= w - 1;
    }
  }
  return out;
}

void LayerMask::to_bytes(std::span<std::uint8_t, kMaskBytes> out) const {
  for (std::size_t j = 0; j < kMaskBytes; ++j)
    out[j] = static_cast<std::uint8_t>(words_[j / 8] >> (8 * (j % 8)));
}

}  // namespace atlas
