// SPDX-License-Identifier: Apache-2.0
//
// ACSM mask store:
//   "ACSM" | u16 version (1) | u32 record count
// then per record
//   u8 kind | u16 id length | id bytes | u8 layer | f64 epsilon | f64 C | 256-byte mask
// all little-endian, records sorted by (kind, id, epsilon, C, layer).
// Optional magnitude sidecar "<store>.mag":
//   "ACMG" | u16 version | u32 count, then per concept
//   u16 id length | id | 8 x 2048 i64 fixed-point sums of |activation| x 1e6.
#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "atlas/layer_mask.hpp"

namespace atlas {

struct SweepSetting {
  double epsilon = 0.001;
  double consistency = 0.8;

  auto operator<=>(const SweepSetting&) const = default;
  std::string label() const;  // "eps=0.001 C=0.8"
};

std::vector<SweepSetting> default_grid();
std::vector<SweepSetting> make_grid(std::span<const double> epsilons, std::span<const double> consistencies);

enum class MaskKind : std::uint8_t { pair = 0, universal = 1, checker = 2 };
std::string_view to_string(MaskKind k);

class MaskStoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMagnitudeScale = 1e6;

class MaskStore {
 public:
  void put(MaskKind kind, std::string id, const SweepSetting& s, const LayerStack& masks);
  const LayerStack* find(MaskKind kind, std::string_view id, const SweepSetting& s) const;
  const LayerStack& at(MaskKind kind, std::string_view id, const SweepSetting& s) const;
  bool contains(MaskKind kind, std::string_view id, const SweepSetting& s) const { return find(kind, id, s); }
  bool erase(MaskKind kind, std::string_view id, const SweepSetting& s);

  std::vector<SweepSetting> settings() const;
  std::vector<std::string> ids(MaskKind kind) const;
  std::size_t size() const;  // number of (kind, id, setting) entries
  bool empty() const { return entries_.empty(); }

  // Per-concept fixed-point magnitude sums, 8 x 2048 values.
  void put_magnitude(std::string concept_id, std::vector<std::int64_t> values);
  const std::vector<std::int64_t>* magnitude(std::string_view concept_id) const;
  bool has_magnitudes() const { return !magnitudes_.empty(); }

  void save(const std::filesystem::path& path) const;
  static MaskStore load(const std::filesystem::path& path);
  std::string serialize() const;
  static MaskStore deserialize(std::string_view bytes);

  bool operator==(const MaskStore&) const = default;

 private:
  using Key = std::tuple<MaskKind, std::string, SweepSetting>;
  std::map<Key, LayerStack, std::less<>> entries_;
  std::map<std::string, std::vector<std::int64_t>, std::less<>> magnitudes_;
};

std::filesystem::path magnitude_path_for(const std::filesystem::path& store);

}  // namespace atlas
