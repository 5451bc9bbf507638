// SPDX-License-Identifier: Apache-2.0
#include "atlas/mask_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>

#include "atlas/util.hpp"

namespace atlas {

std::string SweepSetting::label() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "eps=%g C=%g", epsilon, consistency);
  return buf;
}

std::vector<SweepSetting> make_grid(std::span<const double> epsilons, std::span<const double> consistencies) {
  if (epsilons.empty() || consistencies.empty()) throw MaskStoreError("sweep grid must be non-empty");
  std::vector<SweepSetting> out;
  for (double e : epsilons) {
    if (!(e > 0) || !std::isfinite(e)) throw MaskStoreError("epsilon must be a positive finite number");
    for (double c : consistencies) {
      if (!(c > 0 && c <= 1)) throw MaskStoreError("consistency must lie in (0, 1]");
      out.push_back({e, c});
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<SweepSetting> default_grid() {
  static const std::vector<double> eps = {0.001, 0.1, 0.5};
  static const std::vector<double> cs = {0.2, 0.5, 0.8};
  return make_grid(eps, cs);
}

std::string_view to_string(MaskKind k) {
  switch (k) {
    case MaskKind::pair: return "pair";
    case MaskKind::universal: return "universal";
    case MaskKind::checker: return "checker";
  }
  return "?";
}

void MaskStore::put(MaskKind kind, std::string id, const SweepSetting& s, const LayerStack& masks) {
  if (id.empty() || id.size() > 0xffff) throw MaskStoreError("mask id must be 1..65535 bytes");
  entries_.insert_or_assign(Key{kind, std::move(id), s}, masks);
}

const LayerStack* MaskStore::find(MaskKind kind, std::string_view id, const SweepSetting& s) const {
  const auto it = entries_.find(std::make_tuple(kind, std::string(id), s));
  return it == entries_.end() ? nullptr : &it->second;
}

const LayerStack& MaskStore::at(MaskKind kind, std::string_view id, const SweepSetting& s) const {
  const auto* m = find(kind, id, s);
  if (!m)
    throw MaskStoreError("missing " + std::string(to_string(kind)) + " mask " + std::string(id) + " at " + s.label());
  return *m;
}

bool MaskStore::erase(MaskKind kind, std::string_view id, const SweepSetting& s) {
  return entries_.erase(std::make_tuple(kind, std::string(id), s)) > 0;
}

std::vector<SweepSetting> MaskStore::settings() const {
  std::set<SweepSetting> s;
  for (const auto& [k, v] : entries_) s.insert(std::get<2>(k));
  return {s.begin(), s.end()};
}

std::vector<std::string> MaskStore::ids(MaskKind kind) const {
  std::set<std::string> s;
  for (const auto& [k, v] : entries_)
    if (std::get<0>(k) == kind) s.insert(std::get<1>(k));
  return {s.begin(), s.end()};
}

std::size_t MaskStore::size() const { return entries_.size(); }

void MaskStore::put_magnitude(std::string concept_id, std::vector<std::int64_t> values) {
  if (values.size() != kRecordValues) throw MaskStoreError("magnitude vector must hold 8 x 2048 values");
  magnitudes_.insert_or_assign(std::move(concept_id), std::move(values));
}

const std::vector<std::int64_t>* MaskStore::magnitude(std::string_view concept_id) const {
  const auto it = magnitudes_.find(concept_id);
  return it == magnitudes_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {

constexpr std::uint16_t kStoreVersion = 1;

class Writer {
 public:
  void raw(const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { out.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u16(static_cast<std::uint16_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::string out;

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
};

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes(b) {}
  const unsigned char* take(std::size_t n) {
    if (pos + n > bytes.size()) throw MaskStoreError("truncated mask store");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    pos += n;
    return p;
  }
  std::uint64_t le(int n) {
    const auto* p = take(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str() {
    const auto n = u16();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  bool done() const { return pos == bytes.size(); }

 private:
  std::string_view bytes;
  std::size_t pos = 0;
};

}  // namespace

std::string MaskStore::serialize() const {
  Writer w;
  w.raw("ACSM", 4);
  w.u16(kStoreVersion);
  w.u32(static_cast<std::uint32_t>(entries_.size() * kLayerCount));
  std::array<std::uint8_t, kMaskBytes> payload{};
  for (const auto& [key, stack] : entries_) {
    const auto& [kind, id, s] = key;
    for (std::size_t l = 0; l < kLayerCount; ++l) {
      w.u8(static_cast<std::uint8_t>(kind));
      w.str(id);
      w.u8(static_cast<std::uint8_t>(l));
      w.f64(s.epsilon);
      w.f64(s.consistency);
      stack[l].to_bytes(payload);
      w.raw(payload.data(), payload.size());
    }
  }
  return std::move(w.out);
}

MaskStore MaskStore::deserialize(std::string_view bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(4), "ACSM", 4) != 0) throw MaskStoreError("bad mask store magic");
  if (const auto v = r.u16(); v != kStoreVersion)
    throw MaskStoreError("unsupported mask store version " + std::to_string(v));
  const auto count = r.u32();
  std::map<Key, std::pair<LayerStack, std::uint8_t>> seen;  // layer bitmap per key
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto kind = r.u8();
    if (kind > 2) throw MaskStoreError("unknown mask kind " + std::to_string(kind));
    auto id = r.str();
    const auto layer = r.u8();
    if (layer >= kLayerCount) throw MaskStoreError("layer out of range in mask store");
    SweepSetting s{r.f64(), r.f64()};
    const auto* p = r.take(kMaskBytes);
    auto& slot = seen[Key{static_cast<MaskKind>(kind), std::move(id), s}];
    const auto bit = static_cast<std::uint8_t>(1u << layer);
    if (slot.second & bit) throw MaskStoreError("duplicate record in mask store");
    slot.second |= bit;
    slot.first[layer] = LayerMask::from_bytes(std::span<const std::uint8_t, kMaskBytes>(p, kMaskBytes));
  }
  if (!r.done()) throw MaskStoreError("trailing bytes in mask store");
  MaskStore store;
  for (auto& [key, v] : seen) {
    if (v.second != 0xff)
      throw MaskStoreError("incomplete layer set for " + std::get<1>(key) + " at " + std::get<2>(key).label());
    store.entries_.emplace(key, v.first);
  }
  return store;
}

std::filesystem::path magnitude_path_for(const std::filesystem::path& store) {
  auto p = store;
  p += ".mag";
  return p;
}

void MaskStore::save(const std::filesystem::path& path) const {
  write_file(path, serialize());
  const auto mag = magnitude_path_for(path);
  if (magnitudes_.empty()) {
    std::filesystem::remove(mag);
    return;
  }
  Writer w;
  w.raw("ACMG", 4);
  w.u16(kStoreVersion);
  w.u32(static_cast<std::uint32_t>(magnitudes_.size()));
  for (const auto& [id, vals] : magnitudes_) {
    w.str(id);
    for (auto v : vals) w.u64(static_cast<std::uint64_t>(v));
  }
  write_file(mag, w.out);
}

MaskStore MaskStore::load(const std::filesystem::path& path) {
  auto store = deserialize(read_file(path));
  const auto mag = magnitude_path_for(path);
  if (!std::filesystem::exists(mag)) return store;
  const std::string bytes = read_file(mag);
  Reader r(bytes);
  if (std::memcmp(r.take(4), "ACMG", 4) != 0) throw MaskStoreError("bad magnitude sidecar magic");
  if (r.u16() != kStoreVersion) throw MaskStoreError("unsupported magnitude sidecar version");
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto id = r.str();
    std::vector<std::int64_t> vals(kRecordValues);
    for (auto& v : vals) v = static_cast<std::int64_t>(r.le(8));
    store.put_magnitude(std::move(id), std::move(vals));
  }
  if (!r.done()) throw MaskStoreError("trailing bytes in magnitude sidecar");
  return store;
}

}  // namespace atlas
