// SPDX-License-Identifier: Apache-2.0
//
// ACSP activation dump: a 13-byte header
//   "ACSP" | u16 version (1) | u32 prompt count | u8 layers (8) | u16 width (2048)
// followed by prompt-major records of 8 x 2048 little-endian float32 values.
// A JSON manifest beside the dump maps record index to prompt id and pins
// the model revision and tokenizer.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atlas/layer_mask.hpp"
#include "json.hpp"

namespace atlas {

inline constexpr std::uint16_t kDumpVersion = 1;
inline constexpr std::size_t kDumpHeaderBytes = 13;
inline constexpr std::size_t kRecordBytes = kRecordValues * sizeof(float);

class DumpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DumpManifest {
  std::vector<std::string> prompt_ids;
  std::string model_id;
  std::string model_revision;
  std::string tokenizer_id;
  std::uint64_t seed = 0;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  static DumpManifest from_json(const nlohmann::json& j);
  static DumpManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

// "<dump>.json"
std::filesystem::path manifest_path_for(const std::filesystem::path& dump);

class ActivationDumpWriter {
 public:
  ActivationDumpWriter(const std::filesystem::path& path, std::uint32_t count);
  ActivationDumpWriter(const ActivationDumpWriter&) = delete;
  ActivationDumpWriter& operator=(const ActivationDumpWriter&) = delete;

  void append(std::span<const float> record);
  // Throws unless exactly `count` records were appended.
  void finish();
  std::uint32_t written() const { return written_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint32_t count_;
  std::uint32_t written_ = 0;
  std::vector<char> buffer_;
};

// Memory-mapped reader. Records are copied out, since the 13-byte header
// leaves the payload unaligned.
class ActivationDump {
 public:
  static ActivationDump open(const std::filesystem::path& dump,
                             std::optional<std::filesystem::path> manifest = std::nullopt);
  ActivationDump(ActivationDump&& o) noexcept;
  ActivationDump& operator=(ActivationDump&& o) noexcept;
  ActivationDump(const ActivationDump&) = delete;
  ActivationDump& operator=(const ActivationDump&) = delete;
  ~ActivationDump();

  std::size_t size() const { return count_; }
  const DumpManifest& manifest() const { return manifest_; }
  const std::string& prompt_id(std::size_t record) const { return manifest_.prompt_ids.at(record); }
  std::optional<std::size_t> find(std::string_view prompt_id) const;

  void read(std::size_t record, std::span<float> out) const;
  std::vector<float> read(std::size_t record) const;

  // Hints the kernel that records will be read in order.
  void advise_sequential() const;

 private:
  ActivationDump() = default;
  void release();

  const unsigned char* data_ = nullptr;
  std::size_t bytes_ = 0;
  std::size_t count_ = 0;
  DumpManifest manifest_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Writes dump and manifest together. `records` holds count x 16384 values.
void write_dump(const std::filesystem::path& path, const DumpManifest& manifest, std::span<const float> records);

}  // namespace atlas
