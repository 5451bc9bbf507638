// SPDX-License-Identifier: Apache-2.0
#include "atlas/activation_dump.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <bit>
#include <cstring>

#include "atlas/util.hpp"

namespace atlas {

namespace {

void put_u16(char* p, std::uint16_t v) {
  p[0] = static_cast<char>(v & 0xff);
  p[1] = static_cast<char>(v >> 8);
}

void put_u32(char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void to_little_endian(std::span<std::uint32_t> words) {
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& w : words)
      w = (w >> 24) | ((w >> 8) & 0xff00) | ((w << 8) & 0xff0000) | (w << 24);
  }
}

}  // namespace

nlohmann::json DumpManifest::to_json() const {
  return {{"format", "ACSP"},
          {"version", kDumpVersion},
          {"prompt_ids", prompt_ids},
          {"model_id", model_id},
          {"model_revision", model_revision},
          {"tokenizer_id", tokenizer_id},
          {"seed", seed},
          {"extra", extra}};
}

DumpManifest DumpManifest::from_json(const nlohmann::json& j) {
  DumpManifest m;
  try {
    m.prompt_ids = j.at("prompt_ids").get<std::vector<std::string>>();
    m.model_id = j.value("model_id", "");
    m.model_revision = j.value("model_revision", "");
    m.tokenizer_id = j.value("tokenizer_id", "");
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("extra")) m.extra = j.at("extra");
  } catch (const nlohmann::json::exception& e) {
    throw DumpError(std::string("malformed dump manifest: ") + e.what());
  }
  return m;
}

DumpManifest DumpManifest::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DumpError("cannot parse manifest " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void DumpManifest::save(const std::filesystem::path& path) const { write_file(path, to_json().dump(2) + "\n"); }

std::filesystem::path manifest_path_for(const std::filesystem::path& dump) {
  auto p = dump;
  p += ".json";
  return p;
}

// ---------------------------------------------------------------------------

ActivationDumpWriter::ActivationDumpWriter(const std::filesystem::path& path, std::uint32_t count)
    : path_(path), count_(count), buffer_(kRecordBytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw DumpError("cannot write " + path.string());
  char header[kDumpHeaderBytes];
  std::memcpy(header, "ACSP", 4);
  put_u16(header + 4, kDumpVersion);
  put_u32(header + 6, count);
  header[10] = static_cast<char>(kLayerCount);
  put_u16(header + 11, static_cast<std::uint16_t>(kLayerWidth));
  out_.write(header, sizeof header);
}

void ActivationDumpWriter::append(std::span<const float> record) {
  if (record.size() != kRecordValues)
    throw DumpError("record must hold " + std::to_string(kRecordValues) + " values");
  if (written_ >= count_) throw DumpError("more records than declared in " + path_.string());
  std::memcpy(buffer_.data(), record.data(), kRecordBytes);
  to_little_endian(std::span(reinterpret_cast<std::uint32_t*>(buffer_.data()), kRecordValues));
  out_.write(buffer_.data(), static_cast<std::streamsize>(kRecordBytes));
  if (!out_) throw DumpError("write failed for " + path_.string());
  ++written_;
}

void ActivationDumpWriter::finish() {
  if (written_ != count_)
    throw DumpError("declared " + std::to_string(count_) + " records but wrote " + std::to_string(written_));
  out_.close();
  if (!out_) throw DumpError("close failed for " + path_.string());
}

// ---------------------------------------------------------------------------

ActivationDump ActivationDump::open(const std::filesystem::path& dump, std::optional<std::filesystem::path> manifest) {
  ActivationDump d;
  const int fd = ::open(dump.c_str(), O_RDONLY);
  if (fd < 0) throw DumpError("cannot open dump " + dump.string());
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw DumpError("cannot stat dump " + dump.string());
  }
  const auto size = static_cast<std::size_t>(st.st_size);
  if (size < kDumpHeaderBytes) {
    ::close(fd);
    throw DumpError(dump.string() + ": truncated header");
  }
  void* p = ::mmap(nullptr, size, PROT_READ, MAP_PRIVATE, fd, 0);
  ::close(fd);
  if (p == MAP_FAILED) throw DumpError("cannot map dump " + dump.string());
  d.data_ = static_cast<const unsigned char*>(p);
  d.bytes_ = size;

  if (std::memcmp(d.data_, "ACSP", 4) != 0) throw DumpError(dump.string() + ": bad magic");
  if (const auto v = get_u16(d.data_ + 4); v != kDumpVersion)
    throw DumpError(dump.string() + ": unsupported version " + std::to_string(v));
  d.count_ = get_u32(d.data_ + 6);
  if (d.data_[10] != kLayerCount) throw DumpError(dump.string() + ": layer count must be 8");
  if (get_u16(d.data_ + 11) != kLayerWidth) throw DumpError(dump.string() + ": width must be 2048");
  if (size != kDumpHeaderBytes + d.count_ * kRecordBytes)
    throw DumpError(dump.string() + ": size " + std::to_string(size) + " does not match " +
                    std::to_string(d.count_) + " records");

  d.manifest_ = DumpManifest::load(manifest ? *manifest : manifest_path_for(dump));
  if (d.manifest_.prompt_ids.size() != d.count_)
    throw DumpError(dump.string() + ": manifest lists " + std::to_string(d.manifest_.prompt_ids.size()) +
                    " prompt ids for " + std::to_string(d.count_) + " records");
  for (std::size_t i = 0; i < d.count_; ++i)
    if (!d.index_.emplace(d.manifest_.prompt_ids[i], i).second)
      throw DumpError(dump.string() + ": duplicate prompt id " + d.manifest_.prompt_ids[i]);
  return d;
}

ActivationDump::ActivationDump(ActivationDump&& o) noexcept { *this = std::move(o); }

ActivationDump& ActivationDump::operator=(ActivationDump&& o) noexcept {
  if (this != &o) {
    release();
    data_ = std::exchange(o.data_, nullptr);
    bytes_ = std::exchange(o.bytes_, 0);
    count_ = std::exchange(o.count_, 0);
    manifest_ = std::move(o.manifest_);
    index_ = std::move(o.index_);
  }
  return *this;
}

ActivationDump::~ActivationDump() { release(); }

void ActivationDump::release() {
  if (data_) ::munmap(const_cast<unsigned char*>(data_), bytes_);
  data_ = nullptr;
}

std::optional<std::size_t> ActivationDump::find(std::string_view prompt_id) const {
  const auto it = index_.find(prompt_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void ActivationDump::read(std::size_t record, std::span<float> out) const {
  if (record >= count_) throw DumpError("record index out of range");
  if (out.size() != kRecordValues) throw DumpError("output span must hold 16384 values");
  std::memcpy(out.data(), data_ + kDumpHeaderBytes + record * kRecordBytes, kRecordBytes);
  to_little_endian(std::span(reinterpret_cast<std::uint32_t*>(out.data()), kRecordValues));
}

std::vector<float> ActivationDump::read(std::size_t record) const {
  std::vector<float> out(kRecordValues);
  read(record, out);
  return out;
}

void ActivationDump::advise_sequential() const {
  if (data_) ::madvise(const_cast<unsigned char*>(data_), bytes_, MADV_SEQUENTIAL);
}

void write_dump(const std::filesystem::path& path, const DumpManifest& manifest, std::span<const float> records) {
  if (records.size() != manifest.prompt_ids.size() * kRecordValues)
    throw DumpError("record buffer does not match the manifest's prompt count");
  ActivationDumpWriter w(path, static_cast<std::uint32_t>(manifest.prompt_ids.size()));
  for (std::size_t i = 0; i < manifest.prompt_ids.size(); ++i)
    w.append(records.subspan(i * kRecordValues, kRecordValues));
  w.finish();
  manifest.save(manifest_path_for(path));
}

}  // namespace atlas
