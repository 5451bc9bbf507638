// SPDX-License-Identifier: Apache-2.0
#include "atlas/ingest.hpp"

#include <map>
#include <set>
#include <tuple>

#include "atlas/util.hpp"

namespace atlas {

namespace {
constexpr std::string_view kHeader = "id\tepsilon\tconsistency\tlayer\tindices";
}

std::string_view released_file_name(MaskKind kind) {
  switch (kind) {
    case MaskKind::pair: return "pair_masks.tsv";
    case MaskKind::universal: return "universal_masks.tsv";
    case MaskKind::checker: return "checker_masks.tsv";
  }
  return "?";
}

void parse_released_masks(std::string_view text, MaskKind kind, MaskStore& store, const std::string& origin) {
  const auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]) != kHeader) throw IngestError(origin + ": missing header line");
  std::map<std::pair<std::string, SweepSetting>, LayerStack> rows;
  std::set<std::tuple<std::string, SweepSetting, std::size_t>> seen;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const auto line = lines[n];
    if (trim(line).empty()) continue;
    const auto where = origin + ":" + std::to_string(n + 1) + ": ";
    const auto f = split(line, '\t');
    if (f.size() != 5) throw IngestError(where + "expected 5 fields");
    const auto eps = parse_double(f[1]);
    const auto c = parse_double(f[2]);
    const auto layer = parse_int(f[3]);
    if (f[0].empty()) throw IngestError(where + "empty id");
    if (!eps || !(*eps > 0)) throw IngestError(where + "bad epsilon");
    if (!c || !(*c > 0 && *c <= 1)) throw IngestError(where + "bad consistency");
    if (!layer || *layer < 0 || *layer >= static_cast<long long>(kLayerCount)) throw IngestError(where + "bad layer");
    const SweepSetting s{*eps, *c};
    const std::string id(f[0]);
    const auto l = static_cast<std::size_t>(*layer);
    if (!seen.emplace(id, s, l).second) throw IngestError(where + "duplicate row for " + id);
    auto& stack = rows[{id, s}];
    if (!f[4].empty()) {
      for (auto tok : split(f[4], ',')) {
        const auto v = parse_int(tok);
        if (!v || *v < 0 || *v >= static_cast<long long>(kLayerWidth)) throw IngestError(where + "bad neuron index");
        stack[l].set(static_cast<std::size_t>(*v));
      }
    }
  }
  for (auto& [key, stack] : rows) store.put(kind, key.first, key.second, stack);
}

MaskStore ingest_released(const std::filesystem::path& dir, const ConceptSpace& space) {
  if (!std::filesystem::is_directory(dir)) throw IngestError("not a directory: " + dir.string());
  MaskStore store;
  for (const auto kind : {MaskKind::universal, MaskKind::checker, MaskKind::pair}) {
    const auto path = dir / released_file_name(kind);
    if (!std::filesystem::exists(path)) {
      if (kind == MaskKind::pair) continue;
      throw IngestError("missing " + path.string());
    }
    parse_released_masks(read_file(path), kind, store, path.string());
  }
  for (const auto kind : {MaskKind::universal, MaskKind::checker})
    for (const auto& id : store.ids(kind)) {
      const auto* c = space.find(id);
      if (!c) throw IngestError(std::string(released_file_name(kind)) + ": unknown concept " + id);
      if (kind == MaskKind::checker && !c->testable)
        throw IngestError("checker_masks.tsv: " + id + " has no keyword token");
    }
  return store;
}

std::string format_released_masks(const MaskStore& store, MaskKind kind) {
  std::string out = std::string(kHeader) + "\n";
  const auto settings = store.settings();
  for (const auto& id : store.ids(kind))
    for (const auto& s : settings) {
      const auto* m = store.find(kind, id, s);
      if (!m) continue;
      for (std::size_t l = 0; l < kLayerCount; ++l) {
        std::string idx;
        for (auto i : (*m)[l].indices()) idx += (idx.empty() ? "" : ",") + std::to_string(i);
        out += id + "\t" + format_double(s.epsilon) + "\t" + format_double(s.consistency) + "\t" +
               std::to_string(l) + "\t" + idx + "\n";
      }
    }
  return out;
}

void write_released(const std::filesystem::path& dir, const MaskStore& store) {
  std::filesystem::create_directories(dir);
  for (const auto kind : {MaskKind::universal, MaskKind::checker, MaskKind::pair}) {
    if (kind == MaskKind::pair && store.ids(kind).empty()) continue;
    write_file(dir / released_file_name(kind), format_released_masks(store, kind));
  }
}

}  // namespace atlas
