// SPDX-License-Identifier: Apache-2.0
//
// Released-artifact layout: a directory holding universal_masks.tsv,
// checker_masks.tsv and optionally pair_masks.tsv. Each file has the header
// "id\tepsilon\tconsistency\tlayer\tindices" and one row per (id, setting,
// layer); indices are comma-separated neuron numbers, empty for an empty
// mask. Layers absent from a file are empty.
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "atlas/concept_space.hpp"
#include "atlas/mask_store.hpp"

namespace atlas {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view released_file_name(MaskKind kind);

// Adds the rows of one file to `store`. Errors name the file and line.
void parse_released_masks(std::string_view text, MaskKind kind, MaskStore& store, const std::string& origin = "input");

// Reads the directory. Universal and checker files are required. Ids of
// universal and checker rows must exist in `space`.
MaskStore ingest_released(const std::filesystem::path& dir, const ConceptSpace& space);

std::string format_released_masks(const MaskStore& store, MaskKind kind);
void write_released(const std::filesystem::path& dir, const MaskStore& store);

}  // namespace atlas
