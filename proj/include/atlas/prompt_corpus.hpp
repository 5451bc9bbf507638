// SPDX-License-Identifier: Apache-2.0
//
// Prompt corpus file: UTF-8 TSV, one prompt per line.
//   id  kind  owner  category  context  name_domain  padded  text
// `category` is '-' for object prompts. `text` escapes backslash, tab,
// newline and carriage return as \\ \t \n \r. Lines starting with '#' are
// comments.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "atlas/promptgen.hpp"

namespace atlas {

std::string escape_field(std::string_view text);
std::string unescape_field(std::string_view text);

std::string format_corpus(const std::vector<Prompt>& prompts);
std::vector<Prompt> parse_corpus(std::string_view text);

void write_corpus(const std::filesystem::path& path, const std::vector<Prompt>& prompts);
std::vector<Prompt> read_corpus(const std::filesystem::path& path);

// Flattens prompt sets in order.
std::vector<Prompt> flatten(const std::vector<PromptSet>& sets);

}  // namespace atlas
