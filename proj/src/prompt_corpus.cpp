// SPDX-License-Identifier: Apache-2.0
#include "atlas/prompt_corpus.hpp"

#include "atlas/util.hpp"

namespace atlas {

std::string escape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out += text[i];
      continue;
    }
    if (++i >= text.size()) throw PromptError("dangling escape in corpus field");
    switch (text[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: throw PromptError(std::string("unknown escape \\") + text[i] + " in corpus field");
    }
  }
  return out;
}

std::string format_corpus(const std::vector<Prompt>& prompts) {
  std::string out = "# id\tkind\towner\tcategory\tcontext\tname_domain\tpadded\ttext\n";
  for (const auto& p : prompts) {
    out += p.id;
    out += '\t';
    out += to_string(p.kind);
    out += '\t';
    out += p.owner;
    out += '\t';
    out += p.category ? std::string(1, to_char(*p.category)) : std::string("-");
    out += '\t';
    out += to_string(p.context);
    out += '\t';
    out += p.name_domain;
    out += '\t';
    out += p.padded ? '1' : '0';
    out += '\t';
    out += escape_field(p.text);
    out += '\n';
  }
  return out;
}

std::vector<Prompt> parse_corpus(std::string_view text) {
  std::vector<Prompt> out;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto f = split(line, '\t');
    auto fail = [&](const std::string& why) -> PromptError {
      return PromptError("corpus line " + std::to_string(line_no) + ": " + why);
    };
    if (f.size() != 8) throw fail("expected 8 fields, got " + std::to_string(f.size()));
    Prompt p;
    p.id = std::string(f[0]);
    const auto kind = parse_prompt_kind(f[1]);
    if (!kind) throw fail("bad kind");
    p.kind = *kind;
    p.owner = std::string(f[2]);
    if (f[3] == "-") {
      if (p.kind == PromptKind::checker) throw fail("checker prompt without category");
    } else {
      if (f[3].size() != 1 || !parse_category(f[3][0])) throw fail("bad category");
      if (p.kind == PromptKind::object) throw fail("object prompt with category");
      p.category = parse_category(f[3][0]);
    }
    const auto ctx = parse_context(f[4]);
    if (!ctx) throw fail("bad context");
    p.context = *ctx;
    p.name_domain = std::string(f[5]);
    if (f[6] != "0" && f[6] != "1") throw fail("padded must be 0 or 1");
    p.padded = f[6] == "1";
    p.text = unescape_field(f[7]);
    out.push_back(std::move(p));
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<Prompt>& prompts) {
  write_file(path, format_corpus(prompts));
}

std::vector<Prompt> read_corpus(const std::filesystem::path& path) { return parse_corpus(read_file(path)); }

std::vector<Prompt> flatten(const std::vector<PromptSet>& sets) {
  std::vector<Prompt> out;
  for (const auto& s : sets) out.insert(out.end(), s.prompts.begin(), s.prompts.end());
  return out;
}

}  // namespace atlas
