#include <unistd.h>

#include <filesystem>

#include "atlas/ingest.hpp"
#include "atlas/synth.hpp"
#include "atlas/util.hpp"
#include "doctest.h"

using namespace atlas;

namespace {

ConceptSpace small() {
  static const auto full = ConceptSpace::load(default_concept_spec());
  const std::vector<std::string> ast = {"For", "Break"};
  const std::vector<std::string> bi = {"len", "print"};
  return full.subspace(ast, bi);
}

struct TempDir {
  std::filesystem::path path = std::filesystem::temp_directory_path() / ("atlas_ingest_" + std::to_string(::getpid()));
  TempDir() { std::filesystem::create_directories(path); }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("explicit rows parse into masks") {
  MaskStore st;
  parse_released_masks("id\tepsilon\tconsistency\tlayer\tindices\n"
                       "Break\t0.001\t0.8\t3\t5,7,2047\n"
                       "Break\t0.001\t0.8\t4\t\n"
                       "len\t0.5\t0.2\t0\t0\n",
                       MaskKind::universal, st);
  const auto& b = st.at(MaskKind::universal, "Break", {0.001, 0.8});
  CHECK(b[3] == LayerMask::from_indices({5, 7, 2047}));
  CHECK(b[4].empty());
  CHECK(b[0].empty());
  CHECK(st.at(MaskKind::universal, "len", {0.5, 0.2})[0].count() == 1);
  CHECK(st.size() == 2);
}

TEST_CASE("malformed rows name the line") {
  const std::string h = "id\tepsilon\tconsistency\tlayer\tindices\n";
  const char* bad[] = {"x\t0.1\t0.8\t3\n", "x\t0\t0.8\t3\t\n", "x\t0.1\t1.2\t3\t\n", "x\t0.1\t0.8\t8\t\n",
                       "x\t0.1\t0.8\t3\t2048\n", "x\t0.1\t0.8\t3\t1,,2\n", "\t0.1\t0.8\t3\t\n",
                       "x\t0.1\t0.8\t3\t1\nx\t0.1\t0.8\t3\t2\n"};
  for (const auto* row : bad) {
    MaskStore st;
    INFO(row);
    CHECK_THROWS_WITH_AS(parse_released_masks(h + row, MaskKind::universal, st, "f.tsv"),
                         doctest::Contains("f.tsv:"), IngestError);
  }
  MaskStore st;
  CHECK_THROWS_AS(parse_released_masks("Break\t0.1\t0.8\t3\t\n", MaskKind::universal, st), IngestError);
}

TEST_CASE("directory round trip reproduces the store") {
  TempDir tmp;
  const auto space = small();
  const auto truth = ground_truth(presets::random(space, 9));
  const auto store = truth.to_store(default_grid());
  write_released(tmp.path, store);
  CHECK(std::filesystem::exists(tmp.path / "pair_masks.tsv"));
  const auto back = ingest_released(tmp.path, space);
  CHECK(back.serialize() == store.serialize());

  std::filesystem::remove(tmp.path / "pair_masks.tsv");
  CHECK(ingest_released(tmp.path, space).ids(MaskKind::pair).empty());
  std::filesystem::remove(tmp.path / "checker_masks.tsv");
  CHECK_THROWS_AS(ingest_released(tmp.path, space), IngestError);
  CHECK_THROWS_AS(ingest_released(tmp.path / "nope", space), IngestError);
}

TEST_CASE("unknown concepts are rejected") {
  TempDir tmp;
  write_file(tmp.path / "universal_masks.tsv", "id\tepsilon\tconsistency\tlayer\tindices\nWhile\t0.1\t0.8\t0\t1\n");
  write_file(tmp.path / "checker_masks.tsv", "id\tepsilon\tconsistency\tlayer\tindices\n");
  CHECK_THROWS_WITH_AS(ingest_released(tmp.path, small()), doctest::Contains("While"), IngestError);
  write_file(tmp.path / "universal_masks.tsv", "id\tepsilon\tconsistency\tlayer\tindices\n");
  write_file(tmp.path / "checker_masks.tsv",
             "id\tepsilon\tconsistency\tlayer\tindices\nfrozenset\t0.1\t0.8\t0\t1\n");
  static const auto full = ConceptSpace::load(default_concept_spec());
  const std::vector<std::string> ast = {"For"};
  const std::vector<std::string> bi = {"frozenset"};
  CHECK_THROWS_WITH_AS(ingest_released(tmp.path, full.subspace(ast, bi)), doctest::Contains("no keyword"),
                       IngestError);
}
