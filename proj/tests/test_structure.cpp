#include <algorithm>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "atlas/structure.hpp"
#include "atlas/util.hpp"
#include "doctest.h"
#include "json.hpp"
#include "linkage_oracle.hpp"
#include "py_oracle.hpp"

using namespace atlas;

namespace {

std::vector<std::string> leaf_names(std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back("c" + std::to_string(i));
  return v;
}

DistanceMatrix uniform_matrix(Rng& rng, std::size_t n) {
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = rng.uniform();
  return DistanceMatrix(leaf_names(n), d);
}

DistanceMatrix set_matrix(Rng& rng, std::size_t n) {
  std::vector<LayerMask> sets(n);
  for (auto& s : sets)
    for (int k = 0; k < 6; ++k) s.set(rng.below(12));
  return DistanceMatrix::jaccard(leaf_names(n), sets);
}

// Clusters as sets of labels, independent of numbering.
std::set<std::set<std::string>> clusters_of(const Dendrogram& t, const std::vector<std::size_t>& part) {
  std::map<std::size_t, std::set<std::string>> m;
  for (std::size_t i = 0; i < part.size(); ++i) m[part[i]].insert(t.labels[i]);
  std::set<std::set<std::string>> out;
  for (auto& [k, v] : m) out.insert(v);
  return out;
}

void check_against_oracle(const DistanceMatrix& d) {
  const auto tree = ward_linkage(d);
  const auto expect = atlas_test::naive_ward(d);
  REQUIRE(tree.merges.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    REQUIRE(tree.merges[i].left == expect[i].left);
    REQUIRE(tree.merges[i].right == expect[i].right);
    REQUIRE(tree.merges[i].size == expect[i].size);
    REQUIRE(tree.merges[i].height == doctest::Approx(expect[i].height).epsilon(1e-9));
  }
}

}  // namespace

TEST_CASE("jaccard distance") {
  const auto a = LayerMask::from_indices({1, 2, 3});
  const auto b = LayerMask::from_indices({2, 3, 4});
  CHECK(jaccard_distance(a, b) == doctest::Approx(0.5));
  CHECK(jaccard_distance(a, a) == 0.0);
  CHECK(jaccard_distance(a, LayerMask::from_indices({7, 8})) == 1.0);
  CHECK(jaccard_distance(LayerMask{}, LayerMask{}) == 0.0);
  CHECK(jaccard_distance(LayerMask{}, a) == 1.0);

  Rng rng(5);
  for (int t = 0; t < 2000; ++t) {
    LayerMask s[3];
    for (auto& m : s)
      for (int k = 0; k < 1 + static_cast<int>(rng.below(30)); ++k) m.set(rng.below(64));
    REQUIRE(jaccard_distance(s[0], s[1]) == jaccard_distance(s[1], s[0]));
    REQUIRE(jaccard_distance(s[0], s[2]) <= jaccard_distance(s[0], s[1]) + jaccard_distance(s[1], s[2]) + 1e-12);
  }
}

TEST_CASE("distance matrix validation") {
  CHECK_THROWS_AS(DistanceMatrix({"a", "b"}, {0, 0.5, 0.4, 0}), StructureError);
  CHECK_THROWS_AS(DistanceMatrix({"a", "b"}, {0, 1.5, 1.5, 0}), StructureError);
  CHECK_THROWS_AS(DistanceMatrix({"a", "b"}, {0.1, 0.5, 0.5, 0}), StructureError);
  CHECK_THROWS_AS(DistanceMatrix({"a", "b"}, {0, 0.5, 0.5}), StructureError);
  const DistanceMatrix one({"a"}, {0});
  CHECK_THROWS_AS(ward_linkage(one), StructureError);
  const std::vector<LayerMask> sets = {LayerMask{}, LayerMask::from_indices({1}), LayerMask{}};
  const auto m = DistanceMatrix::jaccard({"x", "y", "z"}, sets);
  CHECK(m.empty_leaves() == std::vector<std::string>{"x", "z"});
  CHECK(m(0, 2) == 0.0);
  CHECK(m(0, 1) == 1.0);
}

TEST_CASE("three-leaf example") {
  const DistanceMatrix d({"A", "B", "C"}, {0, 0.1, 0.9, 0.1, 0, 0.9, 0.9, 0.9, 0});
  const auto t = ward_linkage(d);
  REQUIRE(t.merges.size() == 2);
  CHECK(t.merges[0] == Merge{0, 1, t.merges[0].height, 2});
  CHECK(t.merges[0].height == doctest::Approx(0.1));
  // d2(C, AB) = (2*0.81 + 2*0.81 - 0.01) / 3.
  CHECK(t.merges[1].height == doctest::Approx(std::sqrt((4 * 0.81 - 0.01) / 3)));
  CHECK(t.merges[1].left == 2);
  CHECK(t.merges[1].right == 3);
  CHECK(cut(t, 2) == std::vector<std::size_t>{0, 0, 1});
  CHECK(cut(t, 3) == std::vector<std::size_t>{0, 1, 2});
  CHECK(cut(t, 1) == std::vector<std::size_t>{0, 0, 0});
  CHECK_THROWS_AS(cut(t, 0), StructureError);
  CHECK_THROWS_AS(cut(t, 4), StructureError);
}

TEST_CASE("identical leaves merge first at height zero") {
  const DistanceMatrix d({"a", "b", "c", "d"}, {0, 0.7, 0.7, 0.6,  //
                                                0.7, 0, 0, 0.5,    //
                                                0.7, 0, 0, 0.5,    //
                                                0.6, 0.5, 0.5, 0});
  const auto t = ward_linkage(d);
  CHECK(t.merges[0] == Merge{1, 2, 0.0, 2});
}

TEST_CASE("ties go to the smallest id pair") {
  const std::size_t n = 6;
  std::vector<double> v(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 0;
  const DistanceMatrix d(leaf_names(n), v);
  const auto t = ward_linkage(d);
  CHECK(t.merges[0] == Merge{0, 1, 1.0, 2});
  CHECK(t.merges[1].left == 2);
  CHECK(t.merges[1].right == 3);
  check_against_oracle(d);
}

TEST_CASE("ward agrees with the recompute-from-scratch oracle") {
  Rng rng(77);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 8 + rng.below(5);
    check_against_oracle(t % 2 ? uniform_matrix(rng, n) : set_matrix(rng, n));
  }
}

TEST_CASE("ward agrees with scipy on tie-free matrices") {
  if (!atlas_test::python_available()) return;
  Rng rng(31);
  const auto dir = std::filesystem::temp_directory_path() / ("atlas_scipy_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 8 + rng.below(30);
    const auto d = uniform_matrix(rng, n);
    std::ostringstream in;
    in.precision(17);
    in << n << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) in << d(i, j) << ' ';
      in << '\n';
    }
    write_file(dir / "m.txt", in.str());
    const auto out = atlas_test::run_oracle("scipy_linkage.py", (dir / "m.txt").string());
    if (!out) {
      MESSAGE("scipy unavailable, skipping");
      break;
    }
    const auto tree = ward_linkage(d);
    std::istringstream rows(*out);
    for (const auto& m : tree.merges) {
      std::size_t a = 0, b = 0, size = 0;
      double h = 0;
      const bool parsed = static_cast<bool>(rows >> a >> b >> h >> size);
      REQUIRE(parsed);
      CHECK(m.left == a);
      CHECK(m.right == b);
      CHECK(m.size == size);
      CHECK(m.height == doctest::Approx(h).epsilon(1e-9));
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("heights are non-decreasing and every leaf appears once") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto d = uniform_matrix(rng, 20);
    const auto tree = ward_linkage(d);
    std::vector<int> seen(2 * 20 - 1, 0);
    for (std::size_t i = 0; i < tree.merges.size(); ++i) {
      if (i > 0) REQUIRE(tree.merges[i].height >= tree.merges[i - 1].height - 1e-12);
      ++seen[tree.merges[i].left];
      ++seen[tree.merges[i].right];
    }
    for (std::size_t i = 0; i + 1 < seen.size(); ++i) REQUIRE(seen[i] == 1);
  }
}

TEST_CASE("cuts have k clusters and nest") {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 8 + rng.below(30);
    const auto tree = ward_linkage(uniform_matrix(rng, n));
    std::vector<std::size_t> prev;
    for (std::size_t k = 1; k <= n; ++k) {
      const auto part = cut(tree, k);
      REQUIRE(std::set<std::size_t>(part.begin(), part.end()).size() == k);
      REQUIRE(*std::max_element(part.begin(), part.end()) == k - 1);
      if (!prev.empty()) {
        // Each k-cluster lies within one (k-1)-cluster.
        std::map<std::size_t, std::size_t> into;
        for (std::size_t i = 0; i < n; ++i) {
          const auto [it, fresh] = into.emplace(part[i], prev[i]);
          REQUIRE(it->second == prev[i]);
        }
      }
      prev = part;
    }
  }
}

TEST_CASE("relabelling leaves does not change the clusters") {
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 10;
    const auto d = uniform_matrix(rng, n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<std::string> labels(n);
    std::vector<double> v(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = d.labels()[perm[i]];
      for (std::size_t j = 0; j < n; ++j) v[i * n + j] = d(perm[i], perm[j]);
    }
    const DistanceMatrix p(labels, v);
    const auto a = ward_linkage(d), b = ward_linkage(p);
    for (std::size_t k = 1; k <= n; ++k) REQUIRE(clusters_of(a, cut(a, k)) == clusters_of(b, cut(b, k)));
  }
}

TEST_CASE("atomicity check") {
  const std::vector<std::string> six = {"Import", "ImportFrom", "Break", "Continue", "Pass", "Assert"};
  std::vector<std::string> labels = six;
  labels.push_back("For");
  labels.push_back("len");
  Dendrogram tree;
  tree.labels = labels;
  const std::vector<std::size_t> together = {0, 0, 0, 0, 0, 0, 1, 2};
  auto r = atomicity_check(tree, together, six);
  CHECK(r.single_cluster);
  CHECK(r.clusters == 1);
  const std::vector<std::size_t> two = {0, 0, 0, 1, 1, 1, 1, 2};
  r = atomicity_check(tree, two, six);
  CHECK_FALSE(r.single_cluster);
  CHECK(r.clusters == 2);
  const std::vector<std::size_t> singles = {0, 1, 2, 3, 4, 5, 6, 7};
  CHECK(atomicity_check(tree, singles, six).clusters == 6);
  const std::vector<std::string> missing = {"Break", "While"};
  CHECK_THROWS_AS(atomicity_check(tree, singles, missing), StructureError);
}

TEST_CASE("exports") {
  const DistanceMatrix d({"A", "B", "C"}, {0, 0.1, 0.9, 0.1, 0, 0.9, 0.9, 0.9, 0});
  const auto t = ward_linkage(d);
  const std::vector<std::string> empties = {"C"};
  const auto j = nlohmann::json::parse(dendrogram_json(t, empties));
  CHECK(j["labels"].size() == 3);
  CHECK(j["merges"][0]["left"] == 0);
  CHECK(j["merges"][1]["size"] == 3);
  CHECK(j["empty_leaves"][0] == "C");
  const auto dot = dendrogram_dot(t);
  CHECK(dot.find("n3 -> n0;") != std::string::npos);
  CHECK(dot.find("n4 -> n3;") != std::string::npos);
  CHECK(partition_tsv(t, cut(t, 2)) == "concept\tcluster\nA\t0\nB\t0\nC\t1\n");
}

TEST_CASE("concept-only sets use the whole circuit for untestable concepts") {
  const auto full = ConceptSpace::load(default_concept_spec());
  const std::vector<std::string> ast = {"Break", "ListComp"};
  const std::vector<std::string> bi = {"len"};
  const auto sub = full.subspace(ast, bi);
  MaskStore st;
  const SweepSetting s{};
  LayerStack u, b;
  u[2] = LayerMask::from_indices({1, 2, 3});
  b[2] = LayerMask::from_indices({3, 4});
  for (const auto* c : sub.all()) {
    st.put(MaskKind::universal, c->id, s, u);
    if (c->testable) st.put(MaskKind::checker, c->id, s, b);
  }
  const auto sets = concept_only_sets(st, sub, s, 2);
  REQUIRE(sets.size() == 3);
  CHECK(sets[0].indices() == std::vector<std::uint16_t>{1, 2});  // Break
  CHECK(sets[1].indices() == std::vector<std::uint16_t>{1, 2, 3});  // ListComp
  st.erase(MaskKind::checker, "len", s);
  CHECK_THROWS_AS(concept_only_sets(st, sub, s, 2), StructureError);
}
