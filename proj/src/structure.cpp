// SPDX-License-Identifier: Apache-2.0
#include "atlas/structure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "atlas/util.hpp"
#include "json.hpp"

namespace atlas {

double jaccard_similarity(const LayerMask& s, const LayerMask& t) {
  const auto u = s.union_count(t);
  if (u == 0) return 1.0;
  return static_cast<double>(s.intersection_count(t)) / static_cast<double>(u);
}

double jaccard_distance(const LayerMask& s, const LayerMask& t) { return 1.0 - jaccard_similarity(s, t); }

DistanceMatrix::DistanceMatrix(std::vector<std::string> labels, std::vector<double> values)
    : labels_(std::move(labels)), d_(std::move(values)) {
  const auto n = labels_.size();
  if (n == 0) throw StructureError("distance matrix needs at least one leaf");
  if (d_.size() != n * n) throw StructureError("distance matrix is not n x n");
  for (std::size_t i = 0; i < n; ++i) {
    if (d_[i * n + i] != 0.0) throw StructureError("nonzero diagonal at " + labels_[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double v = d_[i * n + j];
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw StructureError("distance out of [0, 1] between " + labels_[i] + " and " + labels_[j]);
      if (v != d_[j * n + i]) throw StructureError("distance matrix is not symmetric");
    }
  }
}

DistanceMatrix DistanceMatrix::jaccard(std::vector<std::string> labels, std::span<const LayerMask> sets) {
  const auto n = labels.size();
  if (sets.size() != n) throw StructureError("one set per label required");
  std::vector<double> d(n * n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) d[i * n + j] = jaccard_distance(sets[i], sets[j]);
  });
  std::vector<std::string> empty;
  for (std::size_t i = 0; i < n; ++i)
    if (sets[i].empty()) empty.push_back(labels[i]);
  DistanceMatrix m(std::move(labels), std::move(d));
  m.empty_ = std::move(empty);
  return m;
}

Dendrogram ward_linkage(const DistanceMatrix& dm) {
  const auto n = dm.size();
  if (n < 2) throw StructureError("linkage needs at least two leaves");
  // Slot i holds the cluster with id ids[i]; slots stay sorted by id.
  std::vector<std::size_t> ids(n), sizes(n, 1);
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<std::vector<double>> d2(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d2[i][j] = dm(i, j) * dm(i, j);

  Dendrogram tree;
  tree.labels = dm.labels();
  for (std::size_t step = 0; step + 1 < n; ++step) {
    const auto m = ids.size();
    double best = INFINITY;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) best = std::min(best, d2[i][j]);
    const double limit = best + kLinkageTieTolerance * std::max(1.0, best);
    std::size_t s = 0, t = 0;
    for (std::size_t i = 0; i < m && t == 0; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        if (d2[i][j] <= limit) {
          s = i;
          t = j;
          break;
        }

    const double ns = sizes[s], nt = sizes[t], dst = d2[s][t];
    std::vector<double> merged(m);
    for (std::size_t k = 0; k < m; ++k) {
      if (k == s || k == t) continue;
      const double nk = sizes[k];
      merged[k] = std::max(0.0, ((ns + nk) * d2[s][k] + (nt + nk) * d2[t][k] - nk * dst) / (ns + nt + nk));
    }
    tree.merges.push_back({ids[s], ids[t], std::sqrt(std::max(0.0, dst)), sizes[s] + sizes[t]});

    // The new cluster has the largest id, so it goes to the end.
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < m; ++k)
      if (k != s && k != t) keep.push_back(k);
    std::vector<std::vector<double>> next(keep.size() + 1, std::vector<double>(keep.size() + 1, 0.0));
    std::vector<std::size_t> next_ids, next_sizes;
    for (std::size_t a = 0; a < keep.size(); ++a) {
      next_ids.push_back(ids[keep[a]]);
      next_sizes.push_back(sizes[keep[a]]);
      for (std::size_t b = 0; b < keep.size(); ++b) next[a][b] = d2[keep[a]][keep[b]];
      next[a][keep.size()] = next[keep.size()][a] = merged[keep[a]];
    }
    next_ids.push_back(n + step);
    next_sizes.push_back(sizes[s] + sizes[t]);
    d2 = std::move(next);
    ids = std::move(next_ids);
    sizes = std::move(next_sizes);
  }
  return tree;
}

std::vector<std::size_t> cut(const Dendrogram& tree, std::size_t k) {
  const auto n = tree.leaves();
  if (k < 1 || k > n) throw StructureError("cut size " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  if (tree.merges.size() + 1 != n) throw StructureError("dendrogram has the wrong number of merges");
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  // Any leaf of each cluster id.
  std::vector<std::size_t> leaf_of(2 * n - 1);
  std::iota(leaf_of.begin(), leaf_of.begin() + static_cast<std::ptrdiff_t>(n), 0);
  for (std::size_t i = 0; i < n - 1; ++i) {
    const auto& m = tree.merges[i];
    if (m.left >= n + i || m.right >= n + i) throw StructureError("merge refers to a later cluster");
    leaf_of[n + i] = leaf_of[m.left];
    if (i < n - k) parent[find(leaf_of[m.left])] = find(leaf_of[m.right]);
  }
  std::map<std::size_t, std::size_t> number;
  std::vector<std::size_t> out(n);
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    const auto root = find(leaf);
    const auto it = number.try_emplace(root, number.size()).first;
    out[leaf] = it->second;
  }
  return out;
}

AtomicityResult atomicity_check(const Dendrogram& tree, std::span<const std::size_t> partition,
                                std::span<const std::string> members) {
  if (partition.size() != tree.leaves()) throw StructureError("partition does not match the dendrogram");
  if (members.empty()) throw StructureError("atomicity check needs members");
  AtomicityResult r;
  for (const auto& m : members) {
    const auto it = std::find(tree.labels.begin(), tree.labels.end(), m);
    if (it == tree.labels.end()) throw StructureError("atomicity member " + m + " is not a leaf");
    r.member_clusters.push_back(partition[static_cast<std::size_t>(it - tree.labels.begin())]);
  }
  auto distinct = r.member_clusters;
  std::sort(distinct.begin(), distinct.end());
  r.clusters = static_cast<std::size_t>(std::unique(distinct.begin(), distinct.end()) - distinct.begin());
  r.single_cluster = r.clusters == 1;
  return r;
}

std::vector<LayerMask> concept_only_sets(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s,
                                         std::size_t layer) {
  if (layer >= kLayerCount) throw StructureError("layer out of range: " + std::to_string(layer));
  std::vector<LayerMask> out;
  for (const auto* c : space.all()) {
    const auto* u = store.find(MaskKind::universal, c->id, s);
    if (!u) throw StructureError("mask store lacks universal circuit " + c->id + " at " + s.label());
    LayerMask m = (*u)[layer];
    if (c->testable) {
      const auto* b = store.find(MaskKind::checker, c->id, s);
      if (!b) throw StructureError("mask store lacks checker mask " + c->id + " at " + s.label());
      m = m.minus((*b)[layer]);
    }
    out.push_back(m);
  }
  return out;
}

std::string dendrogram_json(const Dendrogram& tree, std::span<const std::string> empty_leaves) {
  nlohmann::ordered_json j;
  j["labels"] = tree.labels;
  j["merges"] = nlohmann::json::array();
  for (const auto& m : tree.merges)
    j["merges"].push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  j["empty_leaves"] = std::vector<std::string>(empty_leaves.begin(), empty_leaves.end());
  return j.dump(2) + "\n";
}

std::string dendrogram_dot(const Dendrogram& tree) {
  const auto n = tree.leaves();
  std::ostringstream out;
  out << "digraph dendrogram {\n  node [shape=box];\n";
  for (std::size_t i = 0; i < n; ++i) out << "  n" << i << " [label=\"" << tree.labels[i] << "\"];\n";
  for (std::size_t i = 0; i < tree.merges.size(); ++i) {
    const auto& m = tree.merges[i];
    char h[32];
    std::snprintf(h, sizeof h, "%.4f", m.height);
    out << "  n" << n + i << " [shape=point, xlabel=\"" << h << "\"];\n";
    out << "  n" << n + i << " -> n" << m.left << ";\n  n" << n + i << " -> n" << m.right << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string partition_tsv(const Dendrogram& tree, std::span<const std::size_t> partition) {
  if (partition.size() != tree.leaves()) throw StructureError("partition does not match the dendrogram");
  std::string out = "concept\tcluster\n";
  for (std::size_t i = 0; i < partition.size(); ++i)
    out += tree.labels[i] + "\t" + std::to_string(partition[i]) + "\n";
  return out;
}

}  // namespace atlas
