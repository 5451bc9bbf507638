// Naive agglomerative Ward oracle: every step recomputes each candidate
// cost from the original leaf distances, with no update recurrence.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "atlas/structure.hpp"

namespace atlas_test {

// Ward cost between clusters X and Y in energy form:
// 2|X||Y|/(|X|+|Y|) * (mean d2(X,Y) - mean d2(X,X)/2 - mean d2(Y,Y)/2),
// means taken over all ordered pairs including the diagonal.
inline double ward_cost(const atlas::DistanceMatrix& d, const std::vector<std::size_t>& x,
                        const std::vector<std::size_t>& y) {
  auto mean_sq = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double s = 0;
    for (auto i : a)
      for (auto j : b) s += d(i, j) * d(i, j);
    return s / static_cast<double>(a.size() * b.size());
  };
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  return 2 * nx * ny / (nx + ny) * (mean_sq(x, y) - mean_sq(x, x) / 2 - mean_sq(y, y) / 2);
}

inline std::vector<atlas::Merge> naive_ward(const atlas::DistanceMatrix& d) {
  const auto n = d.size();
  std::vector<std::size_t> ids;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(i);
    members.push_back({i});
  }
  std::vector<atlas::Merge> out;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    const auto m = ids.size();
    std::vector<std::vector<double>> cost(m, std::vector<double>(m, 0));
    double best = INFINITY;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) best = std::min(best, cost[i][j] = ward_cost(d, members[i], members[j]));
    const double limit = best + atlas::kLinkageTieTolerance * std::max(1.0, best);
    std::size_t s = m, t = m;
    for (std::size_t i = 0; i < m && s == m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        if (cost[i][j] <= limit) {
          s = i;
          t = j;
          break;
        }
    auto joined = members[s];
    joined.insert(joined.end(), members[t].begin(), members[t].end());
    out.push_back({ids[s], ids[t], std::sqrt(std::max(0.0, best)), joined.size()});
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(t));
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(t));
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(s));
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(s));
    ids.push_back(n + step);
    members.push_back(std::move(joined));
  }
  return out;
}

}  // namespace atlas_test
