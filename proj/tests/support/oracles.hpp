#pragma once

// Slow, obviously-correct reference implementations used as test oracles.
// None of these share code with the library.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace plf::testing {

using Seq = std::vector<int>;

/// All strings over {0..alphabet-1} with length <= max_len, shortest first.
inline std::vector<Seq> all_strings(int alphabet, std::size_t max_len) {
  std::vector<Seq> out{Seq{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (int c = 0; c < alphabet; ++c) {
        Seq s = out[i];
        s.push_back(c);
        out.push_back(std::move(s));
      }
    }
    begin = end;
  }
  return out;
}

/// Graph whose nodes are strings and whose edges are single edit operations.
/// Shortest-path length between two nodes is the minimal edit-script length.
/// Minimal scripts never need intermediates longer than the longer endpoint,
/// so restricting nodes to length <= max_len is exact for those endpoints.
class EditGraph {
 public:
  EditGraph(int alphabet, std::size_t max_len) : nodes_(all_strings(alphabet, max_len)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(key(nodes_[i]), i);
    adjacency_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Seq& s = nodes_[i];
      auto link = [&](const Seq& t) {
        auto it = index_.find(key(t));
        if (it != index_.end()) adjacency_[i].push_back(static_cast<std::uint32_t>(it->second));
      };
      for (std::size_t pos = 0; pos < s.size(); ++pos) {
        Seq del = s;
        del.erase(del.begin() + static_cast<std::ptrdiff_t>(pos));
        link(del);
        for (int c = 0; c < alphabet; ++c) {
          if (c == s[pos]) continue;
          Seq sub = s;
          sub[pos] = c;
          link(sub);
        }
      }
      for (std::size_t pos = 0; pos <= s.size(); ++pos) {
        for (int c = 0; c < alphabet; ++c) {
          Seq ins = s;
          ins.insert(ins.begin() + static_cast<std::ptrdiff_t>(pos), c);
          link(ins);
        }
      }
    }
  }

  const std::vector<Seq>& nodes() const { return nodes_; }

  /// Breadth-first distances from `source` to every node.
  std::vector<std::uint8_t> distances_from(std::size_t source) const {
    std::vector<std::uint8_t> dist(nodes_.size(), std::numeric_limits<std::uint8_t>::max());
    std::vector<std::uint32_t> frontier{static_cast<std::uint32_t>(source)};
    dist[source] = 0;
    std::uint8_t level = 0;
    while (!frontier.empty()) {
      std::vector<std::uint32_t> next;
      ++level;
      for (auto u : frontier) {
        for (auto v : adjacency_[u]) {
          if (dist[v] == std::numeric_limits<std::uint8_t>::max()) {
            dist[v] = level;
            next.push_back(v);
          }
        }
      }
      frontier = std::move(next);
    }
    return dist;
  }

 private:
  static std::string key(const Seq& s) { return std::string(s.begin(), s.end()); }

  std::vector<Seq> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::uint32_t>> adjacency_;
};

/// Levenshtein distance by memoized recursion over suffixes.
template <typename T>
std::size_t recursive_edit_distance(const std::vector<T>& a, const std::vector<T>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto it = memo.find({i, j});
    if (it != memo.end()) return it->second;
    std::size_t best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, go(i + 1, j) + 1);
    best = std::min(best, go(i, j + 1) + 1);
    memo[{i, j}] = best;
    return best;
  };
  return go(0, 0);
}

using Frames = std::vector<std::vector<double>>;

inline double oracle_frame_mcd(const std::vector<double>& a, const std::vector<double>& b,
                               bool skip_c0) {
  double sq = 0.0;
  for (std::size_t d = skip_c0 ? 1 : 0; d < a.size(); ++d) sq += (a[d] - b[d]) * (a[d] - b[d]);
  return 10.0 / std::log(10.0) * std::sqrt(2.0 * sq);
}

/// Enumerates every monotone path from (0,0) to (n-1,m-1) with unit steps.
inline void for_each_monotone_path(
    std::size_t n, std::size_t m,
    const std::function<void(const std::vector<std::pair<std::size_t, std::size_t>>&)>& visit) {
  std::vector<std::pair<std::size_t, std::size_t>> path{{0, 0}};
  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t j) {
    if (i == n - 1 && j == m - 1) {
      visit(path);
      return;
    }
    const std::pair<std::size_t, std::size_t> steps[] = {{1, 1}, {1, 0}, {0, 1}};
    for (auto [di, dj] : steps) {
      if (i + di >= n || j + dj >= m) continue;
      path.emplace_back(i + di, j + dj);
      walk(i + di, j + dj);
      path.pop_back();
    }
  };
  walk(0, 0);
}

inline double path_mean_mcd(const Frames& a, const Frames& b,
                            const std::vector<std::pair<std::size_t, std::size_t>>& path,
                            bool skip_c0) {
  double total = 0.0;
  for (auto [i, j] : path) total += oracle_frame_mcd(a[i], b[j], skip_c0);
  return total / static_cast<double>(path.size());
}

/// Minimum over all monotone alignment paths of the mean per-frame distortion.
inline double brute_force_dtw_mcd(const Frames& a, const Frames& b, bool skip_c0 = true) {
  double best = std::numeric_limits<double>::infinity();
  for_each_monotone_path(a.size(), b.size(), [&](const auto& path) {
    best = std::min(best, path_mean_mcd(a, b, path, skip_c0));
  });
  return best;
}

/// P(s+ > s-) + 0.5 P(s+ == s-) by enumerating every positive/negative pair.
inline double pairwise_auc(const std::vector<double>& positives,
                           const std::vector<double>& negatives) {
  double wins = 0.0;
  for (double p : positives) {
    for (double q : negatives) {
      if (p > q) {
        wins += 1.0;
      } else if (p == q) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(positives.size()) * static_cast<double>(negatives.size()));
}

inline double direct_geomean(const std::vector<double>& c) {
  double product = 1.0;
  for (double x : c) product *= x;
  return std::pow(product, 1.0 / static_cast<double>(c.size()));
}

inline Seq random_seq(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len,
                      int alphabet) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> sym(0, alphabet - 1);
  Seq s(len(rng));
  for (auto& x : s) x = sym(rng);
  return s;
}

inline Frames random_frames(std::mt19937_64& rng, std::size_t frames, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  Frames out(frames, std::vector<double>(dim));
  for (auto& row : out) {
    for (auto& x : row) x = g(rng);
  }
  return out;
}

}  // namespace plf::testing
