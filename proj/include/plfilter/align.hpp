#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plfilter/textnorm.hpp"

namespace plf {

struct AlignmentCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t hits = 0;
  std::size_t ref_len = 0;

  std::size_t distance() const { return substitutions + deletions + insertions; }
  bool operator==(const AlignmentCounts&) const = default;
};

namespace detail {

struct AlignCell {
  std::size_t cost = 0;
  AlignmentCounts counts;
};

}  // namespace detail

/// Unit-cost Levenshtein alignment of two token sequences.
///
/// Keeps two DP rows; each cell carries the S/D/I/hit tallies of the path
/// that reaches it. When several predecessors share the minimal cost the
/// diagonal move (hit or substitution) wins, then deletion, then insertion,
/// which is the same path a backtrace with that preference order recovers.
template <typename Token>
AlignmentCounts edit_align(std::span<const Token> ref, std::span<const Token> hyp) {
  using detail::AlignCell;
  const std::size_t m = hyp.size();
  std::vector<AlignCell> prev(m + 1);
  std::vector<AlignCell> cur(m + 1);
  for (std::size_t j = 1; j <= m; ++j) {
    prev[j].cost = j;
    prev[j].counts.insertions = j;
  }
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0].cost = i;
    cur[0].counts = AlignmentCounts{};
    cur[0].counts.deletions = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const bool match = ref[i - 1] == hyp[j - 1];
      const std::size_t diag = prev[j - 1].cost + (match ? 0 : 1);
      const std::size_t del = prev[j].cost + 1;
      const std::size_t ins = cur[j - 1].cost + 1;
      const std::size_t best = std::min({diag, del, ins});
      if (diag == best) {
        cur[j].counts = prev[j - 1].counts;
        ++(match ? cur[j].counts.hits : cur[j].counts.substitutions);
      } else if (del == best) {
        cur[j].counts = prev[j].counts;
        ++cur[j].counts.deletions;
      } else {
        cur[j].counts = cur[j - 1].counts;
        ++cur[j].counts.insertions;
      }
      cur[j].cost = best;
    }
    std::swap(prev, cur);
  }
  AlignmentCounts out = prev[m].counts;
  out.ref_len = ref.size();
  return out;
}

template <typename Token>
AlignmentCounts edit_align(const std::vector<Token>& ref, const std::vector<Token>& hyp) {
  return edit_align(std::span<const Token>(ref), std::span<const Token>(hyp));
}

enum class ErrorUnit { kWord, kChar };

/// (S + D + I) / ref_len. Not clipped at 1.0.
/// `defined` is false only for an empty reference against a nonempty hypothesis.
struct ErrorRate {
  double value = 0.0;
  std::size_t ref_len = 0;
  bool defined = true;
  AlignmentCounts counts;
};

ErrorRate error_rate(std::string_view ref_text, std::string_view hyp_text, const NormConfig& cfg,
                     ErrorUnit unit);
ErrorRate wer(std::string_view ref_text, std::string_view hyp_text, const NormConfig& cfg = {});
ErrorRate cer(std::string_view ref_text, std::string_view hyp_text, const NormConfig& cfg = {});

enum class Aggregate { kPooled, kMacro };

struct CorpusErrorRate {
  double value = 0.0;
  std::size_t errors = 0;
  std::size_t ref_len = 0;
  std::size_t pairs_used = 0;
  std::size_t skipped_undefined = 0;
};

/// Pooled: sum of errors over sum of reference lengths. Macro: mean of
/// per-pair rates over pairs with a nonempty reference. Throws DataError when
/// no pair has a nonempty reference.
CorpusErrorRate corpus_error_rate(std::span<const std::pair<std::string, std::string>> pairs,
                                  const NormConfig& cfg, ErrorUnit unit,
                                  Aggregate aggregate = Aggregate::kPooled);

}  // namespace plf
