#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plfilter/align.hpp"
#include "plfilter/manifest.hpp"
#include "plfilter/metric_kind.hpp"
#include "plfilter/textnorm.hpp"

namespace plf {

/// H = -sum p_i log2 p_i over per-word teacher probabilities, taken as-is
/// (the p_i are not renormalized into a distribution).
double entropy_score(std::span<const double> word_probs);

/// (prod c_i)^(1/N), evaluated as exp(mean(ln c_i)) so long utterances do
/// not underflow.
double geomean_confidence(std::span<const double> word_probs);

/// -sum of natural-log LM token probabilities; divided by the token count
/// when `normalize_length` is set.
double nll_score(std::span<const double> lm_token_logprobs, bool normalize_length = false);

/// WER with the proxy transcript as reference and the pseudo-label as hypothesis.
ErrorRate pwer_score(const ExampleRecord& record, const NormConfig& cfg = {});

enum class SimilarityMode { kDot, kCosine };

double embedding_similarity(std::span<const double> speech, std::span<const double> text,
                            SimilarityMode mode = SimilarityMode::kDot);

struct McdOptions {
  bool use_dtw = true;
  bool skip_c0 = true;
};

// (10 / ln 10) * sqrt(2 * sum_d (a_d - b_d)^2), in dB.
double frame_mcd(std::span<const double> a, std::span<const double> b, bool skip_c0);

/// Mean per-frame MCD along an alignment of the two frame sequences.
///
/// Without DTW frames pair up by index. With DTW the result is the minimum,
/// over all monotone alignment paths (steps (1,0), (0,1), (1,1) from the
/// first frame pair to the last), of the mean frame MCD along the path.
/// Because paths differ in length this is solved per path length, which
/// costs O(F_r * F_s * min(F_r, F_s)).
double mcd_score(const FrameMatrix& real, const FrameMatrix& synth, const McdOptions& options = {});

/// Product of token probabilities per word. Boundaries give the word index
/// of each token; they start at 0 and step by 0 or 1.
std::vector<double> word_probs_from_tokens(std::span<const double> token_probs,
                                           std::span<const std::int64_t> word_boundaries);

struct MetricVector {
  std::string id;
  std::map<MetricKind, double> scores;

  std::optional<double> get(MetricKind kind) const;
  bool operator==(const MetricVector&) const = default;
};

struct ScoreOptions {
  NormConfig norm;
  bool nll_normalize_length = false;
  SimilarityMode similarity = SimilarityMode::kDot;
  McdOptions mcd;
};

void to_json(nlohmann::json& j, const ScoreOptions& options);

struct ScoredRecord {
  MetricVector vector;
  std::vector<std::string> diagnostics;
};

/// Computes each requested metric whose inputs are present. Missing or
/// malformed inputs leave the score absent and add a diagnostic.
ScoredRecord score_all(const ExampleRecord& record, std::span<const MetricKind> requested,
                       const ScoreOptions& options = {});

/// Scores every record using up to `threads` workers. Output is sorted by id.
std::vector<ScoredRecord> score_manifest(const Manifest& manifest,
                                         std::span<const MetricKind> requested,
                                         const ScoreOptions& options, unsigned threads = 1);

nlohmann::json metric_vector_to_json(const MetricVector& v);
MetricVector metric_vector_from_json(const nlohmann::json& j);

// Score file: one {id, <metric>...} object per line, sorted by id.
std::string serialize_scores(std::span<const MetricVector> scores);
void write_scores(std::span<const MetricVector> scores, const std::filesystem::path& path);
std::vector<MetricVector> load_scores(const std::filesystem::path& path);

}  // namespace plf
