#include "plfilter/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <thread>

#include "plfilter/error.hpp"
#include "plfilter/io.hpp"

namespace plf {

namespace {

void require_probabilities(std::span<const double> values, const char* what) {
  if (values.empty()) {
    throw DataError(std::string(what) + " is empty");
  }
  for (double p : values) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw DataError(std::string(what) + " values must lie in (0, 1], got " + std::to_string(p));
    }
  }
}

// 10 / ln(10) * sqrt(2)
const double kMcdScale = 10.0 / std::numbers::ln10 * std::numbers::sqrt2;

}  // namespace

double entropy_score(std::span<const double> word_probs) {
  require_probabilities(word_probs, "word_probs");
  double h = 0.0;
  for (double p : word_probs) {
    h -= p * std::log2(p);
  }
  return h;
}

double geomean_confidence(std::span<const double> word_probs) {
  require_probabilities(word_probs, "word_probs");
  double log_sum = 0.0;
  for (double c : word_probs) {
    log_sum += std::log(c);
  }
  return std::exp(log_sum / static_cast<double>(word_probs.size()));
}

double nll_score(std::span<const double> lm_token_logprobs, bool normalize_length) {
  if (lm_token_logprobs.empty()) {
    throw DataError("lm_token_logprobs is empty");
  }
  double nll = 0.0;
  for (double lp : lm_token_logprobs) {
    if (!std::isfinite(lp) || lp > 0.0) {
      throw DataError("lm_token_logprobs must be finite and <= 0, got " + std::to_string(lp));
    }
    nll -= lp;
  }
  return normalize_length ? nll / static_cast<double>(lm_token_logprobs.size()) : nll;
}

ErrorRate pwer_score(const ExampleRecord& record, const NormConfig& cfg) {
  if (!record.proxy_transcript) {
    throw DataError("record '" + record.id + "' has no proxy_transcript");
  }
  return wer(*record.proxy_transcript, record.pseudo_label, cfg);
}

double embedding_similarity(std::span<const double> speech, std::span<const double> text,
                            SimilarityMode mode) {
  if (speech.size() != text.size()) {
    throw DataError("embedding dimensions differ: " + std::to_string(speech.size()) + " vs " +
                    std::to_string(text.size()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < speech.size(); ++i) {
    dot += speech[i] * text[i];
  }
  if (mode == SimilarityMode::kDot) {
    return dot;
  }
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < speech.size(); ++i) {
    na += speech[i] * speech[i];
    nb += text[i] * text[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw DataError("cosine similarity of a zero vector is undefined");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double frame_mcd(std::span<const double> a, std::span<const double> b, bool skip_c0) {
  if (a.size() != b.size()) {
    throw DataError("cepstral frames differ in dimension");
  }
  double sq = 0.0;
  for (std::size_t d = skip_c0 ? 1 : 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    sq += diff * diff;
  }
  return kMcdScale * std::sqrt(sq);
}

double mcd_score(const FrameMatrix& real, const FrameMatrix& synth, const McdOptions& options) {
  if (real.empty() || synth.empty()) {
    throw DataError("cepstral frame matrices must have at least one frame");
  }
  const std::size_t dim = real.front().size();
  for (const auto* frames : {&real, &synth}) {
    for (const auto& row : *frames) {
      if (row.size() != dim) throw DataError("cepstral frames differ in dimension");
    }
  }
  if (options.skip_c0 && dim < 2) {
    throw DataError("cepstral frames need at least 2 coefficients when c0 is skipped");
  }
  if (dim == 0) {
    throw DataError("cepstral frames are empty");
  }

  const std::size_t n = real.size();
  const std::size_t m = synth.size();
  if (!options.use_dtw) {
    if (n != m) {
      throw DataError("frame counts differ (" + std::to_string(n) + " vs " + std::to_string(m) +
                      ") and DTW is disabled");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += frame_mcd(real[i], synth[i], options.skip_c0);
    }
    return total / static_cast<double>(n);
  }

  // best[j][k]: minimal cost sum of a path from (0,0) to (i,j) visiting
  // lo(i,j) + k cells, where lo(i,j) = max(i,j) + 1 and the longest path
  // visits i + j + 1 cells.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t width = std::min(n, m);
  std::vector<double> prev(m * width, kInf);
  std::vector<double> cur(m * width, kInf);
  auto lo = [](std::size_t i, std::size_t j) { return std::max(i, j) + 1; };
  auto at = [width](std::vector<double>& row, std::size_t j, std::size_t k) -> double& {
    return row[j * width + k];
  };
  auto lookup = [&](std::vector<double>& row, std::size_t i, std::size_t j, std::size_t len) {
    const std::size_t low = lo(i, j);
    if (len < low || len > i + j + 1) return kInf;
    return at(row, j, len - low);
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double cost = frame_mcd(real[i], synth[j], options.skip_c0);
      const std::size_t low = lo(i, j);
      const std::size_t high = i + j + 1;
      for (std::size_t len = low; len <= high; ++len) {
        double best = kInf;
        if (i == 0 && j == 0) {
          best = 0.0;
        } else {
          if (i > 0) best = std::min(best, lookup(prev, i - 1, j, len - 1));
          if (j > 0) best = std::min(best, lookup(cur, i, j - 1, len - 1));
          if (i > 0 && j > 0) best = std::min(best, lookup(prev, i - 1, j - 1, len - 1));
        }
        at(cur, j, len - low) = best + cost;
      }
    }
    std::swap(prev, cur);
  }

  double result = kInf;
  for (std::size_t len = lo(n - 1, m - 1); len <= n + m - 1; ++len) {
    result = std::min(result, lookup(prev, n - 1, m - 1, len) / static_cast<double>(len));
  }
  return result;
}

std::vector<double> word_probs_from_tokens(std::span<const double> token_probs,
                                           std::span<const std::int64_t> word_boundaries) {
  if (token_probs.size() != word_boundaries.size()) {
    throw DataError("token_probs and word_boundaries differ in length");
  }
  if (token_probs.empty()) {
    throw DataError("token_probs is empty");
  }
  require_probabilities(token_probs, "token_probs");
  if (word_boundaries.front() != 0) {
    throw DataError("word_boundaries must start at 0");
  }
  std::vector<double> words;
  for (std::size_t i = 0; i < token_probs.size(); ++i) {
    if (i > 0) {
      const auto step = word_boundaries[i] - word_boundaries[i - 1];
      if (step != 0 && step != 1) {
        throw DataError("word_boundaries must be nondecreasing without gaps");
      }
    }
    const auto w = static_cast<std::size_t>(word_boundaries[i]);
    if (w == words.size()) {
      words.push_back(token_probs[i]);
    } else {
      words.back() *= token_probs[i];
    }
  }
  return words;
}

std::optional<double> MetricVector::get(MetricKind kind) const {
  auto it = scores.find(kind);
  if (it == scores.end()) return std::nullopt;
  return it->second;
}

void to_json(nlohmann::json& j, const ScoreOptions& options) {
  j = nlohmann::json{
      {"norm", options.norm},
      {"nll_normalize_length", options.nll_normalize_length},
      {"similarity", options.similarity == SimilarityMode::kDot ? "dot" : "cosine"},
      {"mcd_use_dtw", options.mcd.use_dtw},
      {"mcd_skip_c0", options.mcd.skip_c0}};
}

namespace {

std::vector<double> confidences_of(const ExampleRecord& r) {
  std::vector<double> probs;
  if (r.word_probs) {
    probs = *r.word_probs;
  } else if (r.token_probs) {
    if (!r.word_boundaries) {
      throw DataError("token_probs present without word_boundaries");
    }
    probs = word_probs_from_tokens(*r.token_probs, *r.word_boundaries);
  } else {
    throw DataError("missing word_probs or token_probs");
  }
  const std::size_t words = word_count(r.pseudo_label);
  if (probs.size() != words) {
    throw DataError("confidences cover " + std::to_string(probs.size()) +
                    " words but pseudo_label has " + std::to_string(words));
  }
  return probs;
}

double compute(const ExampleRecord& r, MetricKind kind, const ScoreOptions& options,
               std::optional<std::vector<double>>& confidences) {
  switch (kind) {
    case MetricKind::kEntropy:
    case MetricKind::kGeomean:
      if (!confidences) confidences = confidences_of(r);
      return kind == MetricKind::kEntropy ? entropy_score(*confidences)
                                          : geomean_confidence(*confidences);
    case MetricKind::kNll:
      if (!r.lm_token_logprobs) throw DataError("missing lm_token_logprobs");
      return nll_score(*r.lm_token_logprobs, options.nll_normalize_length);
    case MetricKind::kPwer: {
      if (!r.proxy_transcript) throw DataError("missing proxy_transcript");
      const ErrorRate rate = pwer_score(r, options.norm);
      if (!rate.defined) throw DataError("proxy_transcript is empty, pWER undefined");
      return rate.value;
    }
    case MetricKind::kEmbSim:
      if (!r.speech_embedding) throw DataError("missing speech_embedding");
      if (!r.text_embedding) throw DataError("missing text_embedding");
      return embedding_similarity(*r.speech_embedding, *r.text_embedding, options.similarity);
    case MetricKind::kPesq:
      if (!r.pesq) throw DataError("missing pesq");
      return *r.pesq;
    case MetricKind::kMcd:
      if (!r.cepstra_real) throw DataError("missing cepstra_real");
      if (!r.cepstra_synth) throw DataError("missing cepstra_synth");
      return mcd_score(*r.cepstra_real, *r.cepstra_synth, options.mcd);
  }
  throw DataError("unknown metric");
}

}  // namespace

ScoredRecord score_all(const ExampleRecord& record, std::span<const MetricKind> requested,
                       const ScoreOptions& options) {
  ScoredRecord out;
  out.vector.id = record.id;
  std::optional<std::vector<double>> confidences;
  for (auto kind : requested) {
    try {
      const double value = compute(record, kind, options, confidences);
      if (!std::isfinite(value)) {
        throw DataError("score is not finite");
      }
      out.vector.scores[kind] = value;
    } catch (const DataError& e) {
      out.diagnostics.push_back(std::string(metric_name(kind)) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ScoredRecord> score_manifest(const Manifest& manifest,
                                         std::span<const MetricKind> requested,
                                         const ScoreOptions& options, unsigned threads) {
  const std::size_t n = manifest.records.size();
  std::vector<ScoredRecord> out(n);
  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::size_t>(threads == 0 ? 1 : threads, 1, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      out[i] = score_all(manifest.records[i], requested, options);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  std::sort(out.begin(), out.end(),
            [](const ScoredRecord& a, const ScoredRecord& b) { return a.vector.id < b.vector.id; });
  return out;
}

nlohmann::json metric_vector_to_json(const MetricVector& v) {
  nlohmann::json j;
  j["id"] = v.id;
  for (const auto& [kind, score] : v.scores) {
    j[std::string(metric_name(kind))] = score;
  }
  return j;
}

MetricVector metric_vector_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("id") || !j.at("id").is_string()) {
    throw DataError("score entry must be an object with a string 'id'");
  }
  MetricVector v;
  v.id = j.at("id").get<std::string>();
  for (auto kind : kAllMetrics) {
    const std::string name(metric_name(kind));
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) continue;
    if (!it->is_number()) {
      throw DataError("score '" + name + "' of '" + v.id + "' must be a number");
    }
    v.scores[kind] = it->get<double>();
  }
  return v;
}

std::string serialize_scores(std::span<const MetricVector> scores) {
  std::vector<const MetricVector*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const MetricVector* a, const MetricVector* b) { return a->id < b->id; });
  std::string out;
  for (const auto* s : order) {
    // id first, then metrics in canonical order
    nlohmann::ordered_json j;
    j["id"] = s->id;
    for (const auto& [kind, score] : s->scores) {
      j[std::string(metric_name(kind))] = score;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_scores(std::span<const MetricVector> scores, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_scores(scores));
}

std::vector<MetricVector> load_scores(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string() + " for reading");
  }
  std::vector<MetricVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(metric_vector_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace plf
