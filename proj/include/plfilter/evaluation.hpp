#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "plfilter/align.hpp"
#include "plfilter/manifest.hpp"
#include "plfilter/metric_kind.hpp"
#include "plfilter/metrics.hpp"
#include "plfilter/textnorm.hpp"

namespace plf {

// WER thresholds that define "low quality" in the filter-effectiveness analysis.
inline constexpr std::array<double, 3> kDefaultTaus = {0.2, 0.4, 0.8};

struct QualityLabeling {
  double tau = 0.0;
  std::map<std::string, bool> labels;  // true = low quality (WER > tau)
  std::vector<std::string> diagnostics;
};

/// Labels each record by WER(ground_truth, pseudo_label) > tau. Records
/// without ground truth or with an undefined WER are left out with a
/// diagnostic. Throws DataError when no record has ground_truth.
QualityLabeling label_quality(const Manifest& manifest, double tau, const NormConfig& cfg = {});

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;
  double auc = 0.0;
  std::optional<MetricKind> metric;
  double tau = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  // Twice the Mann-Whitney U of positives over negatives: ties count 1, wins 2.
  // auc == u_statistic_x2 / (2 * positives * negatives).
  std::uint64_t u_statistic_x2 = 0;
};

/// ROC of `scores` as a detector of low-quality examples.
///
/// Scores are oriented so that larger means more likely low quality (negated
/// when `higher_means_worse` is false). Thresholds sweep the distinct
/// oriented values from high to low; each tie group adds one point, so the
/// trapezoidal area gives tied pairs half credit and equals the pairwise
/// statistic exactly. Only ids present in both inputs are used.
/// Throws DataError when either class is empty.
RocResult roc_auc(const std::map<std::string, double>& scores, bool higher_means_worse,
                  const QualityLabeling& labels);

struct AucCell {
  MetricKind metric;
  double tau = 0.0;
  std::optional<RocResult> roc;
  std::string error;  // set when the cell is undefined
};

struct EffectivenessReport {
  std::vector<MetricKind> metrics;
  std::vector<double> taus;
  std::vector<AucCell> cells;  // metric-major, tau-minor
};

EffectivenessReport effectiveness_report(const Manifest& manifest,
                                         std::span<const MetricVector> scores,
                                         std::span<const MetricKind> metrics,
                                         std::span<const double> taus,
                                         const NormConfig& cfg = {});

nlohmann::json to_json(const EffectivenessReport& report);
std::string to_csv(const EffectivenessReport& report);
// metric,tau,fpr,tpr rows for external plotting.
std::string roc_points_csv(const EffectivenessReport& report);

enum class GroupField { kCategory, kSplit };

inline constexpr const char* kUnknownGroup = "Unknown";

struct ErrorTally {
  std::size_t errors = 0;
  std::size_t ref_len = 0;
  std::size_t skipped_undefined = 0;

  std::optional<double> rate() const;
};

struct GroupRow {
  std::string group;
  std::size_t records = 0;
  ErrorTally word;
  ErrorTally chr;
};

struct GroupedReport {
  GroupField field = GroupField::kCategory;
  std::vector<GroupRow> rows;  // descending record count, then name
  GroupRow overall;
};

/// Pooled WER and CER per group value plus an overall row over all records.
/// Records with no group value land in "Unknown". `top_k` truncates rows
/// only; the overall row always covers the whole manifest.
/// Throws DataError naming the first record without ground_truth.
GroupedReport grouped_error_report(const Manifest& manifest, GroupField field,
                                   const NormConfig& cfg = {},
                                   std::optional<std::size_t> top_k = std::nullopt);

nlohmann::json to_json(const GroupedReport& report);
std::string to_csv(const GroupedReport& report);

struct FixedRate {
  double rate = 0.0;
};
struct UniformRate {
  double low = 0.0;
  double high = 1.0;
};
// Rate is `high` with probability p_high, otherwise `low`.
struct BimodalRate {
  double low = 0.0;
  double high = 1.0;
  double p_high = 0.5;
};
using CorruptionDistribution = std::variant<FixedRate, UniformRate, BimodalRate>;

// Parses "fixed:R", "uniform:LO,HI" or "bimodal:LO,HI,P".
CorruptionDistribution parse_corruption(std::string_view spec);
std::string describe(const CorruptionDistribution& dist);

struct BenchmarkParams {
  std::size_t n = 1000;
  std::size_t vocab_size = 500;
  CorruptionDistribution corruption = BimodalRate{};
  std::uint64_t seed = 0;
  std::size_t embedding_dim = 16;
  bool audio_features = false;  // also emit pesq and cepstra
};

/// Deterministic synthetic corpus with known ground truth.
///
/// Per record a corruption rate r is drawn; the pseudo-label is the ground
/// truth with each word substituted, deleted or followed by an insertion
/// with probability r. Word confidences and LM log-probs are drawn lower
/// for corrupted words, the proxy transcript is an independent corruption
/// at rate r / 3, and the text embedding drifts away from the speech
/// embedding as r grows.
Manifest synthesize_benchmark(const BenchmarkParams& params);

}  // namespace plf
