#pragma once

#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "plfilter/manifest.hpp"
#include "plfilter/metric_kind.hpp"
#include "plfilter/metrics.hpp"
#include "plfilter/textnorm.hpp"

namespace plf {

// Drop roughly 27% of the corpus.
inline constexpr double kDefaultKeepFraction = 0.73;
// Supervised baseline: keep examples with WER <= 80%.
inline constexpr double kDefaultWerLambda = 0.80;

struct Threshold {
  double cutoff = 0.0;
  bool operator==(const Threshold&) const = default;
};

struct KeepFraction {
  double fraction = kDefaultKeepFraction;
  bool operator==(const KeepFraction&) const = default;
};

struct SelectionPolicy {
  MetricKind metric = MetricKind::kPwer;
  std::variant<Threshold, KeepFraction> mode = KeepFraction{};

  // Throws InvalidArgument when the fraction is outside (0, 1] or the cutoff is not finite.
  void check() const;
  bool operator==(const SelectionPolicy&) const = default;
};

// Filter on WER against ground truth; lambda is a ratio (0.8 == 80%).
struct SupervisedWerPolicy {
  double lambda = kDefaultWerLambda;
  bool operator==(const SupervisedWerPolicy&) const = default;
};

struct SelectionResult {
  std::vector<std::string> kept_ids;     // sorted
  std::vector<std::string> dropped_ids;  // sorted
  std::variant<SelectionPolicy, SupervisedWerPolicy> policy;
  std::map<std::string, double> per_id_score;
  std::vector<std::string> diagnostics;
};

/// Threshold mode keeps a record iff its score is on the good side of the
/// cutoff, inclusive. Keep-fraction mode ranks best-first by orientation,
/// breaks ties by ascending id, and keeps ceil(f * n) records.
/// Throws DataError listing ids that lack the metric.
SelectionResult select(std::span<const MetricVector> scores, const SelectionPolicy& policy);

// Number of records kept by a keep-fraction policy over n records.
std::size_t keep_count(double fraction, std::size_t n);

/// Keeps records with WER(ground_truth, pseudo_label) <= lambda. Undefined
/// rates are dropped with a diagnostic. Throws DataError naming the first
/// record without ground_truth.
SelectionResult supervised_wer_filter(const Manifest& manifest, double lambda,
                                      const NormConfig& cfg = {});

/// Restricts the manifest to kept ids, preserving original order.
/// Throws DataError for a kept id the manifest does not contain.
Manifest apply_selection(const Manifest& manifest, const SelectionResult& result);

nlohmann::json to_json(const SelectionPolicy& policy);
nlohmann::json to_json(const SelectionResult& result);

}  // namespace plf
