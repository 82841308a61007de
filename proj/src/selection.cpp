#include "plfilter/selection.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "plfilter/align.hpp"
#include "plfilter/error.hpp"

namespace plf {

void SelectionPolicy::check() const {
  if (const auto* kf = std::get_if<KeepFraction>(&mode)) {
    if (!(kf->fraction > 0.0 && kf->fraction <= 1.0)) {
      throw InvalidArgument("keep fraction must lie in (0, 1], got " + std::to_string(kf->fraction));
    }
  } else if (!std::isfinite(std::get<Threshold>(mode).cutoff)) {
    throw InvalidArgument("threshold cutoff must be finite");
  }
}

std::size_t keep_count(double fraction, std::size_t n) {
  if (n == 0) return 0;
  // Guard against products like 0.7 * 10 == 7.000000000000001 rounding up.
  constexpr double kSlack = 1e-9;
  const double exact = fraction * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(exact - kSlack));
  return std::clamp<std::size_t>(k, 1, n);
}

SelectionResult select(std::span<const MetricVector> scores, const SelectionPolicy& policy) {
  policy.check();
  const MetricKind metric = policy.metric;
  const bool higher_better = higher_is_better(metric);

  struct Entry {
    const std::string* id;
    double score;
  };
  std::vector<Entry> entries;
  entries.reserve(scores.size());
  std::vector<std::string> lacking;
  std::unordered_set<std::string_view> seen;
  for (const auto& v : scores) {
    if (!seen.insert(v.id).second) {
      throw DataError("duplicate id '" + v.id + "' in scores");
    }
    auto s = v.get(metric);
    if (!s) {
      lacking.push_back(v.id);
      continue;
    }
    entries.push_back({&v.id, *s});
  }
  if (!lacking.empty()) {
    std::sort(lacking.begin(), lacking.end());
    std::string msg = "metric '" + std::string(metric_name(metric)) + "' missing for " +
                      std::to_string(lacking.size()) + " record(s):";
    for (std::size_t i = 0; i < lacking.size() && i < 20; ++i) msg += " " + lacking[i];
    if (lacking.size() > 20) msg += " ...";
    throw DataError(msg);
  }

  SelectionResult result;
  result.policy = policy;
  for (const auto& e : entries) result.per_id_score.emplace(*e.id, e.score);

  if (const auto* th = std::get_if<Threshold>(&policy.mode)) {
    for (const auto& e : entries) {
      const bool keep = higher_better ? e.score >= th->cutoff : e.score <= th->cutoff;
      (keep ? result.kept_ids : result.dropped_ids).push_back(*e.id);
    }
  } else {
    const double fraction = std::get<KeepFraction>(policy.mode).fraction;
    // Best first; ties by ascending id so the order is total.
    std::sort(entries.begin(), entries.end(), [higher_better](const Entry& a, const Entry& b) {
      if (a.score != b.score) return higher_better ? a.score > b.score : a.score < b.score;
      return *a.id < *b.id;
    });
    const std::size_t k = keep_count(fraction, entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      (i < k ? result.kept_ids : result.dropped_ids).push_back(*entries[i].id);
    }
  }
  std::sort(result.kept_ids.begin(), result.kept_ids.end());
  std::sort(result.dropped_ids.begin(), result.dropped_ids.end());
  return result;
}

SelectionResult supervised_wer_filter(const Manifest& manifest, double lambda,
                                      const NormConfig& cfg) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw InvalidArgument("WER threshold must be a nonnegative ratio");
  }
  SelectionResult result;
  result.policy = SupervisedWerPolicy{lambda};
  for (const auto& r : manifest.records) {
    if (!r.ground_truth) {
      throw DataError("record '" + r.id + "' has no ground_truth");
    }
  }
  for (const auto& r : manifest.records) {
    const ErrorRate rate = wer(*r.ground_truth, r.pseudo_label, cfg);
    if (!rate.defined) {
      result.dropped_ids.push_back(r.id);
      result.diagnostics.push_back(r.id + ": empty ground_truth with nonempty pseudo_label, WER undefined");
      continue;
    }
    result.per_id_score.emplace(r.id, rate.value);
    (rate.value <= lambda ? result.kept_ids : result.dropped_ids).push_back(r.id);
  }
  std::sort(result.kept_ids.begin(), result.kept_ids.end());
  std::sort(result.dropped_ids.begin(), result.dropped_ids.end());
  return result;
}

Manifest apply_selection(const Manifest& manifest, const SelectionResult& result) {
  std::unordered_set<std::string_view> present;
  for (const auto& r : manifest.records) present.insert(r.id);
  for (const auto& id : result.kept_ids) {
    if (!present.contains(id)) {
      throw DataError("selected id '" + id + "' is not in the manifest");
    }
  }
  const std::unordered_set<std::string_view> kept(result.kept_ids.begin(), result.kept_ids.end());
  Manifest out;
  out.declared_embedding_dim = manifest.declared_embedding_dim;
  for (const auto& r : manifest.records) {
    if (kept.contains(r.id)) out.records.push_back(r);
  }
  return out;
}

nlohmann::json to_json(const SelectionPolicy& policy) {
  nlohmann::json j;
  j["metric"] = metric_name(policy.metric);
  j["higher_is_better"] = higher_is_better(policy.metric);
  if (const auto* th = std::get_if<Threshold>(&policy.mode)) {
    j["mode"] = "threshold";
    j["cutoff"] = th->cutoff;
  } else {
    j["mode"] = "keep_fraction";
    j["fraction"] = std::get<KeepFraction>(policy.mode).fraction;
  }
  return j;
}

nlohmann::json to_json(const SelectionResult& result) {
  nlohmann::json j;
  if (const auto* p = std::get_if<SelectionPolicy>(&result.policy)) {
    j["policy"] = to_json(*p);
  } else {
    j["policy"] = {{"mode", "supervised_wer"},
                   {"lambda", std::get<SupervisedWerPolicy>(result.policy).lambda}};
  }
  j["kept_ids"] = result.kept_ids;
  j["dropped_ids"] = result.dropped_ids;
  j["kept"] = result.kept_ids.size();
  j["dropped"] = result.dropped_ids.size();
  if (!result.diagnostics.empty()) j["diagnostics"] = result.diagnostics;
  return j;
}

}  // namespace plf
