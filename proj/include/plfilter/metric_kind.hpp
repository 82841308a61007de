#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plf {

enum class MetricKind { kEntropy, kGeomean, kNll, kPwer, kEmbSim, kPesq, kMcd };

inline constexpr std::array<MetricKind, 7> kAllMetrics = {
    MetricKind::kEntropy, MetricKind::kGeomean, MetricKind::kNll, MetricKind::kPwer,
    MetricKind::kEmbSim,  MetricKind::kPesq,    MetricKind::kMcd};

std::string_view metric_name(MetricKind kind);
std::optional<MetricKind> parse_metric(std::string_view name);

// Fixed orientation table: true when a larger score means a better pseudo-label.
bool higher_is_better(MetricKind kind);

// Parses a comma-separated list such as "entropy,geomean" or "all".
// Throws InvalidArgument on unknown names. Result is deduplicated, in canonical order.
std::vector<MetricKind> parse_metric_list(std::string_view csv);

}  // namespace plf
