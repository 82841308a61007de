#include "plfilter/metric_kind.hpp"

#include <algorithm>

#include "plfilter/error.hpp"

namespace plf {

std::string_view metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::kEntropy: return "entropy";
    case MetricKind::kGeomean: return "geomean";
    case MetricKind::kNll: return "nll";
    case MetricKind::kPwer: return "pwer";
    case MetricKind::kEmbSim: return "emb_sim";
    case MetricKind::kPesq: return "pesq";
    case MetricKind::kMcd: return "mcd";
  }
  return "?";
}

std::optional<MetricKind> parse_metric(std::string_view name) {
  for (auto kind : kAllMetrics) {
    if (metric_name(kind) == name) {
      return kind;
    }
  }
  return std::nullopt;
}

bool higher_is_better(MetricKind kind) {
  switch (kind) {
    case MetricKind::kGeomean:
    case MetricKind::kEmbSim:
    case MetricKind::kPesq:
      return true;
    case MetricKind::kEntropy:
    case MetricKind::kNll:
    case MetricKind::kPwer:
    case MetricKind::kMcd:
      return false;
  }
  return false;
}

std::vector<MetricKind> parse_metric_list(std::string_view csv) {
  std::vector<bool> wanted(kAllMetrics.size(), false);
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    auto comma = csv.find(',', pos);
    if (comma == std::string_view::npos) {
      comma = csv.size();
    }
    auto item = csv.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == "all") {
      std::fill(wanted.begin(), wanted.end(), true);
    } else if (!item.empty()) {
      auto kind = parse_metric(item);
      if (!kind) {
        throw InvalidArgument("unknown metric '" + std::string(item) + "'");
      }
      wanted[static_cast<std::size_t>(*kind)] = true;
    }
    pos = comma + 1;
  }
  std::vector<MetricKind> out;
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    if (wanted[i]) out.push_back(kAllMetrics[i]);
  }
  return out;
}

}  // namespace plf
