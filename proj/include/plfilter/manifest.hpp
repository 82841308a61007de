#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plfilter/metric_kind.hpp"

namespace plf {

using FrameMatrix = std::vector<std::vector<double>>;

/// One pseudo-labeled utterance with whatever upstream artifacts exist for it.
struct ExampleRecord {
  std::string id;
  std::optional<std::string> audio_ref;
  std::optional<double> duration_s;
  std::string pseudo_label;
  std::optional<std::string> ground_truth;
  std::optional<std::string> proxy_transcript;
  std::optional<std::vector<double>> word_probs;
  std::optional<std::vector<double>> token_probs;
  std::optional<std::vector<std::int64_t>> word_boundaries;
  std::optional<std::vector<double>> lm_token_logprobs;
  std::optional<std::vector<double>> speech_embedding;
  std::optional<std::vector<double>> text_embedding;
  std::optional<double> pesq;
  std::optional<FrameMatrix> cepstra_real;
  std::optional<FrameMatrix> cepstra_synth;
  std::optional<std::string> category;
  std::optional<std::string> split;
  // Fields this toolkit does not know about, kept verbatim for round-trip.
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const ExampleRecord&) const = default;
};

struct Manifest {
  std::vector<ExampleRecord> records;
  std::optional<std::size_t> declared_embedding_dim;

  bool operator==(const Manifest&) const = default;
};

// Key of the optional first-line header object carrying manifest-level fields.
inline constexpr const char* kManifestHeaderKey = "__manifest__";

nlohmann::json record_to_json(const ExampleRecord& record);
// Throws DataError on a missing required field or a field of the wrong type.
ExampleRecord record_from_json(const nlohmann::json& j);

Manifest load_manifest(const std::filesystem::path& path);
Manifest read_manifest(std::istream& in, const std::string& source_name = "<stream>");

std::string serialize_manifest(const Manifest& manifest);
// Writes to a sibling temp file and renames it into place.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

enum class Computability { kOk, kMissing, kMalformed };

struct MetricCheck {
  MetricKind metric;
  Computability status = Computability::kOk;
  std::string detail;  // field name or description of the problem
};

struct RecordValidation {
  std::string id;
  std::vector<MetricCheck> checks;  // one per required metric
  std::vector<std::string> warnings;

  bool ok() const;
};

struct ValidationReport {
  bool pass = true;
  std::vector<MetricKind> required;
  std::vector<RecordValidation> records;
  std::vector<std::string> errors;  // manifest-level problems
};

struct ValidateOptions {
  // Teacher decode cap; longer pseudo-labels are flagged as warnings.
  std::size_t max_label_words = 225;
};

/// Checks, per record, which of `required` can be computed from present
/// fields. Pass iff every record supports every required metric and there
/// are no manifest-level errors. Field invariants that do not affect a
/// required metric are reported as warnings.
ValidationReport validate(const Manifest& manifest, std::span<const MetricKind> required,
                          const ValidateOptions& options = {});

MetricCheck check_metric(const ExampleRecord& record, MetricKind metric,
                         std::optional<std::size_t> declared_embedding_dim = std::nullopt);

nlohmann::json to_json(const ValidationReport& report);

}  // namespace plf
