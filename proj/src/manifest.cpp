#include "plfilter/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "plfilter/error.hpp"
#include "plfilter/io.hpp"
#include "plfilter/textnorm.hpp"

namespace plf {

namespace {

using json = nlohmann::json;

const std::set<std::string, std::less<>>& known_fields() {
  static const std::set<std::string, std::less<>> fields = {
      "id",          "audio_ref",      "duration_s",    "pseudo_label",
      "ground_truth", "proxy_transcript", "word_probs",  "token_probs",
      "word_boundaries", "lm_token_logprobs", "speech_embedding", "text_embedding",
      "pesq",        "cepstra_real",   "cepstra_synth", "category",
      "split"};
  return fields;
}

[[noreturn]] void type_error(const std::string& field, const char* expected) {
  throw DataError("field '" + field + "' must be " + expected);
}

bool present(const json& j, const char* key) {
  auto it = j.find(key);
  return it != j.end() && !it->is_null();
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) type_error(field, "a number");
  return v.get<double>();
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!present(j, key)) return std::nullopt;
  const auto& v = j.at(key);
  if (!v.is_string()) type_error(key, "a string");
  return v.get<std::string>();
}

std::optional<double> opt_number(const json& j, const char* key) {
  if (!present(j, key)) return std::nullopt;
  return as_number(j.at(key), key);
}

std::optional<std::vector<double>> opt_reals(const json& j, const char* key) {
  if (!present(j, key)) return std::nullopt;
  const auto& v = j.at(key);
  if (!v.is_array()) type_error(key, "an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) type_error(key, "an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::optional<std::vector<std::int64_t>> opt_ints(const json& j, const char* key) {
  if (!present(j, key)) return std::nullopt;
  const auto& v = j.at(key);
  if (!v.is_array()) type_error(key, "an array of integers");
  std::vector<std::int64_t> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number_integer()) type_error(key, "an array of integers");
    out.push_back(x.get<std::int64_t>());
  }
  return out;
}

std::optional<FrameMatrix> opt_frames(const json& j, const char* key) {
  if (!present(j, key)) return std::nullopt;
  const auto& v = j.at(key);
  if (!v.is_array()) type_error(key, "an array of frames");
  FrameMatrix out;
  out.reserve(v.size());
  for (const auto& row : v) {
    if (!row.is_array()) type_error(key, "an array of frames");
    std::vector<double> frame;
    frame.reserve(row.size());
    for (const auto& x : row) {
      if (!x.is_number()) type_error(key, "an array of numeric frames");
      frame.push_back(x.get<double>());
    }
    out.push_back(std::move(frame));
  }
  return out;
}

template <typename T>
void put(json& j, const char* key, const std::optional<T>& value) {
  if (value) j[key] = *value;
}

std::string line_prefix(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

json record_to_json(const ExampleRecord& r) {
  json j = json::object();
  j["id"] = r.id;
  put(j, "audio_ref", r.audio_ref);
  put(j, "duration_s", r.duration_s);
  j["pseudo_label"] = r.pseudo_label;
  put(j, "ground_truth", r.ground_truth);
  put(j, "proxy_transcript", r.proxy_transcript);
  put(j, "word_probs", r.word_probs);
  put(j, "token_probs", r.token_probs);
  put(j, "word_boundaries", r.word_boundaries);
  put(j, "lm_token_logprobs", r.lm_token_logprobs);
  put(j, "speech_embedding", r.speech_embedding);
  put(j, "text_embedding", r.text_embedding);
  put(j, "pesq", r.pesq);
  put(j, "cepstra_real", r.cepstra_real);
  put(j, "cepstra_synth", r.cepstra_synth);
  put(j, "category", r.category);
  put(j, "split", r.split);
  for (const auto& [key, value] : r.extra.items()) {
    j[key] = value;
  }
  return j;
}

ExampleRecord record_from_json(const json& j) {
  if (!j.is_object()) {
    throw DataError("record must be a JSON object");
  }
  ExampleRecord r;
  if (!present(j, "id")) throw DataError("missing required field 'id'");
  if (!j.at("id").is_string()) type_error("id", "a string");
  r.id = j.at("id").get<std::string>();
  if (r.id.empty()) throw DataError("field 'id' must be nonempty");
  if (!present(j, "pseudo_label")) {
    throw DataError("record '" + r.id + "' is missing required field 'pseudo_label'");
  }
  if (!j.at("pseudo_label").is_string()) type_error("pseudo_label", "a string");
  r.pseudo_label = j.at("pseudo_label").get<std::string>();

  r.audio_ref = opt_string(j, "audio_ref");
  r.duration_s = opt_number(j, "duration_s");
  r.ground_truth = opt_string(j, "ground_truth");
  r.proxy_transcript = opt_string(j, "proxy_transcript");
  r.word_probs = opt_reals(j, "word_probs");
  r.token_probs = opt_reals(j, "token_probs");
  r.word_boundaries = opt_ints(j, "word_boundaries");
  r.lm_token_logprobs = opt_reals(j, "lm_token_logprobs");
  r.speech_embedding = opt_reals(j, "speech_embedding");
  r.text_embedding = opt_reals(j, "text_embedding");
  r.pesq = opt_number(j, "pesq");
  r.cepstra_real = opt_frames(j, "cepstra_real");
  r.cepstra_synth = opt_frames(j, "cepstra_synth");
  r.category = opt_string(j, "category");
  r.split = opt_string(j, "split");

  for (const auto& [key, value] : j.items()) {
    if (!known_fields().contains(key)) {
      r.extra[key] = value;
    }
  }
  return r;
}

Manifest read_manifest(std::istream& in, const std::string& source_name) {
  Manifest manifest;
  std::unordered_map<std::string, std::size_t> first_seen;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(line_prefix(source_name, line_no) + "malformed JSON: " + e.what());
    }
    if (!seen_content && j.is_object() && j.contains(kManifestHeaderKey) && !j.contains("id")) {
      seen_content = true;
      const auto& header = j.at(kManifestHeaderKey);
      if (header.is_object() && present(header, "declared_embedding_dim")) {
        const auto& dim = header.at("declared_embedding_dim");
        if (!dim.is_number_unsigned() || dim.get<std::size_t>() == 0) {
          throw DataError(line_prefix(source_name, line_no) +
                          "declared_embedding_dim must be a positive integer");
        }
        manifest.declared_embedding_dim = dim.get<std::size_t>();
      }
      continue;
    }
    seen_content = true;
    ExampleRecord record;
    try {
      record = record_from_json(j);
    } catch (const DataError& e) {
      throw DataError(line_prefix(source_name, line_no) + e.what());
    }
    auto [it, inserted] = first_seen.emplace(record.id, line_no);
    if (!inserted) {
      throw DataError(line_prefix(source_name, line_no) + "duplicate id '" + record.id +
                      "' on line " + std::to_string(line_no) + " (first seen on line " +
                      std::to_string(it->second) + ")");
    }
    manifest.records.push_back(std::move(record));
  }
  if (in.bad()) {
    throw IoError("error reading " + source_name);
  }
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string() + " for reading");
  }
  return read_manifest(in, path.string());
}

std::string serialize_manifest(const Manifest& manifest) {
  std::string out;
  if (manifest.declared_embedding_dim) {
    json header = {{kManifestHeaderKey,
                    {{"declared_embedding_dim", *manifest.declared_embedding_dim}}}};
    out += header.dump();
    out += '\n';
  }
  for (const auto& record : manifest.records) {
    out += record_to_json(record).dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_manifest(manifest));
}

// --- validation ---------------------------------------------------------------

namespace {

MetricCheck ok(MetricKind m) { return {m, Computability::kOk, ""}; }
MetricCheck missing(MetricKind m, std::string field) {
  return {m, Computability::kMissing, std::move(field)};
}
MetricCheck malformed(MetricKind m, std::string what) {
  return {m, Computability::kMalformed, std::move(what)};
}

bool all_probabilities(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double p) { return p > 0.0 && p <= 1.0; });
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

MetricCheck check_confidences(const ExampleRecord& r, MetricKind m) {
  const std::size_t words = word_count(r.pseudo_label);
  if (r.word_probs) {
    const auto& wp = *r.word_probs;
    if (wp.empty()) return malformed(m, "word_probs is empty");
    if (wp.size() != words) {
      return malformed(m, "word_probs has " + std::to_string(wp.size()) +
                              " entries but pseudo_label has " + std::to_string(words) + " words");
    }
    if (!all_probabilities(wp)) return malformed(m, "word_probs values must lie in (0, 1]");
    return ok(m);
  }
  if (r.token_probs) {
    if (!r.word_boundaries) return malformed(m, "token_probs present without word_boundaries");
    const auto& tp = *r.token_probs;
    const auto& wb = *r.word_boundaries;
    if (tp.empty()) return malformed(m, "token_probs is empty");
    if (tp.size() != wb.size()) {
      return malformed(m, "token_probs and word_boundaries differ in length");
    }
    if (!all_probabilities(tp)) return malformed(m, "token_probs values must lie in (0, 1]");
    if (wb.front() != 0) return malformed(m, "word_boundaries must start at 0");
    for (std::size_t i = 1; i < wb.size(); ++i) {
      const auto step = wb[i] - wb[i - 1];
      if (step != 0 && step != 1) {
        return malformed(m, "word_boundaries must be nondecreasing without gaps");
      }
    }
    if (static_cast<std::size_t>(wb.back()) + 1 != words) {
      return malformed(m, "word_boundaries cover " + std::to_string(wb.back() + 1) +
                              " words but pseudo_label has " + std::to_string(words));
    }
    return ok(m);
  }
  return missing(m, "word_probs or token_probs");
}

MetricCheck check_embeddings(const ExampleRecord& r, std::optional<std::size_t> declared) {
  constexpr auto m = MetricKind::kEmbSim;
  if (!r.speech_embedding) return missing(m, "speech_embedding");
  if (!r.text_embedding) return missing(m, "text_embedding");
  const auto& a = *r.speech_embedding;
  const auto& b = *r.text_embedding;
  if (a.empty() || b.empty()) return malformed(m, "embeddings must be nonempty");
  if (a.size() != b.size()) {
    return malformed(m, "speech_embedding has dimension " + std::to_string(a.size()) +
                            " but text_embedding has " + std::to_string(b.size()));
  }
  if (declared && a.size() != *declared) {
    return malformed(m, "embedding dimension " + std::to_string(a.size()) +
                            " differs from declared_embedding_dim " + std::to_string(*declared));
  }
  if (!all_finite(a) || !all_finite(b)) return malformed(m, "embeddings must be finite");
  return ok(m);
}

MetricCheck check_cepstra(const ExampleRecord& r) {
  constexpr auto m = MetricKind::kMcd;
  if (!r.cepstra_real) return missing(m, "cepstra_real");
  if (!r.cepstra_synth) return missing(m, "cepstra_synth");
  std::optional<std::size_t> dim;
  for (const auto* frames : {&*r.cepstra_real, &*r.cepstra_synth}) {
    if (frames->empty()) return malformed(m, "cepstral frame matrices must have at least one frame");
    for (const auto& row : *frames) {
      if (!dim) dim = row.size();
      if (row.size() != *dim) {
        return malformed(m, "cepstra_real and cepstra_synth must share one column dimension");
      }
      if (!all_finite(row)) return malformed(m, "cepstral coefficients must be finite");
    }
  }
  if (*dim < 2) return malformed(m, "cepstral frames need at least 2 coefficients when c0 is skipped");
  return ok(m);
}

}  // namespace

MetricCheck check_metric(const ExampleRecord& r, MetricKind metric,
                         std::optional<std::size_t> declared_embedding_dim) {
  switch (metric) {
    case MetricKind::kEntropy:
    case MetricKind::kGeomean:
      return check_confidences(r, metric);
    case MetricKind::kNll:
      if (!r.lm_token_logprobs) return missing(metric, "lm_token_logprobs");
      if (r.lm_token_logprobs->empty()) return malformed(metric, "lm_token_logprobs is empty");
      for (double lp : *r.lm_token_logprobs) {
        if (!std::isfinite(lp) || lp > 0.0) {
          return malformed(metric, "lm_token_logprobs must be finite and <= 0");
        }
      }
      return ok(metric);
    case MetricKind::kPwer:
      if (!r.proxy_transcript) return missing(metric, "proxy_transcript");
      if (word_count(*r.proxy_transcript) == 0 && word_count(r.pseudo_label) > 0) {
        return malformed(metric, "proxy_transcript is empty, pWER undefined");
      }
      return ok(metric);
    case MetricKind::kEmbSim:
      return check_embeddings(r, declared_embedding_dim);
    case MetricKind::kPesq:
      if (!r.pesq) return missing(metric, "pesq");
      if (!(*r.pesq >= -0.5 && *r.pesq <= 4.5)) return malformed(metric, "pesq must lie in [-0.5, 4.5]");
      return ok(metric);
    case MetricKind::kMcd:
      return check_cepstra(r);
  }
  return ok(metric);
}

bool RecordValidation::ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const MetricCheck& c) { return c.status == Computability::kOk; });
}

ValidationReport validate(const Manifest& manifest, std::span<const MetricKind> required,
                          const ValidateOptions& options) {
  ValidationReport report;
  report.required.assign(required.begin(), required.end());
  std::set<std::string> seen;
  for (const auto& r : manifest.records) {
    if (r.id.empty()) {
      report.errors.push_back("record with empty id");
    } else if (!seen.insert(r.id).second) {
      report.errors.push_back("duplicate id '" + r.id + "'");
    }
    RecordValidation rv;
    rv.id = r.id;
    for (auto m : required) {
      rv.checks.push_back(check_metric(r, m, manifest.declared_embedding_dim));
    }
    std::set<std::string> noted;
    for (auto m : kAllMetrics) {
      if (std::find(required.begin(), required.end(), m) != required.end()) continue;
      auto c = check_metric(r, m, manifest.declared_embedding_dim);
      if (c.status == Computability::kMalformed && noted.insert(c.detail).second) {
        rv.warnings.push_back(c.detail);
      }
    }
    if (r.duration_s && !(*r.duration_s >= 0.0)) {
      rv.warnings.push_back("duration_s must be nonnegative");
    }
    const std::size_t words = word_count(r.pseudo_label);
    if (words > options.max_label_words) {
      rv.warnings.push_back("pseudo_label has " + std::to_string(words) +
                            " words, above the maximum label length " +
                            std::to_string(options.max_label_words));
    }
    if (!rv.ok()) report.pass = false;
    report.records.push_back(std::move(rv));
  }
  if (!report.errors.empty()) report.pass = false;
  return report;
}

json to_json(const ValidationReport& report) {
  json j;
  j["pass"] = report.pass;
  j["required_metrics"] = json::array();
  for (auto m : report.required) j["required_metrics"].push_back(metric_name(m));
  j["errors"] = report.errors;
  std::size_t failing = 0;
  std::size_t warned = 0;
  json records = json::array();
  for (const auto& rv : report.records) {
    if (!rv.ok()) ++failing;
    if (!rv.warnings.empty()) ++warned;
    json rj;
    rj["id"] = rv.id;
    rj["ok"] = rv.ok();
    json metrics = json::object();
    for (const auto& c : rv.checks) {
      json cj;
      switch (c.status) {
        case Computability::kOk: cj["status"] = "computable"; break;
        case Computability::kMissing: cj["status"] = "missing"; break;
        case Computability::kMalformed: cj["status"] = "malformed"; break;
      }
      if (!c.detail.empty()) cj["detail"] = c.detail;
      metrics[std::string(metric_name(c.metric))] = cj;
    }
    rj["metrics"] = metrics;
    if (!rv.warnings.empty()) rj["warnings"] = rv.warnings;
    records.push_back(std::move(rj));
  }
  j["summary"] = {{"records", report.records.size()},
                  {"failing_records", failing},
                  {"records_with_warnings", warned}};
  j["records"] = std::move(records);
  return j;
}

}  // namespace plf
