#include "plfilter/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "plfilter/error.hpp"

namespace plf {

namespace {

std::string num(double x) { return nlohmann::json(x).dump(); }

// Quotes a CSV field when it contains a separator, quote or line break.
std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

QualityLabeling label_quality(const Manifest& manifest, double tau, const NormConfig& cfg) {
  QualityLabeling out;
  out.tau = tau;
  bool any_truth = false;
  for (const auto& r : manifest.records) {
    if (!r.ground_truth) {
      out.diagnostics.push_back(r.id + ": no ground_truth");
      continue;
    }
    any_truth = true;
    const ErrorRate rate = wer(*r.ground_truth, r.pseudo_label, cfg);
    if (!rate.defined) {
      out.diagnostics.push_back(r.id + ": empty ground_truth with nonempty pseudo_label, WER undefined");
      continue;
    }
    out.labels.emplace(r.id, rate.value > tau);
  }
  if (!any_truth) {
    throw DataError("no record has ground_truth; quality labels need it");
  }
  return out;
}

RocResult roc_auc(const std::map<std::string, double>& scores, bool higher_means_worse,
                  const QualityLabeling& labels) {
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(scores.size());
  for (const auto& [id, score] : scores) {
    auto it = labels.labels.find(id);
    if (it == labels.labels.end()) continue;
    items.push_back({higher_means_worse ? score : -score, it->second});
  }
  RocResult out;
  out.tau = labels.tau;
  for (const auto& item : items) {
    (item.positive ? out.positives : out.negatives) += 1;
  }
  if (out.positives == 0 || out.negatives == 0) {
    throw DataError("degenerate labels: " + std::to_string(out.positives) + " low-quality and " +
                    std::to_string(out.negatives) + " acceptable examples at tau " + num(labels.tau));
  }
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score > b.score; });

  const auto pos = static_cast<double>(out.positives);
  const auto neg = static_cast<double>(out.negatives);
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  out.points.push_back({0.0, 0.0});
  for (std::size_t i = 0; i < items.size();) {
    std::uint64_t group_tp = 0;
    std::uint64_t group_fp = 0;
    std::size_t j = i;
    for (; j < items.size() && items[j].score == items[i].score; ++j) {
      ++(items[j].positive ? group_tp : group_fp);
    }
    // Twice the trapezoid under this segment, in count units.
    out.u_statistic_x2 += group_fp * (2 * tp + group_tp);
    tp += group_tp;
    fp += group_fp;
    out.points.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
    i = j;
  }
  out.auc = static_cast<double>(out.u_statistic_x2) / (2.0 * pos * neg);
  return out;
}

EffectivenessReport effectiveness_report(const Manifest& manifest,
                                         std::span<const MetricVector> scores,
                                         std::span<const MetricKind> metrics,
                                         std::span<const double> taus, const NormConfig& cfg) {
  EffectivenessReport report;
  report.metrics.assign(metrics.begin(), metrics.end());
  report.taus.assign(taus.begin(), taus.end());

  std::vector<QualityLabeling> labelings;
  labelings.reserve(taus.size());
  for (double tau : taus) labelings.push_back(label_quality(manifest, tau, cfg));

  for (auto metric : metrics) {
    std::map<std::string, double> by_id;
    for (const auto& v : scores) {
      if (auto s = v.get(metric)) by_id[v.id] = *s;
    }
    for (const auto& labeling : labelings) {
      AucCell cell{metric, labeling.tau, std::nullopt, ""};
      try {
        auto roc = roc_auc(by_id, !higher_is_better(metric), labeling);
        roc.metric = metric;
        cell.roc = std::move(roc);
      } catch (const DataError& e) {
        cell.error = e.what();
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

nlohmann::json to_json(const EffectivenessReport& report) {
  nlohmann::json j;
  j["metrics"] = nlohmann::json::array();
  for (auto m : report.metrics) j["metrics"].push_back(metric_name(m));
  j["taus"] = report.taus;
  j["cells"] = nlohmann::json::array();
  nlohmann::json matrix = nlohmann::json::object();
  for (const auto& cell : report.cells) {
    nlohmann::json c;
    c["metric"] = metric_name(cell.metric);
    c["tau"] = cell.tau;
    if (cell.roc) {
      c["auc"] = cell.roc->auc;
      c["positives"] = cell.roc->positives;
      c["negatives"] = cell.roc->negatives;
    } else {
      c["auc"] = nullptr;
      c["error"] = cell.error;
    }
    matrix[std::string(metric_name(cell.metric))][num(cell.tau)] = c["auc"];
    j["cells"].push_back(std::move(c));
  }
  j["auc_matrix"] = std::move(matrix);
  return j;
}

std::string to_csv(const EffectivenessReport& report) {
  std::ostringstream out;
  out << "metric,tau,auc,positives,negatives\n";
  for (const auto& cell : report.cells) {
    out << metric_name(cell.metric) << ',' << num(cell.tau) << ',';
    if (cell.roc) {
      out << num(cell.roc->auc) << ',' << cell.roc->positives << ',' << cell.roc->negatives;
    } else {
      out << ",,";
    }
    out << '\n';
  }
  return out.str();
}

std::string roc_points_csv(const EffectivenessReport& report) {
  std::ostringstream out;
  out << "metric,tau,fpr,tpr\n";
  for (const auto& cell : report.cells) {
    if (!cell.roc) continue;
    for (const auto& p : cell.roc->points) {
      out << metric_name(cell.metric) << ',' << num(cell.tau) << ',' << num(p.fpr) << ','
          << num(p.tpr) << '\n';
    }
  }
  return out.str();
}

// --- grouped WER/CER ------------------------------------------------------------

std::optional<double> ErrorTally::rate() const {
  if (ref_len == 0) return std::nullopt;
  return static_cast<double>(errors) / static_cast<double>(ref_len);
}

namespace {

void tally(ErrorTally& t, const ErrorRate& r) {
  if (!r.defined) {
    ++t.skipped_undefined;
    return;
  }
  t.errors += r.counts.distance();
  t.ref_len += r.ref_len;
}

const char* field_name(GroupField f) { return f == GroupField::kCategory ? "category" : "split"; }

nlohmann::json tally_json(const ErrorTally& t) {
  nlohmann::json j;
  const auto rate = t.rate();
  j["rate"] = rate ? nlohmann::json(*rate) : nlohmann::json(nullptr);
  j["errors"] = t.errors;
  j["ref_len"] = t.ref_len;
  j["skipped_undefined"] = t.skipped_undefined;
  return j;
}

nlohmann::json row_json(const GroupRow& row) {
  return {{"group", row.group},
          {"records", row.records},
          {"wer", tally_json(row.word)},
          {"cer", tally_json(row.chr)}};
}

}  // namespace

GroupedReport grouped_error_report(const Manifest& manifest, GroupField field,
                                   const NormConfig& cfg, std::optional<std::size_t> top_k) {
  GroupedReport report;
  report.field = field;
  report.overall.group = "Overall";
  std::map<std::string, GroupRow> groups;
  for (const auto& r : manifest.records) {
    if (!r.ground_truth) {
      throw DataError("record '" + r.id + "' has no ground_truth");
    }
    const auto& value = field == GroupField::kCategory ? r.category : r.split;
    const std::string key = value && !value->empty() ? *value : kUnknownGroup;
    auto& row = groups[key];
    row.group = key;
    const ErrorRate w = wer(*r.ground_truth, r.pseudo_label, cfg);
    const ErrorRate c = cer(*r.ground_truth, r.pseudo_label, cfg);
    for (auto* target : {&row, &report.overall}) {
      ++target->records;
      tally(target->word, w);
      tally(target->chr, c);
    }
  }
  for (auto& [key, row] : groups) report.rows.push_back(std::move(row));
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const GroupRow& a, const GroupRow& b) { return a.records > b.records; });
  if (top_k && report.rows.size() > *top_k) report.rows.resize(*top_k);
  return report;
}

nlohmann::json to_json(const GroupedReport& report) {
  nlohmann::json j;
  j["group_by"] = field_name(report.field);
  j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows) j["rows"].push_back(row_json(row));
  j["overall"] = row_json(report.overall);
  return j;
}

std::string to_csv(const GroupedReport& report) {
  std::ostringstream out;
  out << field_name(report.field) << ",records,wer,cer,word_errors,words,char_errors,chars\n";
  auto emit = [&](const GroupRow& row) {
    auto rate = [](const ErrorTally& t) { return t.rate() ? num(*t.rate()) : std::string(); };
    out << csv_field(row.group) << ',' << row.records << ',' << rate(row.word) << ',' << rate(row.chr) << ','
        << row.word.errors << ',' << row.word.ref_len << ',' << row.chr.errors << ','
        << row.chr.ref_len << '\n';
  };
  for (const auto& row : report.rows) emit(row);
  emit(report.overall);
  return out.str();
}

// --- synthetic benchmark --------------------------------------------------------

namespace {

std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const auto item = text.substr(pos, comma - pos);
    double value = 0.0;
    auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (ec != std::errc() || end != item.data() + item.size() || item.empty()) {
      throw InvalidArgument("bad number '" + std::string(item) + "' in corruption spec");
    }
    out.push_back(value);
    pos = comma + 1;
  }
  return out;
}

bool is_rate(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

CorruptionDistribution parse_corruption(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidArgument("corruption spec must look like fixed:R, uniform:LO,HI or bimodal:LO,HI,P");
  }
  const auto kind = spec.substr(0, colon);
  const auto values = parse_numbers(spec.substr(colon + 1));
  if (kind == "fixed" && values.size() == 1 && is_rate(values[0])) {
    return FixedRate{values[0]};
  }
  if (kind == "uniform" && values.size() == 2 && is_rate(values[0]) && is_rate(values[1]) &&
      values[0] <= values[1]) {
    return UniformRate{values[0], values[1]};
  }
  if (kind == "bimodal" && values.size() == 3 && is_rate(values[0]) && is_rate(values[1]) &&
      is_rate(values[2])) {
    return BimodalRate{values[0], values[1], values[2]};
  }
  throw InvalidArgument("invalid corruption spec '" + std::string(spec) + "'");
}

std::string describe(const CorruptionDistribution& dist) {
  return std::visit(
      [](const auto& d) -> std::string {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, FixedRate>) {
          return "fixed:" + num(d.rate);
        } else if constexpr (std::is_same_v<T, UniformRate>) {
          return "uniform:" + num(d.low) + "," + num(d.high);
        } else {
          return "bimodal:" + num(d.low) + "," + num(d.high) + "," + num(d.p_high);
        }
      },
      dist);
}

namespace {

class BenchmarkGenerator {
 public:
  explicit BenchmarkGenerator(const BenchmarkParams& params)
      : params_(params), rng_(params.seed) {
    build_vocabulary();
  }

  Manifest run() {
    Manifest m;
    m.declared_embedding_dim = params_.embedding_dim;
    const std::size_t width = std::to_string(params_.n).size();
    for (std::size_t i = 0; i < params_.n; ++i) {
      std::string id = std::to_string(i + 1);
      id = "utt" + std::string(width - id.size(), '0') + id;
      m.records.push_back(make_record(std::move(id)));
    }
    return m;
  }

 private:
  struct Word {
    std::size_t vocab;
    bool corrupted;
  };

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  static double round4(double x) { return std::round(x * 1e4) / 1e4; }

  void build_vocabulary() {
    // Arabic letters U+0628..U+064A minus tatweel and the non-letter block.
    std::u32string letters;
    for (char32_t c = 0x0628; c <= 0x063A; ++c) letters.push_back(c);
    for (char32_t c = 0x0641; c <= 0x064A; ++c) letters.push_back(c);
    letters.push_back(0x0627);
    std::set<std::string> seen;
    while (vocab_.size() < params_.vocab_size) {
      const std::size_t len = 2 + pick(5);
      std::u32string w;
      for (std::size_t k = 0; k < len; ++k) w.push_back(letters[pick(letters.size())]);
      auto utf8 = utf8_encode(w);
      if (seen.insert(utf8).second) vocab_.push_back(std::move(utf8));
    }
  }

  double draw_rate() {
    return std::visit(
        [this](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, FixedRate>) {
            return d.rate;
          } else if constexpr (std::is_same_v<T, UniformRate>) {
            return uniform(d.low, d.high);
          } else {
            return chance(d.p_high) ? d.high : d.low;
          }
        },
        params_.corruption);
  }

  std::size_t other_word(std::size_t w) {
    const std::size_t r = pick(vocab_.size() - 1);
    return r >= w ? r + 1 : r;
  }

  // Each word is, with probability `rate`, substituted (60%), deleted (20%)
  // or kept and followed by an inserted word (20%).
  std::vector<Word> corrupt(const std::vector<std::size_t>& truth, double rate) {
    std::vector<Word> out;
    for (std::size_t w : truth) {
      if (!chance(rate)) {
        out.push_back({w, false});
        continue;
      }
      const double op = uniform(0.0, 1.0);
      if (op < 0.6) {
        out.push_back({other_word(w), true});
      } else if (op < 0.8) {
        continue;
      } else {
        out.push_back({w, false});
        out.push_back({pick(vocab_.size()), true});
      }
    }
    if (out.empty()) out.push_back({pick(vocab_.size()), true});
    return out;
  }

  std::string join(const std::vector<Word>& words) const {
    std::string s;
    for (const auto& w : words) {
      if (!s.empty()) s += ' ';
      s += vocab_[w.vocab];
    }
    return s;
  }

  std::vector<double> gaussian_unit(std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    double norm = 0.0;
    for (auto& x : v) {
      x = normal(rng_);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
  }

  ExampleRecord make_record(std::string id) {
    ExampleRecord r;
    r.id = std::move(id);
    const double rate = draw_rate();

    std::vector<std::size_t> truth(3 + pick(13));
    for (auto& w : truth) w = pick(vocab_.size());

    // Human transcripts carry the occasional fatha; normalization strips it.
    std::string gt;
    for (std::size_t w : truth) {
      if (!gt.empty()) gt += ' ';
      std::string word = vocab_[w];
      if (chance(0.1)) word.insert(2, "\u064E");
      gt += word;
    }
    r.ground_truth = gt;

    const auto pseudo = corrupt(truth, rate);
    r.pseudo_label = join(pseudo);

    std::vector<double> probs;
    std::vector<double> logprobs;
    for (const auto& w : pseudo) {
      probs.push_back(round4(w.corrupted ? uniform(0.02, 0.7) : uniform(0.6, 1.0)));
      logprobs.push_back(-round4(w.corrupted ? uniform(2.0, 6.0) : uniform(0.05, 2.0)));
    }
    r.word_probs = std::move(probs);
    r.lm_token_logprobs = std::move(logprobs);

    r.proxy_transcript = join(corrupt(truth, rate / 3.0));

    const auto speech = gaussian_unit(params_.embedding_dim);
    const auto noise = gaussian_unit(params_.embedding_dim);
    std::vector<double> text(params_.embedding_dim);
    double norm = 0.0;
    for (std::size_t d = 0; d < text.size(); ++d) {
      text[d] = (1.0 - rate) * speech[d] + rate * noise[d];
      norm += text[d] * text[d];
    }
    norm = std::sqrt(norm);
    std::vector<double> speech_out(speech.size());
    for (std::size_t d = 0; d < text.size(); ++d) {
      text[d] = round4(norm > 0.0 ? text[d] / norm : 0.0);
      speech_out[d] = round4(speech[d]);
    }
    r.speech_embedding = std::move(speech_out);
    r.text_embedding = std::move(text);

    static const std::array<const char*, 5> kCategories = {"Najdi", "Hijazi", "Khaliji",
                                                           "Janubi", "MSA"};
    if (!chance(0.1)) r.category = kCategories[pick(kCategories.size())];
    const double s = uniform(0.0, 1.0);
    r.split = s < 0.8 ? "train" : (s < 0.9 ? "test" : "valid");
    r.duration_s = std::round((0.45 * static_cast<double>(truth.size()) + uniform(0.0, 0.5)) * 100) / 100;
    r.audio_ref = "synth/" + r.id + ".wav";

    if (params_.audio_features) add_audio_features(r, rate);
    return r;
  }

  void add_audio_features(ExampleRecord& r, double rate) {
    std::normal_distribution<double> normal(0.0, 1.0);
    r.pesq = round4(std::clamp(4.2 - 3.0 * rate + 0.3 * normal(rng_), -0.5, 4.5));
    constexpr std::size_t kDims = 8;
    const std::size_t frames = 4 + pick(5);
    FrameMatrix real(frames, std::vector<double>(kDims));
    for (auto& row : real) {
      for (auto& x : row) x = round4(normal(rng_));
    }
    const std::size_t synth_frames = std::max<std::size_t>(1, frames + pick(3) - 1);
    FrameMatrix synth(synth_frames, std::vector<double>(kDims));
    const double noise = 0.1 + 1.5 * rate;
    for (std::size_t j = 0; j < synth_frames; ++j) {
      const auto& src = real[std::min(j * frames / synth_frames, frames - 1)];
      for (std::size_t d = 0; d < kDims; ++d) synth[j][d] = round4(src[d] + noise * normal(rng_));
    }
    r.cepstra_real = std::move(real);
    r.cepstra_synth = std::move(synth);
  }

  const BenchmarkParams& params_;
  std::mt19937_64 rng_;
  std::vector<std::string> vocab_;
};

}  // namespace

Manifest synthesize_benchmark(const BenchmarkParams& params) {
  if (params.n == 0) throw InvalidArgument("benchmark size must be at least 1");
  if (params.vocab_size < 2) throw InvalidArgument("vocabulary needs at least 2 words");
  if (params.embedding_dim == 0) throw InvalidArgument("embedding dimension must be positive");
  return BenchmarkGenerator(params).run();
}

}  // namespace plf
