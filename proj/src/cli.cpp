#include "plfilter/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "plfilter/error.hpp"
#include "plfilter/evaluation.hpp"
#include "plfilter/io.hpp"
#include "plfilter/kd_objective.hpp"
#include "plfilter/manifest.hpp"
#include "plfilter/metrics.hpp"
#include "plfilter/selection.hpp"
#include "plfilter/textnorm.hpp"

namespace plf::cli {

namespace {

using json = nlohmann::json;

struct NormFlags {
  bool orthographic = false;
  bool no_diacritic_removal = false;
  bool keep_punctuation = false;
  bool no_collapse_whitespace = false;
  bool unify_alef = false;
  bool unify_ya = false;
  std::string config_file;

  NormConfig resolve() const {
    NormConfig cfg;
    if (!config_file.empty()) {
      const json j = json::parse(read_file(config_file));
      cfg = (j.contains("norm") ? j.at("norm") : j).get<NormConfig>();
    }
    if (orthographic) cfg = NormConfig::orthographic();
    if (no_diacritic_removal) cfg.remove_diacritics = false;
    if (keep_punctuation) cfg.remove_punctuation = false;
    if (no_collapse_whitespace) cfg.collapse_whitespace = false;
    if (unify_alef) cfg.unify_alef_variants = true;
    if (unify_ya) cfg.unify_ya_alefmaqsura = true;
    return cfg;
  }
};

void add_norm_flags(CLI::App* sub, NormFlags& f) {
  sub->add_flag("--orthographic", f.orthographic,
                "Score raw text: no diacritic or punctuation removal (whitespace still collapsed)");
  sub->add_flag("--no-diacritic-removal", f.no_diacritic_removal, "Keep Arabic diacritics and tatweel");
  sub->add_flag("--keep-punctuation", f.keep_punctuation, "Keep punctuation");
  sub->add_flag("--no-collapse-whitespace", f.no_collapse_whitespace, "Do not collapse whitespace runs");
  sub->add_flag("--unify-alef", f.unify_alef, "Map alef variants to bare alef");
  sub->add_flag("--unify-ya", f.unify_ya, "Map alef maqsura to ya");
  sub->add_option("--norm-config", f.config_file, "JSON file with a NormConfig object");
}

unsigned default_threads() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

// Provenance block embedded in every report. Worker count and output paths
// are left out so reports stay byte-identical across them.
json run_block(std::string_view subcommand, json config) {
  return {{"tool", "plfilter"},
          {"version", kVersion},
          {"subcommand", subcommand},
          {"config", std::move(config)}};
}

void emit(const json& j, const std::string& path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

json metrics_json(std::span<const MetricKind> metrics) {
  json arr = json::array();
  for (auto m : metrics) arr.push_back(metric_name(m));
  return arr;
}

bool is_wer_metric(MetricKind m) { return m == MetricKind::kPwer; }

std::string join_ids(const std::vector<std::string>& diags, std::size_t limit) {
  std::string s;
  for (std::size_t i = 0; i < diags.size() && i < limit; ++i) s += "  " + diags[i] + "\n";
  if (diags.size() > limit) s += "  ... (" + std::to_string(diags.size() - limit) + " more)\n";
  return s;
}

void require_ground_truth(const Manifest& manifest) {
  for (const auto& r : manifest.records) {
    if (!r.ground_truth) {
      throw DataError("record '" + r.id + "' is missing field 'ground_truth', required for evaluation");
    }
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"plfilter: score, filter and evaluate pseudo-labeled speech data"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Check which metrics each manifest record supports");
  std::string v_manifest, v_metrics, v_output;
  std::size_t v_max_words = 225;
  std::optional<std::size_t> v_dim;
  validate_cmd->add_option("manifest", v_manifest, "Input JSONL manifest")->required();
  validate_cmd->add_option("--metrics", v_metrics, "Required metrics, comma separated, or 'all'");
  validate_cmd->add_option("--embedding-dim", v_dim, "Expected embedding dimension");
  validate_cmd->add_option("--max-label-length", v_max_words,
                           "Flag pseudo-labels longer than this many words")
      ->capture_default_str();
  validate_cmd->add_option("-o,--output", v_output, "Report path (default stdout)");

  // score
  auto* score_cmd = app.add_subcommand("score", "Compute quality metrics for every record");
  std::string s_manifest, s_output, s_report, s_metrics = "all", s_similarity = "dot";
  bool s_nll_norm = false, s_no_dtw = false, s_keep_c0 = false;
  unsigned s_threads = default_threads();
  NormFlags s_norm;
  score_cmd->add_option("manifest", s_manifest, "Input JSONL manifest")->required();
  score_cmd->add_option("-o,--output", s_output, "Score file (JSONL, sorted by id)")->required();
  score_cmd->add_option("--metrics", s_metrics, "Metrics to compute, comma separated, or 'all'")
      ->capture_default_str();
  score_cmd->add_option("--report", s_report, "Optional JSON report with per-record diagnostics");
  score_cmd->add_flag("--nll-normalize-length", s_nll_norm, "Divide NLL by the token count");
  score_cmd->add_option("--similarity", s_similarity, "Embedding similarity: dot or cosine")
      ->check(CLI::IsMember({"dot", "cosine"}))
      ->capture_default_str();
  score_cmd->add_flag("--no-dtw", s_no_dtw, "Pair cepstral frames by index instead of DTW");
  score_cmd->add_flag("--keep-c0", s_keep_c0, "Include c0 (energy) in MCD");
  score_cmd->add_option("--threads", s_threads,
                        std::string("Worker threads (default from ") + kThreadsEnv + ", else 1)")
      ->check(CLI::PositiveNumber);
  add_norm_flags(score_cmd, s_norm);

  // select
  auto* select_cmd = app.add_subcommand("select", "Filter a manifest by a quality metric");
  std::string sel_manifest, sel_scores, sel_metric, sel_output, sel_report;
  std::optional<double> sel_fraction, sel_threshold, sel_lambda;
  NormFlags sel_norm;
  select_cmd->add_option("manifest", sel_manifest, "Input JSONL manifest")->required();
  select_cmd->add_option("--scores", sel_scores, "Score file from `score`");
  select_cmd->add_option("--metric", sel_metric, "Metric the policy ranks by");
  auto* frac_opt = select_cmd->add_option(
      "--keep-fraction", sel_fraction, "Keep the best fraction in (0, 1] (default 0.73)");
  auto* thr_opt = select_cmd->add_option(
      "--threshold", sel_threshold,
      "Keep records on the good side of this cutoff; for pwer the value is a percent (80 = 0.8)");
  auto* lambda_opt = select_cmd->add_option(
      "--supervised-lambda", sel_lambda,
      "Supervised baseline: keep WER(ground_truth, pseudo_label) <= lambda percent (e.g. 80)");
  frac_opt->excludes(thr_opt)->excludes(lambda_opt);
  thr_opt->excludes(lambda_opt);
  select_cmd->add_option("-o,--output", sel_output, "Filtered manifest path")->required();
  select_cmd->add_option("--report", sel_report, "Selection report path (default stdout)");
  add_norm_flags(select_cmd, sel_norm);

  // eval-wer
  auto* wer_cmd = app.add_subcommand("eval-wer", "Corpus and per-group WER/CER against ground truth");
  std::string w_manifest, w_output, w_csv, w_group = "category", w_aggregate = "pooled";
  std::optional<std::size_t> w_top_k;
  NormFlags w_norm;
  wer_cmd->add_option("manifest", w_manifest, "Input JSONL manifest")->required();
  wer_cmd->add_option("--group-by", w_group, "category, split or none")
      ->check(CLI::IsMember({"category", "split", "none"}))
      ->capture_default_str();
  wer_cmd->add_option("--top-k", w_top_k, "Keep only the k largest groups");
  wer_cmd->add_option("--aggregate", w_aggregate, "Corpus aggregate: pooled or macro")
      ->check(CLI::IsMember({"pooled", "macro"}))
      ->capture_default_str();
  wer_cmd->add_option("-o,--output", w_output, "JSON report path (default stdout)");
  wer_cmd->add_option("--csv", w_csv, "Also write the grouped table as CSV");
  add_norm_flags(wer_cmd, w_norm);

  // eval-auc
  auto* auc_cmd = app.add_subcommand("eval-auc", "AUC of each metric for detecting high-WER examples");
  std::string a_manifest, a_scores, a_metrics, a_output, a_csv, a_roc_csv;
  std::vector<double> a_taus = {20.0, 40.0, 80.0};
  NormFlags a_norm;
  auc_cmd->add_option("manifest", a_manifest, "Input JSONL manifest with ground_truth")->required();
  auc_cmd->add_option("--scores", a_scores, "Score file from `score`")->required();
  auc_cmd->add_option("--metrics", a_metrics, "Metrics to evaluate (default: all in the score file)");
  auc_cmd->add_option("--taus", a_taus, "WER thresholds in percent")
      ->delimiter(',')
      ->capture_default_str();
  auc_cmd->add_option("-o,--output", a_output, "JSON report path (default stdout)");
  auc_cmd->add_option("--csv", a_csv, "AUC matrix as CSV");
  auc_cmd->add_option("--roc-csv", a_roc_csv, "ROC points as CSV");
  add_norm_flags(auc_cmd, a_norm);

  // synth-bench
  auto* synth_cmd = app.add_subcommand("synth-bench", "Generate a synthetic benchmark manifest");
  BenchmarkParams b_params;
  std::string b_corruption = "bimodal:0,1,0.5", b_output;
  synth_cmd->add_option("-n,--count", b_params.n, "Number of records")->capture_default_str();
  synth_cmd->add_option("--vocab", b_params.vocab_size, "Vocabulary size")->capture_default_str();
  synth_cmd->add_option("--corruption", b_corruption,
                        "Corruption-rate distribution: fixed:R, uniform:LO,HI or bimodal:LO,HI,P")
      ->capture_default_str();
  synth_cmd->add_option("--seed", b_params.seed, "RNG seed")->capture_default_str();
  synth_cmd->add_option("--embedding-dim", b_params.embedding_dim, "Embedding dimension")
      ->capture_default_str();
  synth_cmd->add_flag("--audio-features", b_params.audio_features, "Also emit pesq and cepstra");
  synth_cmd->add_option("-o,--output", b_output, "Output manifest path")->required();

  // kd-loss
  auto* kd_cmd = app.add_subcommand("kd-loss", "Evaluate the distillation objective on given distributions");
  std::string k_input, k_output;
  std::optional<double> k_alpha_kl, k_alpha_pl, k_temperature;
  kd_cmd->add_option("input", k_input, "JSON file {teacher_probs, student_logprobs, labels, weights?}")
      ->required();
  kd_cmd->add_option("--alpha-kl", k_alpha_kl, "Weight of the KL term (default 0.8)");
  kd_cmd->add_option("--alpha-pl", k_alpha_pl, "Weight of the pseudo-label term (default 1.0)");
  kd_cmd->add_option("--temperature", k_temperature, "Softmax temperature (default 1.0)");
  kd_cmd->add_option("-o,--output", k_output, "Output path (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (validate_cmd->parsed()) {
      auto manifest = load_manifest(v_manifest);
      if (v_dim) manifest.declared_embedding_dim = *v_dim;
      const auto required = parse_metric_list(v_metrics);
      ValidateOptions options;
      options.max_label_words = v_max_words;
      const auto report = validate(manifest, required, options);
      json j = to_json(report);
      json config = {{"manifest", v_manifest},
                     {"required_metrics", metrics_json(required)},
                     {"max_label_length", v_max_words}};
      if (manifest.declared_embedding_dim) config["embedding_dim"] = *manifest.declared_embedding_dim;
      j["run"] = run_block("validate", std::move(config));
      emit(j, v_output, out);
      if (!report.pass) {
        err << "validation failed for " << j["summary"]["failing_records"].get<std::size_t>()
            << " record(s)\n";
        return kExitData;
      }
      return kExitOk;
    }

    if (score_cmd->parsed()) {
      const auto manifest = load_manifest(s_manifest);
      const auto metrics = parse_metric_list(s_metrics);
      ScoreOptions options;
      options.norm = s_norm.resolve();
      options.nll_normalize_length = s_nll_norm;
      options.similarity = s_similarity == "dot" ? SimilarityMode::kDot : SimilarityMode::kCosine;
      options.mcd.use_dtw = !s_no_dtw;
      options.mcd.skip_c0 = !s_keep_c0;
      const auto scored = score_manifest(manifest, metrics, options, s_threads);
      std::vector<MetricVector> vectors;
      std::vector<std::string> diagnostics;
      json per_record = json::array();
      for (const auto& s : scored) {
        vectors.push_back(s.vector);
        for (const auto& d : s.diagnostics) diagnostics.push_back(s.vector.id + ": " + d);
        if (!s.diagnostics.empty()) per_record.push_back({{"id", s.vector.id}, {"diagnostics", s.diagnostics}});
      }
      write_scores(vectors, s_output);
      if (!diagnostics.empty()) {
        err << diagnostics.size() << " metric(s) could not be computed:\n" << join_ids(diagnostics, 10);
      }
      if (!s_report.empty()) {
        json j;
        j["run"] = run_block("score", {{"manifest", s_manifest},
                                       {"metrics", metrics_json(metrics)},
                                       {"options", options}});
        j["records"] = scored.size();
        j["diagnostics"] = per_record;
        emit(j, s_report, out);
      }
      return kExitOk;
    }

    if (select_cmd->parsed()) {
      const auto manifest = load_manifest(sel_manifest);
      const NormConfig norm = sel_norm.resolve();
      SelectionResult result;
      json config = {{"manifest", sel_manifest}};
      if (sel_lambda) {
        if (!sel_metric.empty()) throw InvalidArgument("--supervised-lambda does not take --metric");
        const double lambda = *sel_lambda / 100.0;
        result = supervised_wer_filter(manifest, lambda, norm);
        config["norm"] = norm;
        config["supervised_lambda_ratio"] = lambda;
      } else {
        if (sel_metric.empty()) throw InvalidArgument("--metric is required");
        if (sel_scores.empty()) throw InvalidArgument("--scores is required");
        const auto metric = parse_metric(sel_metric);
        if (!metric) throw InvalidArgument("unknown metric '" + sel_metric + "'");
        SelectionPolicy policy;
        policy.metric = *metric;
        if (sel_threshold) {
          policy.mode = Threshold{is_wer_metric(*metric) ? *sel_threshold / 100.0 : *sel_threshold};
        } else {
          policy.mode = KeepFraction{sel_fraction.value_or(kDefaultKeepFraction)};
        }
        policy.check();
        const auto scores = load_scores(sel_scores);
        result = select(scores, policy);
        config["scores"] = sel_scores;
        config["policy"] = to_json(policy);
      }
      write_manifest(apply_selection(manifest, result), sel_output);
      json j = to_json(result);
      j["run"] = run_block("select", std::move(config));
      emit(j, sel_report, out);
      return kExitOk;
    }

    if (wer_cmd->parsed()) {
      const auto manifest = load_manifest(w_manifest);
      require_ground_truth(manifest);
      const NormConfig norm = w_norm.resolve();
      const Aggregate aggregate = w_aggregate == "pooled" ? Aggregate::kPooled : Aggregate::kMacro;
      std::vector<std::pair<std::string, std::string>> pairs;
      pairs.reserve(manifest.records.size());
      for (const auto& r : manifest.records) pairs.emplace_back(*r.ground_truth, r.pseudo_label);
      json corpus;
      for (auto unit : {ErrorUnit::kWord, ErrorUnit::kChar}) {
        const auto rate = corpus_error_rate(pairs, norm, unit, aggregate);
        corpus[unit == ErrorUnit::kWord ? "wer" : "cer"] = {
            {"value", rate.value},           {"errors", rate.errors},
            {"ref_len", rate.ref_len},       {"pairs_used", rate.pairs_used},
            {"skipped_undefined", rate.skipped_undefined}};
      }
      json j;
      j["run"] = run_block("eval-wer", {{"manifest", w_manifest},
                                        {"norm", norm},
                                        {"group_by", w_group},
                                        {"aggregate", w_aggregate},
                                        {"top_k", w_top_k ? json(*w_top_k) : json(nullptr)}});
      j["corpus"] = corpus;
      if (w_group != "none") {
        const auto field = w_group == "category" ? GroupField::kCategory : GroupField::kSplit;
        const auto grouped = grouped_error_report(manifest, field, norm, w_top_k);
        j["grouped"] = to_json(grouped);
        if (!w_csv.empty()) write_file_atomic(w_csv, to_csv(grouped));
      }
      emit(j, w_output, out);
      return kExitOk;
    }

    if (auc_cmd->parsed()) {
      const auto manifest = load_manifest(a_manifest);
      const auto scores = load_scores(a_scores);
      std::vector<MetricKind> metrics;
      if (a_metrics.empty()) {
        for (auto m : kAllMetrics) {
          if (std::any_of(scores.begin(), scores.end(), [m](const MetricVector& v) { return v.get(m).has_value(); })) {
            metrics.push_back(m);
          }
        }
      } else {
        metrics = parse_metric_list(a_metrics);
      }
      std::vector<double> taus;
      for (double t : a_taus) {
        if (!(t >= 0.0)) throw InvalidArgument("WER thresholds must be nonnegative percents");
        taus.push_back(t / 100.0);
      }
      const NormConfig norm = a_norm.resolve();
      const auto report = effectiveness_report(manifest, scores, metrics, taus, norm);
      json j = to_json(report);
      j["run"] = run_block("eval-auc", {{"manifest", a_manifest},
                                        {"scores", a_scores},
                                        {"metrics", metrics_json(metrics)},
                                        {"taus", taus},
                                        {"norm", norm}});
      if (!a_csv.empty()) write_file_atomic(a_csv, to_csv(report));
      if (!a_roc_csv.empty()) write_file_atomic(a_roc_csv, roc_points_csv(report));
      emit(j, a_output, out);
      return kExitOk;
    }

    if (synth_cmd->parsed()) {
      b_params.corruption = parse_corruption(b_corruption);
      write_manifest(synthesize_benchmark(b_params), b_output);
      return kExitOk;
    }

    if (kd_cmd->parsed()) {
      const json input = json::parse(read_file(k_input));
      const auto seq = distribution_sequence_from_json(input);
      KdWeights weights = kd_weights_from_json(input.value("weights", json::object()));
      if (k_alpha_kl) weights.alpha_kl = *k_alpha_kl;
      if (k_alpha_pl) weights.alpha_pl = *k_alpha_pl;
      if (k_temperature) weights.temperature = *k_temperature;
      const auto losses = kd_loss(seq, weights);
      json j = {{"kl", losses.kl},
                {"pl", losses.pl},
                {"kd", losses.kd},
                {"weights",
                 {{"alpha_kl", weights.alpha_kl},
                  {"alpha_pl", weights.alpha_pl},
                  {"temperature", weights.temperature}}}};
      emit(j, k_output, out);
      return kExitOk;
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace plf::cli
