#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "plfilter/align.hpp"
#include "plfilter/cli.hpp"
#include "plfilter/error.hpp"
#include "plfilter/evaluation.hpp"
#include "plfilter/kd_objective.hpp"
#include "plfilter/manifest.hpp"
#include "plfilter/metrics.hpp"
#include "plfilter/selection.hpp"
#include "plfilter/textnorm.hpp"

namespace py = pybind11;

namespace {

plf::MetricKind metric_from(const std::string& name) {
  auto kind = plf::parse_metric(name);
  if (!kind) throw plf::InvalidArgument("unknown metric '" + name + "'");
  return *kind;
}

std::vector<plf::MetricKind> metrics_from(const std::vector<std::string>& names) {
  if (names.empty()) return {plf::kAllMetrics.begin(), plf::kAllMetrics.end()};
  std::vector<plf::MetricKind> out;
  for (const auto& n : names) out.push_back(metric_from(n));
  return out;
}

std::map<std::string, double> scores_dict(const plf::MetricVector& v) {
  std::map<std::string, double> out;
  for (const auto& [kind, score] : v.scores) out[std::string(plf::metric_name(kind))] = score;
  return out;
}

py::dict selection_dict(const plf::SelectionResult& r) {
  py::dict d;
  d["kept_ids"] = r.kept_ids;
  d["dropped_ids"] = r.dropped_ids;
  d["per_id_score"] = r.per_id_score;
  d["diagnostics"] = r.diagnostics;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pseudo-label quality scoring, selection and evaluation.";
  m.attr("__version__") = plf::kVersion;

  py::register_exception<plf::DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<plf::InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<plf::IoError>(m, "IoError", PyExc_OSError);

  py::class_<plf::NormConfig>(m, "NormConfig")
      .def(py::init<>())
      .def_readwrite("remove_diacritics", &plf::NormConfig::remove_diacritics)
      .def_readwrite("remove_punctuation", &plf::NormConfig::remove_punctuation)
      .def_readwrite("collapse_whitespace", &plf::NormConfig::collapse_whitespace)
      .def_readwrite("unify_alef_variants", &plf::NormConfig::unify_alef_variants)
      .def_readwrite("unify_ya_alefmaqsura", &plf::NormConfig::unify_ya_alefmaqsura)
      .def_static("orthographic", &plf::NormConfig::orthographic)
      .def_static("identity", &plf::NormConfig::identity)
      .def("__eq__", [](const plf::NormConfig& a, const plf::NormConfig& b) { return a == b; });

  m.def("normalize", &plf::normalize, py::arg("text"), py::arg("cfg") = plf::NormConfig{});
  m.def("word_tokens", &plf::word_tokens, py::arg("text"));
  m.def("char_tokens", &plf::char_tokens, py::arg("text"));

  py::class_<plf::AlignmentCounts>(m, "AlignmentCounts")
      .def_readonly("substitutions", &plf::AlignmentCounts::substitutions)
      .def_readonly("deletions", &plf::AlignmentCounts::deletions)
      .def_readonly("insertions", &plf::AlignmentCounts::insertions)
      .def_readonly("hits", &plf::AlignmentCounts::hits)
      .def_readonly("ref_len", &plf::AlignmentCounts::ref_len)
      .def_property_readonly("distance", &plf::AlignmentCounts::distance);

  py::class_<plf::ErrorRate>(m, "ErrorRate")
      .def_readonly("value", &plf::ErrorRate::value)
      .def_readonly("ref_len", &plf::ErrorRate::ref_len)
      .def_readonly("defined", &plf::ErrorRate::defined)
      .def_readonly("counts", &plf::ErrorRate::counts);

  m.def(
      "edit_align",
      [](const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
        return plf::edit_align(ref, hyp);
      },
      py::arg("ref"), py::arg("hyp"));
  m.def("wer", &plf::wer, py::arg("ref"), py::arg("hyp"), py::arg("cfg") = plf::NormConfig{});
  m.def("cer", &plf::cer, py::arg("ref"), py::arg("hyp"), py::arg("cfg") = plf::NormConfig{});

  m.def(
      "entropy_score", [](const std::vector<double>& p) { return plf::entropy_score(p); },
      py::arg("word_probs"));
  m.def(
      "geomean_confidence", [](const std::vector<double>& p) { return plf::geomean_confidence(p); },
      py::arg("word_probs"));
  m.def(
      "nll_score",
      [](const std::vector<double>& lp, bool normalize_length) {
        return plf::nll_score(lp, normalize_length);
      },
      py::arg("lm_token_logprobs"), py::arg("normalize_length") = false);
  m.def(
      "embedding_similarity",
      [](const std::vector<double>& a, const std::vector<double>& b, const std::string& mode) {
        if (mode != "dot" && mode != "cosine") throw plf::InvalidArgument("mode must be dot or cosine");
        return plf::embedding_similarity(
            a, b, mode == "dot" ? plf::SimilarityMode::kDot : plf::SimilarityMode::kCosine);
      },
      py::arg("speech"), py::arg("text"), py::arg("mode") = "dot");
  m.def(
      "mcd_score",
      [](const plf::FrameMatrix& real, const plf::FrameMatrix& synth, bool use_dtw, bool skip_c0) {
        return plf::mcd_score(real, synth, {use_dtw, skip_c0});
      },
      py::arg("cepstra_real"), py::arg("cepstra_synth"), py::arg("use_dtw") = true,
      py::arg("skip_c0") = true);
  m.def(
      "word_probs_from_tokens",
      [](const std::vector<double>& tokens, const std::vector<std::int64_t>& boundaries) {
        return plf::word_probs_from_tokens(tokens, boundaries);
      },
      py::arg("token_probs"), py::arg("word_boundaries"));

  m.def(
      "score_manifest",
      [](const std::string& path, const std::vector<std::string>& metrics, unsigned threads) {
        const auto manifest = plf::load_manifest(path);
        const auto scored = plf::score_manifest(manifest, metrics_from(metrics), {}, threads);
        std::map<std::string, std::map<std::string, double>> out;
        for (const auto& s : scored) out[s.vector.id] = scores_dict(s.vector);
        return out;
      },
      py::arg("manifest_path"), py::arg("metrics") = std::vector<std::string>{},
      py::arg("threads") = 1u, "Scores a JSONL manifest; returns {id: {metric: score}}.");

  m.def(
      "select",
      [](const std::map<std::string, double>& scores, const std::string& metric,
         std::optional<double> keep_fraction, std::optional<double> threshold) {
        plf::SelectionPolicy policy;
        policy.metric = metric_from(metric);
        if (keep_fraction && threshold) {
          throw plf::InvalidArgument("give keep_fraction or threshold, not both");
        }
        if (threshold) {
          policy.mode = plf::Threshold{*threshold};
        } else {
          policy.mode = plf::KeepFraction{keep_fraction.value_or(plf::kDefaultKeepFraction)};
        }
        std::vector<plf::MetricVector> vectors;
        for (const auto& [id, score] : scores) vectors.push_back({id, {{policy.metric, score}}});
        return selection_dict(plf::select(vectors, policy));
      },
      py::arg("scores"), py::arg("metric"), py::arg("keep_fraction") = py::none(),
      py::arg("threshold") = py::none(),
      "Threshold is in the metric's own units (pwer as a ratio).");

  m.def(
      "roc_auc",
      [](const std::map<std::string, double>& scores, const std::map<std::string, bool>& labels,
         bool higher_means_worse) {
        plf::QualityLabeling labeling;
        labeling.labels = labels;
        const auto roc = plf::roc_auc(scores, higher_means_worse, labeling);
        std::vector<std::pair<double, double>> points;
        for (const auto& p : roc.points) points.emplace_back(p.fpr, p.tpr);
        py::dict d;
        d["auc"] = roc.auc;
        d["points"] = points;
        d["positives"] = roc.positives;
        d["negatives"] = roc.negatives;
        return d;
      },
      py::arg("scores"), py::arg("labels"), py::arg("higher_means_worse") = true,
      "labels maps id -> True for low-quality examples.");

  m.def(
      "kd_loss",
      [](const std::vector<std::vector<double>>& teacher,
         const std::vector<std::vector<double>>& student, const std::vector<std::size_t>& labels,
         double alpha_kl, double alpha_pl, double temperature) {
        const plf::DistributionSequence seq{teacher, student, labels};
        const auto l = plf::kd_loss(seq, {alpha_kl, alpha_pl, temperature});
        return std::map<std::string, double>{{"kl", l.kl}, {"pl", l.pl}, {"kd", l.kd}};
      },
      py::arg("teacher_probs"), py::arg("student_logprobs"), py::arg("labels"),
      py::arg("alpha_kl") = 0.8, py::arg("alpha_pl") = 1.0, py::arg("temperature") = 1.0);

  m.def(
      "synthesize_benchmark",
      [](const std::string& path, std::size_t n, std::uint64_t seed, const std::string& corruption,
         std::size_t vocab_size, bool audio_features) {
        plf::BenchmarkParams params;
        params.n = n;
        params.seed = seed;
        params.corruption = plf::parse_corruption(corruption);
        params.vocab_size = vocab_size;
        params.audio_features = audio_features;
        plf::write_manifest(plf::synthesize_benchmark(params), path);
      },
      py::arg("path"), py::arg("n"), py::arg("seed") = 0, py::arg("corruption") = "bimodal:0,1,0.5",
      py::arg("vocab_size") = 500, py::arg("audio_features") = false);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        const int code = plf::cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the plfilter CLI in-process; returns (exit_code, stdout, stderr).");
}
