#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "plfilter/cli.hpp"
#include "plfilter/error.hpp"
#include "plfilter/io.hpp"
#include "plfilter/manifest.hpp"
#include "plfilter/metrics.hpp"
#include "temp_dir.hpp"

using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = plf::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

const char* kSmallManifest =
    R"({"id":"u2","pseudo_label":"a b c","ground_truth":"a b c","proxy_transcript":"a b c","word_probs":[0.9,0.9,0.9],"category":"Najdi"})"
    "\n"
    R"({"id":"u1","pseudo_label":"a x c","ground_truth":"a b c","proxy_transcript":"a b c","word_probs":[0.9,0.2,0.9],"category":"Najdi"})"
    "\n"
    R"({"id":"u3","pseudo_label":"x y","ground_truth":"a b c","proxy_transcript":"a b c","word_probs":[0.1,0.2]})"
    "\n";

}  // namespace

TEST_CASE("cli: no subcommand is a usage error") {
  CHECK(run({}).code == plf::cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == plf::cli::kExitUsage);
}

TEST_CASE("cli: help and version exit cleanly") {
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("synth-bench") != std::string::npos);
  const auto version = run({"--version"});
  CHECK(version.code == 0);
  CHECK(version.out.find(plf::kVersion) != std::string::npos);
}

TEST_CASE("cli: validate passes and fails with the right exit codes") {
  plf::testing::TempDir dir;
  write_text(dir / "m.jsonl", kSmallManifest);
  const auto ok = run({"validate", (dir / "m.jsonl").string(), "--metrics", "entropy,pwer"});
  CHECK(ok.code == 0);
  CHECK(json::parse(ok.out).at("pass") == true);

  const auto bad = run({"validate", (dir / "m.jsonl").string(), "--metrics", "nll"});
  CHECK(bad.code == plf::cli::kExitData);
  const auto report = json::parse(bad.out);
  CHECK(report.at("pass") == false);
  CHECK(report.dump().find("lm_token_logprobs") != std::string::npos);

  CHECK(run({"validate", (dir / "m.jsonl").string(), "--metrics", "bogus"}).code ==
        plf::cli::kExitUsage);
}

TEST_CASE("cli: malformed manifest line is a data error naming the line") {
  plf::testing::TempDir dir;
  write_text(dir / "m.jsonl", std::string(kSmallManifest) + "{nope\n");
  const auto r = run({"validate", (dir / "m.jsonl").string()});
  CHECK(r.code == plf::cli::kExitData);
  CHECK(r.err.find(":4:") != std::string::npos);
}

TEST_CASE("cli: missing input file is a data error") {
  CHECK(run({"score", "/nonexistent/m.jsonl", "-o", "/tmp/x.jsonl"}).code == plf::cli::kExitData);
}

TEST_CASE("cli: score, select and eval pipeline") {
  plf::testing::TempDir dir;
  const auto m = (dir / "m.jsonl").string();
  const auto s = (dir / "s.jsonl").string();
  write_text(m, kSmallManifest);

  const auto scored = run({"score", m, "-o", s, "--metrics", "all"});
  CHECK(scored.code == 0);
  CHECK(scored.err.find("could not be computed") != std::string::npos);
  const auto scores = plf::load_scores(s);
  REQUIRE(scores.size() == 3);
  CHECK(scores[0].id == "u1");
  CHECK(scores[0].get(plf::MetricKind::kPwer) == doctest::Approx(1.0 / 3.0));

  // pwer threshold given in percent: 40 keeps u1 (33%) and u2 (0%).
  const auto kept = (dir / "kept.jsonl").string();
  const auto sel = run({"select", m, "--scores", s, "--metric", "pwer", "--threshold", "40", "-o", kept});
  CHECK(sel.code == 0);
  const auto out_manifest = plf::load_manifest(kept);
  REQUIRE(out_manifest.records.size() == 2);
  CHECK(out_manifest.records[0].id == "u2");
  CHECK(out_manifest.records[1].id == "u1");
  CHECK(json::parse(sel.out).at("dropped_ids") == json::array({"u3"}));

  const auto frac = run({"select", m, "--scores", s, "--metric", "geomean", "--keep-fraction", "0.34",
                         "-o", kept});
  CHECK(frac.code == 0);
  CHECK(json::parse(frac.out).at("kept_ids") == json::array({"u1", "u2"}));

  const auto sup = run({"select", m, "--supervised-lambda", "80", "-o", kept});
  CHECK(sup.code == 0);
  CHECK(json::parse(sup.out).at("kept_ids") == json::array({"u1", "u2"}));

  const auto wer = run({"eval-wer", m, "--group-by", "category", "--csv", (dir / "g.csv").string()});
  CHECK(wer.code == 0);
  const auto wj = json::parse(wer.out);
  CHECK(wj.at("corpus").at("wer").at("value") == doctest::Approx(4.0 / 9.0));
  CHECK(wj.at("grouped").at("rows").size() == 2);
  CHECK(plf::read_file(dir / "g.csv").find("Unknown,1,") != std::string::npos);

  const auto auc = run({"eval-auc", m, "--scores", s, "--taus", "20", "--csv", (dir / "a.csv").string(),
                        "--roc-csv", (dir / "roc.csv").string()});
  CHECK(auc.code == 0);
  const auto aj = json::parse(auc.out);
  CHECK(aj.at("auc_matrix").at("geomean").at("0.2") == 1.0);
  CHECK(plf::read_file(dir / "roc.csv").rfind("metric,tau,fpr,tpr\n", 0) == 0);
}

TEST_CASE("cli: select argument errors are usage errors") {
  plf::testing::TempDir dir;
  const auto m = (dir / "m.jsonl").string();
  write_text(m, kSmallManifest);
  const auto out = (dir / "o.jsonl").string();
  CHECK(run({"select", m, "-o", out}).code == plf::cli::kExitUsage);
  CHECK(run({"select", m, "--scores", "x", "--metric", "nope", "-o", out}).code == plf::cli::kExitUsage);
  CHECK(run({"select", m, "--scores", "x", "--metric", "pwer", "--keep-fraction", "0.5", "--threshold",
             "3", "-o", out})
            .code == plf::cli::kExitUsage);
}

TEST_CASE("cli: eval-wer without ground truth names the record and field") {
  plf::testing::TempDir dir;
  const auto m = (dir / "m.jsonl").string();
  write_text(m, R"({"id":"lonely","pseudo_label":"x"})"
                "\n");
  const auto r = run({"eval-wer", m});
  CHECK(r.code == plf::cli::kExitData);
  CHECK(r.err.find("lonely") != std::string::npos);
  CHECK(r.err.find("ground_truth") != std::string::npos);
}

TEST_CASE("cli: orthographic flag changes WER") {
  plf::testing::TempDir dir;
  const auto m = (dir / "m.jsonl").string();
  write_text(m, R"({"id":"a","pseudo_label":"كتاب","ground_truth":"كِتَابٌ"})"
                "\n");
  CHECK(json::parse(run({"eval-wer", m, "--group-by", "none"}).out).at("corpus").at("wer").at("value") ==
        0.0);
  CHECK(json::parse(run({"eval-wer", m, "--group-by", "none", "--orthographic"}).out)
            .at("corpus")
            .at("wer")
            .at("value") == 1.0);
}

TEST_CASE("cli: synth-bench is deterministic and validates") {
  plf::testing::TempDir dir;
  const auto a = (dir / "a.jsonl").string();
  const auto b = (dir / "b.jsonl").string();
  CHECK(run({"synth-bench", "-n", "10", "--seed", "7", "-o", a}).code == 0);
  CHECK(run({"synth-bench", "-n", "10", "--seed", "7", "-o", b}).code == 0);
  CHECK(plf::read_file(a) == plf::read_file(b));
  CHECK(run({"validate", a, "--metrics", "entropy,geomean,nll,pwer,emb_sim"}).code == 0);
  CHECK(run({"synth-bench", "-n", "10", "--corruption", "weird", "-o", a}).code == plf::cli::kExitUsage);
}

TEST_CASE("cli: kd-loss reports the weighted objective") {
  plf::testing::TempDir dir;
  const auto in = (dir / "kd.json").string();
  write_text(in, R"({"teacher_probs":[[1.0,0.0]],"student_logprobs":[[-0.5,-0.9327521295671886]],"labels":[0]})");
  const auto r = run({"kd-loss", in});
  CHECK(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j.at("kl").get<double>() == doctest::Approx(0.5));
  CHECK(j.at("pl").get<double>() == doctest::Approx(0.5));
  CHECK(j.at("kd").get<double>() == doctest::Approx(0.9));
  const auto w = run({"kd-loss", in, "--alpha-kl", "0"});
  CHECK(json::parse(w.out).at("kd").get<double>() == doctest::Approx(0.5));
  CHECK(run({"kd-loss", in, "--temperature", "-1"}).code == plf::cli::kExitUsage);
}

TEST_CASE("cli: score thread count does not change the output bytes") {
  plf::testing::TempDir dir;
  const auto m = (dir / "m.jsonl").string();
  CHECK(run({"synth-bench", "-n", "300", "--seed", "3", "--audio-features", "-o", m}).code == 0);
  CHECK(run({"score", m, "-o", (dir / "s1.jsonl").string(), "--threads", "1", "--report",
             (dir / "r1.json").string()})
            .code == 0);
  CHECK(run({"score", m, "-o", (dir / "s8.jsonl").string(), "--threads", "8", "--report",
             (dir / "r8.json").string()})
            .code == 0);
  CHECK(plf::read_file(dir / "s1.jsonl") == plf::read_file(dir / "s8.jsonl"));
  CHECK(plf::read_file(dir / "r1.json") == plf::read_file(dir / "r8.json"));
}
