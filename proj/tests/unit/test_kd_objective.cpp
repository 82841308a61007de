#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <doctest.h>

#include "plfilter/error.hpp"
#include "plfilter/kd_objective.hpp"

using plf::DistributionSequence;
using Row = std::vector<double>;
using Rows = std::vector<Row>;

namespace {

Row random_distribution(std::mt19937_64& rng, std::size_t v, bool sparse) {
  std::gamma_distribution<double> g(0.7, 1.0);
  std::bernoulli_distribution zero(0.3);
  Row p(v);
  for (auto& x : p) x = (sparse && zero(rng)) ? 0.0 : g(rng) + 1e-12;
  if (std::all_of(p.begin(), p.end(), [](double x) { return x == 0.0; })) p[0] = 1.0;
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= total;
  return p;
}

Row log_of(const Row& p) {
  Row out;
  for (double x : p) out.push_back(std::log(x));
  return out;
}

DistributionSequence random_sequence(std::mt19937_64& rng, std::size_t steps, std::size_t vocab,
                                     bool sparse_teacher) {
  DistributionSequence seq;
  std::uniform_int_distribution<std::size_t> label(0, vocab - 1);
  for (std::size_t t = 0; t < steps; ++t) {
    seq.teacher_probs.push_back(random_distribution(rng, vocab, sparse_teacher));
    seq.student_logprobs.push_back(log_of(random_distribution(rng, vocab, false)));
    seq.labels.push_back(label(rng));
  }
  return seq;
}

Row one_hot(std::size_t v, std::size_t at) {
  Row r(v, 0.0);
  r[at] = 1.0;
  return r;
}

}  // namespace

TEST_CASE("kl: zero when the student equals the teacher") {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 100; ++i) {
    auto seq = random_sequence(rng, 1 + i % 6, 2 + i % 9, false);
    for (std::size_t t = 0; t < seq.teacher_probs.size(); ++t) {
      seq.student_logprobs[t] = log_of(seq.teacher_probs[t]);
    }
    CHECK(std::abs(plf::kl_loss(seq)) <= 1e-12);
  }
}

TEST_CASE("kl: two-word example") {
  DistributionSequence seq{{{0.5, 0.5}}, {log_of({0.9, 0.1})}, {0}};
  const double expected = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
  CHECK(plf::kl_loss(seq) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.5108).epsilon(1e-4));
}

TEST_CASE("kl: one-hot teacher at the labels equals the pseudo-label loss") {
  std::mt19937_64 rng(62);
  for (int i = 0; i < 200; ++i) {
    auto seq = random_sequence(rng, 1 + i % 7, 2 + i % 11, false);
    const std::size_t vocab = seq.teacher_probs[0].size();
    for (std::size_t t = 0; t < seq.labels.size(); ++t) seq.teacher_probs[t] = one_hot(vocab, seq.labels[t]);
    CHECK(std::abs(plf::kl_loss(seq) - plf::pl_loss(seq)) <= 1e-12);
  }
}

TEST_CASE("kl: nonnegative, with zero-probability teacher entries skipped") {
  std::mt19937_64 rng(63);
  for (int i = 0; i < 300; ++i) {
    const auto seq = random_sequence(rng, 1 + i % 5, 2 + i % 12, i % 2 == 0);
    CHECK(plf::kl_loss(seq) >= 0.0);
    CHECK(plf::kl_loss(seq, 2.0) >= 0.0);
    CHECK(plf::kl_loss(seq, 0.5) >= 0.0);
  }
}

TEST_CASE("kl: zero iff the student matches the teacher on its support") {
  // Teacher [0.5, 0.5, 0]: any student agreeing on the first two entries has zero loss.
  DistributionSequence seq{{{0.5, 0.5, 0.0}}, {log_of({0.5, 0.5, 1e-300})}, {0}};
  seq.student_logprobs[0][2] = -1e9;
  CHECK(plf::kl_loss(seq) == doctest::Approx(0.0).epsilon(1e-12));
  seq.student_logprobs[0] = log_of({0.4, 0.5, 0.1});
  CHECK(plf::kl_loss(seq) > 0.0);
}

TEST_CASE("kl: temperature softens both sides") {
  DistributionSequence seq{{{0.9, 0.1}}, {log_of({0.6, 0.4})}, {0}};
  // T = 2: teacher ~ sqrt(p) renormalized, student ~ s / 2 renormalized.
  const double a = std::sqrt(0.9), b = std::sqrt(0.1);
  const Row p{a / (a + b), b / (a + b)};
  const double c = std::sqrt(0.6), d = std::sqrt(0.4);
  const Row q{c / (c + d), d / (c + d)};
  const double expected = p[0] * std::log(p[0] / q[0]) + p[1] * std::log(p[1] / q[1]);
  CHECK(plf::kl_loss(seq, 2.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(plf::kl_loss(seq, 0.0), plf::InvalidArgument);
  CHECK_THROWS_AS(plf::kl_loss(seq, -1.0), plf::InvalidArgument);
}

TEST_CASE("pl: examples") {
  DistributionSequence certain{{{0.5, 0.5}}, {{0.0, -1e9}}, {0}};
  CHECK(plf::pl_loss(certain) == 0.0);
  const double l4 = std::log(0.25);
  DistributionSequence uniform{{{1, 0, 0, 0}}, {{l4, l4, l4, l4}}, {2}};
  CHECK(plf::pl_loss(uniform) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  const double e = std::log1p(-std::exp(-1.0));
  const double f = std::log1p(-std::exp(-3.0));
  DistributionSequence two{{{1, 0}, {0, 1}}, {{-1.0, e}, {f, -3.0}}, {0, 1}};
  CHECK(plf::pl_loss(two) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("kd: weighted combination") {
  CHECK(plf::combine_kd(2.0, 3.0, plf::KdWeights{}) == 4.6);
  CHECK(plf::combine_kd(2.0, 3.0, {0.8, 1.0, 1.0}) == 4.6);
  CHECK(plf::combine_kd(2.0, 3.0, {0.0, 1.0, 1.0}) == 3.0);
}

TEST_CASE("kd: zero when student equals a one-hot teacher at the labels") {
  DistributionSequence seq{{one_hot(3, 1), one_hot(3, 0)}, {{-1e9, 0.0, -1e9}, {0.0, -1e9, -1e9}}, {1, 0}};
  const auto l = plf::kd_loss(seq);
  CHECK(l.kl == 0.0);
  CHECK(l.pl == 0.0);
  CHECK(l.kd == 0.0);
}

TEST_CASE("kd: alpha_kl = 0 reduces to the pseudo-label loss and is linear") {
  std::mt19937_64 rng(64);
  for (int i = 0; i < 100; ++i) {
    const auto seq = random_sequence(rng, 3, 5, false);
    const auto only_pl = plf::kd_loss(seq, {0.0, 1.0, 1.0});
    CHECK(only_pl.kd == only_pl.pl);
    const double a = std::uniform_real_distribution<double>(0, 2)(rng);
    const double b = std::uniform_real_distribution<double>(0, 2)(rng);
    const auto l = plf::kd_loss(seq, {a, b, 1.0});
    CHECK(l.kd == doctest::Approx(a * l.kl + b * l.pl).epsilon(1e-12));
  }
}

TEST_CASE("kd: losses invariant under a consistent vocabulary permutation") {
  std::mt19937_64 rng(65);
  for (int i = 0; i < 100; ++i) {
    const std::size_t vocab = 2 + i % 10;
    const auto seq = random_sequence(rng, 1 + i % 4, vocab, i % 2 == 0);
    std::vector<std::size_t> perm(vocab);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    DistributionSequence moved = seq;
    for (std::size_t t = 0; t < seq.labels.size(); ++t) {
      for (std::size_t v = 0; v < vocab; ++v) {
        moved.teacher_probs[t][perm[v]] = seq.teacher_probs[t][v];
        moved.student_logprobs[t][perm[v]] = seq.student_logprobs[t][v];
      }
      moved.labels[t] = perm[seq.labels[t]];
    }
    const auto a = plf::kd_loss(seq, {0.8, 1.0, 1.5});
    const auto b = plf::kd_loss(moved, {0.8, 1.0, 1.5});
    CHECK(a.kl == doctest::Approx(b.kl).epsilon(1e-12));
    CHECK(a.pl == b.pl);
    CHECK(a.kd == doctest::Approx(b.kd).epsilon(1e-12));
  }
}

TEST_CASE("kd: invalid sequences are rejected") {
  const Row l2 = log_of({0.5, 0.5});
  CHECK_THROWS_AS(plf::kl_loss(DistributionSequence{{{0.5, 0.6}}, {l2}, {0}}), plf::DataError);
  CHECK_THROWS_AS(plf::kl_loss(DistributionSequence{{{0.5, 0.5}}, {{-0.1, -0.1}}, {0}}),
                  plf::DataError);
  CHECK_THROWS_AS(plf::pl_loss(DistributionSequence{{{0.5, 0.5}}, {l2}, {2}}), plf::DataError);
  CHECK_THROWS_AS(plf::pl_loss(DistributionSequence{{{0.5, 0.5}}, {l2, l2}, {0}}), plf::DataError);
  CHECK_THROWS_AS(plf::pl_loss(DistributionSequence{{{0.5, 0.5}}, {{-0.69, -0.69, -30}}, {0}}),
                  plf::DataError);
  CHECK_THROWS_AS(plf::pl_loss(DistributionSequence{}), plf::DataError);
}

TEST_CASE("kd: json input") {
  const auto j = nlohmann::json::parse(R"({
    "teacher_probs": [[0.5, 0.5]],
    "student_logprobs": [[-0.6931471805599453, -0.6931471805599453]],
    "labels": [1]
  })");
  const auto seq = plf::distribution_sequence_from_json(j);
  CHECK(plf::kl_loss(seq) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(plf::pl_loss(seq) == doctest::Approx(std::log(2.0)));
  const auto w = plf::kd_weights_from_json(nlohmann::json::parse(R"({"alpha_kl": 0.5})"));
  CHECK(w.alpha_kl == 0.5);
  CHECK(w.alpha_pl == 1.0);
  CHECK_THROWS_AS(plf::distribution_sequence_from_json(nlohmann::json::parse(R"({"labels": [-1]})")),
                  plf::DataError);
}
