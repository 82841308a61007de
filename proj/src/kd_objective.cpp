#include "plfilter/kd_objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plfilter/error.hpp"

namespace plf {

namespace {

double log_sum_exp(const std::vector<double>& row) {
  const double peak = *std::max_element(row.begin(), row.end());
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double x : row) sum += std::exp(x - peak);
  return peak + std::log(sum);
}

std::string at_row(std::size_t t) { return " at position " + std::to_string(t); }

// Teacher row raised to 1/T and renormalized.
std::vector<double> soften_teacher(const std::vector<double>& probs, double temperature) {
  if (temperature == 1.0) return probs;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> logits(probs.size());
  for (std::size_t v = 0; v < probs.size(); ++v) {
    logits[v] = probs[v] > 0.0 ? std::log(probs[v]) / temperature : kNegInf;
  }
  const double lse = log_sum_exp(logits);
  for (std::size_t v = 0; v < probs.size(); ++v) {
    logits[v] = probs[v] > 0.0 ? std::exp(logits[v] - lse) : 0.0;
  }
  return logits;
}

std::vector<double> soften_student(const std::vector<double>& logprobs, double temperature) {
  if (temperature == 1.0) return logprobs;
  std::vector<double> scaled(logprobs.size());
  for (std::size_t v = 0; v < logprobs.size(); ++v) scaled[v] = logprobs[v] / temperature;
  const double lse = log_sum_exp(scaled);
  for (auto& x : scaled) x -= lse;
  return scaled;
}

}  // namespace

void DistributionSequence::check() const {
  const std::size_t steps = teacher_probs.size();
  if (steps == 0) throw DataError("distribution sequence is empty");
  if (student_logprobs.size() != steps || labels.size() != steps) {
    throw DataError("teacher_probs, student_logprobs and labels must have the same length");
  }
  const std::size_t vocab = teacher_probs.front().size();
  if (vocab == 0) throw DataError("vocabulary size must be positive");
  for (std::size_t t = 0; t < steps; ++t) {
    if (teacher_probs[t].size() != vocab || student_logprobs[t].size() != vocab) {
      throw DataError("row width differs from vocabulary size" + at_row(t));
    }
    double sum = 0.0;
    for (double p : teacher_probs[t]) {
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("teacher probability outside [0, 1]" + at_row(t));
      sum += p;
    }
    if (std::abs(sum - 1.0) > kTeacherRowTolerance) {
      throw DataError("teacher row does not sum to 1" + at_row(t));
    }
    for (double s : student_logprobs[t]) {
      if (std::isnan(s) || s > 0.0) throw DataError("student log-probability must be <= 0" + at_row(t));
    }
    if (std::abs(log_sum_exp(student_logprobs[t])) > kStudentRowTolerance) {
      throw DataError("student row is not normalized" + at_row(t));
    }
    if (labels[t] >= vocab) throw DataError("label index out of range" + at_row(t));
  }
}

double kl_loss(const DistributionSequence& seq, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("temperature must be positive");
  }
  seq.check();
  double total = 0.0;
  for (std::size_t t = 0; t < seq.teacher_probs.size(); ++t) {
    const auto p = soften_teacher(seq.teacher_probs[t], temperature);
    const auto s = soften_student(seq.student_logprobs[t], temperature);
    double row = 0.0;
    for (std::size_t v = 0; v < p.size(); ++v) {
      if (p[v] == 0.0) continue;
      row += p[v] * (std::log(p[v]) - s[v]);
    }
    total += row;
  }
  return total / static_cast<double>(seq.teacher_probs.size());
}

double pl_loss(const DistributionSequence& seq) {
  seq.check();
  double total = 0.0;
  for (std::size_t t = 0; t < seq.labels.size(); ++t) {
    total += -seq.student_logprobs[t][seq.labels[t]];
  }
  return total / static_cast<double>(seq.labels.size());
}

double combine_kd(double kl, double pl, const KdWeights& weights) {
  return weights.alpha_kl * kl + weights.alpha_pl * pl;
}

KdLosses kd_loss(const DistributionSequence& seq, const KdWeights& weights) {
  KdLosses out;
  out.kl = kl_loss(seq, weights.temperature);
  out.pl = pl_loss(seq);
  out.kd = combine_kd(out.kl, out.pl, weights);
  return out;
}

namespace {

std::vector<std::vector<double>> matrix_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw DataError(std::string("'") + key + "' must be an array of rows");
  }
  std::vector<std::vector<double>> out;
  for (const auto& row : j.at(key)) {
    if (!row.is_array()) throw DataError(std::string("'") + key + "' must be an array of rows");
    std::vector<double> values;
    for (const auto& x : row) {
      if (!x.is_number()) throw DataError(std::string("'") + key + "' entries must be numbers");
      values.push_back(x.get<double>());
    }
    out.push_back(std::move(values));
  }
  return out;
}

}  // namespace

DistributionSequence distribution_sequence_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("KD input must be a JSON object");
  DistributionSequence seq;
  seq.teacher_probs = matrix_from(j, "teacher_probs");
  seq.student_logprobs = matrix_from(j, "student_logprobs");
  if (!j.contains("labels") || !j.at("labels").is_array()) {
    throw DataError("'labels' must be an array of token indices");
  }
  for (const auto& x : j.at("labels")) {
    if (!x.is_number_unsigned()) throw DataError("'labels' entries must be nonnegative integers");
    seq.labels.push_back(x.get<std::size_t>());
  }
  return seq;
}

KdWeights kd_weights_from_json(const nlohmann::json& j) {
  KdWeights w;
  if (!j.is_object()) return w;
  auto read = [&](const char* key, double& target) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) throw DataError(std::string("weight '") + key + "' must be a number");
    target = j.at(key).get<double>();
  };
  read("alpha_kl", w.alpha_kl);
  read("alpha_pl", w.alpha_pl);
  read("temperature", w.temperature);
  return w;
}

}  // namespace plf
