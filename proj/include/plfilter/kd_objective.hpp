#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

namespace plf {

/// Teacher and student distributions over a T x V vocabulary grid plus the
/// pseudo-label token at each position.
struct DistributionSequence {
  std::vector<std::vector<double>> teacher_probs;     // rows sum to 1
  std::vector<std::vector<double>> student_logprobs;  // rows log-sum-exp to 0
  std::vector<std::size_t> labels;

  // Throws DataError on shape mismatch, non-stochastic rows or labels out of range.
  void check() const;
};

struct KdWeights {
  double alpha_kl = 0.8;
  double alpha_pl = 1.0;
  double temperature = 1.0;
};

struct KdLosses {
  double kl = 0.0;
  double pl = 0.0;
  double kd = 0.0;
};

inline constexpr double kTeacherRowTolerance = 1e-9;
inline constexpr double kStudentRowTolerance = 1e-6;

/// Mean over positions of KL(teacher || student), natural log. Teacher
/// probabilities are sharpened/softened as p^(1/T) and renormalized, student
/// log-probs as s/T renormalized; T == 1 uses the inputs unchanged. Zero
/// teacher entries contribute nothing.
double kl_loss(const DistributionSequence& seq, double temperature = 1.0);

/// Mean over positions of -student_logprobs[t][labels[t]].
double pl_loss(const DistributionSequence& seq);

double combine_kd(double kl, double pl, const KdWeights& weights);

KdLosses kd_loss(const DistributionSequence& seq, const KdWeights& weights = {});

// {teacher_probs, student_logprobs, labels, weights?}
DistributionSequence distribution_sequence_from_json(const nlohmann::json& j);
KdWeights kd_weights_from_json(const nlohmann::json& j);

}  // namespace plf
