#include "plfilter/align.hpp"

#include "plfilter/error.hpp"

namespace plf {

ErrorRate error_rate(std::string_view ref_text, std::string_view hyp_text, const NormConfig& cfg,
                     ErrorUnit unit) {
  const std::string ref = normalize(ref_text, cfg);
  const std::string hyp = normalize(hyp_text, cfg);
  ErrorRate out;
  if (unit == ErrorUnit::kWord) {
    out.counts = edit_align(word_tokens(ref), word_tokens(hyp));
  } else {
    const auto r = char_sequence(ref);
    const auto h = char_sequence(hyp);
    out.counts = edit_align(std::span<const char32_t>(r), std::span<const char32_t>(h));
  }
  out.ref_len = out.counts.ref_len;
  if (out.ref_len == 0) {
    out.defined = out.counts.insertions == 0;
    out.value = 0.0;
  } else {
    out.value = static_cast<double>(out.counts.distance()) / static_cast<double>(out.ref_len);
  }
  return out;
}

ErrorRate wer(std::string_view ref_text, std::string_view hyp_text, const NormConfig& cfg) {
  return error_rate(ref_text, hyp_text, cfg, ErrorUnit::kWord);
}

ErrorRate cer(std::string_view ref_text, std::string_view hyp_text, const NormConfig& cfg) {
  return error_rate(ref_text, hyp_text, cfg, ErrorUnit::kChar);
}

CorpusErrorRate corpus_error_rate(std::span<const std::pair<std::string, std::string>> pairs,
                                  const NormConfig& cfg, ErrorUnit unit, Aggregate aggregate) {
  CorpusErrorRate out;
  double rate_sum = 0.0;
  for (const auto& [ref, hyp] : pairs) {
    const ErrorRate r = error_rate(ref, hyp, cfg, unit);
    if (!r.defined) {
      ++out.skipped_undefined;
      continue;
    }
    if (r.ref_len == 0) {
      continue;
    }
    out.errors += r.counts.distance();
    out.ref_len += r.ref_len;
    rate_sum += r.value;
    ++out.pairs_used;
  }
  if (out.ref_len == 0) {
    throw DataError("no defined references: every pair has an empty reference");
  }
  out.value = aggregate == Aggregate::kPooled
                  ? static_cast<double>(out.errors) / static_cast<double>(out.ref_len)
                  : rate_sum / static_cast<double>(out.pairs_used);
  return out;
}

}  // namespace plf
