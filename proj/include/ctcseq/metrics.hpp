// ctcseq/metrics.hpp — token-level edit distance, CER and SER.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctcseq/common.hpp"
#include "ctcseq/tokenize.hpp"

namespace ctcseq {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_len = 0;

  std::size_t total() const { return substitutions + deletions + insertions; }
  double rate() const {
    if (ref_len == 0) throw undefined_rate_error("error rate undefined for empty reference");
    return static_cast<double>(total()) / static_cast<double>(ref_len);
  }
};

// Minimal S+D+I alignment with unit costs; among minimal alignments the one
// with fewer insertions, then fewer deletions, is reported.
inline EditCounts edit_distance(const std::vector<std::string>& ref,
                                const std::vector<std::string>& hyp) {
  struct Cost {
    std::uint32_t total, ins, del;
    bool operator<(const Cost& o) const {
      if (total != o.total) return total < o.total;
      if (ins != o.ins) return ins < o.ins;
      return del < o.del;
    }
    Cost operator+(const Cost& o) const {
      return {total + o.total, ins + o.ins, del + o.del};
    }
  };
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<Cost> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j)
    prev[j] = {static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j), 0};
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {static_cast<std::uint32_t>(i), 0, static_cast<std::uint32_t>(i)};
    for (std::size_t j = 1; j <= m; ++j) {
      Cost diag = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? Cost{0, 0, 0} : Cost{1, 0, 0});
      Cost del = prev[j] + Cost{1, 0, 1};
      Cost ins = cur[j - 1] + Cost{1, 1, 0};
      Cost best = diag;
      if (del < best) best = del;
      if (ins < best) best = ins;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  EditCounts counts;
  counts.ref_len = n;
  counts.insertions = prev[m].ins;
  counts.deletions = prev[m].del;
  counts.substitutions = prev[m].total - prev[m].ins - prev[m].del;
  return counts;
}

inline EditCounts cer_counts(const std::string& ref_text, const std::string& hyp_text) {
  auto counts = edit_distance(char_tokenize(ref_text), char_tokenize(hyp_text));
  if (counts.ref_len == 0)
    throw undefined_rate_error("CER undefined for empty reference text");
  return counts;
}

inline EditCounts ser_counts(const std::string& ref_text, const std::string& hyp_text) {
  auto counts = edit_distance(syllable_tokenize(ref_text), syllable_tokenize(hyp_text));
  if (counts.ref_len == 0)
    throw undefined_rate_error("SER undefined for empty reference text");
  return counts;
}

inline double cer(const std::string& ref_text, const std::string& hyp_text) {
  return cer_counts(ref_text, hyp_text).rate();
}

inline double ser(const std::string& ref_text, const std::string& hyp_text) {
  return ser_counts(ref_text, hyp_text).rate();
}

// Corpus-level rates pool edit operations and reference lengths across
// utterances (not a per-utterance average).
struct PooledRate {
  EditCounts totals;

  void add(const EditCounts& c) {
    totals.substitutions += c.substitutions;
    totals.deletions += c.deletions;
    totals.insertions += c.insertions;
    totals.ref_len += c.ref_len;
  }
  double rate() const { return totals.rate(); }
};

}  // namespace ctcseq
