// ctcseq/decode.hpp — blank-aware decoders over a log-probability lattice.
#pragma once

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "ctcseq/ctc.hpp"
#include "ctcseq/logsumexp.hpp"

namespace ctcseq {

struct DecodeResult {
  LabelSequence labels;
  double log_prob = 0.0;
};

// Per-frame argmax (ties to the lowest id), collapsed; log_prob is the score
// of the best path, not of the labeling.
inline DecodeResult greedy_decode_scored(const LogProbLattice& lattice) {
  const Matrix& lp = lattice.log_probs;
  std::vector<int> path(lp.rows);
  double score = 0.0;
  for (std::size_t t = 0; t < lp.rows; ++t) {
    const double* row = lp.row(t);
    std::size_t best = 0;
    for (std::size_t k = 1; k < lp.cols; ++k)
      if (row[k] > row[best]) best = k;
    path[t] = static_cast<int>(best);
    score += row[best];
  }
  return {collapse_alignment(path, lattice.blank_id()), score};
}

inline LabelSequence greedy_decode(const LogProbLattice& lattice) {
  return greedy_decode_scored(lattice).labels;
}

// Prefix beam search without a language model. Each surviving prefix carries
// separate mass for "ends in blank" and "ends in its last token", so all
// alignments of a prefix are merged. Pruning keeps the beam_width prefixes
// with the highest total mass (ties broken lexicographically for
// determinism). log_prob is the merged mass of the returned labeling.
inline DecodeResult beam_search_decode_scored(const LogProbLattice& lattice,
                                              std::size_t beam_width) {
  if (beam_width == 0) throw invalid_argument_error("beam width must be >= 1");
  const Matrix& lp = lattice.log_probs;
  const int blank = lattice.blank_id();
  const int V = lattice.num_tokens();

  struct Mass {
    double blank = kLogZero;     // alignments of this prefix ending in blank
    double nonblank = kLogZero;  // alignments ending in the prefix's last token
    double total() const { return log_add(blank, nonblank); }
  };

  using Beam = std::map<std::vector<int>, Mass>;
  Beam beam;
  beam[{}] = Mass{0.0, kLogZero};  // empty prefix: mass one, all "blank-ended"

  for (std::size_t t = 0; t < lp.rows; ++t) {
    const double* row = lp.row(t);
    Beam next;
    for (const auto& [prefix, mass] : beam) {
      const double p_any = mass.total();
      // stay on blank: prefix unchanged
      {
        Mass& m = next[prefix];
        m.blank = log_add(m.blank, p_any + row[blank]);
      }
      for (int k = 0; k < V; ++k) {
        const double pk = row[static_cast<std::size_t>(k)];
        if (!prefix.empty() && prefix.back() == k) {
          // same token again: either extends the existing emission
          // (prefix unchanged) or starts a new one after a blank
          Mass& same = next[prefix];
          same.nonblank = log_add(same.nonblank, mass.nonblank + pk);
          std::vector<int> grown = prefix;
          grown.push_back(k);
          Mass& ext = next[grown];
          ext.nonblank = log_add(ext.nonblank, mass.blank + pk);
        } else {
          std::vector<int> grown = prefix;
          grown.push_back(k);
          Mass& ext = next[grown];
          ext.nonblank = log_add(ext.nonblank, p_any + pk);
        }
      }
    }
    if (next.size() > beam_width) {
      std::vector<std::pair<std::vector<int>, Mass>> entries(next.begin(), next.end());
      std::stable_sort(entries.begin(), entries.end(),
                       [](const auto& a, const auto& b) {
                         double ta = a.second.total(), tb = b.second.total();
                         if (ta != tb) return ta > tb;
                         return a.first < b.first;
                       });
      entries.resize(beam_width);
      next = Beam(entries.begin(), entries.end());
    }
    beam = std::move(next);
  }

  auto best = beam.begin();
  for (auto it = std::next(beam.begin()); it != beam.end(); ++it)
    if (it->second.total() > best->second.total()) best = it;
  return {LabelSequence{best->first}, best->second.total()};
}

inline LabelSequence beam_search_decode(const LogProbLattice& lattice,
                                        std::size_t beam_width) {
  return beam_search_decode_scored(lattice, beam_width).labels;
}

}  // namespace ctcseq
