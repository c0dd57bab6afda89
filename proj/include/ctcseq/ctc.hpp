// ctcseq/ctc.hpp — CTC loss, gradient, alignment semantics, validity.
//
// The label-sequence probability is the sum over all frame alignments that
// collapse to the labels; the loss is its negative log. All recursions run in
// log space over the blank-extended sequence [blank, y1, blank, ..., yU, blank].
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctcseq/common.hpp"
#include "ctcseq/logsumexp.hpp"
#include "ctcseq/matrix.hpp"

namespace ctcseq {

// T x (V+1) per-frame log-probabilities; the blank column is the last one.
struct LogProbLattice {
  Matrix log_probs;

  std::size_t num_frames() const { return log_probs.rows; }
  int num_tokens() const { return static_cast<int>(log_probs.cols) - 1; }
  int blank_id() const { return static_cast<int>(log_probs.cols) - 1; }
};

struct LabelSequence {
  std::vector<int> ids;  // in [0, V), never the blank

  std::size_t size() const { return ids.size(); }
  bool operator==(const LabelSequence& o) const { return ids == o.ids; }
};

struct CtcResult {
  double loss = 0.0;
  // d loss / d score, where the lattice rows are the log-softmax of the
  // scores; equals p - gamma with gamma the state posterior.
  std::optional<Matrix> grad;
};

// Merge adjacent repeats, then delete blanks.
inline LabelSequence collapse_alignment(std::span<const int> alignment, int blank_id) {
  LabelSequence out;
  int prev = -1;
  for (int id : alignment) {
    if (id != prev && id != blank_id) out.ids.push_back(id);
    prev = id;
  }
  return out;
}

// Minimum number of frames any alignment of the labels needs: one per label
// plus one separating blank per adjacent repeat.
inline std::size_t min_alignment_length(const LabelSequence& labels) {
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < labels.ids.size(); ++i)
    if (labels.ids[i] == labels.ids[i - 1]) ++repeats;
  return labels.ids.size() + repeats;
}

inline bool ctc_validity(std::size_t num_frames, const LabelSequence& labels) {
  return num_frames >= min_alignment_length(labels);
}

inline void validate_lattice(const LogProbLattice& lattice) {
  for (std::size_t t = 0; t < lattice.log_probs.rows; ++t) {
    const double* row = lattice.log_probs.row(t);
    double sum = 0.0;
    for (std::size_t k = 0; k < lattice.log_probs.cols; ++k) {
      if (row[k] > 1e-12)
        throw contract_violation("lattice row " + std::to_string(t) +
                                 " has a positive log-probability");
      sum += std::exp(row[k]);
    }
    if (std::abs(sum - 1.0) > 1e-5 + 1e-9)
      throw contract_violation("lattice row " + std::to_string(t) +
                               " is not a normalized distribution (sum " +
                               std::to_string(sum) + ")");
  }
}

namespace detail {

inline void check_labels(const LabelSequence& labels, int num_tokens) {
  for (int id : labels.ids)
    if (id < 0 || id >= num_tokens)
      throw invalid_argument_error("label id " + std::to_string(id) +
                                   " outside [0, " + std::to_string(num_tokens) + ")");
}

}  // namespace detail

inline CtcResult ctc_loss(const LogProbLattice& lattice, const LabelSequence& labels,
                          bool want_grad = false) {
  validate_lattice(lattice);
  detail::check_labels(labels, lattice.num_tokens());
  const std::size_t T = lattice.num_frames();
  if (!ctc_validity(T, labels))
    throw infeasible_target_error(
        "label sequence needs at least " + std::to_string(min_alignment_length(labels)) +
        " frames but the lattice has " + std::to_string(T));

  CtcResult result;
  if (T == 0) {  // only the empty target is reachable, with probability one
    if (want_grad) result.grad = Matrix(0, lattice.log_probs.cols);
    return result;
  }

  const int blank = lattice.blank_id();
  const std::size_t U = labels.size();
  const std::size_t S = 2 * U + 1;
  const Matrix& lp = lattice.log_probs;

  auto lab = [&](std::size_t s) -> int {
    return (s % 2 == 0) ? blank : labels.ids[(s - 1) / 2];
  };
  // A state may be entered from two below only when it is a non-blank that
  // differs from the non-blank two states back.
  auto allows_skip = [&](std::size_t s) -> bool {
    return s % 2 == 1 && s >= 2 && lab(s) != lab(s - 2);
  };

  Matrix alpha(T, S, kLogZero);
  alpha(0, 0) = lp(0, static_cast<std::size_t>(blank));
  if (S > 1) alpha(0, 1) = lp(0, static_cast<std::size_t>(lab(1)));
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double acc = alpha(t - 1, s);
      if (s >= 1) acc = log_add(acc, alpha(t - 1, s - 1));
      if (s >= 2 && allows_skip(s)) acc = log_add(acc, alpha(t - 1, s - 2));
      alpha(t, s) = acc == kLogZero
                        ? kLogZero
                        : acc + lp(t, static_cast<std::size_t>(lab(s)));
    }
  }

  double log_p = alpha(T - 1, S - 1);
  if (S > 1) log_p = log_add(log_p, alpha(T - 1, S - 2));
  result.loss = -log_p;

  if (!want_grad) return result;

  Matrix beta(T, S, kLogZero);
  beta(T - 1, S - 1) = 0.0;
  if (S > 1) beta(T - 1, S - 2) = 0.0;
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double acc = beta(t + 1, s) + lp(t + 1, static_cast<std::size_t>(lab(s)));
      if (s + 1 < S)
        acc = log_add(acc, beta(t + 1, s + 1) + lp(t + 1, static_cast<std::size_t>(lab(s + 1))));
      if (s + 2 < S && allows_skip(s + 2))
        acc = log_add(acc, beta(t + 1, s + 2) + lp(t + 1, static_cast<std::size_t>(lab(s + 2))));
      beta(t, s) = acc;
    }
  }

  // gamma(t, k) = P(state with symbol k at frame t | X, Y); the gradient of
  // the loss w.r.t. the pre-softmax score is softmax - gamma.
  Matrix grad(T, lp.cols);
  if (log_p == kLogZero) {
    // Unreachable only through -inf lattice entries: loss is +inf and the
    // gradient is undefined; return zeros rather than NaNs.
    result.grad = std::move(grad);
    return result;
  }
  Matrix log_gamma(T, lp.cols, kLogZero);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t s = 0; s < S; ++s) {
      const auto k = static_cast<std::size_t>(lab(s));
      log_gamma(t, k) = log_add(log_gamma(t, k), alpha(t, s) + beta(t, s));
    }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < lp.cols; ++k) {
      double gamma = log_gamma(t, k) == kLogZero ? 0.0 : std::exp(log_gamma(t, k) - log_p);
      grad(t, k) = std::exp(lp(t, k)) - gamma;
    }
  result.grad = std::move(grad);
  return result;
}

// The naive computation the dynamic program replaces: enumerate every
// (V+1)^T alignment and sum the probabilities of those that collapse to the
// labels. Summation order is the enumeration order, so results are
// bit-deterministic.
inline double brute_force_ctc(const LogProbLattice& lattice, const LabelSequence& labels) {
  const std::size_t T = lattice.num_frames();
  const std::size_t n_syms = lattice.log_probs.cols;
  detail::check_labels(labels, lattice.num_tokens());

  double combos = 1.0;
  for (std::size_t t = 0; t < T; ++t) {
    combos *= static_cast<double>(n_syms);
    if (combos > 1e7)
      throw invalid_argument_error("alignment enumeration too large: (V+1)^T exceeds 1e7");
  }

  const int blank = lattice.blank_id();
  std::vector<int> alignment(T, 0);
  double total = 0.0;
  while (true) {
    // does this alignment collapse to the labels?
    std::size_t u = 0;
    int prev = -1;
    bool match = true;
    for (std::size_t t = 0; t < T; ++t) {
      int id = alignment[t];
      if (id != prev && id != blank) {
        if (u >= labels.size() || labels.ids[u] != id) {
          match = false;
          break;
        }
        ++u;
      }
      prev = id;
    }
    if (match && u == labels.size()) {
      double log_prob = 0.0;
      for (std::size_t t = 0; t < T; ++t)
        log_prob += lattice.log_probs(t, static_cast<std::size_t>(alignment[t]));
      total += std::exp(log_prob);
    }
    // odometer increment
    std::size_t pos = 0;
    for (; pos < T; ++pos) {
      if (++alignment[pos] < static_cast<int>(n_syms)) break;
      alignment[pos] = 0;
    }
    if (pos == T) break;
  }
  return total > 0.0 ? -std::log(total) : std::numeric_limits<double>::infinity();
}

}  // namespace ctcseq
