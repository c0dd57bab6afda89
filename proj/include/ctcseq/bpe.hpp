// ctcseq/bpe.hpp — byte-pair-encoding training, encoding and decoding.
#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ctcseq/common.hpp"
#include "ctcseq/tokenize.hpp"
#include "ctcseq/utf8.hpp"

namespace ctcseq {

inline const std::string kBpeUnknown = "<unk>";

struct BpeModel {
  std::vector<std::pair<std::string, std::string>> merges;  // in training order
  std::vector<std::string> base_alphabet;                   // sorted single code points
  std::size_t target_size = 0;

  bool in_alphabet(const std::string& sym) const {
    return std::binary_search(base_alphabet.begin(), base_alphabet.end(), sym);
  }
};

namespace detail {

// Whitespace-delimited units; merges never cross word boundaries.
inline std::vector<std::string> split_words(const std::vector<char32_t>& cps) {
  std::vector<std::string> words;
  std::string cur;
  for (char32_t cp : cps) {
    if (is_space_cp(cp)) {
      if (!cur.empty()) {
        words.push_back(cur);
        cur.clear();
      }
    } else {
      append_utf8(cur, cp);
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

inline void apply_merge(std::vector<std::string>& syms,
                        const std::pair<std::string, std::string>& m) {
  std::size_t w = 0;
  for (std::size_t r = 0; r < syms.size();) {
    if (r + 1 < syms.size() && syms[r] == m.first && syms[r + 1] == m.second) {
      syms[w++] = m.first + m.second;
      r += 2;
    } else {
      syms[w++] = std::move(syms[r]);
      r += 1;
    }
  }
  syms.resize(w);
}

}  // namespace detail

// Greedy pair-merge training: repeatedly merge the most frequent adjacent
// symbol pair (ties broken lexicographically) until the vocabulary reaches
// target_size or no pair occurs at least twice.
inline BpeModel bpe_train(const std::vector<std::string>& texts, std::size_t target_size) {
  std::set<std::string> alphabet;
  std::map<std::string, std::size_t> word_counts;
  for (const auto& text : texts) {
    auto cps = decode_utf8(text);
    for (char32_t cp : cps) alphabet.insert(to_utf8(cp));
    for (auto& w : detail::split_words(cps)) ++word_counts[w];
  }
  if (target_size <= alphabet.size())
    throw invalid_argument_error(
        "BPE target size " + std::to_string(target_size) +
        " must exceed the base alphabet size " + std::to_string(alphabet.size()));

  BpeModel model;
  model.base_alphabet.assign(alphabet.begin(), alphabet.end());
  model.target_size = target_size;

  // word -> (symbol sequence, count)
  std::vector<std::pair<std::vector<std::string>, std::size_t>> words;
  words.reserve(word_counts.size());
  for (const auto& [w, c] : word_counts) {
    std::vector<std::string> syms;
    for (char32_t cp : decode_utf8(w)) syms.push_back(to_utf8(cp));
    words.emplace_back(std::move(syms), c);
  }

  while (model.base_alphabet.size() + model.merges.size() < target_size) {
    std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
    for (const auto& [syms, c] : words)
      for (std::size_t i = 0; i + 1 < syms.size(); ++i)
        pair_counts[{syms[i], syms[i + 1]}] += c;

    // Highest count wins; ties go to the lexicographically smallest pair,
    // which the ordered map yields first.
    const std::pair<std::string, std::string>* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [p, c] : pair_counts)
      if (c > best_count) {
        best = &p;
        best_count = c;
      }
    if (best_count < 2) break;

    std::pair<std::string, std::string> merge = *best;
    for (auto& [syms, c] : words) detail::apply_merge(syms, merge);
    model.merges.push_back(std::move(merge));
  }
  return model;
}

// Whitespace code points pass through as singleton tokens; within words the
// merges are replayed in training order. Code points outside the base
// alphabet become the dedicated unknown token.
inline std::vector<std::string> bpe_encode(const BpeModel& model, const std::string& text) {
  std::vector<std::string> out;
  std::vector<std::string> word;
  auto flush_word = [&] {
    if (word.empty()) return;
    for (const auto& m : model.merges) detail::apply_merge(word, m);
    for (auto& s : word) out.push_back(std::move(s));
    word.clear();
  };
  for (char32_t cp : decode_utf8(text)) {
    if (is_space_cp(cp)) {
      flush_word();
      std::string s = to_utf8(cp);
      out.push_back(model.in_alphabet(s) ? s : kBpeUnknown);
    } else {
      std::string s = to_utf8(cp);
      word.push_back(model.in_alphabet(s) ? s : kBpeUnknown);
    }
  }
  flush_word();
  return out;
}

inline std::string bpe_decode(const BpeModel&, const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

// Every token the encoder can emit: alphabet, merge products, unknown.
inline std::vector<std::string> bpe_all_tokens(const BpeModel& model) {
  std::vector<std::string> toks = model.base_alphabet;
  for (const auto& m : model.merges) toks.push_back(m.first + m.second);
  toks.push_back(kBpeUnknown);
  return toks;
}

// ---------------------------------------------------------------------------
// Model file: header "#bpe v1", then one merge per line "left SPACE right".
// The base alphabet is carried by the vocabulary file (its single-code-point
// tokens), so only the merges are stored here.

inline void save_bpe_model(const std::string& path, const BpeModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw validation_error("cannot write BPE model: " + path);
  out << "#bpe v1\n";
  for (const auto& [l, r] : model.merges) {
    if (l.find_first_of(" \n\r") != std::string::npos ||
        r.find_first_of(" \n\r") != std::string::npos)
      throw validation_error("BPE merge side contains whitespace");
    out << l << ' ' << r << '\n';
  }
}

inline BpeModel load_bpe_model(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open BPE model: " + path);
  std::string line;
  if (!std::getline(in, line) || (line != "#bpe v1" && line != "#bpe v1\r"))
    throw parse_error("bad BPE model header in " + path);
  BpeModel model;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size())
      throw parse_error(path + ":" + std::to_string(lineno) + ": malformed merge line");
    model.merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  for (const auto& t : vocab.tokens)
    if (t != kBpeUnknown && decode_utf8(t).size() == 1)
      model.base_alphabet.push_back(t);
  std::sort(model.base_alphabet.begin(), model.base_alphabet.end());
  model.target_size = model.base_alphabet.size() + model.merges.size();
  return model;
}

}  // namespace ctcseq
