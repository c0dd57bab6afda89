// ctcseq/tokenize.hpp — character and Myanmar-syllable tokenizers, vocabulary.
#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctcseq/common.hpp"
#include "ctcseq/utf8.hpp"

namespace ctcseq {

// One token per Unicode code point; whitespace code points stay as their own
// tokens so concatenation reproduces the input.
inline std::vector<std::string> char_tokenize(const std::string& text) {
  std::vector<std::string> out;
  for (char32_t cp : decode_utf8(text)) out.push_back(to_utf8(cp));
  return out;
}

// ---------------------------------------------------------------------------
// Myanmar syllable segmentation, transcribed from the sylbreak rule set into
// code-point-class logic.

namespace myanmar {

constexpr char32_t kVirama = 0x1039;  // stacks the following consonant
constexpr char32_t kAsat = 0x103A;    // kills the inherent vowel

inline bool is_consonant(char32_t c) { return c >= 0x1000 && c <= 0x1021; }
inline bool is_medial(char32_t c) { return c >= 0x103B && c <= 0x103E; }

// Independent vowels, section signs, digits, Myanmar punctuation, ASCII
// punctuation and whitespace: each starts a new token.
inline bool is_break_char(char32_t c) {
  switch (c) {
    case 0x1023: case 0x1024: case 0x1025: case 0x1026: case 0x1027:
    case 0x1029: case 0x102A: case 0x103F: case 0x104A: case 0x104B:
    case 0x104C: case 0x104D: case 0x104F:
      return true;
    default:
      break;
  }
  if (c >= 0x1040 && c <= 0x1049) return true;  // Myanmar digits
  if ((c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
      (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E))
    return true;
  return is_space_cp(c);
}

}  // namespace myanmar

// A break is inserted before a base consonant unless it is stacked (preceded
// by virama), followed by asat/virama, or followed by a medial carrying an
// asat; break characters and whitespace are singleton tokens. Concatenating
// the tokens reproduces the input exactly.
inline std::vector<std::string> syllable_tokenize(const std::string& text) {
  using namespace myanmar;
  const std::vector<char32_t> cps = decode_utf8(text);
  const std::size_t n = cps.size();
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    bool brk = false;
    if (i == 0) {
      brk = true;
    } else if (is_space_cp(cps[i - 1])) {
      brk = true;  // whitespace is a singleton token; restart after it
    } else if (is_break_char(cps[i])) {
      brk = true;
    } else if (is_consonant(cps[i])) {
      bool stacked = cps[i - 1] == kVirama;
      bool closes = (i + 1 < n && (cps[i + 1] == kAsat || cps[i + 1] == kVirama)) ||
                    (i + 2 < n && is_medial(cps[i + 1]) && cps[i + 2] == kAsat);
      brk = !stacked && !closes;
    }
    if (brk) flush();
    append_utf8(cur, cps[i]);
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary: sorted distinct tokens with the blank id one past the end.

struct Vocabulary {
  std::vector<std::string> tokens;
  std::map<std::string, int> ids;

  int size() const { return static_cast<int>(tokens.size()); }
  int blank_id() const { return static_cast<int>(tokens.size()); }

  std::optional<int> id_of(const std::string& tok) const {
    auto it = ids.find(tok);
    if (it == ids.end()) return std::nullopt;
    return it->second;
  }
  const std::string& token_of(int id) const {
    if (id < 0 || id >= size())
      throw invalid_argument_error("token id " + std::to_string(id) +
                                   " out of range [0, " + std::to_string(size()) + ")");
    return tokens[static_cast<std::size_t>(id)];
  }
};

inline Vocabulary make_vocab(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  Vocabulary v;
  for (auto& t : tokens) {
    if (t.empty()) throw validation_error("vocabulary token must be non-empty");
    v.ids.emplace(t, static_cast<int>(v.tokens.size()));
    v.tokens.push_back(std::move(t));
  }
  if (v.tokens.empty()) throw invalid_argument_error("vocabulary must be non-empty");
  return v;
}

inline Vocabulary build_vocab(const std::vector<std::vector<std::string>>& token_lists) {
  std::vector<std::string> all;
  for (const auto& list : token_lists)
    for (const auto& t : list) all.push_back(t);
  return make_vocab(std::move(all));
}

// One token per line, line index = id; the blank stays implicit at the end.
inline void save_vocab(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw validation_error("cannot write vocabulary: " + path);
  for (const auto& t : vocab.tokens) {
    if (t.find('\n') != std::string::npos || t.find('\r') != std::string::npos)
      throw validation_error("vocabulary token contains a line break");
    out << t << '\n';
  }
}

inline Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open vocabulary: " + path);
  Vocabulary v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty())
      throw validation_error(path + ":" + std::to_string(lineno) + ": empty vocabulary token");
    if (!v.ids.emplace(line, static_cast<int>(v.tokens.size())).second)
      throw validation_error(path + ":" + std::to_string(lineno) + ": duplicate token");
    v.tokens.push_back(line);
  }
  if (v.tokens.empty()) throw validation_error("empty vocabulary file: " + path);
  return v;
}

inline std::uint64_t vocab_hash(const Vocabulary& vocab) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& t : vocab.tokens) {
    h = fnv1a64(t, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

}  // namespace ctcseq
