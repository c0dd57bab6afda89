// ctcseq/corpus.hpp — manifest loading and speaker-stratified splits.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ctcseq/common.hpp"

namespace ctcseq {

struct Utterance {
  std::string clip_id;
  std::string audio_path;  // relative to the manifest's directory
  std::string transcript;
  std::string speaker_id;
};

struct SplitRatios {
  double train = 0.7;
  double dev = 0.1;
  double test = 0.2;
};

struct CorpusSplit {
  std::vector<Utterance> train, dev, test;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

namespace detail {
inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(b, e - b + 1);
}
}  // namespace detail

// Manifest format: UTF-8 TSV, one record per line,
//   clip_id <TAB> audio_path <TAB> speaker_id <TAB> transcript
// Blank lines are skipped.
inline std::vector<Utterance> load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open manifest: " + path);
  std::vector<Utterance> utts;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 4)
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected 4 tab-separated fields, got " +
                        std::to_string(fields.size()));
    Utterance u;
    u.clip_id = fields[0];
    u.audio_path = fields[1];
    u.speaker_id = fields[2];
    u.transcript = detail::trim(fields[3]);
    if (u.clip_id.empty())
      throw validation_error(path + ":" + std::to_string(lineno) + ": empty clip_id");
    if (u.transcript.empty())
      throw validation_error(path + ":" + std::to_string(lineno) +
                             ": empty transcript for clip " + u.clip_id);
    if (!seen_ids.insert(u.clip_id).second)
      throw validation_error(path + ":" + std::to_string(lineno) +
                             ": duplicate clip_id " + u.clip_id);
    utts.push_back(std::move(u));
  }
  return utts;
}

inline void write_manifest(const std::string& path, const std::vector<Utterance>& utts) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw validation_error("cannot write manifest: " + path);
  for (const auto& u : utts)
    out << u.clip_id << '\t' << u.audio_path << '\t' << u.speaker_id << '\t'
        << u.transcript << '\n';
}

namespace detail {

// Largest-remainder apportionment of n items over the ratios, with every
// split guaranteed at least one item when n >= 3.
inline std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& r) {
  const double q[3] = {r.train * n, r.dev * n, r.test * n};
  std::array<std::size_t, 3> c{};
  double rem[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    c[i] = static_cast<std::size_t>(std::floor(q[i]));
    rem[i] = q[i] - static_cast<double>(c[i]);
    assigned += c[i];
  }
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (rem[i] > rem[best]) best = i;
    ++c[best];
    rem[best] = -1.0;
    ++assigned;
  }
  if (n >= 3) {
    for (int i = 0; i < 3; ++i) {
      while (c[i] == 0) {
        int donor = 0;
        for (int j = 1; j < 3; ++j)
          if (c[j] > c[donor]) donor = j;
        --c[donor];
        ++c[i];
      }
    }
  }
  return c;
}

}  // namespace detail

// Deterministic per-speaker stratified split. Each speaker's utterances are
// shuffled and cut proportionally, so every speaker with >= 3 utterances
// lands in all three splits; smaller speakers go to train with a warning.
inline CorpusSplit split_corpus(const std::vector<Utterance>& utts,
                                const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train <= 0 || ratios.dev <= 0 || ratios.test <= 0)
    throw invalid_argument_error("split ratios must be positive");
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9)
    throw invalid_argument_error("split ratios must sum to 1");

  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < utts.size(); ++i)
    by_speaker[utts[i].speaker_id].push_back(i);

  CorpusSplit split;
  split.seed = seed;
  Rng rng(seed);
  for (auto& [speaker, idx] : by_speaker) {
    if (idx.size() < 3) {
      split.warnings.push_back("speaker " + speaker + " has only " +
                               std::to_string(idx.size()) +
                               " utterance(s); assigned to train only");
      for (std::size_t i : idx) split.train.push_back(utts[i]);
      continue;
    }
    rng.shuffle(idx);
    auto counts = detail::apportion(idx.size(), ratios);
    std::size_t p = 0;
    for (std::size_t k = 0; k < counts[0]; ++k) split.train.push_back(utts[idx[p++]]);
    for (std::size_t k = 0; k < counts[1]; ++k) split.dev.push_back(utts[idx[p++]]);
    for (std::size_t k = 0; k < counts[2]; ++k) split.test.push_back(utts[idx[p++]]);
  }
  return split;
}

}  // namespace ctcseq
