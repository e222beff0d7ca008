#pragma once

// Landmark-sequence and text metrics: mean per-joint position error, dynamic
// time warping distance, BLEU-n, and word error rate, plus a small report
// container with JSON / plain-table emitters.

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

#include "text2lip/landmark_data.hpp"

namespace t2l {

// Mean over frames and the 68 points of Euclidean distance. Requires equal
// frame counts.
double mpjpe(const LandmarkSequence& pred, const LandmarkSequence& gt);

// Dynamic time warping with per-frame cost = mean per-point Euclidean
// distance and steps {(1,0),(0,1),(1,1)}; returns the exact minimum over all
// monotone alignment paths of (total cost / path length). Computing the
// minimum of the normalized cost directly (rather than normalizing the
// min-total path afterwards) keeps dtw_p <= mpjpe for equal lengths.
double dtw_p(const LandmarkSequence& pred, const LandmarkSequence& gt);

using TokenList = std::vector<std::string>;

// Sentence-level BLEU with uniform weights up to max_n. Unigram precision is
// unsmoothed so disjoint vocabularies give exactly 0; higher orders replace
// zero match counts with an epsilon since these sentences are short.
double bleu(const TokenList& candidate, const TokenList& reference, int max_n);

// Corpus-level BLEU over aligned pairs, unsmoothed.
double corpus_bleu(const std::vector<std::pair<TokenList, TokenList>>& pairs,
                   int max_n);

// Word-level Levenshtein distance divided by reference length.
double wer(const TokenList& candidate, const TokenList& reference);

struct SampleMetrics {
  std::string id;
  double dtw_p = 0.0;
  double mpjpe = 0.0;
  bool has_text = false;
  double bleu1 = 0.0;
  double bleu4 = 0.0;
  double wer = 0.0;
};

struct MetricReport {
  std::vector<SampleMetrics> samples;
  double mean_dtw_p = 0.0;
  double mean_mpjpe = 0.0;
  bool has_text = false;
  double corpus_bleu1 = 0.0;
  double corpus_bleu4 = 0.0;
  double mean_wer = 0.0;
};

// Fills the aggregate fields; text_pairs may be empty when no text metrics
// were computed.
MetricReport aggregate_report(
    std::vector<SampleMetrics> samples,
    const std::vector<std::pair<TokenList, TokenList>>& text_pairs);

nlohmann::json report_to_json(const MetricReport& report);
std::string report_to_table(const MetricReport& report);

}  // namespace t2l
