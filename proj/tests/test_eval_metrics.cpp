#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "text2lip/errors.hpp"
#include "text2lip/eval_metrics.hpp"
#include "text2lip/rng.hpp"

using namespace t2l;

namespace {
LandmarkSequence random_sequence(int frames, Rng& rng, double scale = 1.0) {
  LandmarkSequence s;
  s.n_frames = frames;
  s.frames.resize(static_cast<std::size_t>(frames) * kFrameDim);
  for (auto& v : s.frames) v = scale * rng.normal();
  return s;
}

double frame_distance(const LandmarkSequence& a, int i,
                      const LandmarkSequence& b, int j) {
  double sum = 0.0;
  for (int p = 0; p < kNumLandmarks; ++p) {
    double dx = a.at(i, 2 * p) - b.at(j, 2 * p);
    double dy = a.at(i, 2 * p + 1) - b.at(j, 2 * p + 1);
    sum += std::hypot(dx, dy);
  }
  return sum / kNumLandmarks;
}

// exhaustive minimum over monotone paths of (total cost / path length)
double brute_force_dtw(const LandmarkSequence& a, const LandmarkSequence& b) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, int, double, int)> walk = [&](int i, int j,
                                                        double sum, int len) {
    sum += frame_distance(a, i, b, j);
    ++len;
    if (i == a.n_frames - 1 && j == b.n_frames - 1) {
      best = std::min(best, sum / len);
      return;
    }
    if (i + 1 < a.n_frames) walk(i + 1, j, sum, len);
    if (j + 1 < b.n_frames) walk(i, j + 1, sum, len);
    if (i + 1 < a.n_frames && j + 1 < b.n_frames) walk(i + 1, j + 1, sum, len);
  };
  walk(0, 0, 0.0, 0);
  return best;
}

// textbook full-matrix Levenshtein, kept independent of the implementation
long matrix_edit_distance(const TokenList& a, const TokenList& b) {
  std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<long>> d(n + 1, std::vector<long>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[n][m];
}
}  // namespace

TEST_CASE("mpjpe basics: zero on equality, Pythagorean on translation") {
  Rng rng(81);
  LandmarkSequence a = random_sequence(4, rng);
  CHECK(mpjpe(a, a) == 0.0);

  LandmarkSequence b = a;
  for (int m = 0; m < b.n_frames; ++m)
    for (int p = 0; p < kNumLandmarks; ++p) {
      b.at(m, 2 * p) += 3.0;
      b.at(m, 2 * p + 1) += 4.0;
    }
  CHECK(mpjpe(a, b) == doctest::Approx(5.0).epsilon(1e-12));

  LandmarkSequence short_seq = random_sequence(3, rng);
  CHECK_THROWS_AS(mpjpe(a, short_seq), LengthMismatch);
  LandmarkSequence empty;
  CHECK_THROWS_AS(mpjpe(empty, empty), EmptyInput);
}

TEST_CASE("mpjpe matches a hand-computed two-point toy case") {
  LandmarkSequence pred, gt;
  pred.n_frames = gt.n_frames = 2;
  pred.frames.assign(2 * kFrameDim, 0.0);
  gt.frames.assign(2 * kFrameDim, 0.0);
  for (int m = 0; m < 2; ++m) {
    gt.at(m, 0) = 3.0;  // point 0 moved by (3,4): distance 5
    gt.at(m, 1) = 4.0;
    gt.at(m, 3) = 1.0;  // point 1 moved by (0,1): distance 1
  }
  CHECK(mpjpe(pred, gt) == doctest::Approx(6.0 / 68.0).epsilon(1e-12));
}

TEST_CASE("dtw_p absorbs duplicated frames and matches brute force") {
  Rng rng(82);
  LandmarkSequence a = random_sequence(5, rng);
  CHECK(dtw_p(a, a) == 0.0);

  LandmarkSequence dup;
  dup.n_frames = 6;
  dup.fps = a.fps;
  for (int m = 0; m < 5; ++m) {
    for (int c = 0; c < kFrameDim; ++c) dup.frames.push_back(a.at(m, c));
    if (m == 2)
      for (int c = 0; c < kFrameDim; ++c) dup.frames.push_back(a.at(m, c));
  }
  CHECK(dtw_p(a, dup) == 0.0);

  for (int trial = 0; trial < 20; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_int(6));
    int m = 1 + static_cast<int>(rng.uniform_int(6));
    LandmarkSequence x = random_sequence(n, rng);
    LandmarkSequence y = random_sequence(m, rng);
    double got = dtw_p(x, y);
    double want = brute_force_dtw(x, y);
    CHECK(std::abs(got - want) < 1e-12);
    CHECK(std::abs(dtw_p(y, x) - got) < 1e-12);  // symmetric
  }
  LandmarkSequence empty;
  CHECK_THROWS_AS(dtw_p(a, empty), EmptyInput);
}

TEST_CASE("dtw_p never exceeds mpjpe on equal-length sequences") {
  Rng rng(83);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 2 + static_cast<int>(rng.uniform_int(10));
    LandmarkSequence x = random_sequence(n, rng);
    LandmarkSequence y = random_sequence(n, rng);
    CHECK(dtw_p(x, y) <= mpjpe(x, y) + 1e-12);
  }
}

TEST_CASE("bleu handles equality, disjoint vocab, and clipping") {
  TokenList ref = {"bin", "blue", "at", "f", "two", "now"};
  CHECK(bleu(ref, ref, 4) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bleu({"lay", "green"}, ref, 1) == 0.0);
  CHECK(bleu({}, ref, 4) == 0.0);

  // classic clipping case: all-"the" candidate against a 6-word reference
  TokenList cat_ref = {"the", "cat", "is", "on", "the", "mat"};
  TokenList the7(7, "the");
  CHECK(bleu(the7, cat_ref, 1) == doctest::Approx(2.0 / 7.0).epsilon(1e-12));

  // two-order case worked out by hand: p1 = 5/7, p2 = 3/6, BP = 1
  TokenList cand = {"the", "cat", "the", "cat", "on", "the", "mat"};
  double want = std::sqrt((5.0 / 7.0) * (3.0 / 6.0));
  CHECK(bleu(cand, cat_ref, 2) == doctest::Approx(want).epsilon(1e-12));

  // zero higher-order matches still score through the epsilon floor
  TokenList scrambled = {"cat", "the", "on", "is", "mat"};
  CHECK(bleu(scrambled, cat_ref, 2) > 0.0);
  CHECK(bleu(scrambled, cat_ref, 2) < 0.1);

  // candidates shorter than the order cannot score
  CHECK(bleu({"the", "cat"}, cat_ref, 4) == 0.0);

  // brevity penalty kicks in for short candidates: 3 of 6 words
  TokenList half = {"the", "cat", "is"};
  double bp = std::exp(1.0 - 6.0 / 3.0);
  CHECK(bleu(half, cat_ref, 1) == doctest::Approx(bp).epsilon(1e-12));
}

TEST_CASE("corpus bleu aggregates counts before taking precision") {
  TokenList r1 = {"bin", "blue", "at", "f", "two", "now"};
  TokenList r2 = {"set", "red", "by", "q", "nine", "soon"};
  std::vector<std::pair<TokenList, TokenList>> pairs = {{r1, r1}, {r2, r2}};
  CHECK(corpus_bleu(pairs, 4) == doctest::Approx(1.0).epsilon(1e-12));

  // one perfect and one disjoint sentence: matches pooled over the corpus
  TokenList miss = {"lay", "green", "in", "z", "one", "please"};
  pairs = {{r1, r1}, {miss, r2}};
  // unigram: 6 + 0 matches of 12; bigram: 5 + 0 of 10; BP = 1
  double want = std::sqrt((6.0 / 12.0) * (5.0 / 10.0));
  CHECK(corpus_bleu(pairs, 2) == doctest::Approx(want).epsilon(1e-12));
  CHECK(corpus_bleu({{miss, r2}}, 1) == 0.0);
  CHECK(corpus_bleu({}, 4) == 0.0);
}

TEST_CASE("wer equals edit distance over reference length") {
  TokenList ref = {"bin", "blue", "at", "f", "two", "now"};
  CHECK(wer(ref, ref) == 0.0);
  TokenList sub = ref;
  sub[3] = "g";
  CHECK(wer(sub, ref) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(wer({}, ref) == doctest::Approx(1.0).epsilon(1e-12));  // all deleted
  CHECK_THROWS_AS(wer(ref, {}), EmptyReference);

  Rng rng(84);
  const char* vocab[] = {"a", "b", "c"};
  for (int trial = 0; trial < 200; ++trial) {
    TokenList cand, r;
    int cn = static_cast<int>(rng.uniform_int(9));
    int rn = 1 + static_cast<int>(rng.uniform_int(8));
    for (int i = 0; i < cn; ++i) cand.push_back(vocab[rng.uniform_int(3)]);
    for (int i = 0; i < rn; ++i) r.push_back(vocab[rng.uniform_int(3)]);
    double want = double(matrix_edit_distance(cand, r)) / rn;
    CHECK(wer(cand, r) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("reports aggregate means and render as JSON and table") {
  std::vector<SampleMetrics> samples(2);
  samples[0] = {"s0000", 0.5, 1.0, true, 1.0, 0.8, 0.0};
  samples[1] = {"s0001", 1.5, 3.0, true, 0.5, 0.2, 1.0 / 3.0};
  TokenList r1 = {"bin", "blue", "at"};
  std::vector<std::pair<TokenList, TokenList>> pairs = {{r1, r1}, {r1, r1}};
  MetricReport rep = aggregate_report(samples, pairs);
  CHECK(rep.mean_dtw_p == doctest::Approx(1.0));
  CHECK(rep.mean_mpjpe == doctest::Approx(2.0));
  CHECK(rep.mean_wer == doctest::Approx(1.0 / 6.0));
  CHECK(rep.corpus_bleu1 == doctest::Approx(1.0));

  nlohmann::json j = report_to_json(rep);
  CHECK(j["samples"].size() == 2);
  CHECK(j["samples"][0]["id"] == "s0000");
  CHECK(j["mean_mpjpe"].get<double>() == doctest::Approx(2.0));
  CHECK(j.contains("corpus_bleu4"));

  std::string table = report_to_table(rep);
  CHECK(std::count(table.begin(), table.end(), '\n') == 4);  // header + 2 + corpus
  CHECK(table.find("s0001") != std::string::npos);
  CHECK(table.find("corpus") != std::string::npos);

  // without text pairs the text columns disappear
  MetricReport plain = aggregate_report(samples, {});
  CHECK_FALSE(plain.has_text);
  CHECK(report_to_table(plain).find("bleu") == std::string::npos);
  CHECK_FALSE(report_to_json(plain).contains("mean_wer"));
}
