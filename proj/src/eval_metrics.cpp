#include "text2lip/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "text2lip/errors.hpp"
#include "text2lip/io_util.hpp"

namespace t2l {

namespace {
// mean per-point Euclidean distance between two frames
double frame_cost(const LandmarkSequence& a, int i, const LandmarkSequence& b,
                  int j) {
  double sum = 0.0;
  for (int p = 0; p < kNumLandmarks; ++p) {
    double dx = a.at(i, 2 * p) - b.at(j, 2 * p);
    double dy = a.at(i, 2 * p + 1) - b.at(j, 2 * p + 1);
    sum += std::sqrt(dx * dx + dy * dy);
  }
  return sum / kNumLandmarks;
}
}  // namespace

double mpjpe(const LandmarkSequence& pred, const LandmarkSequence& gt) {
  if (pred.n_frames == 0 || gt.n_frames == 0)
    throw EmptyInput("mpjpe: empty sequence");
  if (pred.n_frames != gt.n_frames)
    throw LengthMismatch("mpjpe: " + std::to_string(pred.n_frames) + " vs " +
                         std::to_string(gt.n_frames) + " frames");
  double sum = 0.0;
  for (int m = 0; m < pred.n_frames; ++m) sum += frame_cost(pred, m, gt, m);
  return sum / pred.n_frames;
}

double dtw_p(const LandmarkSequence& pred, const LandmarkSequence& gt) {
  int n = pred.n_frames, m = gt.n_frames;
  if (n == 0 || m == 0) throw EmptyInput("dtw_p: empty sequence");

  std::vector<double> cost(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      cost[static_cast<std::size_t>(i) * m + j] = frame_cost(pred, i, gt, j);

  // dp[i*m+j] = cheapest total cost of a path of exactly L steps ending at
  // (i, j); layering on L lets us take the true minimum of total / L.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(static_cast<std::size_t>(n) * m, inf);
  std::vector<double> cur(static_cast<std::size_t>(n) * m, inf);
  prev[0] = cost[0];
  double best = (n == 1 && m == 1) ? cost[0] : inf;
  for (int L = 2; L <= n + m - 1; ++L) {
    std::fill(cur.begin(), cur.end(), inf);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        if (i == 0 && j == 0) continue;
        double from = inf;
        if (i > 0) from = std::min(from, prev[(i - 1) * m + j]);
        if (j > 0) from = std::min(from, prev[i * m + (j - 1)]);
        if (i > 0 && j > 0) from = std::min(from, prev[(i - 1) * m + (j - 1)]);
        if (from < inf)
          cur[static_cast<std::size_t>(i) * m + j] =
              from + cost[static_cast<std::size_t>(i) * m + j];
      }
    double end = cur[static_cast<std::size_t>(n - 1) * m + (m - 1)];
    if (end < inf) best = std::min(best, end / L);
    std::swap(prev, cur);
  }
  return best;
}

namespace {
// n-grams joined with an unprintable separator -> occurrence count
std::map<std::string, int> ngram_counts(const TokenList& tokens, int k) {
  std::map<std::string, int> counts;
  for (int i = 0; i + k <= static_cast<int>(tokens.size()); ++i) {
    std::string key;
    for (int j = 0; j < k; ++j) {
      if (j) key += '\x1f';
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

long clipped_matches(const TokenList& cand, const TokenList& ref, int k) {
  auto c = ngram_counts(cand, k);
  auto r = ngram_counts(ref, k);
  long matches = 0;
  for (const auto& [key, count] : c) {
    auto it = r.find(key);
    if (it != r.end()) matches += std::min(count, it->second);
  }
  return matches;
}

double brevity_penalty(long c_len, long r_len) {
  if (c_len == 0) return 0.0;
  if (c_len > r_len) return 1.0;
  return std::exp(1.0 - double(r_len) / double(c_len));
}
}  // namespace

double bleu(const TokenList& candidate, const TokenList& reference,
            int max_n) {
  if (max_n < 1) throw DataError("bleu: max_n must be >= 1");
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (int k = 1; k <= max_n; ++k) {
    long total = static_cast<long>(candidate.size()) - k + 1;
    if (total <= 0) return 0.0;  // candidate too short for this order
    long matches = clipped_matches(candidate, reference, k);
    double p;
    if (k == 1) {
      if (matches == 0) return 0.0;
      p = double(matches) / double(total);
    } else {
      // epsilon replaces zero counts only, so exact scores stay exact
      p = (matches > 0 ? double(matches) : 1e-9) / double(total);
    }
    log_sum += std::log(p) / max_n;
  }
  return brevity_penalty(static_cast<long>(candidate.size()),
                         static_cast<long>(reference.size())) *
         std::exp(log_sum);
}

double corpus_bleu(const std::vector<std::pair<TokenList, TokenList>>& pairs,
                   int max_n) {
  if (max_n < 1) throw DataError("corpus_bleu: max_n must be >= 1");
  if (pairs.empty()) return 0.0;
  long c_len = 0, r_len = 0;
  double log_sum = 0.0;
  for (int k = 1; k <= max_n; ++k) {
    long matches = 0, total = 0;
    for (const auto& [cand, ref] : pairs) {
      total += std::max<long>(0, static_cast<long>(cand.size()) - k + 1);
      matches += clipped_matches(cand, ref, k);
    }
    if (matches == 0 || total == 0) return 0.0;
    log_sum += std::log(double(matches) / double(total)) / max_n;
  }
  for (const auto& [cand, ref] : pairs) {
    c_len += static_cast<long>(cand.size());
    r_len += static_cast<long>(ref.size());
  }
  return brevity_penalty(c_len, r_len) * std::exp(log_sum);
}

double wer(const TokenList& candidate, const TokenList& reference) {
  if (reference.empty()) throw EmptyReference("wer: empty reference");
  std::size_t n = candidate.size(), m = reference.size();
  // single-row Levenshtein
  std::vector<long> row(m + 1);
  for (std::size_t j = 0; j <= m; ++j) row[j] = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    long diag = row[0];
    row[0] = static_cast<long>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      long sub = diag + (candidate[i - 1] == reference[j - 1] ? 0 : 1);
      diag = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
    }
  }
  return double(row[m]) / double(m);
}

MetricReport aggregate_report(
    std::vector<SampleMetrics> samples,
    const std::vector<std::pair<TokenList, TokenList>>& text_pairs) {
  MetricReport r;
  r.samples = std::move(samples);
  if (r.samples.empty()) return r;
  double wer_sum = 0.0;
  int wer_count = 0;
  for (const auto& s : r.samples) {
    r.mean_dtw_p += s.dtw_p;
    r.mean_mpjpe += s.mpjpe;
    if (s.has_text) {
      wer_sum += s.wer;
      ++wer_count;
    }
  }
  r.mean_dtw_p /= double(r.samples.size());
  r.mean_mpjpe /= double(r.samples.size());
  if (!text_pairs.empty()) {
    r.has_text = true;
    r.corpus_bleu1 = corpus_bleu(text_pairs, 1);
    r.corpus_bleu4 = corpus_bleu(text_pairs, 4);
    r.mean_wer = wer_count ? wer_sum / wer_count : 0.0;
  }
  return r;
}

nlohmann::json report_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["samples"] = nlohmann::json::array();
  for (const auto& s : report.samples) {
    nlohmann::json js;
    js["id"] = s.id;
    js["dtw_p"] = s.dtw_p;
    js["mpjpe"] = s.mpjpe;
    if (s.has_text) {
      js["bleu1"] = s.bleu1;
      js["bleu4"] = s.bleu4;
      js["wer"] = s.wer;
    }
    j["samples"].push_back(js);
  }
  j["mean_dtw_p"] = report.mean_dtw_p;
  j["mean_mpjpe"] = report.mean_mpjpe;
  if (report.has_text) {
    j["corpus_bleu1"] = report.corpus_bleu1;
    j["corpus_bleu4"] = report.corpus_bleu4;
    j["mean_wer"] = report.mean_wer;
  }
  return j;
}

std::string report_to_table(const MetricReport& report) {
  std::size_t idw = 6;  // fits the aggregate row label
  for (const auto& s : report.samples) idw = std::max(idw, s.id.size());

  auto pad = [&](const std::string& s, std::size_t w) {
    return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
  };
  auto num = [](double v) { return fmt_fixed(v, 6); };

  std::string out = pad("id", idw) + "  " + pad("dtw_p", 10) + "  " +
                    pad("mpjpe", 10);
  if (report.has_text)
    out += "  " + pad("bleu1", 10) + "  " + pad("bleu4", 10) + "  " +
           pad("wer", 10);
  out += '\n';
  for (const auto& s : report.samples) {
    out += pad(s.id, idw) + "  " + pad(num(s.dtw_p), 10) + "  " +
           pad(num(s.mpjpe), 10);
    if (report.has_text) {
      if (s.has_text)
        out += "  " + pad(num(s.bleu1), 10) + "  " + pad(num(s.bleu4), 10) +
               "  " + pad(num(s.wer), 10);
      else
        out += "  " + pad("-", 10) + "  " + pad("-", 10) + "  " + pad("-", 10);
    }
    out += '\n';
  }
  out += pad("corpus", idw) + "  " + pad(num(report.mean_dtw_p), 10) + "  " +
         pad(num(report.mean_mpjpe), 10);
  if (report.has_text)
    out += "  " + pad(num(report.corpus_bleu1), 10) + "  " +
           pad(num(report.corpus_bleu4), 10) + "  " +
           pad(num(report.mean_wer), 10);
  out += '\n';
  return out;
}

}  // namespace t2l
