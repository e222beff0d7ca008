#pragma once

// Curriculum schedule (progressive audio replacement), dataset-to-sample
// assembly, and the Adam training loop with CSV metrics and checkpoints.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "text2lip/landmark_data.hpp"
#include "text2lip/model_stack.hpp"
#include "text2lip/text_frontend.hpp"

namespace t2l {

// Linear interpolation from p_start at t=0 to p_end at t=T, clamped to
// [0,1]. Throws InvalidSchedule on p_start > p_end, bad bounds, or t
// outside [0, T].
double p_drop_at(int t, int total_steps, double p_start, double p_end);

// i.i.d. Bernoulli keep mask: entry 1.0 with probability 1 - p_drop.
std::vector<double> draw_mask(int n, double p_drop, Rng& rng);

// The three data tables the text front-end needs, loaded from one directory
// (lexicon_en.tsv, lts_rules_en.tsv, visemes_sapi22.tsv).
struct FrontendBundle {
  Lexicon lexicon;
  LtsRules rules;
  VisemeTable table;
};
FrontendBundle load_frontend(const std::filesystem::path& data_dir);

// Reads one split of a manifest into training samples: text through the
// front-end, landmarks normalized per sequence, audio features from the
// precomputed file or the wav when present. When given, `infos` receives
// the per-sequence normalization transforms in sample order.
std::vector<TrainSample> load_split_samples(const DatasetManifest& manifest,
                                            const FrontendBundle& fe,
                                            const std::string& split,
                                            const ModelConfig& cfg,
                                            std::vector<NormalizeInfo>* infos = nullptr);

struct TrainOptions {
  int total_steps = 2000;  // optimizer steps, the schedule's T
  double p_start = 0.0;
  double p_end = 1.0;
  int batch_size = 128;  // truncated to the dataset size
  double lr = 1e-3;
  double clip_norm = 0.0;       // global gradient-norm cap; 0 disables
  double velocity_weight = 0.0; // optional first-difference loss term
  int checkpoint_every = 500;   // also the validation cadence; <=0 = final only
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  // observer called after every optimizer step (1-based); progress display
  // only, never part of the training computation
  std::function<void(int step, double p_drop, double loss)> on_step;
};

struct TrainResult {
  std::vector<double> losses;  // teacher-forced train loss, one per step
  double initial_loss = 0.0;   // step 1, before any update
  double final_loss = 0.0;     // last step
  double final_val_mpjpe = 0.0;
  int clip_events = 0;
  std::filesystem::path checkpoint_path;
  std::filesystem::path metrics_path;
};

// Runs the full curriculum. Writes out_dir/checkpoint.bin (rolling, atomic)
// and out_dir/metrics.csv with columns step,p_drop,train_loss,val_mpjpe
// (validation column filled at checkpoint steps; it is the autoregressive
// audio-free MPJPE on the val split, train split when no val exists).
// Throws TrainingDiverged with the step index when the loss stops being
// finite.
TrainResult train(const DatasetManifest& manifest, const FrontendBundle& fe,
                  const ModelConfig& cfg, const TrainOptions& opt);

}  // namespace t2l
