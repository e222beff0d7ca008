#include "text2lip/curriculum_training.hpp"

#include <algorithm>
#include <cmath>

#include "text2lip/audio_dsp.hpp"
#include "text2lip/checkpoint.hpp"
#include "text2lip/errors.hpp"
#include "text2lip/eval_metrics.hpp"
#include "text2lip/io_util.hpp"

namespace t2l {

double p_drop_at(int t, int total_steps, double p_start, double p_end) {
  if (total_steps < 1)
    throw InvalidSchedule("schedule: total steps must be positive");
  if (p_start < 0.0 || p_end > 1.0)
    throw InvalidSchedule("schedule: probabilities must lie in [0, 1]");
  if (p_start > p_end)
    throw InvalidSchedule("schedule: p_start " + fmt_g17(p_start) +
                          " exceeds p_end " + fmt_g17(p_end));
  if (t < 0 || t > total_steps)
    throw InvalidSchedule("schedule: step " + std::to_string(t) +
                          " outside [0, " + std::to_string(total_steps) + "]");
  double p = p_start + (p_end - p_start) * double(t) / double(total_steps);
  return std::min(1.0, std::max(0.0, p));
}

std::vector<double> draw_mask(int n, double p_drop, Rng& rng) {
  std::vector<double> mask(static_cast<std::size_t>(n < 0 ? 0 : n));
  for (auto& keep : mask) keep = rng.bernoulli(1.0 - p_drop) ? 1.0 : 0.0;
  return mask;
}

FrontendBundle load_frontend(const std::filesystem::path& data_dir) {
  return FrontendBundle{Lexicon::load(data_dir / "lexicon_en.tsv"),
                        LtsRules::load(data_dir / "lts_rules_en.tsv"),
                        load_viseme_table(data_dir / "visemes_sapi22.tsv")};
}

std::vector<TrainSample> load_split_samples(const DatasetManifest& manifest,
                                            const FrontendBundle& fe,
                                            const std::string& split,
                                            const ModelConfig& cfg,
                                            std::vector<NormalizeInfo>* infos) {
  if (fe.table.class_count != cfg.viseme_vocab)
    throw ConfigMismatch("viseme table has " +
                         std::to_string(fe.table.class_count) +
                         " classes, config expects " +
                         std::to_string(cfg.viseme_vocab));
  std::vector<TrainSample> out;
  for (const ManifestEntry* e : manifest.split_entries(split)) {
    TrainSample s;
    s.id = e->id;
    std::vector<std::string> tokens = normalize_text(e->text);
    if (tokens.empty())
      throw DataError("entry '" + e->id + "': text has no usable tokens");
    PhonemeSequence ph = text_to_phonemes(tokens, fe.lexicon, fe.rules);
    s.visemes = phonemes_to_visemes(ph, fe.table).visemes;

    NormalizeInfo info;
    s.landmarks = normalize_landmarks(
        read_landmarks_csv(manifest.root / e->landmark_path), &info);
    if (infos) infos->push_back(info);

    if (!e->features_path.empty()) {
      s.audio = read_features(manifest.root / e->features_path);
    } else if (!e->wav_path.empty()) {
      s.audio = mfcc(load_wav(manifest.root / e->wav_path), MfccConfig{});
    }
    if (s.audio.n > 0 && s.audio.d != cfg.mfcc_dim)
      throw DataError("entry '" + e->id + "': audio feature dim " +
                      std::to_string(s.audio.d) + " vs config " +
                      std::to_string(cfg.mfcc_dim));
    out.push_back(std::move(s));
  }
  return out;
}

namespace {
// autoregressive audio-free error against normalized ground truth
double validate_autoregressive(const std::vector<TrainSample>& samples,
                               const ModelConfig& cfg,
                               const ParamStore& params) {
  double sum = 0.0;
  for (const auto& s : samples) {
    LandmarkSequence pred = infer_landmarks(
        s.visemes, s.landmarks.n_frames, nullptr, cfg, params);
    sum += mpjpe(pred, s.landmarks);
  }
  return sum / double(samples.size());
}

void set_reference_tensors(ParamStore& params,
                           const std::vector<TrainSample>& samples,
                           const std::vector<NormalizeInfo>& infos) {
  auto& neutral = params.at("neutral_frame").data();
  std::fill(neutral.begin(), neutral.end(), 0.0);
  double frames = 0.0;
  for (const auto& s : samples) {
    for (int m = 0; m < s.landmarks.n_frames; ++m)
      for (int c = 0; c < kFrameDim; ++c) neutral[c] += s.landmarks.at(m, c);
    frames += s.landmarks.n_frames;
  }
  for (auto& v : neutral) v /= frames;

  auto& offset = params.at("norm.offset").data();
  auto& scale = params.at("norm.scale").data();
  offset[0] = offset[1] = 0.0;
  scale[0] = 0.0;
  for (const auto& info : infos) {
    offset[0] += info.offset_x / double(infos.size());
    offset[1] += info.offset_y / double(infos.size());
    scale[0] += info.scale / double(infos.size());
  }
}
}  // namespace

TrainResult train(const DatasetManifest& manifest, const FrontendBundle& fe,
                  const ModelConfig& cfg, const TrainOptions& opt) {
  cfg.validate();
  p_drop_at(0, opt.total_steps, opt.p_start, opt.p_end);  // checks the schedule
  if (opt.batch_size < 1) throw DataError("train: batch_size must be >= 1");
  if (opt.lr <= 0.0) throw DataError("train: learning rate must be positive");
  if (opt.out_dir.empty()) throw DataError("train: output directory required");
  std::filesystem::create_directories(opt.out_dir);

  std::vector<NormalizeInfo> infos;
  std::vector<TrainSample> samples =
      load_split_samples(manifest, fe, "train", cfg, &infos);
  if (samples.empty()) throw DataError("train: train split is empty");
  std::vector<TrainSample> val = load_split_samples(manifest, fe, "val", cfg);
  const std::vector<TrainSample>& val_ref = val.empty() ? samples : val;

  Rng rng(opt.seed);
  ParamStore params = init_params(cfg, rng);
  set_reference_tensors(params, samples, infos);

  int batch = std::min<int>(opt.batch_size, static_cast<int>(samples.size()));
  Adam adam(opt.lr);
  TrainResult res;
  res.checkpoint_path = opt.out_dir / "checkpoint.bin";
  res.metrics_path = opt.out_dir / "metrics.csv";
  std::string csv = "step,p_drop,train_loss,val_mpjpe\n";

  for (int t = 0; t < opt.total_steps; ++t) {
    double p = p_drop_at(t, opt.total_steps, opt.p_start, opt.p_end);
    params.zero_grad();
    double step_loss = 0.0;
    std::size_t start =
        (static_cast<std::size_t>(t) * batch) % samples.size();
    for (int b = 0; b < batch; ++b) {
      const TrainSample& s = samples[(start + b) % samples.size()];
      std::vector<double> mask;
      const std::vector<double>* mask_ptr = nullptr;
      if (s.audio.n > 0) {
        mask = draw_mask(s.audio.n, p, rng);
        mask_ptr = &mask;
      }
      ForwardResult r = forward_train(s, cfg, params, p, rng,
                                      opt.velocity_weight, mask_ptr);
      double v = r.loss.item();
      if (!std::isfinite(v))
        throw TrainingDiverged(t + 1, "loss is not finite on sample '" +
                                          s.id + "'");
      backward(scale(r.loss, 1.0 / batch));
      step_loss += v / batch;
    }
    if (opt.clip_norm > 0.0 && params.clip_grad_norm(opt.clip_norm))
      ++res.clip_events;
    adam.step(params);
    res.losses.push_back(step_loss);
    if (opt.on_step) opt.on_step(t + 1, p, step_loss);

    bool cadence =
        opt.checkpoint_every > 0 && (t + 1) % opt.checkpoint_every == 0;
    bool last = t + 1 == opt.total_steps;
    std::string val_cell;
    if (cadence || last) {
      res.final_val_mpjpe = validate_autoregressive(val_ref, cfg, params);
      val_cell = fmt_g17(res.final_val_mpjpe);
      save_checkpoint(res.checkpoint_path, cfg.to_json(), params);
    }
    csv += std::to_string(t + 1) + "," + fmt_g17(p) + "," +
           fmt_g17(step_loss) + "," + val_cell + "\n";
  }

  res.initial_loss = res.losses.front();
  res.final_loss = res.losses.back();
  atomic_write_file(res.metrics_path, csv);
  return res;
}

}  // namespace t2l
