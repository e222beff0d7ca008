// Command-line driver. Subcommands cover the whole pipeline -- text to
// visemes, wav to features, synthetic data, training, inference, metric
// reports, and SVG wireframe previews -- under one exit-code contract:
// 0 success, 2 input error, 3 state/config error, 4 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "text2lip/audio_dsp.hpp"
#include "text2lip/checkpoint.hpp"
#include "text2lip/curriculum_training.hpp"
#include "text2lip/errors.hpp"
#include "text2lip/eval_metrics.hpp"
#include "text2lip/io_util.hpp"
#include "text2lip/landmark_data.hpp"
#include "text2lip/model_stack.hpp"
#include "text2lip/text_frontend.hpp"

namespace fs = std::filesystem;
using namespace t2l;

namespace {

void log_kv(const std::string& key, const std::string& value) {
  std::cerr << "[text2lip] " << key << ": " << value << "\n";
}

void log_artifact(const fs::path& path) {
  log_kv("artifact", path.string() + " fnv1a64=" + to_hex(fnv1a64_file(path)));
}

// The environment variable only supplies the default; --data-dir wins.
std::string default_data_dir() {
  const char* env = std::getenv("T2L_DATA_DIR");
  return env && *env ? env : "data";
}

// %.6g: compact, scale-free, and byte-stable across runs
std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---- text2viseme -----------------------------------------------------------

struct Text2VisemeArgs {
  std::string text;
  std::string input;
  std::string out;
  std::string data_dir = default_data_dir();
  bool collapse = false;
  bool no_silence = false;
};

int cmd_text2viseme(const Text2VisemeArgs& a) {
  std::string text = a.text;
  if (!a.input.empty()) text = read_file(a.input);
  FrontendBundle fe = load_frontend(a.data_dir);

  std::vector<std::string> tokens = normalize_text(text);
  std::vector<std::string> oov;
  PhonemeSequence ph = text_to_phonemes(tokens, fe.lexicon, fe.rules, &oov);
  VisemeSequence vs = phonemes_to_visemes(ph, fe.table, a.collapse, !a.no_silence);
  for (const std::string& word : oov) log_kv("oov-fallback", word);

  std::vector<std::string> names;
  for (int id : ph.phonemes) names.push_back(inventory::symbols()[id]);
  nlohmann::json j = {{"format_version", 1},
                      {"table", fe.table.name},
                      {"tokens", tokens},
                      {"phonemes", names},
                      {"visemes", vs.visemes}};
  std::string payload = j.dump(2) + "\n";

  log_kv("config", nlohmann::json({{"collapse", a.collapse},
                                   {"silence", !a.no_silence},
                                   {"data_dir", a.data_dir}})
                       .dump());
  log_kv("seed", "none");
  if (a.out.empty()) {
    std::cout << payload;
  } else {
    atomic_write_file(a.out, payload);
    log_artifact(a.out);
  }
  return 0;
}

// ---- mfcc ------------------------------------------------------------------

struct MfccArgs {
  std::string wav;
  std::string out;
  std::string csv;
};

int cmd_mfcc(const MfccArgs& a) {
  AudioFeatureSequence f = mfcc(load_wav(a.wav), MfccConfig{});
  log_kv("config", nlohmann::json({{"wav", a.wav}, {"out", a.out}}).dump());
  log_kv("seed", "none");
  log_kv("frames", std::to_string(f.n) + " x " + std::to_string(f.d));
  write_features(a.out, f);
  log_artifact(a.out);
  fs::path sidecar = fs::path(a.out).replace_extension(".json");
  log_artifact(sidecar);
  if (!a.csv.empty()) {
    write_features_csv(a.csv, f);
    log_artifact(a.csv);
  }
  return 0;
}

// ---- synth-data ------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::string data_dir = default_data_dir();
  SynthSpec spec;
};

int cmd_synth_data(const SynthArgs& a) {
  FrontendBundle fe = load_frontend(a.data_dir);
  log_kv("config", nlohmann::json({{"sentences", a.spec.n_sentences},
                                   {"frames", a.spec.n_frames},
                                   {"out", a.out}})
                       .dump());
  log_kv("seed", std::to_string(a.spec.seed));
  DatasetManifest m = synth_dataset(a.spec, a.out, fe.lexicon, fe.rules, fe.table);
  log_kv("entries", std::to_string(m.entries.size()));
  log_artifact(fs::path(a.out) / "manifest.json");
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string out;
  std::string data_dir = default_data_dir();
  std::string config;  // optional JSON file; explicit flags override it
  ModelConfig cfg;
  TrainOptions opt;
  int log_every = 100;
};

// Accepts exactly the keys the flags cover so a typo cannot silently fall
// back to a default.
void apply_train_config(const std::string& path, TrainArgs& a) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "d_model") a.cfg.d_model = it->get<int>();
      else if (k == "layers") a.cfg.layers = it->get<int>();
      else if (k == "heads") a.cfg.heads = it->get<int>();
      else if (k == "max_len") a.cfg.max_len = it->get<int>();
      else if (k == "total_steps") a.opt.total_steps = it->get<int>();
      else if (k == "p_start") a.opt.p_start = it->get<double>();
      else if (k == "p_end") a.opt.p_end = it->get<double>();
      else if (k == "batch_size") a.opt.batch_size = it->get<int>();
      else if (k == "lr") a.opt.lr = it->get<double>();
      else if (k == "clip_norm") a.opt.clip_norm = it->get<double>();
      else if (k == "velocity_weight") a.opt.velocity_weight = it->get<double>();
      else if (k == "checkpoint_every") a.opt.checkpoint_every = it->get<int>();
      else if (k == "seed") a.opt.seed = it->get<std::uint64_t>();
      else if (k == "log_every") a.log_every = it->get<int>();
      else throw ParseError(path + ": unknown config key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

nlohmann::json train_config_json(const TrainArgs& a) {
  nlohmann::json j = a.cfg.to_json();
  j["total_steps"] = a.opt.total_steps;
  j["p_start"] = a.opt.p_start;
  j["p_end"] = a.opt.p_end;
  j["batch_size"] = a.opt.batch_size;
  j["lr"] = a.opt.lr;
  j["clip_norm"] = a.opt.clip_norm;
  j["velocity_weight"] = a.opt.velocity_weight;
  j["checkpoint_every"] = a.opt.checkpoint_every;
  return j;
}

int cmd_train(TrainArgs& a) {
  DatasetManifest manifest = load_manifest(a.manifest);
  FrontendBundle fe = load_frontend(a.data_dir);
  a.opt.out_dir = a.out;
  log_kv("config", train_config_json(a).dump());
  log_kv("seed", std::to_string(a.opt.seed));

  int every = a.log_every;
  int total = a.opt.total_steps;
  a.opt.on_step = [every, total](int step, double p, double loss) {
    if (every > 0 && (step % every == 0 || step == total))
      log_kv("step " + std::to_string(step),
             "p_drop=" + fmt6(p) + " loss=" + fmt6(loss));
  };

  TrainResult res = train(manifest, fe, a.cfg, a.opt);
  log_kv("initial_loss", fmt_g17(res.initial_loss));
  log_kv("final_loss", fmt_g17(res.final_loss));
  log_kv("final_val_mpjpe", fmt_g17(res.final_val_mpjpe));
  if (a.opt.clip_norm > 0.0)
    log_kv("clip_events", std::to_string(res.clip_events));
  log_artifact(res.checkpoint_path);
  log_artifact(res.metrics_path);
  return 0;
}

// ---- infer -----------------------------------------------------------------

struct InferArgs {
  std::string checkpoint;
  std::string text;
  std::string out;
  std::string wav;
  std::string data_dir = default_data_dir();
  int frames = 0;  // 0: take the audio length, required without audio
  // optional cross-checks against the checkpoint; -1 means "not given"
  int d_model = -1;
  int layers = -1;
  int heads = -1;
};

int cmd_infer(const InferArgs& a) {
  Checkpoint ck = load_checkpoint(a.checkpoint);
  ModelConfig cfg = ModelConfig::from_json(ck.config);
  auto check_dim = [&](const char* name, int given, int stored) {
    if (given != -1 && given != stored)
      throw ConfigMismatch(std::string(name) + " " + std::to_string(given) +
                           " does not match the checkpoint's " +
                           std::to_string(stored));
  };
  check_dim("d_model", a.d_model, cfg.d_model);
  check_dim("layers", a.layers, cfg.layers);
  check_dim("heads", a.heads, cfg.heads);

  FrontendBundle fe = load_frontend(a.data_dir);
  if (fe.table.class_count != cfg.viseme_vocab)
    throw ConfigMismatch("viseme table has " +
                         std::to_string(fe.table.class_count) +
                         " classes, checkpoint expects " +
                         std::to_string(cfg.viseme_vocab));

  std::vector<std::string> tokens = normalize_text(a.text);
  if (tokens.empty()) throw DataError("infer: text has no usable tokens");
  std::vector<std::string> oov;
  PhonemeSequence ph = text_to_phonemes(tokens, fe.lexicon, fe.rules, &oov);
  for (const std::string& word : oov) log_kv("oov-fallback", word);
  std::vector<int> visemes = phonemes_to_visemes(ph, fe.table).visemes;

  AudioFeatureSequence audio;
  const AudioFeatureSequence* audio_ptr = nullptr;
  if (!a.wav.empty()) {
    audio = mfcc(load_wav(a.wav), MfccConfig{});
    if (audio.d != cfg.mfcc_dim)
      throw ConfigMismatch("audio feature dim " + std::to_string(audio.d) +
                           " does not match the checkpoint's " +
                           std::to_string(cfg.mfcc_dim));
    audio_ptr = &audio;
  }
  int m_out = a.frames > 0 ? a.frames : (audio_ptr ? audio.n : 0);
  if (m_out <= 0)
    throw DataError("infer: --frames is required when no wav is given");

  log_kv("config", nlohmann::json({{"checkpoint", a.checkpoint},
                                   {"frames", m_out},
                                   {"audio", !a.wav.empty()},
                                   {"model", cfg.to_json()}})
                       .dump());
  log_kv("seed", "none");

  LandmarkSequence pred = infer_landmarks(visemes, m_out, audio_ptr, cfg, ck.params);

  // back to source pixel coordinates via the stored normalization constants
  NormalizeInfo info;
  info.offset_x = ck.params.at("norm.offset").data()[0];
  info.offset_y = ck.params.at("norm.offset").data()[1];
  info.scale = ck.params.at("norm.scale").data()[0];
  write_landmarks_csv(a.out, denormalize_landmarks(pred, info));
  log_artifact(a.out);
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string manifest;
  std::string out;
  std::string hyp;  // optional id<TAB>text transcripts for text metrics
  std::string split = "all";
};

std::map<std::string, std::string> load_transcripts(const std::string& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected id<TAB>text");
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

int cmd_eval(const EvalArgs& a) {
  DatasetManifest manifest = load_manifest(a.manifest);
  std::map<std::string, std::string> hyp;
  if (!a.hyp.empty()) hyp = load_transcripts(a.hyp);

  log_kv("config", nlohmann::json({{"pred", a.pred},
                                   {"gt", a.gt},
                                   {"split", a.split},
                                   {"text_metrics", !a.hyp.empty()}})
                       .dump());
  log_kv("seed", "none");

  std::vector<SampleMetrics> samples;
  std::vector<std::pair<TokenList, TokenList>> text_pairs;
  for (const ManifestEntry& e : manifest.entries) {
    if (a.split != "all" && e.split != a.split) continue;
    fs::path base = fs::path(e.landmark_path).filename();
    fs::path pred_path = fs::path(a.pred) / base;
    fs::path gt_path = fs::path(a.gt) / base;
    if (!fs::exists(pred_path))
      throw DataError("no prediction for '" + e.id + "' (" +
                      pred_path.string() + ")");
    LandmarkSequence pred = read_landmarks_csv(pred_path);
    LandmarkSequence gt = read_landmarks_csv(gt_path);

    SampleMetrics s;
    s.id = e.id;
    s.mpjpe = mpjpe(pred, gt);
    s.dtw_p = dtw_p(pred, gt);
    auto h = hyp.find(e.id);
    if (h != hyp.end()) {
      TokenList cand = normalize_text(h->second);
      TokenList ref = normalize_text(e.text);
      s.has_text = true;
      s.bleu1 = bleu(cand, ref, 1);
      s.bleu4 = bleu(cand, ref, 4);
      s.wer = wer(cand, ref);
      text_pairs.emplace_back(std::move(cand), std::move(ref));
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw DataError("eval: no samples selected");

  MetricReport report = aggregate_report(std::move(samples), text_pairs);
  fs::create_directories(a.out);
  fs::path json_path = fs::path(a.out) / "report.json";
  fs::path table_path = fs::path(a.out) / "report.txt";
  atomic_write_file(json_path, report_to_json(report).dump(2) + "\n");
  atomic_write_file(table_path, report_to_table(report));
  std::cout << report_to_table(report);
  log_artifact(json_path);
  log_artifact(table_path);
  return 0;
}

// ---- preview ---------------------------------------------------------------

struct PreviewArgs {
  std::string landmarks;
  std::string out;
};

// Standard 68-point connectivity: open chains for jaw, brows, and nose,
// closed loops for the eyes and both lip contours.
struct Chain {
  int first, last;
  bool closed;
};
constexpr Chain kChains[] = {
    {0, 16, false},   // jaw
    {17, 21, false},  // right brow
    {22, 26, false},  // left brow
    {27, 30, false},  // nose bridge
    {31, 35, false},  // nose base
    {36, 41, true},   // right eye
    {42, 47, true},   // left eye
    {48, 59, true},   // outer lip
    {60, 67, true},   // inner lip
};

std::string render_frame_svg(const LandmarkSequence& seq, int m, double min_x,
                             double min_y, double w, double h) {
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + fmt6(min_x) +
         " " + fmt6(min_y) + " " + fmt6(w) + " " + fmt6(h) + "\">\n";
  svg += "<g fill=\"none\" stroke=\"black\" stroke-width=\"" +
         fmt6(0.008 * std::max(w, h)) +
         "\" stroke-linecap=\"round\" stroke-linejoin=\"round\">\n";
  for (const Chain& c : kChains) {
    svg += c.closed ? "<polygon points=\"" : "<polyline points=\"";
    for (int p = c.first; p <= c.last; ++p) {
      if (p != c.first) svg += " ";
      svg += fmt6(seq.at(m, 2 * p)) + "," + fmt6(seq.at(m, 2 * p + 1));
    }
    svg += "\"/>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

int cmd_preview(const PreviewArgs& a) {
  LandmarkSequence seq = read_landmarks_csv(a.landmarks);
  log_kv("config",
         nlohmann::json({{"landmarks", a.landmarks}, {"out", a.out}}).dump());
  log_kv("seed", "none");

  // one shared viewBox so the face does not jump between frames
  double min_x = seq.frames[0], max_x = seq.frames[0];
  double min_y = seq.frames[1], max_y = seq.frames[1];
  for (int m = 0; m < seq.n_frames; ++m)
    for (int p = 0; p < kNumLandmarks; ++p) {
      min_x = std::min(min_x, seq.at(m, 2 * p));
      max_x = std::max(max_x, seq.at(m, 2 * p));
      min_y = std::min(min_y, seq.at(m, 2 * p + 1));
      max_y = std::max(max_y, seq.at(m, 2 * p + 1));
    }
  double pad = 0.05 * std::max({max_x - min_x, max_y - min_y, 1e-6});
  double w = (max_x - min_x) + 2 * pad;
  double h = (max_y - min_y) + 2 * pad;

  fs::create_directories(a.out);
  std::string hashes;
  for (int m = 0; m < seq.n_frames; ++m) {
    std::string svg = render_frame_svg(seq, m, min_x - pad, min_y - pad, w, h);
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d.svg", m);
    atomic_write_file(fs::path(a.out) / name, svg);
    append_u64_le(hashes, fnv1a64(svg.data(), svg.size()));
  }
  log_kv("frames", std::to_string(seq.n_frames));
  log_kv("artifact", a.out + " fnv1a64=" +
                         to_hex(fnv1a64(hashes.data(), hashes.size())));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"text-driven lip landmark pipeline"};
  app.require_subcommand(1);

  Text2VisemeArgs t2v;
  auto* c_t2v = app.add_subcommand("text2viseme", "map text to viseme ids");
  c_t2v->add_option("--text", t2v.text, "input sentence");
  c_t2v->add_option("--input", t2v.input, "read the sentence from a file");
  c_t2v->add_option("--out", t2v.out, "write JSON here instead of stdout");
  c_t2v->add_option("--data-dir", t2v.data_dir, "lexicon/rules/table directory");
  c_t2v->add_flag("--collapse", t2v.collapse, "merge adjacent repeats");
  c_t2v->add_flag("--no-silence", t2v.no_silence, "skip word-boundary silence");

  MfccArgs mf;
  auto* c_mfcc = app.add_subcommand("mfcc", "extract MFCC features from a wav");
  c_mfcc->add_option("--wav", mf.wav, "input wav (PCM16, 16 kHz)")->required();
  c_mfcc->add_option("--out", mf.out, "output feature .bin path")->required();
  c_mfcc->add_option("--csv", mf.csv, "also write a CSV copy here");

  SynthArgs sy;
  auto* c_synth = app.add_subcommand("synth-data", "generate a synthetic dataset");
  c_synth->add_option("--out", sy.out, "dataset directory")->required();
  c_synth->add_option("--data-dir", sy.data_dir, "lexicon/rules/table directory");
  c_synth->add_option("--sentences", sy.spec.n_sentences, "sentence count");
  c_synth->add_option("--frames", sy.spec.n_frames, "frames per sentence");
  c_synth->add_option("--seed", sy.spec.seed, "generator seed");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "run the curriculum training loop");
  c_train->add_option("--manifest", tr.manifest, "dataset manifest.json")->required();
  c_train->add_option("--out", tr.out, "checkpoint/metrics directory")->required();
  c_train->add_option("--data-dir", tr.data_dir, "lexicon/rules/table directory");
  c_train->add_option("--config", tr.config, "JSON defaults; flags win");
  c_train->add_option("--d-model", tr.cfg.d_model, "model width");
  c_train->add_option("--layers", tr.cfg.layers, "encoder/decoder depth");
  c_train->add_option("--heads", tr.cfg.heads, "attention heads");
  c_train->add_option("--max-len", tr.cfg.max_len, "positional table length");
  c_train->add_option("--steps", tr.opt.total_steps, "optimizer steps");
  c_train->add_option("--p-start", tr.opt.p_start, "replacement probability at step 0");
  c_train->add_option("--p-end", tr.opt.p_end, "replacement probability at the last step");
  c_train->add_option("--batch-size", tr.opt.batch_size, "samples per step");
  c_train->add_option("--lr", tr.opt.lr, "Adam learning rate");
  c_train->add_option("--clip-norm", tr.opt.clip_norm, "gradient norm cap, 0 off");
  c_train->add_option("--velocity-weight", tr.opt.velocity_weight,
                      "first-difference loss weight");
  c_train->add_option("--checkpoint-every", tr.opt.checkpoint_every,
                      "checkpoint/validation cadence");
  c_train->add_option("--seed", tr.opt.seed, "training seed");
  c_train->add_option("--log-every", tr.log_every, "progress print cadence, 0 off");

  InferArgs inf;
  auto* c_infer = app.add_subcommand("infer", "decode landmarks from text");
  c_infer->add_option("--checkpoint", inf.checkpoint, "trained checkpoint")->required();
  c_infer->add_option("--text", inf.text, "input sentence")->required();
  c_infer->add_option("--out", inf.out, "output landmark CSV")->required();
  c_infer->add_option("--wav", inf.wav, "optional conditioning wav");
  c_infer->add_option("--frames", inf.frames, "output frame count");
  c_infer->add_option("--data-dir", inf.data_dir, "lexicon/rules/table directory");
  c_infer->add_option("--d-model", inf.d_model, "must match the checkpoint");
  c_infer->add_option("--layers", inf.layers, "must match the checkpoint");
  c_infer->add_option("--heads", inf.heads, "must match the checkpoint");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "score predictions against ground truth");
  c_eval->add_option("--pred", ev.pred, "directory of predicted CSVs")->required();
  c_eval->add_option("--gt", ev.gt, "directory of ground-truth CSVs")->required();
  c_eval->add_option("--manifest", ev.manifest, "dataset manifest.json")->required();
  c_eval->add_option("--out", ev.out, "report directory")->required();
  c_eval->add_option("--hyp", ev.hyp, "id<TAB>text transcripts for text metrics");
  c_eval->add_option("--split", ev.split, "train/val/test/all");

  PreviewArgs pv;
  auto* c_preview = app.add_subcommand("preview", "render wireframe SVG frames");
  c_preview->add_option("--landmarks", pv.landmarks, "landmark CSV")->required();
  c_preview->add_option("--out", pv.out, "SVG output directory")->required();

  try {
    // the config file seeds the defaults, then normal parsing lets any
    // explicit flag override it
    for (int i = 1; i + 1 < argc; ++i)
      if (std::string(argv[i]) == "--config") apply_train_config(argv[i + 1], tr);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "[text2lip] error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*c_t2v) return cmd_text2viseme(t2v);
    if (*c_mfcc) return cmd_mfcc(mf);
    if (*c_synth) return cmd_synth_data(sy);
    if (*c_train) return cmd_train(tr);
    if (*c_infer) return cmd_infer(inf);
    if (*c_eval) return cmd_eval(ev);
    if (*c_preview) return cmd_preview(pv);
  } catch (const Error& e) {
    std::cerr << "[text2lip] error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::input: return 2;
      case ErrorKind::state: return 3;
      case ErrorKind::numeric: return 4;
    }
  } catch (const std::exception& e) {
    std::cerr << "[text2lip] error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
