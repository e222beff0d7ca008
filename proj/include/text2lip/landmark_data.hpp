#pragma once

// 68-point facial landmark sequences: normalization, CSV and manifest
// serialization, and a synthetic GRID-style dataset generator for
// desk-scale experiments.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "text2lip/audio_dsp.hpp"
#include "text2lip/rng.hpp"
#include "text2lip/text_frontend.hpp"

namespace t2l {

constexpr int kNumLandmarks = 68;
constexpr int kFrameDim = 2 * kNumLandmarks;  // x0,y0,...,x67,y67

struct LandmarkSequence {
  std::vector<double> frames;  // row-major, n_frames x 136
  int n_frames = 0;
  double fps = 25.0;

  double at(int m, int c) const {
    return frames[static_cast<std::size_t>(m) * kFrameDim + c];
  }
  double& at(int m, int c) {
    return frames[static_cast<std::size_t>(m) * kFrameDim + c];
  }
};

// Similarity transform removed by normalize_landmarks; keep it around to map
// model output back into pixel space.
struct NormalizeInfo {
  double offset_x = 0.0;
  double offset_y = 0.0;
  double scale = 1.0;
};

// Subtracts the sequence centroid and divides by the RMS point radius, both
// computed over every point of every frame. Throws DegenerateInput when the
// radius is below 1e-9 (all points coincident).
LandmarkSequence normalize_landmarks(const LandmarkSequence& raw,
                                     NormalizeInfo* info = nullptr);
LandmarkSequence denormalize_landmarks(const LandmarkSequence& l,
                                       const NormalizeInfo& info);

// CSV with a fixed "x0,y0,...,x67,y67" header, one row per frame.
LandmarkSequence read_landmarks_csv(const std::filesystem::path& path);
void write_landmarks_csv(const std::filesystem::path& path,
                         const LandmarkSequence& seq);

struct ManifestEntry {
  std::string id;
  std::string text;
  std::string landmark_path;  // relative to the manifest's directory
  std::string features_path;  // optional precomputed audio features, "" = none
  std::string wav_path;       // optional raw audio, "" = none
  std::string split;          // train | val | test
};

struct DatasetManifest {
  std::filesystem::path root;  // directory the relative paths resolve against
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split_entries(const std::string& split) const;
};

// Validates structure, unique ids, split names, and that referenced files
// exist on disk.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

// ---- synthetic GRID-style data --------------------------------------------

// Slot order: command, color, preposition, letter, digit, adverb.
const std::array<std::vector<std::string>, 6>& grid_slots();

struct SynthSpec {
  int n_sentences = 8;
  std::uint64_t seed = 7;
  int n_frames = 75;
  double fps = 25.0;
  int feature_dim = 13;
};

// Which templates a frame draws from: weight (1 - wb) on segment a, wb on
// neighbouring segment b. wb == 0 in the middle of a segment, so those
// frames are pure templates.
struct FrameBlend {
  int a = 0;
  int b = 0;
  double wb = 0.0;
};
FrameBlend frame_blend(int n_segments, int n_frames, int frame);

// Full-face pixel-space frame for one viseme class. The mouth (and a touch
// of chin) varies with the class; everything else is a fixed base face.
std::vector<double> face_template(int viseme_class);

// Concatenates per-class templates along equal-length segments with cosine
// cross-fades at the boundaries.
LandmarkSequence render_viseme_landmarks(const std::vector<int>& visemes,
                                         int n_frames, double fps = 25.0);

// Per-frame features: the blended identity embeddings of the active viseme
// classes plus seeded Gaussian noise. Stands in for recorded audio.
AudioFeatureSequence synth_viseme_features(const std::vector<int>& visemes,
                                           int n_frames, double fps, int dim,
                                           Rng& rng);

// Generates n_sentences random grammar sentences, renders landmarks and
// features for each, writes everything plus manifest.json under out_dir.
DatasetManifest synth_dataset(const SynthSpec& spec,
                              const std::filesystem::path& out_dir,
                              const Lexicon& lex, const LtsRules& lts,
                              const VisemeTable& table);

}  // namespace t2l
