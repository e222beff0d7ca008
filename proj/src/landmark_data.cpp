#include "text2lip/landmark_data.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "text2lip/errors.hpp"
#include "text2lip/io_util.hpp"

namespace t2l {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::string csv_header() {
  std::string h;
  for (int p = 0; p < kNumLandmarks; ++p) {
    if (p) h += ',';
    h += "x" + std::to_string(p) + ",y" + std::to_string(p);
  }
  return h;
}
}  // namespace

LandmarkSequence normalize_landmarks(const LandmarkSequence& raw,
                                     NormalizeInfo* info) {
  if (raw.n_frames < 1) throw EmptyInput("normalize_landmarks: no frames");
  double cx = 0.0, cy = 0.0;
  std::size_t n_points =
      static_cast<std::size_t>(raw.n_frames) * kNumLandmarks;
  for (std::size_t p = 0; p < n_points; ++p) {
    cx += raw.frames[2 * p];
    cy += raw.frames[2 * p + 1];
  }
  cx /= double(n_points);
  cy /= double(n_points);

  double ms = 0.0;
  for (std::size_t p = 0; p < n_points; ++p) {
    double dx = raw.frames[2 * p] - cx;
    double dy = raw.frames[2 * p + 1] - cy;
    ms += dx * dx + dy * dy;
  }
  double radius = std::sqrt(ms / double(n_points));
  if (radius < 1e-9)
    throw DegenerateInput("normalize_landmarks: all points coincident");

  LandmarkSequence out;
  out.n_frames = raw.n_frames;
  out.fps = raw.fps;
  out.frames.resize(raw.frames.size());
  for (std::size_t p = 0; p < n_points; ++p) {
    out.frames[2 * p] = (raw.frames[2 * p] - cx) / radius;
    out.frames[2 * p + 1] = (raw.frames[2 * p + 1] - cy) / radius;
  }
  if (info) {
    info->offset_x = cx;
    info->offset_y = cy;
    info->scale = radius;
  }
  return out;
}

LandmarkSequence denormalize_landmarks(const LandmarkSequence& l,
                                       const NormalizeInfo& info) {
  LandmarkSequence out;
  out.n_frames = l.n_frames;
  out.fps = l.fps;
  out.frames.resize(l.frames.size());
  for (std::size_t p = 0; 2 * p + 1 < l.frames.size(); ++p) {
    out.frames[2 * p] = l.frames[2 * p] * info.scale + info.offset_x;
    out.frames[2 * p + 1] = l.frames[2 * p + 1] * info.scale + info.offset_y;
  }
  return out;
}

LandmarkSequence read_landmarks_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(path.string() + ": empty landmark file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header())
    throw ParseError(path.string() + ": unexpected header '" + line + "'");

  LandmarkSequence seq;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    int got = 0;
    while (std::getline(row, cell, ',')) {
      double v;
      try {
        std::size_t used = 0;
        v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": bad number '" + cell + "'");
      }
      if (!std::isfinite(v))
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": non-finite coordinate");
      seq.frames.push_back(v);
      ++got;
    }
    if (got != kFrameDim)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected " + std::to_string(kFrameDim) +
                       " values, got " + std::to_string(got));
    ++seq.n_frames;
  }
  if (seq.n_frames == 0)
    throw EmptyInput(path.string() + ": no landmark rows");
  return seq;
}

void write_landmarks_csv(const std::filesystem::path& path,
                         const LandmarkSequence& seq) {
  std::string out = csv_header() + "\n";
  for (int m = 0; m < seq.n_frames; ++m) {
    for (int c = 0; c < kFrameDim; ++c) {
      if (c) out += ',';
      out += fmt_g17(seq.at(m, c));
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

std::vector<const ManifestEntry*> DatasetManifest::split_entries(
    const std::string& split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == split) out.push_back(&e);
  return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array())
    throw ParseError(path.string() + ": expected an object with 'entries'");

  DatasetManifest m;
  m.root = path.parent_path();
  std::set<std::string> seen;
  for (const auto& je : j["entries"]) {
    auto field = [&](const char* name, bool required) -> std::string {
      if (!je.contains(name)) {
        if (required)
          throw ParseError(path.string() + ": entry missing '" +
                           std::string(name) + "'");
        return "";
      }
      if (!je[name].is_string())
        throw ParseError(path.string() + ": field '" + std::string(name) +
                         "' must be a string");
      return je[name].get<std::string>();
    };
    ManifestEntry e;
    e.id = field("id", true);
    e.text = field("text", true);
    e.landmark_path = field("landmark_path", true);
    e.features_path = field("features_path", false);
    e.wav_path = field("wav_path", false);
    e.split = field("split", true);
    if (e.split != "train" && e.split != "val" && e.split != "test")
      throw ParseError(path.string() + ": entry '" + e.id +
                       "' has unknown split '" + e.split + "'");
    if (e.text.empty())
      throw ParseError(path.string() + ": entry '" + e.id + "' has no text");
    if (!seen.insert(e.id).second)
      throw DataError(path.string() + ": duplicate id '" + e.id + "'");
    for (const std::string* rel : {&e.landmark_path, &e.features_path,
                                   &e.wav_path}) {
      if (rel->empty()) continue;
      auto full = m.root / *rel;
      if (!std::filesystem::exists(full))
        throw DataError(path.string() + ": entry '" + e.id +
                        "' references missing file " + full.string());
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& m) {
  nlohmann::json j;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json je;
    je["id"] = e.id;
    je["text"] = e.text;
    je["landmark_path"] = e.landmark_path;
    if (!e.features_path.empty()) je["features_path"] = e.features_path;
    if (!e.wav_path.empty()) je["wav_path"] = e.wav_path;
    je["split"] = e.split;
    j["entries"].push_back(je);
  }
  atomic_write_file(path, j.dump(2) + "\n");
}

// ---- synthetic GRID-style data --------------------------------------------

const std::array<std::vector<std::string>, 6>& grid_slots() {
  static const std::array<std::vector<std::string>, 6> slots = {{
      {"bin", "lay", "place", "set"},
      {"blue", "green", "red", "white"},
      {"at", "by", "in", "with"},
      {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l", "m",
       "n", "o", "p", "q", "r", "s", "t", "u", "v", "x", "y", "z"},
      {"zero", "one", "two", "three", "four", "five", "six", "seven",
       "eight", "nine"},
      {"again", "now", "please", "soon"},
  }};
  return slots;
}

FrameBlend frame_blend(int n_segments, int n_frames, int frame) {
  if (n_segments < 1) throw EmptyInput("frame_blend: no segments");
  // fraction of each segment that cross-fades into a neighbour, per side
  constexpr double kFade = 0.25;
  double u = (frame + 0.5) * double(n_segments) / double(n_frames);
  int i = std::min(n_segments - 1, static_cast<int>(u));
  double frac = u - i;
  FrameBlend fb;
  fb.a = i;
  fb.b = i;
  fb.wb = 0.0;
  if (frac < kFade && i > 0) {
    fb.b = i - 1;
    fb.wb = 0.25 * (1.0 + std::cos(kPi * frac / kFade));
  } else if (frac > 1.0 - kFade && i + 1 < n_segments) {
    fb.b = i + 1;
    fb.wb = 0.25 * (1.0 + std::cos(kPi * (1.0 - frac) / kFade));
  }
  return fb;
}

namespace {
// deterministic hash -> [0, 1), used for per-class shape and embedding values
double unit_hash(std::uint64_t a, std::uint64_t b) {
  return static_cast<double>(Rng::mix(a, b) >> 11) * 0x1.0p-53;
}

void place_ellipse(std::vector<double>& f, int first, int count, double start_deg,
                   double step_deg, double cx, double cy, double rx, double ry) {
  for (int j = 0; j < count; ++j) {
    double th = (start_deg - j * step_deg) * kPi / 180.0;
    f[2 * (first + j)] = cx + rx * std::cos(th);
    f[2 * (first + j) + 1] = cy - ry * std::sin(th);
  }
}
}  // namespace

std::vector<double> face_template(int viseme_class) {
  std::vector<double> f(kFrameDim, 0.0);

  // jaw 0-16: arc from left temple around the chin
  for (int j = 0; j <= 16; ++j) {
    double a = j * kPi / 16.0;
    f[2 * j] = 320.0 - 110.0 * std::cos(a);
    f[2 * j + 1] = 240.0 + 117.0 * std::sin(a);
  }
  // brows 17-21 and 22-26, slight arch
  for (int k = 0; k <= 4; ++k) {
    double arch = 6.0 * std::sin(kPi * k / 4.0);
    f[2 * (17 + k)] = 240.0 + 15.0 * k;
    f[2 * (17 + k) + 1] = 195.0 - arch;
    f[2 * (22 + k)] = 340.0 + 15.0 * k;
    f[2 * (22 + k) + 1] = 195.0 - arch;
  }
  // nose bridge 27-30 and base 31-35
  for (int k = 0; k <= 3; ++k) {
    f[2 * (27 + k)] = 320.0;
    f[2 * (27 + k) + 1] = 215.0 + 15.0 * k;
  }
  for (int k = 0; k <= 4; ++k) {
    f[2 * (31 + k)] = 300.0 + 10.0 * k;
    f[2 * (31 + k) + 1] = 270.0 + 2.0 * std::sin(kPi * k / 4.0);
  }
  // eyes 36-41 (left) and 42-47 (right)
  place_ellipse(f, 36, 6, 180.0, 60.0, 270.0, 220.0, 18.0, 7.0);
  place_ellipse(f, 42, 6, 180.0, 60.0, 370.0, 220.0, 18.0, 7.0);

  // per-class mouth shape: silence is a closed neutral mouth, every other
  // class gets a distinct hashed openness / width / height combination
  std::uint64_t c = static_cast<std::uint64_t>(viseme_class < 0 ? 0 : viseme_class);
  double open = 0.05, width = 1.0, shift = 0.0;
  if (c != 0) {
    open = 0.10 + 0.75 * unit_hash(c, 1);
    width = 0.70 + 0.50 * unit_hash(c, 2);
    shift = 6.0 * (unit_hash(c, 3) - 0.5);
  }
  double cx = 320.0, cy = 300.0 + shift;
  double rx_out = 32.0 * width, ry_out = 10.0 + 22.0 * open;
  double rx_in = 0.72 * rx_out, ry_in = 0.75 * ry_out * open;

  // outer lip 48-59 (12 points), inner lip 60-67 (8 points)
  place_ellipse(f, 48, 12, 180.0, 30.0, cx, cy, rx_out, ry_out);
  place_ellipse(f, 60, 8, 180.0, 45.0, cx, cy, rx_in, ry_in);

  // the chin follows mouth openness a little
  static const double chin_w[5] = {3.0, 6.0, 8.0, 6.0, 3.0};
  for (int k = 0; k < 5; ++k) f[2 * (6 + k) + 1] += open * chin_w[k];
  return f;
}

LandmarkSequence render_viseme_landmarks(const std::vector<int>& visemes,
                                         int n_frames, double fps) {
  if (visemes.empty()) throw EmptyInput("render_viseme_landmarks: no visemes");
  if (n_frames < 1) throw EmptyInput("render_viseme_landmarks: no frames");

  std::vector<std::vector<double>> templates(visemes.size());
  for (std::size_t i = 0; i < visemes.size(); ++i)
    templates[i] = face_template(visemes[i]);

  LandmarkSequence seq;
  seq.n_frames = n_frames;
  seq.fps = fps;
  seq.frames.resize(static_cast<std::size_t>(n_frames) * kFrameDim);
  for (int m = 0; m < n_frames; ++m) {
    FrameBlend fb = frame_blend(static_cast<int>(visemes.size()), n_frames, m);
    const auto& ta = templates[fb.a];
    const auto& tb = templates[fb.b];
    for (int c = 0; c < kFrameDim; ++c)
      seq.at(m, c) = (1.0 - fb.wb) * ta[c] + fb.wb * tb[c];
  }
  return seq;
}

AudioFeatureSequence synth_viseme_features(const std::vector<int>& visemes,
                                           int n_frames, double fps, int dim,
                                           Rng& rng) {
  if (visemes.empty()) throw EmptyInput("synth_viseme_features: no visemes");
  auto embed = [&](int cls, int j) {
    std::uint64_t c = static_cast<std::uint64_t>(cls < 0 ? 0 : cls);
    return 2.0 * unit_hash(c * 64 + j, 0x51ed) - 1.0;
  };
  AudioFeatureSequence f;
  f.n = n_frames;
  f.d = dim;
  f.frame_hop_s = 1.0 / fps;
  f.origin = FeatureOrigin::pseudo;
  f.frames.resize(static_cast<std::size_t>(n_frames) * dim);
  for (int m = 0; m < n_frames; ++m) {
    FrameBlend fb = frame_blend(static_cast<int>(visemes.size()), n_frames, m);
    for (int j = 0; j < dim; ++j)
      f.frames[static_cast<std::size_t>(m) * dim + j] =
          (1.0 - fb.wb) * embed(visemes[fb.a], j) +
          fb.wb * embed(visemes[fb.b], j) + 0.05 * rng.normal();
  }
  return f;
}

DatasetManifest synth_dataset(const SynthSpec& spec,
                              const std::filesystem::path& out_dir,
                              const Lexicon& lex, const LtsRules& lts,
                              const VisemeTable& table) {
  if (spec.n_sentences < 1) throw DataError("synth_dataset: n_sentences < 1");
  std::filesystem::create_directories(out_dir);

  DatasetManifest m;
  m.root = out_dir;
  Rng master(spec.seed);
  for (int i = 0; i < spec.n_sentences; ++i) {
    std::string text;
    for (const auto& slot : grid_slots()) {
      if (!text.empty()) text += ' ';
      text += slot[master.uniform_int(slot.size())];
    }
    PhonemeSequence ph = text_to_phonemes(normalize_text(text), lex, lts);
    VisemeSequence vs = phonemes_to_visemes(ph, table);

    LandmarkSequence lms =
        render_viseme_landmarks(vs.visemes, spec.n_frames, spec.fps);
    Rng frng = master.fork(static_cast<std::uint64_t>(i));
    AudioFeatureSequence feats = synth_viseme_features(
        vs.visemes, spec.n_frames, spec.fps, spec.feature_dim, frng);
    // these stand in for the recorded-audio modality downstream
    feats.origin = FeatureOrigin::real;

    char id[16];
    std::snprintf(id, sizeof(id), "s%04d", i);
    ManifestEntry e;
    e.id = id;
    e.text = text;
    e.landmark_path = std::string(id) + "_landmarks.csv";
    e.features_path = std::string(id) + "_feats.bin";
    e.split = "train";
    write_landmarks_csv(out_dir / e.landmark_path, lms);
    write_features(out_dir / e.features_path, feats);
    m.entries.push_back(std::move(e));
  }

  // hold out the tail for validation and test once there is room
  int n = spec.n_sentences;
  int n_hold = (n >= 3) ? std::max(1, n / 8) : 0;
  for (int i = n - 2 * n_hold; i < n - n_hold; ++i) m.entries[i].split = "val";
  for (int i = n - n_hold; i < n; ++i) m.entries[i].split = "test";

  write_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace t2l
