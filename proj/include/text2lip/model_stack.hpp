#pragma once

// The Text2Lip network: viseme encoder, maskable audio encoder, gated viseme
// enhancement, pseudo-audio generator, and the autoregressive landmark
// decoder, all built on the tensor graph so gradients flow end to end.

#include <json.hpp>

#include <string>
#include <vector>

#include "text2lip/audio_dsp.hpp"
#include "text2lip/landmark_data.hpp"
#include "text2lip/rng.hpp"
#include "text2lip/tensor.hpp"

namespace t2l {

struct ModelConfig {
  int d_model = 512;
  int layers = 2;
  int heads = 4;
  int viseme_vocab = 22;
  int mfcc_dim = 13;
  int landmark_dim = 136;
  int max_len = 512;

  int d_ff() const { return 2 * d_model; }
  void validate() const;  // InvalidHeads / ShapeMismatch on bad fields
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

// Fresh parameter set in a fixed insertion order (the checkpoint layout).
// Also holds the non-trainable tensors "neutral_frame", "norm.offset" and
// "norm.scale" that inference needs; they carry no gradient so the optimizer
// leaves them alone.
ParamStore init_params(const ModelConfig& cfg, Rng& rng);

// Sinusoidal table, (n, d), constant.
Tensor positional_encoding(int n, int d);

// Standard scaled dot-product attention with `heads` heads and projection
// weights at prefix + ".Wq/.Wk/.Wv/.Wo". With causal=true, position i only
// attends to keys <= i (requires equal query/key length).
Tensor multi_head_attention(const Tensor& q_in, const Tensor& kv_in,
                            const ParamStore& params, const std::string& prefix,
                            int heads, bool causal);

// id -> embedding row + bias + positional encoding
Tensor embed_visemes(const std::vector<int>& visemes, const ModelConfig& cfg,
                     const ParamStore& params);

// pre-norm transformer encoder over the embedded viseme sequence
Tensor encode_visemes(const Tensor& v_embedded, const ModelConfig& cfg,
                      const ParamStore& params);

// Projects features, adds positions, encodes, then zeroes the rows whose
// mask entry is 0. The mask applies after encoding, so a kept frame still
// saw its dropped neighbours through self-attention.
Tensor encode_audio_masked(const AudioFeatureSequence& audio,
                           const std::vector<double>& mask,
                           const ModelConfig& cfg, const ParamStore& params);

// LayerNorm(GLU(x)) with GLU(x) = (W1 x + b1) * sigmoid(W2 x + b2)
Tensor enhance_visemes(const Tensor& v_tilde, const ModelConfig& cfg,
                       const ParamStore& params);

// Attention from the (possibly fully masked) audio stream into the enhanced
// visemes, then per-frame gated fusion. Positions are re-added to the query
// so the attention stays time-aware even when the audio rows are all zero.
Tensor generate_pseudo_audio(const Tensor& a_tilde, const Tensor& v_enh,
                             const ModelConfig& cfg, const ParamStore& params);

// Full-prefix decoder pass: row m of the result predicts frame m+1 given
// input frames <= m. Each layer runs causal self-attention, cross-attention
// into the pseudo-audio, cross-attention into the visemes, then feed-forward.
// Autoregression feeds the last row back in as the next input.
Tensor decode_landmarks(const Tensor& lm_inputs, const Tensor& v_tilde,
                        const Tensor& a_pse, const ModelConfig& cfg,
                        const ParamStore& params);

struct TrainSample {
  std::string id;
  std::vector<int> visemes;
  LandmarkSequence landmarks;  // normalized coordinates, the targets
  AudioFeatureSequence audio;  // audio.n == 0 means the modality is absent
};

struct ForwardResult {
  Tensor pred;               // (M, landmark_dim), aligned to the targets
  Tensor loss;               // scalar
  std::vector<double> mask;  // Bernoulli keep mask used (empty without audio)
};

// Teacher forcing: decoder inputs are the ground-truth frames shifted right
// by one, with the stored neutral frame first. The frame mask is drawn with
// keep probability 1 - p_drop, or taken verbatim from fixed_mask when given
// (gradient checks need a reproducible mask).
ForwardResult forward_train(const TrainSample& sample, const ModelConfig& cfg,
                            const ParamStore& params, double p_drop, Rng& rng,
                            double velocity_weight = 0.0,
                            const std::vector<double>* fixed_mask = nullptr);

// Autoregressive generation of m_out frames in normalized coordinates. With
// audio == nullptr the audio stream is an all-zero matrix with one row per
// output frame, and the pseudo-audio path alone drives decoding.
LandmarkSequence infer_landmarks(const std::vector<int>& visemes, int m_out,
                                 const AudioFeatureSequence* audio,
                                 const ModelConfig& cfg,
                                 const ParamStore& params);

}  // namespace t2l
