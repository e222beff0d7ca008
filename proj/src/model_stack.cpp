#include "text2lip/model_stack.hpp"

#include <cmath>

#include "text2lip/errors.hpp"

namespace t2l {

void ModelConfig::validate() const {
  if (d_model < 1 || layers < 1 || heads < 1 || viseme_vocab < 1 ||
      mfcc_dim < 1 || landmark_dim < 1 || max_len < 1)
    throw ShapeMismatch("model config: all dimensions must be positive");
  if (d_model % heads != 0)
    throw InvalidHeads("d_model " + std::to_string(d_model) +
                       " not divisible by heads " + std::to_string(heads));
}

nlohmann::json ModelConfig::to_json() const {
  return {{"d_model", d_model},     {"layers", layers},
          {"heads", heads},         {"viseme_vocab", viseme_vocab},
          {"mfcc_dim", mfcc_dim},   {"landmark_dim", landmark_dim},
          {"max_len", max_len}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  auto get = [&](const char* k, int& out) {
    if (!j.contains(k) || !j[k].is_number_integer())
      throw ParseError("model config: missing integer field '" +
                       std::string(k) + "'");
    out = j[k].get<int>();
  };
  get("d_model", c.d_model);
  get("layers", c.layers);
  get("heads", c.heads);
  get("viseme_vocab", c.viseme_vocab);
  get("mfcc_dim", c.mfcc_dim);
  get("landmark_dim", c.landmark_dim);
  get("max_len", c.max_len);
  c.validate();
  return c;
}

ParamStore init_params(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ParamStore p;
  int d = cfg.d_model;
  auto mat = [&](const std::string& name, int r, int c) {
    std::vector<double> w(static_cast<std::size_t>(r) * c);
    double s = 1.0 / std::sqrt(static_cast<double>(r));
    for (auto& x : w) x = s * rng.normal();
    p.add(name, Tensor::from_data({r, c}, std::move(w), true));
  };
  auto vec = [&](const std::string& name, int n) {
    p.add(name, Tensor::zeros({n}, true));
  };
  auto attn = [&](const std::string& pre) {
    mat(pre + ".Wq", d, d);
    mat(pre + ".Wk", d, d);
    mat(pre + ".Wv", d, d);
    mat(pre + ".Wo", d, d);
  };
  auto ffn = [&](const std::string& pre) {
    mat(pre + ".W1", d, cfg.d_ff());
    vec(pre + ".b1", cfg.d_ff());
    mat(pre + ".W2", cfg.d_ff(), d);
    vec(pre + ".b2", d);
  };

  mat("vis_embed.W", cfg.viseme_vocab, d);
  vec("vis_embed.b", d);
  mat("aud_in.W", cfg.mfcc_dim, d);
  vec("aud_in.b", d);
  mat("lm_in.W", cfg.landmark_dim, d);
  vec("lm_in.b", d);
  for (int i = 0; i < cfg.layers; ++i) {
    std::string pre = "vis_enc.L" + std::to_string(i);
    attn(pre + ".self");
    ffn(pre + ".ffn");
  }
  for (int i = 0; i < cfg.layers; ++i) {
    std::string pre = "aud_enc.L" + std::to_string(i);
    attn(pre + ".self");
    ffn(pre + ".ffn");
  }
  mat("enh.W1", d, d);
  vec("enh.b1", d);
  mat("enh.W2", d, d);
  vec("enh.b2", d);
  attn("pse.att");
  mat("pse.fuse.W", d, d);
  vec("pse.fuse.b", d);
  mat("pse.gate.W", d, d);
  vec("pse.gate.b", d);
  for (int i = 0; i < cfg.layers; ++i) {
    std::string pre = "dec.L" + std::to_string(i);
    attn(pre + ".self");
    attn(pre + ".xaud");
    attn(pre + ".xvis");
    ffn(pre + ".ffn");
  }
  mat("out.W", d, cfg.landmark_dim);
  vec("out.b", cfg.landmark_dim);

  // carried in the checkpoint but never trained
  p.add("neutral_frame", Tensor::zeros({1, cfg.landmark_dim}, false));
  p.add("norm.offset", Tensor::zeros({2}, false));
  p.add("norm.scale", Tensor::from_data({1}, {1.0}, false));
  return p;
}

Tensor positional_encoding(int n, int d) {
  std::vector<double> pe(static_cast<std::size_t>(n) * d);
  for (int pos = 0; pos < n; ++pos)
    for (int j = 0; j < d; ++j) {
      double w = pos * std::pow(10000.0, -double(2 * (j / 2)) / d);
      pe[static_cast<std::size_t>(pos) * d + j] =
          (j % 2 == 0) ? std::sin(w) : std::cos(w);
    }
  return Tensor::from_data({n, d}, std::move(pe));
}

Tensor multi_head_attention(const Tensor& q_in, const Tensor& kv_in,
                            const ParamStore& params, const std::string& prefix,
                            int heads, bool causal) {
  const Tensor& wq = params.at(prefix + ".Wq");
  int d = wq.dim(0);
  if (q_in.rank() != 2 || q_in.dim(1) != d || kv_in.rank() != 2 ||
      kv_in.dim(1) != d)
    throw ShapeMismatch("attention " + prefix + ": inputs " +
                        shape_str(q_in.shape()) + " / " +
                        shape_str(kv_in.shape()) + " vs width " +
                        std::to_string(d));
  if (d % heads != 0) throw InvalidHeads("attention " + prefix);
  int nq = q_in.dim(0), nk = kv_in.dim(0), dh = d / heads;

  Tensor q = matmul(q_in, wq);
  Tensor k = matmul(kv_in, params.at(prefix + ".Wk"));
  Tensor v = matmul(kv_in, params.at(prefix + ".Wv"));

  Tensor mask;
  if (causal) {
    if (nq != nk)
      throw ShapeMismatch("attention " + prefix +
                          ": causal mask needs equal lengths");
    std::vector<double> md(static_cast<std::size_t>(nq) * nk, 0.0);
    for (int i = 0; i < nq; ++i)
      for (int j = i + 1; j < nk; ++j)
        md[static_cast<std::size_t>(i) * nk + j] = -1e30;
    mask = Tensor::from_data({nq, nk}, std::move(md));
  }

  std::vector<Tensor> out_heads;
  out_heads.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Tensor qh = slice(q, 1, h * dh, (h + 1) * dh);
    Tensor kh = slice(k, 1, h * dh, (h + 1) * dh);
    Tensor vh = slice(v, 1, h * dh, (h + 1) * dh);
    Tensor scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(double(dh)));
    if (causal) scores = add(scores, mask);
    out_heads.push_back(matmul(softmax(scores, -1), vh));
  }
  return matmul(concat(out_heads, 1), params.at(prefix + ".Wo"));
}

namespace {
Tensor ffn_block(const Tensor& x, const ParamStore& p, const std::string& pre) {
  Tensor h = tanh(add_rows(matmul(x, p.at(pre + ".W1")), p.at(pre + ".b1")));
  return add_rows(matmul(h, p.at(pre + ".W2")), p.at(pre + ".b2"));
}

Tensor encoder_block(Tensor x, const ParamStore& p, const std::string& pre,
                     int heads) {
  Tensor n1 = layer_norm(x);
  x = add(x, multi_head_attention(n1, n1, p, pre + ".self", heads, false));
  x = add(x, ffn_block(layer_norm(x), p, pre + ".ffn"));
  return x;
}

void check_width(const Tensor& t, int d, const char* what) {
  if (t.rank() != 2 || t.dim(1) != d)
    throw ShapeMismatch(std::string(what) + ": got " + shape_str(t.shape()) +
                        ", expected width " + std::to_string(d));
}
}  // namespace

Tensor embed_visemes(const std::vector<int>& visemes, const ModelConfig& cfg,
                     const ParamStore& params) {
  if (visemes.empty()) throw EmptyInput("embed_visemes: empty sequence");
  int n = static_cast<int>(visemes.size());
  if (n > cfg.max_len)
    throw ShapeMismatch("embed_visemes: length " + std::to_string(n) +
                        " exceeds max_len " + std::to_string(cfg.max_len));
  Tensor e = embedding_lookup(params.at("vis_embed.W"), visemes);
  e = add_rows(e, params.at("vis_embed.b"));
  return add(e, positional_encoding(n, cfg.d_model));
}

Tensor encode_visemes(const Tensor& v_embedded, const ModelConfig& cfg,
                      const ParamStore& params) {
  check_width(v_embedded, cfg.d_model, "encode_visemes");
  Tensor x = v_embedded;
  for (int i = 0; i < cfg.layers; ++i)
    x = encoder_block(x, params, "vis_enc.L" + std::to_string(i), cfg.heads);
  return layer_norm(x);
}

Tensor encode_audio_masked(const AudioFeatureSequence& audio,
                           const std::vector<double>& mask,
                           const ModelConfig& cfg, const ParamStore& params) {
  if (audio.n < 1) throw EmptyInput("encode_audio_masked: no frames");
  if (audio.d != cfg.mfcc_dim)
    throw ShapeMismatch("encode_audio_masked: feature dim " +
                        std::to_string(audio.d) + " vs config " +
                        std::to_string(cfg.mfcc_dim));
  if (audio.n > cfg.max_len)
    throw ShapeMismatch("encode_audio_masked: length exceeds max_len");
  if (static_cast<int>(mask.size()) != audio.n)
    throw ShapeMismatch("encode_audio_masked: mask length " +
                        std::to_string(mask.size()) + " vs " +
                        std::to_string(audio.n) + " frames");
  for (double v : mask)
    if (v != 0.0 && v != 1.0)
      throw DataError("encode_audio_masked: mask entries must be 0 or 1");

  Tensor a = Tensor::from_data({audio.n, audio.d}, audio.frames);
  Tensor x = add_rows(matmul(a, params.at("aud_in.W")), params.at("aud_in.b"));
  x = add(x, positional_encoding(audio.n, cfg.d_model));
  for (int i = 0; i < cfg.layers; ++i)
    x = encoder_block(x, params, "aud_enc.L" + std::to_string(i), cfg.heads);
  x = layer_norm(x);
  return scale_rows(x, Tensor::from_data({audio.n}, mask));
}

Tensor enhance_visemes(const Tensor& v_tilde, const ModelConfig& cfg,
                       const ParamStore& params) {
  check_width(v_tilde, cfg.d_model, "enhance_visemes");
  Tensor lin =
      add_rows(matmul(v_tilde, params.at("enh.W1")), params.at("enh.b1"));
  Tensor gate = sigmoid(
      add_rows(matmul(v_tilde, params.at("enh.W2")), params.at("enh.b2")));
  return layer_norm(mul(lin, gate));
}

Tensor generate_pseudo_audio(const Tensor& a_tilde, const Tensor& v_enh,
                             const ModelConfig& cfg, const ParamStore& params) {
  check_width(a_tilde, cfg.d_model, "generate_pseudo_audio");
  check_width(v_enh, cfg.d_model, "generate_pseudo_audio");
  Tensor q = add(a_tilde, positional_encoding(a_tilde.dim(0), cfg.d_model));
  Tensor att =
      multi_head_attention(q, v_enh, params, "pse.att", cfg.heads, false);
  Tensor fused =
      add_rows(matmul(att, params.at("pse.fuse.W")), params.at("pse.fuse.b"));
  Tensor gate = sigmoid(
      add_rows(matmul(att, params.at("pse.gate.W")), params.at("pse.gate.b")));
  return mul(fused, gate);
}

Tensor decode_landmarks(const Tensor& lm_inputs, const Tensor& v_tilde,
                        const Tensor& a_pse, const ModelConfig& cfg,
                        const ParamStore& params) {
  check_width(lm_inputs, cfg.landmark_dim, "decode_landmarks inputs");
  check_width(v_tilde, cfg.d_model, "decode_landmarks visemes");
  check_width(a_pse, cfg.d_model, "decode_landmarks pseudo-audio");
  int m = lm_inputs.dim(0);
  if (m < 1) throw EmptyInput("decode_landmarks: empty prefix");
  if (m > cfg.max_len)
    throw ShapeMismatch("decode_landmarks: prefix exceeds max_len");

  Tensor x =
      add_rows(matmul(lm_inputs, params.at("lm_in.W")), params.at("lm_in.b"));
  x = add(x, positional_encoding(m, cfg.d_model));
  for (int i = 0; i < cfg.layers; ++i) {
    std::string pre = "dec.L" + std::to_string(i);
    Tensor n1 = layer_norm(x);
    x = add(x, multi_head_attention(n1, n1, params, pre + ".self", cfg.heads,
                                    true));
    x = add(x, multi_head_attention(layer_norm(x), a_pse, params,
                                    pre + ".xaud", cfg.heads, false));
    x = add(x, multi_head_attention(layer_norm(x), v_tilde, params,
                                    pre + ".xvis", cfg.heads, false));
    x = add(x, ffn_block(layer_norm(x), params, pre + ".ffn"));
  }
  x = layer_norm(x);
  return add_rows(matmul(x, params.at("out.W")), params.at("out.b"));
}

ForwardResult forward_train(const TrainSample& sample, const ModelConfig& cfg,
                            const ParamStore& params, double p_drop, Rng& rng,
                            double velocity_weight,
                            const std::vector<double>* fixed_mask) {
  cfg.validate();
  if (sample.visemes.empty()) {
    if (sample.audio.n == 0)
      throw MissingModality("forward_train: sample '" + sample.id +
                            "' has neither visemes nor audio");
    throw EmptyInput("forward_train: viseme sequence required");
  }
  int m = sample.landmarks.n_frames;
  if (m < 1) throw EmptyInput("forward_train: no target frames");
  if (cfg.landmark_dim != kFrameDim)
    throw ShapeMismatch("forward_train: config landmark_dim " +
                        std::to_string(cfg.landmark_dim) + " vs data " +
                        std::to_string(kFrameDim));

  Tensor gt = Tensor::from_data({m, kFrameDim}, sample.landmarks.frames);
  Tensor inputs = params.at("neutral_frame");
  if (m > 1) inputs = concat({inputs, slice(gt, 0, 0, m - 1)}, 0);

  Tensor v = encode_visemes(embed_visemes(sample.visemes, cfg, params), cfg,
                            params);
  Tensor v_enh = enhance_visemes(v, cfg, params);

  ForwardResult r;
  Tensor a_tilde;
  if (sample.audio.n > 0) {
    if (fixed_mask) {
      r.mask = *fixed_mask;
    } else {
      r.mask.resize(static_cast<std::size_t>(sample.audio.n));
      for (auto& keep : r.mask) keep = rng.bernoulli(1.0 - p_drop) ? 1.0 : 0.0;
    }
    a_tilde = encode_audio_masked(sample.audio, r.mask, cfg, params);
  } else {
    a_tilde = Tensor::zeros({m, cfg.d_model});
  }

  Tensor a_pse = generate_pseudo_audio(a_tilde, v_enh, cfg, params);
  r.pred = decode_landmarks(inputs, v, a_pse, cfg, params);

  Tensor diff = sub(r.pred, gt);
  r.loss = mean_all(mul(diff, diff));
  if (velocity_weight > 0.0 && m >= 2) {
    Tensor dp = sub(slice(r.pred, 0, 1, m), slice(r.pred, 0, 0, m - 1));
    Tensor dg = sub(slice(gt, 0, 1, m), slice(gt, 0, 0, m - 1));
    Tensor vd = sub(dp, dg);
    r.loss = add(r.loss, scale(mean_all(mul(vd, vd)), velocity_weight));
  }
  return r;
}

LandmarkSequence infer_landmarks(const std::vector<int>& visemes, int m_out,
                                 const AudioFeatureSequence* audio,
                                 const ModelConfig& cfg,
                                 const ParamStore& params) {
  cfg.validate();
  if (visemes.empty()) throw EmptyInput("infer: empty viseme sequence");
  if (m_out < 1) throw DataError("infer: m_out must be >= 1");
  if (cfg.landmark_dim != kFrameDim)
    throw ShapeMismatch("infer: config landmark_dim must be " +
                        std::to_string(kFrameDim));
  if (m_out > cfg.max_len)
    throw ShapeMismatch("infer: m_out exceeds max_len");

  Tensor v = encode_visemes(embed_visemes(visemes, cfg, params), cfg, params);
  Tensor v_enh = enhance_visemes(v, cfg, params);
  Tensor a_tilde;
  if (audio && audio->n > 0) {
    std::vector<double> ones(static_cast<std::size_t>(audio->n), 1.0);
    a_tilde = encode_audio_masked(*audio, ones, cfg, params);
  } else {
    a_tilde = Tensor::zeros({m_out, cfg.d_model});
  }
  Tensor a_pse = generate_pseudo_audio(a_tilde, v_enh, cfg, params);

  const std::vector<double>& neutral = params.at("neutral_frame").data();
  std::vector<double> inputs(neutral.begin(), neutral.end());
  LandmarkSequence out;
  out.n_frames = m_out;
  out.frames.reserve(static_cast<std::size_t>(m_out) * kFrameDim);
  for (int m = 1; m <= m_out; ++m) {
    Tensor in = Tensor::from_data({m, kFrameDim}, inputs);
    Tensor pred = decode_landmarks(in, v, a_pse, cfg, params);
    const double* last = pred.data().data() +
                         static_cast<std::size_t>(m - 1) * kFrameDim;
    out.frames.insert(out.frames.end(), last, last + kFrameDim);
    if (m < m_out) inputs.insert(inputs.end(), last, last + kFrameDim);
  }
  return out;
}

}  // namespace t2l
