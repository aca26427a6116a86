/* Copyright 2026 The PADA Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "pada/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "pada/error.hpp"

namespace pada {
namespace {

constexpr double kLayerNormEps = 1e-6;
constexpr std::string_view kCheckpointMagic = "PADALAB-CHECKPOINT-v1";

Error model_error(const std::string& message) { return Error("model", message); }

Mat position_table(Eigen::Index length, Eigen::Index d) {
  Mat pe(length, d);
  for (Eigen::Index p = 0; p < length; ++p) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d));
      pe(p, i) = i % 2 == 0 ? std::sin(static_cast<double>(p) * freq) : std::cos(static_cast<double>(p) * freq);
    }
  }
  return pe;
}

Mat embed(const ModelParams& params, std::span<const TokenId> ids) {
  const auto d = params.config.d_model;
  const double scale = std::sqrt(static_cast<double>(d));
  Mat x(static_cast<Eigen::Index>(ids.size()), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= params.config.vocab_size) {
      throw model_error("token id " + std::to_string(ids[i]) + " outside vocabulary of size " +
                        std::to_string(params.config.vocab_size));
    }
    x.row(static_cast<Eigen::Index>(i)) = scale * params.embedding.row(ids[i]);
  }
  if (params.config.position_encodings) x += position_table(x.rows(), d);
  return x;
}

void embed_backward(const ModelParams& params, std::span<const TokenId> ids, const Mat& dx, ModelParams& grads) {
  const double scale = std::sqrt(static_cast<double>(params.config.d_model));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    grads.embedding.row(ids[i]) += scale * dx.row(static_cast<Eigen::Index>(i));
  }
}

// Row-wise log-softmax.
Mat log_softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

// --- layer norm -------------------------------------------------------------

struct LayerNormCache {
  Mat xhat;
  Eigen::VectorXd inv_std;
};

Mat layer_norm(const Mat& x, const LayerNormParams& p, LayerNormCache* cache) {
  const auto d = static_cast<double>(x.cols());
  Mat xhat(x.rows(), x.cols());
  Eigen::VectorXd inv(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().sum() / d;
    inv(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(r) = (x.row(r).array() - mu) * inv(r);
  }
  Mat y = (xhat.array().rowwise() * p.gain.row(0).array()).rowwise() + p.bias.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv);
  }
  return y;
}

Mat layer_norm_backward(const Mat& dy, const LayerNormParams& p, const LayerNormCache& c, LayerNormParams& g) {
  g.gain.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  g.bias.row(0) += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * p.gain.row(0).array();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).mean();
    const double mean_dx = (dxhat.row(r).array() * c.xhat.row(r).array()).mean();
    dx.row(r) = c.inv_std(r) * (dxhat.row(r).array() - mean_d - c.xhat.row(r).array() * mean_dx);
  }
  return dx;
}

// --- multi-head attention ---------------------------------------------------

struct AttentionCache {
  Mat xq, xkv, q, k, v, concat;
  std::vector<Mat> probs;
};

Mat attention(const Mat& xq, const Mat& xkv, const std::vector<bool>& key_valid, bool causal,
              const AttentionParams& p, int heads, AttentionCache* cache) {
  Mat q = xq * p.wq;
  Mat k = xkv * p.wk;
  Mat v = xkv * p.wv;
  const Eigen::Index d = q.cols();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat concat(xq.rows(), d);
  std::vector<Mat> probs;
  for (int h = 0; h < heads; ++h) {
    Mat s = (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose()) * scale;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < s.cols(); ++j) {
        const bool visible = key_valid[static_cast<std::size_t>(j)] && (!causal || j <= i);
        if (visible) mx = std::max(mx, s(i, j));
      }
      double total = 0.0;
      for (Eigen::Index j = 0; j < s.cols(); ++j) {
        const bool visible = key_valid[static_cast<std::size_t>(j)] && (!causal || j <= i);
        s(i, j) = visible ? std::exp(s(i, j) - mx) : 0.0;
        total += s(i, j);
      }
      s.row(i) /= total;
    }
    concat.middleCols(h * dh, dh) = s * v.middleCols(h * dh, dh);
    if (cache) probs.push_back(std::move(s));
  }
  Mat out = concat * p.wo;
  if (cache) {
    cache->xq = xq;
    cache->xkv = xkv;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
    cache->probs = std::move(probs);
  }
  return out;
}

// Gradients w.r.t. the query input (dxq) and key/value input (dxkv).
void attention_backward(const Mat& dout, const AttentionCache& c, const AttentionParams& p, int heads,
                        AttentionParams& g, Mat& dxq, Mat& dxkv) {
  g.wo += c.concat.transpose() * dout;
  const Mat dconcat = dout * p.wo.transpose();
  const Eigen::Index d = c.q.cols();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat dq = Mat::Zero(c.q.rows(), d);
  Mat dk = Mat::Zero(c.k.rows(), d);
  Mat dv = Mat::Zero(c.v.rows(), d);
  for (int h = 0; h < heads; ++h) {
    const Mat& prob = c.probs[static_cast<std::size_t>(h)];
    const Mat d_head = dconcat.middleCols(h * dh, dh);
    dv.middleCols(h * dh, dh) = prob.transpose() * d_head;
    const Mat dprob = d_head * c.v.middleCols(h * dh, dh).transpose();
    const Eigen::VectorXd row_dot = (dprob.array() * prob.array()).rowwise().sum();
    Mat ds = prob.array() * (dprob.array().colwise() - row_dot.array());
    ds *= scale;
    dq.middleCols(h * dh, dh) = ds * c.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh) = ds.transpose() * c.q.middleCols(h * dh, dh);
  }
  g.wq += c.xq.transpose() * dq;
  g.wk += c.xkv.transpose() * dk;
  g.wv += c.xkv.transpose() * dv;
  dxq = dq * p.wq.transpose();
  dxkv = dk * p.wk.transpose() + dv * p.wv.transpose();
}

// --- feed-forward -----------------------------------------------------------

struct FeedForwardCache {
  Mat x, pre;
};

Mat feed_forward(const Mat& x, const FeedForwardParams& p, FeedForwardCache* cache) {
  Mat pre = (x * p.w1).rowwise() + p.b1.row(0);
  Mat out = (pre.cwiseMax(0.0) * p.w2).rowwise() + p.b2.row(0);
  if (cache) {
    cache->x = x;
    cache->pre = std::move(pre);
  }
  return out;
}

Mat feed_forward_backward(const Mat& dy, const FeedForwardCache& c, const FeedForwardParams& p, FeedForwardParams& g) {
  const Mat hidden = c.pre.cwiseMax(0.0);
  g.w2 += hidden.transpose() * dy;
  g.b2.row(0) += dy.colwise().sum();
  Mat dpre = (dy * p.w2.transpose()).array() * (c.pre.array() > 0.0).cast<double>();
  g.w1 += c.x.transpose() * dpre;
  g.b1.row(0) += dpre.colwise().sum();
  return dpre * p.w1.transpose();
}

// --- encoder / decoder stacks -----------------------------------------------

struct EncoderLayerCache {
  LayerNormCache ln_attn;
  AttentionCache attn;
  LayerNormCache ln_ffn;
  FeedForwardCache ffn;
};

struct EncoderCache {
  std::vector<EncoderLayerCache> layers;
  LayerNormCache final;
};

std::vector<bool> valid_positions(std::span<const TokenId> ids) {
  std::vector<bool> valid(ids.size());
  bool any = false;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    valid[i] = ids[i] != Vocabulary::kPad;
    any = any || valid[i];
  }
  if (!any) throw model_error("empty sequence");
  return valid;
}

Mat encoder_forward(const ModelParams& params, std::span<const TokenId> ids, const std::vector<bool>& valid,
                    EncoderCache* cache) {
  const int heads = params.config.n_heads;
  Mat x = embed(params, ids);
  if (cache) cache->layers.resize(params.encoder.size());
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    const auto& p = params.encoder[l];
    EncoderLayerCache* lc = cache ? &cache->layers[l] : nullptr;
    const Mat a = layer_norm(x, p.ln_attn, lc ? &lc->ln_attn : nullptr);
    x += attention(a, a, valid, false, p.self_attn, heads, lc ? &lc->attn : nullptr);
    const Mat b = layer_norm(x, p.ln_ffn, lc ? &lc->ln_ffn : nullptr);
    x += feed_forward(b, p.ffn, lc ? &lc->ffn : nullptr);
  }
  return layer_norm(x, params.encoder_final, cache ? &cache->final : nullptr);
}

void encoder_backward(const ModelParams& params, std::span<const TokenId> ids, const EncoderCache& cache,
                      const Mat& dstates, ModelParams& grads) {
  const int heads = params.config.n_heads;
  Mat dx = layer_norm_backward(dstates, params.encoder_final, cache.final, grads.encoder_final);
  Mat dq, dkv;
  for (std::size_t l = params.encoder.size(); l-- > 0;) {
    const auto& p = params.encoder[l];
    auto& g = grads.encoder[l];
    const auto& lc = cache.layers[l];
    dx += layer_norm_backward(feed_forward_backward(dx, lc.ffn, p.ffn, g.ffn), p.ln_ffn, lc.ln_ffn, g.ln_ffn);
    attention_backward(dx, lc.attn, p.self_attn, heads, g.self_attn, dq, dkv);
    dx += layer_norm_backward(dq + dkv, p.ln_attn, lc.ln_attn, g.ln_attn);
  }
  embed_backward(params, ids, dx, grads);
}

struct DecoderLayerCache {
  LayerNormCache ln_self;
  AttentionCache self_attn;
  LayerNormCache ln_cross;
  AttentionCache cross_attn;
  LayerNormCache ln_ffn;
  FeedForwardCache ffn;
};

struct DecoderCache {
  std::vector<DecoderLayerCache> layers;
  LayerNormCache final;
};

Mat decoder_forward(const ModelParams& params, std::span<const TokenId> ids, const EncodedInput& encoded,
                    DecoderCache* cache) {
  const int heads = params.config.n_heads;
  const std::vector<bool> all(ids.size(), true);
  Mat x = embed(params, ids);
  if (cache) cache->layers.resize(params.decoder.size());
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    const auto& p = params.decoder[l];
    DecoderLayerCache* lc = cache ? &cache->layers[l] : nullptr;
    const Mat a = layer_norm(x, p.ln_self, lc ? &lc->ln_self : nullptr);
    x += attention(a, a, all, true, p.self_attn, heads, lc ? &lc->self_attn : nullptr);
    const Mat b = layer_norm(x, p.ln_cross, lc ? &lc->ln_cross : nullptr);
    x += attention(b, encoded.states, encoded.valid, false, p.cross_attn, heads, lc ? &lc->cross_attn : nullptr);
    const Mat c = layer_norm(x, p.ln_ffn, lc ? &lc->ln_ffn : nullptr);
    x += feed_forward(c, p.ffn, lc ? &lc->ffn : nullptr);
  }
  return layer_norm(x, params.decoder_final, cache ? &cache->final : nullptr);
}

// Returns the gradient w.r.t. the encoder states.
Mat decoder_backward(const ModelParams& params, std::span<const TokenId> ids, const DecoderCache& cache,
                     const Mat& dout, Eigen::Index encoder_length, ModelParams& grads) {
  const int heads = params.config.n_heads;
  Mat denc = Mat::Zero(encoder_length, params.config.d_model);
  Mat dx = layer_norm_backward(dout, params.decoder_final, cache.final, grads.decoder_final);
  Mat dq, dkv;
  for (std::size_t l = params.decoder.size(); l-- > 0;) {
    const auto& p = params.decoder[l];
    auto& g = grads.decoder[l];
    const auto& lc = cache.layers[l];
    dx += layer_norm_backward(feed_forward_backward(dx, lc.ffn, p.ffn, g.ffn), p.ln_ffn, lc.ln_ffn, g.ln_ffn);
    attention_backward(dx, lc.cross_attn, p.cross_attn, heads, g.cross_attn, dq, dkv);
    denc += dkv;
    dx += layer_norm_backward(dq, p.ln_cross, lc.ln_cross, g.ln_cross);
    attention_backward(dx, lc.self_attn, p.self_attn, heads, g.self_attn, dq, dkv);
    dx += layer_norm_backward(dq + dkv, p.ln_self, lc.ln_self, g.ln_self);
  }
  embed_backward(params, ids, dx, grads);
  return denc;
}

// --- convolutional classification head ---------------------------------------

struct ConvCache {
  Mat unfolded;  // length x (width * d): zero-padded windows of masked states
  std::vector<Eigen::Index> argmax;
  Eigen::RowVectorXd pooled;
};

Eigen::RowVectorXd conv_pool(const ModelParams& params, const EncodedInput& encoded, ConvCache* cache) {
  const Eigen::Index length = encoded.states.rows();
  const Eigen::Index d = encoded.states.cols();
  const int width = params.config.conv_width;
  const int half = width / 2;
  Mat unfolded = Mat::Zero(length, width * d);
  for (Eigen::Index p = 0; p < length; ++p) {
    for (int k = 0; k < width; ++k) {
      const Eigen::Index src = p + k - half;
      if (src < 0 || src >= length || !encoded.valid[static_cast<std::size_t>(src)]) continue;
      unfolded.block(p, k * d, 1, d) = encoded.states.row(src);
    }
  }
  const Mat conv = (unfolded * params.conv_weight.transpose()).rowwise() + params.conv_bias.row(0);
  const Eigen::Index filters = conv.cols();
  Eigen::RowVectorXd pooled(filters);
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(filters), -1);
  for (Eigen::Index f = 0; f < filters; ++f) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index p = 0; p < length; ++p) {
      if (encoded.valid[static_cast<std::size_t>(p)] && conv(p, f) > best) {
        best = conv(p, f);
        argmax[static_cast<std::size_t>(f)] = p;
      }
    }
    pooled(f) = best;
  }
  if (cache) {
    cache->unfolded = std::move(unfolded);
    cache->argmax = std::move(argmax);
    cache->pooled = pooled;
  }
  return pooled;
}

Mat conv_pool_backward(const ModelParams& params, const ConvCache& cache, const Eigen::RowVectorXd& dpooled,
                       const EncodedInput& encoded, ModelParams& grads) {
  const Eigen::Index length = encoded.states.rows();
  const Eigen::Index d = encoded.states.cols();
  const int width = params.config.conv_width;
  const int half = width / 2;
  Mat dconv = Mat::Zero(length, dpooled.size());
  for (Eigen::Index f = 0; f < dpooled.size(); ++f) dconv(cache.argmax[static_cast<std::size_t>(f)], f) = dpooled(f);
  grads.conv_weight += dconv.transpose() * cache.unfolded;
  grads.conv_bias.row(0) += dconv.colwise().sum();
  const Mat dunfolded = dconv * params.conv_weight;
  Mat dstates = Mat::Zero(length, d);
  for (Eigen::Index p = 0; p < length; ++p) {
    for (int k = 0; k < width; ++k) {
      const Eigen::Index src = p + k - half;
      if (src < 0 || src >= length || !encoded.valid[static_cast<std::size_t>(src)]) continue;
      dstates.row(src) += dunfolded.block(p, k * d, 1, d);
    }
  }
  return dstates;
}

// --- per-instance loss --------------------------------------------------------

std::vector<TokenId> teacher_forcing_input(const TaskInstance& inst) {
  std::vector<TokenId> dec{Vocabulary::kBos};
  dec.insert(dec.end(), inst.target.begin(), inst.target.end() - 1);
  return dec;
}

std::size_t scored_tokens(const TaskInstance& inst) {
  return static_cast<std::size_t>(std::count_if(inst.target.begin(), inst.target.end(),
                                                [](TokenId t) { return t != Vocabulary::kPad; }));
}

void check_instance(const ModelConfig& config, const TaskInstance& inst) {
  if (static_cast<int>(inst.input.size()) > config.max_input_len) {
    throw model_error("input of length " + std::to_string(inst.input.size()) + " exceeds max_input_len " +
                      std::to_string(config.max_input_len));
  }
  if (inst.task == Task::kGenerative) {
    if (inst.target.empty()) throw model_error("generative instance has an empty target");
    if (static_cast<int>(inst.target.size()) > config.max_output_len) {
      throw model_error("target of length " + std::to_string(inst.target.size()) + " exceeds max_output_len " +
                        std::to_string(config.max_output_len));
    }
  } else if (inst.label < 0 || inst.label >= config.n_classes) {
    throw model_error("class id " + std::to_string(inst.label) + " out of range");
  }
}

// Summed NLL of one instance; gradients scaled by `scale` are added when
// `grads` is non-null.
double instance_loss(const ModelParams& params, const TaskInstance& inst, double scale, ModelParams* grads) {
  check_instance(params.config, inst);
  EncodedInput encoded;
  encoded.valid = valid_positions(inst.input);
  EncoderCache enc_cache;
  encoded.states = encoder_forward(params, inst.input, encoded.valid, grads ? &enc_cache : nullptr);

  if (inst.task == Task::kGenerative) {
    const auto dec_ids = teacher_forcing_input(inst);
    DecoderCache dec_cache;
    const Mat y = decoder_forward(params, dec_ids, encoded, grads ? &dec_cache : nullptr);
    const Mat logp = log_softmax_rows(y * params.embedding.transpose());
    double loss = 0.0;
    for (std::size_t t = 0; t < inst.target.size(); ++t) {
      if (inst.target[t] != Vocabulary::kPad) loss -= logp(static_cast<Eigen::Index>(t), inst.target[t]);
    }
    if (grads) {
      Mat dlogits = logp.array().exp();
      for (std::size_t t = 0; t < inst.target.size(); ++t) {
        if (inst.target[t] == Vocabulary::kPad) {
          dlogits.row(static_cast<Eigen::Index>(t)).setZero();
        } else {
          dlogits(static_cast<Eigen::Index>(t), inst.target[t]) -= 1.0;
        }
      }
      dlogits *= scale;
      grads->embedding += dlogits.transpose() * y;
      const Mat dy = dlogits * params.embedding;
      const Mat denc = decoder_backward(params, dec_ids, dec_cache, dy, encoded.states.rows(), *grads);
      encoder_backward(params, inst.input, enc_cache, denc, *grads);
    }
    return loss;
  }

  ConvCache conv_cache;
  const Eigen::RowVectorXd pooled = conv_pool(params, encoded, grads ? &conv_cache : nullptr);
  const Eigen::RowVectorXd logits = pooled * params.cls_weight + params.cls_bias.row(0);
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  const double loss = lse - logits(inst.label);
  if (grads) {
    Eigen::RowVectorXd dlogits = (logits.array() - lse).exp();
    dlogits(inst.label) -= 1.0;
    dlogits *= scale;
    grads->cls_weight += pooled.transpose() * dlogits;
    grads->cls_bias.row(0) += dlogits;
    const Eigen::RowVectorXd dpooled = dlogits * params.cls_weight.transpose();
    const Mat dstates = conv_pool_backward(params, conv_cache, dpooled, encoded, *grads);
    encoder_backward(params, inst.input, enc_cache, dstates, *grads);
  }
  return loss;
}

double batch_normalizer(std::span<const TaskInstance> batch) {
  if (batch.empty()) throw model_error("empty batch");
  const Task task = batch.front().task;
  std::size_t tokens = 0;
  for (const auto& inst : batch) {
    if (inst.task != task) throw model_error("batch mixes generative and discriminative instances");
    tokens += scored_tokens(inst);
  }
  if (task == Task::kDiscriminative) return static_cast<double>(batch.size());
  if (tokens == 0) throw model_error("generative batch has no target tokens");
  return static_cast<double>(tokens);
}

}  // namespace

const char* task_name(Task task) { return task == Task::kGenerative ? "generative" : "discriminative"; }

void ModelConfig::validate() const {
  if (vocab_size <= Vocabulary::kNumSpecial) throw model_error("vocab_size must exceed the special tokens");
  if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0) throw model_error("d_model must be divisible by n_heads");
  if (n_layers < 0 || d_ffn < 1) throw model_error("invalid layer sizes");
  if (max_input_len < 1 || max_output_len < 1) throw model_error("max lengths must be >= 1");
  if (conv_width < 1 || conv_width % 2 == 0) throw model_error("conv_width must be odd");
  if (conv_filters < 1 || n_classes < 2) throw model_error("need >= 1 filter and >= 2 classes");
}

ModelParams ModelParams::init(const ModelConfig& config) {
  config.validate();
  const Eigen::Index d = config.d_model, f = config.d_ffn, v = config.vocab_size;
  auto ln = [d]() { return LayerNormParams{Mat::Ones(1, d), Mat::Zero(1, d)}; };
  auto attn = [d]() { return AttentionParams{Mat(d, d), Mat(d, d), Mat(d, d), Mat(d, d)}; };
  auto ffn = [d, f]() { return FeedForwardParams{Mat(d, f), Mat::Zero(1, f), Mat(f, d), Mat::Zero(1, d)}; };

  ModelParams p;
  p.config = config;
  p.embedding = Mat(v, d);
  for (int l = 0; l < config.n_layers; ++l) {
    p.encoder.push_back({ln(), attn(), ln(), ffn()});
    p.decoder.push_back({ln(), attn(), ln(), attn(), ln(), ffn()});
  }
  p.encoder_final = ln();
  p.decoder_final = ln();
  p.conv_weight = Mat(config.conv_filters, config.conv_width * d);
  p.conv_bias = Mat::Zero(1, config.conv_filters);
  p.cls_weight = Mat(config.conv_filters, config.n_classes);
  p.cls_bias = Mat::Zero(1, config.n_classes);

  std::mt19937_64 rng(config.seed);
  p.for_each([&](const std::string& name, Mat& m) {
    const bool is_bias = name.ends_with(".bias") || name.ends_with(".b1") || name.ends_with(".b2") ||
                         name == "conv_bias" || name == "cls_bias";
    if (is_bias || name.ends_with(".gain")) return;
    double fan_in = static_cast<double>(m.rows());
    if (name == "embedding") fan_in = static_cast<double>(d);
    if (name == "conv_weight") fan_in = static_cast<double>(m.cols());
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(fan_in));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  });
  if (v > Vocabulary::kUnk) p.embedding.row(Vocabulary::kUnk).setZero();
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams z = other;
  z.for_each([](const std::string&, Mat& m) { m.setZero(); });
  return z;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&n](const std::string&, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&ok](const std::string&, const Mat& m) { ok = ok && m.allFinite(); });
  return ok;
}

EncodedInput encode(const ModelParams& params, std::span<const TokenId> ids) {
  if (static_cast<int>(ids.size()) > params.config.max_input_len) {
    throw model_error("input of length " + std::to_string(ids.size()) + " exceeds max_input_len");
  }
  EncodedInput out;
  out.valid = valid_positions(ids);
  out.states = encoder_forward(params, ids, out.valid, nullptr);
  return out;
}

Eigen::VectorXd decode_step(const ModelParams& params, const EncodedInput& encoded, std::span<const TokenId> prefix) {
  if (prefix.empty() || prefix.front() != Vocabulary::kBos) throw model_error("decoder prefix must start with BOS");
  if (static_cast<int>(prefix.size()) > params.config.max_output_len) {
    throw model_error("decoder prefix exceeds max_output_len " + std::to_string(params.config.max_output_len));
  }
  const Mat y = decoder_forward(params, prefix, encoded, nullptr);
  const Mat logits = y.bottomRows(1) * params.embedding.transpose();
  return log_softmax_rows(logits).row(0).transpose();
}

Eigen::VectorXd pooled_features(const ModelParams& params, const EncodedInput& encoded) {
  return conv_pool(params, encoded, nullptr).transpose();
}

Eigen::VectorXd classify(const ModelParams& params, const EncodedInput& encoded) {
  const Eigen::RowVectorXd logits = conv_pool(params, encoded, nullptr) * params.cls_weight + params.cls_bias.row(0);
  return log_softmax_rows(Mat(logits)).row(0).transpose();
}

LossAndGrads loss_and_grads(const ModelParams& params, std::span<const TaskInstance> batch) {
  const double norm = batch_normalizer(batch);
  LossAndGrads out{0.0, ModelParams::zeros_like(params)};
  for (const auto& inst : batch) out.loss += instance_loss(params, inst, 1.0 / norm, &out.grads);
  out.loss /= norm;
  return out;
}

double loss_only(const ModelParams& params, std::span<const TaskInstance> batch) {
  const double norm = batch_normalizer(batch);
  double loss = 0.0;
  for (const auto& inst : batch) loss += instance_loss(params, inst, 0.0, nullptr);
  return loss / norm;
}

// --- checkpoints ----------------------------------------------------------------
//
// Layout: magic line, config as "key=value" lines, blank line, then per tensor
// a u32 name length, the name, u64 rows, u64 cols and row-major float64 data.

namespace {

std::string config_header(const ModelConfig& c) {
  std::ostringstream out;
  out << "vocab_size=" << c.vocab_size << "\nd_model=" << c.d_model << "\nn_layers=" << c.n_layers
      << "\nn_heads=" << c.n_heads << "\nd_ffn=" << c.d_ffn << "\nmax_input_len=" << c.max_input_len
      << "\nmax_output_len=" << c.max_output_len << "\nconv_filters=" << c.conv_filters
      << "\nconv_width=" << c.conv_width << "\nn_classes=" << c.n_classes
      << "\nposition_encodings=" << (c.position_encodings ? 1 : 0) << "\nseed=" << c.seed << "\n";
  return out.str();
}

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw model_error("truncated checkpoint");
  return value;
}

}  // namespace

void write_checkpoint(const ModelParams& params, std::ostream& out) {
  out << kCheckpointMagic << '\n' << config_header(params.config) << '\n';
  params.for_each([&out](const std::string& name, const Mat& m) {
    write_raw(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw(out, static_cast<std::uint64_t>(m.rows()));
    write_raw(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  });
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw model_error("cannot write " + path.string());
  write_checkpoint(params, out);
  if (!out) throw model_error("failed writing " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw model_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kCheckpointMagic) throw model_error(path.string() + " is not a checkpoint");
  ModelConfig c;
  while (std::getline(in, line) && !line.empty()) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw model_error("malformed checkpoint header line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "vocab_size") c.vocab_size = std::stoi(value);
    else if (key == "d_model") c.d_model = std::stoi(value);
    else if (key == "n_layers") c.n_layers = std::stoi(value);
    else if (key == "n_heads") c.n_heads = std::stoi(value);
    else if (key == "d_ffn") c.d_ffn = std::stoi(value);
    else if (key == "max_input_len") c.max_input_len = std::stoi(value);
    else if (key == "max_output_len") c.max_output_len = std::stoi(value);
    else if (key == "conv_filters") c.conv_filters = std::stoi(value);
    else if (key == "conv_width") c.conv_width = std::stoi(value);
    else if (key == "n_classes") c.n_classes = std::stoi(value);
    else if (key == "position_encodings") c.position_encodings = value == "1";
    else if (key == "seed") c.seed = std::stoull(value);
    else throw model_error("unknown checkpoint header key '" + key + "'");
  }
  ModelParams params = ModelParams::init(c);
  params.for_each([&in](const std::string& name, Mat& m) {
    const auto name_len = read_raw<std::uint32_t>(in);
    std::string stored(name_len, '\0');
    if (!in.read(stored.data(), name_len)) throw model_error("truncated checkpoint");
    if (stored != name) throw model_error("checkpoint tensor '" + stored + "' where '" + name + "' was expected");
    const auto rows = read_raw<std::uint64_t>(in);
    const auto cols = read_raw<std::uint64_t>(in);
    if (rows != static_cast<std::uint64_t>(m.rows()) || cols != static_cast<std::uint64_t>(m.cols())) {
      throw model_error("checkpoint tensor '" + name + "' has the wrong shape");
    }
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)))) {
      throw model_error("truncated checkpoint");
    }
  });
  return params;
}

}  // namespace pada
