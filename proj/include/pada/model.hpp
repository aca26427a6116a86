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

#ifndef PADA_MODEL_HPP_
#define PADA_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pada/corpus.hpp"

namespace pada {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ffn = 128;
  int max_input_len = 128;
  int max_output_len = 40;
  int conv_filters = 32;
  int conv_width = 9;
  int n_classes = 2;
  // Sinusoidal positions are added to token embeddings when set.
  bool position_encodings = true;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LayerNormParams {
  Mat gain;
  Mat bias;
};

struct AttentionParams {
  Mat wq, wk, wv, wo;
};

struct FeedForwardParams {
  Mat w1, b1, w2, b2;
};

struct EncoderLayerParams {
  LayerNormParams ln_attn;
  AttentionParams self_attn;
  LayerNormParams ln_ffn;
  FeedForwardParams ffn;
};

struct DecoderLayerParams {
  LayerNormParams ln_self;
  AttentionParams self_attn;
  LayerNormParams ln_cross;
  AttentionParams cross_attn;
  LayerNormParams ln_ffn;
  FeedForwardParams ffn;
};

// Every trainable tensor. The embedding matrix is shared by the encoder and
// decoder inputs and the generation softmax. Gradients use the same layout.
struct ModelParams {
  ModelConfig config;
  Mat embedding;  // vocab x d_model
  std::vector<EncoderLayerParams> encoder;
  LayerNormParams encoder_final;
  std::vector<DecoderLayerParams> decoder;
  LayerNormParams decoder_final;
  Mat conv_weight;  // filters x (width * d_model)
  Mat conv_bias;    // 1 x filters
  Mat cls_weight;   // filters x classes
  Mat cls_bias;     // 1 x classes

  static ModelParams init(const ModelConfig& config);
  static ModelParams zeros_like(const ModelParams& other);

  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  std::size_t parameter_count() const;
  bool all_finite() const;

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    auto ln = [&f](const std::string& prefix, auto& p) {
      f(prefix + ".gain", p.gain);
      f(prefix + ".bias", p.bias);
    };
    auto attn = [&f](const std::string& prefix, auto& p) {
      f(prefix + ".wq", p.wq);
      f(prefix + ".wk", p.wk);
      f(prefix + ".wv", p.wv);
      f(prefix + ".wo", p.wo);
    };
    auto ffn = [&f](const std::string& prefix, auto& p) {
      f(prefix + ".w1", p.w1);
      f(prefix + ".b1", p.b1);
      f(prefix + ".w2", p.w2);
      f(prefix + ".b2", p.b2);
    };
    f(std::string("embedding"), self.embedding);
    for (std::size_t i = 0; i < self.encoder.size(); ++i) {
      const std::string p = "encoder." + std::to_string(i);
      ln(p + ".ln_attn", self.encoder[i].ln_attn);
      attn(p + ".self_attn", self.encoder[i].self_attn);
      ln(p + ".ln_ffn", self.encoder[i].ln_ffn);
      ffn(p + ".ffn", self.encoder[i].ffn);
    }
    ln("encoder_final", self.encoder_final);
    for (std::size_t i = 0; i < self.decoder.size(); ++i) {
      const std::string p = "decoder." + std::to_string(i);
      ln(p + ".ln_self", self.decoder[i].ln_self);
      attn(p + ".self_attn", self.decoder[i].self_attn);
      ln(p + ".ln_cross", self.decoder[i].ln_cross);
      attn(p + ".cross_attn", self.decoder[i].cross_attn);
      ln(p + ".ln_ffn", self.decoder[i].ln_ffn);
      ffn(p + ".ffn", self.decoder[i].ffn);
    }
    ln("decoder_final", self.decoder_final);
    f(std::string("conv_weight"), self.conv_weight);
    f(std::string("conv_bias"), self.conv_bias);
    f(std::string("cls_weight"), self.cls_weight);
    f(std::string("cls_bias"), self.cls_bias);
  }
};

enum class Task { kGenerative, kDiscriminative };

const char* task_name(Task task);

// One training or inference unit. Generative instances carry `target` token
// ids ending in EOS; discriminative instances carry a class id in `label`.
struct TaskInstance {
  Task task = Task::kDiscriminative;
  std::vector<TokenId> input;
  std::vector<TokenId> target;
  int label = -1;

  bool operator==(const TaskInstance&) const = default;
};

// Encoder output; `valid[i]` is false at PAD positions.
struct EncodedInput {
  Mat states;
  std::vector<bool> valid;
};

EncodedInput encode(const ModelParams& params, std::span<const TokenId> ids);

// Log-probabilities of the token following `prefix` (which starts with BOS).
Eigen::VectorXd decode_step(const ModelParams& params, const EncodedInput& encoded,
                            std::span<const TokenId> prefix);

// Class log-probabilities from the convolutional head over encoder states.
Eigen::VectorXd classify(const ModelParams& params, const EncodedInput& encoded);

// Max-pooled convolution features, before the class projection.
Eigen::VectorXd pooled_features(const ModelParams& params, const EncodedInput& encoded);

struct LossAndGrads {
  double loss = 0.0;
  ModelParams grads;
};

// Mean NLL over the batch (per target token for generative batches, per
// example for discriminative ones) and its exact gradient.
LossAndGrads loss_and_grads(const ModelParams& params, std::span<const TaskInstance> batch);

double loss_only(const ModelParams& params, std::span<const TaskInstance> batch);

void write_checkpoint(const ModelParams& params, std::ostream& out);
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace pada

#endif  // PADA_MODEL_HPP_
