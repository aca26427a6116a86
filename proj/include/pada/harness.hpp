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

#ifndef PADA_HARNESS_HPP_
#define PADA_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pada/corpus.hpp"
#include "pada/drf.hpp"
#include "pada/inference.hpp"
#include "pada/metrics.hpp"
#include "pada/model.hpp"
#include "pada/training.hpp"

namespace pada {

enum class ModelKind { kPada, kPadaNc, kPadaDn, kNoda, kMoe, kUpperBound };

ModelKind parse_model_kind(std::string_view name);
std::string model_kind_name(ModelKind kind);

struct DrfConfig {
  double rho = kDefaultRho;
  int k_drf = kDefaultDrfSetSize;
  int prompt_features = kDefaultPromptFeatures;
  int embedding_dim = 32;
  int embedding_window = 2;
  int min_freq = 1;
  // DRF sets to use instead of extracting them, matched to sources by name.
  std::vector<DomainProfile> profiles;
};

struct ExperimentConfig {
  ModelConfig model;  // vocab_size and n_classes are filled in per setting
  TrainConfig train;
  BeamConfig beam;
  DrfConfig drf;
  MetricKind metric = MetricKind::kBinaryF1;
  // PADA-DN keeps the generative task ("name <sep>") in its mixture; when
  // false it trains on name-prompted classification alone.
  bool dn_mixture = true;
  std::string config_hash;
};

// Settings sized for a laptop-scale run from scratch on the synthetic corpus.
// The struct defaults above keep the published fine-tuning values.
ExperimentConfig desk_experiment();

// Everything derived from the source domains of one setting before training.
struct SettingArtifacts {
  Vocabulary vocab;
  std::vector<DomainProfile> profiles;
  std::optional<EmbeddingTable> embeddings;
  std::map<std::string, PromptAnnotation> annotations;  // by example id
};

// Vocabulary, DRF sets, embeddings and gold annotations built from the
// training text of `sources` alone.
SettingArtifacts prepare_setting(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                                 const DrfConfig& config, bool with_prompts);

enum class PromptVariant {
  kFull,            // domain name + DRFs, classifier conditioned on it
  kDomainNameOnly,  // domain name alone
  kUnconditioned,   // DRF generation as an auxiliary task, bare-text classifier
};

std::vector<TrainingItem> prompt_items(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                                       const SettingArtifacts& artifacts, const ModelConfig& config,
                                       PromptVariant variant);

struct ExperimentReport {
  LeaveOneOutSetting setting;
  std::string model;
  double target_f1 = 0.0;
  double source_dev_f1 = 0.0;
  double shift = 0.0;  // source_dev_f1 - target_f1
  std::map<std::string, double> per_domain_dev;
  std::vector<std::vector<EpochLog>> training_logs;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t parameter_count = 0;
  std::size_t checkpoint_bytes = 0;
  int prompt_fallbacks = 0;
};

std::string to_json(const ExperimentReport& report);
ExperimentReport report_from_json(std::string_view text);

// Trained artifacts of one run, kept for checkpoint export.
struct TrainedSetting {
  SettingArtifacts artifacts;
  std::vector<std::pair<std::string, ModelParams>> models;  // one entry, or one per expert
};

// Train `kind` on the sources of `setting` and evaluate it on the pooled
// source dev set and the target's evaluation pool.
ExperimentReport run_setting(const MultiDomainDataset& dataset, const LeaveOneOutSetting& setting, ModelKind kind,
                             const ExperimentConfig& config, std::uint64_t seed, TrainedSetting* trained = nullptr,
                             bool evaluate_target = true);

// Serialized checkpoint size in bytes.
std::size_t checkpoint_size(const ModelParams& params);

// Reports of every (setting, model, seed) cell of a leave-one-out run, in
// (setting, model, seed) order. Cells run on up to `threads` threads.
std::vector<ExperimentReport> run_leave_one_out(const MultiDomainDataset& dataset, std::span<const ModelKind> models,
                                                const ExperimentConfig& config, std::span<const std::uint64_t> seeds,
                                                int threads);

struct ShiftMatrix {
  std::vector<std::string> models;    // rows
  std::vector<std::string> settings;  // columns, by target domain
  Eigen::MatrixXd f1;
  Eigen::MatrixXd shift;
  Eigen::MatrixXd f1_sd;     // across seeds; zero for single-seed runs
  Eigen::MatrixXd shift_sd;
  int seeds = 1;
  // Per-column extremes of |shift|, used to normalize heatmap colours.
  std::vector<double> column_min_abs;
  std::vector<double> column_max_abs;
};

// Mean target F1 and shift per (model, target) cell. Throws naming the first
// missing cell when the grid is incomplete.
ShiftMatrix shift_matrix(std::span<const ExperimentReport> reports);

std::string to_csv(const ShiftMatrix& matrix);
std::string to_svg(const ShiftMatrix& matrix);

// Mean |shift| per model row.
std::vector<double> mean_abs_shift(const ShiftMatrix& matrix);

// Absolute shifts published for the rumour task, kept for reference in
// reports; desk-scale runs are not expected to reproduce them.
inline constexpr double kReferencePadaMeanAbsShift = 0.087;
inline constexpr double kReferenceNodaMeanAbsShift = 0.17;

struct AlphaSearch {
  double best_alpha = 0.0;
  std::vector<std::pair<double, double>> dev_scores;  // (alpha, pooled dev F1)
};

// Train PADA once per alpha and keep the best pooled source dev F1; ties go
// to the smaller alpha.
AlphaSearch grid_search_alpha(const MultiDomainDataset& dataset, const LeaveOneOutSetting& setting,
                              std::span<const double> values, ExperimentConfig config, std::uint64_t seed);

}  // namespace pada

#endif  // PADA_HARNESS_HPP_
