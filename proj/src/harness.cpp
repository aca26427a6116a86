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

#include "pada/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "pada/baselines.hpp"
#include "pada/error.hpp"

namespace pada {
namespace {

Error harness_error(const std::string& message) { return Error("harness", message); }

std::string fixed(double value, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
  if (name == "pada") return ModelKind::kPada;
  if (name == "pada-nc") return ModelKind::kPadaNc;
  if (name == "pada-dn") return ModelKind::kPadaDn;
  if (name == "noda") return ModelKind::kNoda;
  if (name == "moe") return ModelKind::kMoe;
  if (name == "ub") return ModelKind::kUpperBound;
  throw harness_error("unknown model '" + std::string(name) + "' (expected pada|pada-nc|pada-dn|noda|moe|ub)");
}

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kPada: return "pada";
    case ModelKind::kPadaNc: return "pada-nc";
    case ModelKind::kPadaDn: return "pada-dn";
    case ModelKind::kNoda: return "noda";
    case ModelKind::kMoe: return "moe";
    case ModelKind::kUpperBound: return "ub";
  }
  return "unknown";
}

ExperimentConfig desk_experiment() {
  ExperimentConfig c;
  c.model.d_model = 32;
  c.model.n_layers = 2;
  c.model.n_heads = 4;
  c.model.d_ffn = 64;
  c.model.max_input_len = 64;
  c.model.max_output_len = 12;
  c.train.alpha = 0.25;
  c.train.epochs = 20;
  c.train.batch_size = 16;
  c.train.lr = 2e-3;
  c.train.patience = 5;
  c.beam.max_output_len = 12;
  c.drf.embedding_dim = 16;
  return c;
}

SettingArtifacts prepare_setting(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                                 const DrfConfig& config, bool with_prompts) {
  SettingArtifacts out{build_vocabulary(dataset, sources, config.min_freq), {}, std::nullopt, {}};
  add_domain_tokens(out.vocab, sources);
  if (!with_prompts) return out;

  for (const auto& name : sources) {
    DomainProfile profile;
    if (config.profiles.empty()) {
      profile = extract_drf_set(dataset, sources, name, config.rho, config.k_drf);
    } else {
      const auto given = std::find_if(config.profiles.begin(), config.profiles.end(),
                                       [&](const DomainProfile& p) { return p.name == name; });
      if (given == config.profiles.end()) throw harness_error("no DRF profile given for source '" + name + "'");
      profile = *given;
    }
    // DRFs under the frequency cut-off would only ever be generated as <unk>.
    std::erase_if(profile.drfs, [&](const auto& f) { return !out.vocab.contains(f.token); });
    if (profile.drfs.empty()) throw harness_error("no DRF of '" + name + "' survives the vocabulary cut-off");
    out.profiles.push_back(std::move(profile));
  }
  out.embeddings = build_embeddings(dataset, sources, out.vocab, config.embedding_dim, config.embedding_window);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (const auto& ex : dataset.domain(sources[i]).train) {
      out.annotations.emplace(ex.id, annotate_prompt(ex, out.profiles[i], *out.embeddings, config.prompt_features));
    }
  }
  return out;
}

std::vector<TrainingItem> prompt_items(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                                       const SettingArtifacts& artifacts, const ModelConfig& config,
                                       PromptVariant variant) {
  std::vector<TrainingItem> items;
  for (const auto& name : sources) {
    for (const auto& ex : dataset.domain(name).train) {
      auto annotation = artifacts.annotations.at(ex.id);
      if (variant == PromptVariant::kDomainNameOnly) {
        annotation.drfs.clear();
        annotation.distances.clear();
      }
      TrainingItem item;
      item.generative = render_generative(ex, annotation, artifacts.vocab, config);
      const auto prompt = variant == PromptVariant::kUnconditioned ? std::vector<TokenId>{}
                                                                   : gold_prompt(annotation, artifacts.vocab);
      item.discriminative = render_discriminative(ex, prompt, artifacts.vocab, dataset.labels, config);
      items.push_back(std::move(item));
    }
  }
  return items;
}

std::size_t checkpoint_size(const ModelParams& params) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(params, out);
  return out.str().size();
}

ExperimentReport run_setting(const MultiDomainDataset& dataset, const LeaveOneOutSetting& setting, ModelKind kind,
                             const ExperimentConfig& config, std::uint64_t seed, TrainedSetting* trained,
                             bool evaluate_target) {
  if (!dataset.has_domain(setting.target)) throw harness_error("unknown target domain '" + setting.target + "'");
  if (std::find(setting.sources.begin(), setting.sources.end(), setting.target) != setting.sources.end()) {
    throw harness_error("target '" + setting.target + "' is listed among its own sources");
  }
  const bool prompted = kind == ModelKind::kPada || kind == ModelKind::kPadaNc || kind == ModelKind::kPadaDn;
  const std::vector<std::string> training_domains =
      kind == ModelKind::kUpperBound ? dataset.domain_names() : setting.sources;

  SettingArtifacts artifacts = prepare_setting(dataset, training_domains, config.drf, prompted);
  const Vocabulary& vocab = artifacts.vocab;
  ModelConfig model_config = config.model;
  model_config.vocab_size = static_cast<int>(vocab.size());
  model_config.n_classes = static_cast<int>(dataset.labels.size());
  model_config.seed = seed;
  TrainConfig train_config = config.train;
  train_config.seed = seed;
  const MetricSpec metric = metric_for(dataset, config.metric);
  const auto source_dev = pooled_dev(dataset, setting.sources);

  ExperimentReport report;
  report.setting = setting;
  report.model = model_kind_name(kind);
  report.config_hash = config.config_hash;
  report.seed = seed;

  std::vector<std::pair<std::string, ModelParams>> models;
  Classifier classifier;
  int fallbacks = 0;
  auto record = [&](TrainResult run, const std::string& name) {
    report.training_logs.push_back(std::move(run.log));
    models.emplace_back(name, std::move(run.params));
  };

  switch (kind) {
    case ModelKind::kPada:
    case ModelKind::kPadaNc:
    case ModelKind::kPadaDn: {
      const PromptVariant variant = kind == ModelKind::kPada     ? PromptVariant::kFull
                                    : kind == ModelKind::kPadaNc ? PromptVariant::kUnconditioned
                                                                 : PromptVariant::kDomainNameOnly;
      auto items = prompt_items(dataset, training_domains, artifacts, model_config, variant);
      if (kind == ModelKind::kPadaDn && !config.dn_mixture) {
        for (auto& item : items) item.generative.reset();
      }
      auto make_classifier = [&, kind](const ModelParams& params) -> Classifier {
        if (kind == ModelKind::kPada) {
          return [&params, &vocab, &config, &fallbacks](const Example& ex) {
            auto prediction = predict(params, ex.text, vocab, config.beam);
            fallbacks += prediction.prompt.best.fallback ? 1 : 0;
            return prediction.class_probs;
          };
        }
        if (kind == ModelKind::kPadaDn) {
          return [&params, &vocab, &training_domains](const Example& ex) {
            return pada_dn_predict(params, ex.text, training_domains, vocab);
          };
        }
        return [&params, &vocab](const Example& ex) { return pada_nc_predict(params, ex.text, vocab); };
      };
      const DevEvaluator evaluator = [&](const ModelParams& params) {
        return evaluate(source_dev, make_classifier(params), dataset, metric);
      };
      record(train(ModelParams::init(model_config), items, train_config, evaluator), report.model);
      classifier = make_classifier(models.front().second);
      break;
    }
    case ModelKind::kNoda:
      record(train_noda(dataset, training_domains, vocab, model_config, train_config, metric), report.model);
      break;
    case ModelKind::kUpperBound:
      record(train_upper_bound(dataset, vocab, model_config, train_config, metric), report.model);
      break;
    case ModelKind::kMoe: {
      std::vector<TrainResult> runs;
      const auto ensemble = train_moe(dataset, training_domains, vocab, model_config, train_config, metric, &runs);
      for (std::size_t i = 0; i < runs.size(); ++i) record(std::move(runs[i]), ensemble.experts[i].first);
      break;
    }
  }
  if (!classifier) {
    if (kind == ModelKind::kMoe) {
      classifier = [&models, &vocab](const Example& ex) {
        std::vector<Eigen::VectorXd> votes;
        for (const auto& [name, params] : models) votes.push_back(pada_nc_predict(params, ex.text, vocab));
        return average_probabilities(votes);
      };
    } else {
      const ModelParams& params = models.front().second;
      classifier = [&params, &vocab](const Example& ex) { return pada_nc_predict(params, ex.text, vocab); };
    }
  }

  report.source_dev_f1 = evaluate(source_dev, classifier, dataset, metric);
  fallbacks = 0;
  if (evaluate_target) {
    const auto& target = dataset.domain(setting.target);
    const auto pool = kind == ModelKind::kUpperBound ? target.dev : target.evaluation_pool();
    if (pool.empty()) throw harness_error("target '" + setting.target + "' has no examples to evaluate");
    report.target_f1 = evaluate(pool, classifier, dataset, metric);
  }
  report.prompt_fallbacks = fallbacks;
  report.shift = report.source_dev_f1 - report.target_f1;
  if (kind == ModelKind::kUpperBound) {
    for (const auto& d : dataset.domains) {
      if (!d.dev.empty()) report.per_domain_dev[d.name] = evaluate(d.dev, classifier, dataset, metric);
    }
  }
  for (const auto& [name, params] : models) {
    report.parameter_count += params.parameter_count();
    report.checkpoint_bytes += checkpoint_size(params);
  }
  if (trained) {
    trained->artifacts = std::move(artifacts);
    trained->models = std::move(models);
  }
  return report;
}

// --- reports -------------------------------------------------------------------

std::string to_json(const ExperimentReport& r) {
  nlohmann::ordered_json out;
  out["target"] = r.setting.target;
  out["sources"] = r.setting.sources;
  out["model"] = r.model;
  out["target_f1"] = r.target_f1;
  out["source_dev_f1"] = r.source_dev_f1;
  out["shift"] = r.shift;
  if (!r.per_domain_dev.empty()) out["per_domain_dev"] = r.per_domain_dev;
  out["config_hash"] = r.config_hash;
  out["seed"] = r.seed;
  out["parameter_count"] = r.parameter_count;
  out["checkpoint_bytes"] = r.checkpoint_bytes;
  out["prompt_fallbacks"] = r.prompt_fallbacks;
  out["training_logs"] = nlohmann::ordered_json::array();
  for (const auto& log : r.training_logs) {
    auto entries = nlohmann::ordered_json::array();
    std::istringstream lines(to_jsonl(log));
    for (std::string line; std::getline(lines, line);) entries.push_back(nlohmann::ordered_json::parse(line));
    out["training_logs"].push_back(std::move(entries));
  }
  return out.dump(2) + "\n";
}

ExperimentReport report_from_json(std::string_view text) {
  ExperimentReport r;
  try {
    const auto in = nlohmann::json::parse(text);
    r.setting.target = in.at("target").get<std::string>();
    r.setting.sources = in.at("sources").get<std::vector<std::string>>();
    r.model = in.at("model").get<std::string>();
    r.target_f1 = in.at("target_f1").get<double>();
    r.source_dev_f1 = in.at("source_dev_f1").get<double>();
    r.shift = in.at("shift").get<double>();
    if (in.contains("per_domain_dev")) r.per_domain_dev = in.at("per_domain_dev").get<std::map<std::string, double>>();
    r.config_hash = in.at("config_hash").get<std::string>();
    r.seed = in.at("seed").get<std::uint64_t>();
    r.parameter_count = in.value("parameter_count", std::size_t{0});
    r.checkpoint_bytes = in.value("checkpoint_bytes", std::size_t{0});
    r.prompt_fallbacks = in.value("prompt_fallbacks", 0);
    for (const auto& log : in.value("training_logs", nlohmann::json::array())) {
      std::vector<EpochLog> entries;
      for (const auto& e : log) {
        EpochLog entry;
        entry.epoch = e.at("epoch").get<int>();
        if (e.contains("gen_loss")) entry.gen_loss = e.at("gen_loss").get<double>();
        if (e.contains("disc_loss")) entry.disc_loss = e.at("disc_loss").get<double>();
        entry.dev_f1 = e.at("dev_f1").get<double>();
        entry.lr = e.at("lr").get<double>();
        entries.push_back(entry);
      }
      r.training_logs.push_back(std::move(entries));
    }
  } catch (const nlohmann::json::exception& e) {
    throw harness_error(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::vector<ExperimentReport> run_leave_one_out(const MultiDomainDataset& dataset, std::span<const ModelKind> models,
                                                const ExperimentConfig& config, std::span<const std::uint64_t> seeds,
                                                int threads) {
  struct Cell {
    LeaveOneOutSetting setting;
    ModelKind kind;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& setting : make_loo_settings(dataset)) {
    for (ModelKind kind : models) {
      for (std::uint64_t seed : seeds) cells.push_back({setting, kind, seed});
    }
  }
  std::vector<ExperimentReport> reports(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        reports[i] = run_setting(dataset, cells[i].setting, cells[i].kind, config, cells[i].seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reports;
}

// --- shift matrix -----------------------------------------------------------------

ShiftMatrix shift_matrix(std::span<const ExperimentReport> reports) {
  if (reports.empty()) throw harness_error("no reports to tabulate");
  ShiftMatrix m;
  for (const auto& r : reports) {
    if (std::find(m.models.begin(), m.models.end(), r.model) == m.models.end()) m.models.push_back(r.model);
    if (std::find(m.settings.begin(), m.settings.end(), r.setting.target) == m.settings.end()) {
      m.settings.push_back(r.setting.target);
    }
  }
  const auto rows = static_cast<Eigen::Index>(m.models.size());
  const auto cols = static_cast<Eigen::Index>(m.settings.size());
  std::vector<std::vector<std::vector<const ExperimentReport*>>> grid(
      m.models.size(), std::vector<std::vector<const ExperimentReport*>>(m.settings.size()));
  for (const auto& r : reports) {
    const auto i = std::find(m.models.begin(), m.models.end(), r.model) - m.models.begin();
    const auto j = std::find(m.settings.begin(), m.settings.end(), r.setting.target) - m.settings.begin();
    grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].push_back(&r);
  }
  m.f1 = m.shift = m.f1_sd = m.shift_sd = Eigen::MatrixXd::Zero(rows, cols);
  m.seeds = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto& cell = grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (cell.empty()) {
        throw harness_error("missing report for model '" + m.models[static_cast<std::size_t>(i)] + "' on target '" +
                            m.settings[static_cast<std::size_t>(j)] + "'");
      }
      if (m.seeds == 0) m.seeds = static_cast<int>(cell.size());
      if (static_cast<int>(cell.size()) != m.seeds) throw harness_error("cells have unequal numbers of seeds");
      const double n = static_cast<double>(cell.size());
      double f1 = 0.0, shift = 0.0;
      for (const auto* r : cell) {
        f1 += r->target_f1;
        shift += r->shift;
      }
      f1 /= n;
      shift /= n;
      double f1_var = 0.0, shift_var = 0.0;
      for (const auto* r : cell) {
        f1_var += (r->target_f1 - f1) * (r->target_f1 - f1);
        shift_var += (r->shift - shift) * (r->shift - shift);
      }
      m.f1(i, j) = f1;
      m.shift(i, j) = shift;
      if (cell.size() > 1) {
        m.f1_sd(i, j) = std::sqrt(f1_var / (n - 1.0));
        m.shift_sd(i, j) = std::sqrt(shift_var / (n - 1.0));
      }
    }
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    m.column_min_abs.push_back(m.shift.col(j).cwiseAbs().minCoeff());
    m.column_max_abs.push_back(m.shift.col(j).cwiseAbs().maxCoeff());
  }
  return m;
}

std::vector<double> mean_abs_shift(const ShiftMatrix& matrix) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < matrix.shift.rows(); ++i) out.push_back(matrix.shift.row(i).cwiseAbs().mean());
  return out;
}

std::string to_csv(const ShiftMatrix& m) {
  std::string out = "model";
  for (const auto& s : m.settings) {
    out += "," + s + ":f1," + s + ":shift";
    if (m.seeds > 1) out += "," + s + ":f1_sd," + s + ":shift_sd";
  }
  out += ",mean_f1,mean_abs_shift\n";
  const auto abs_shift = mean_abs_shift(m);
  for (std::size_t i = 0; i < m.models.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out += m.models[i];
    for (Eigen::Index j = 0; j < m.f1.cols(); ++j) {
      out += "," + fixed(m.f1(r, j)) + "," + fixed(m.shift(r, j));
      if (m.seeds > 1) out += "," + fixed(m.f1_sd(r, j)) + "," + fixed(m.shift_sd(r, j));
    }
    out += "," + fixed(m.f1.row(r).mean()) + "," + fixed(abs_shift[i]) + "\n";
  }
  return out;
}

std::string to_svg(const ShiftMatrix& m) {
  constexpr int kCellW = 120, kCellH = 36, kLabelW = 90, kHeaderH = 30;
  const int width = kLabelW + kCellW * static_cast<int>(m.settings.size());
  const int height = kHeaderH + kCellH * static_cast<int>(m.models.size());
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t j = 0; j < m.settings.size(); ++j) {
    svg << "  <text x=\"" << kLabelW + kCellW * static_cast<int>(j) + kCellW / 2 << "\" y=\"20\" text-anchor=\"middle\">"
        << m.settings[j] << "</text>\n";
  }
  for (std::size_t i = 0; i < m.models.size(); ++i) {
    const int y = kHeaderH + kCellH * static_cast<int>(i);
    svg << "  <text x=\"6\" y=\"" << y + kCellH / 2 + 4 << "\">" << m.models[i] << "</text>\n";
    for (std::size_t j = 0; j < m.settings.size(); ++j) {
      const double value = m.shift(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double lo = m.column_min_abs[j], hi = m.column_max_abs[j];
      const double t = hi > lo ? (std::abs(value) - lo) / (hi - lo) : 0.0;
      // Positive shifts (target below source) in red, negative in blue.
      const int fade = static_cast<int>(std::lround(255.0 * (1.0 - 0.8 * t)));
      const std::string fill = value >= 0.0 ? "rgb(255," + std::to_string(fade) + "," + std::to_string(fade) + ")"
                                            : "rgb(" + std::to_string(fade) + "," + std::to_string(fade) + ",255)";
      const int x = kLabelW + kCellW * static_cast<int>(j);
      svg << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCellW << "\" height=\"" << kCellH
          << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
      svg << "  <text x=\"" << x + kCellW / 2 << "\" y=\"" << y + kCellH / 2 + 4 << "\" text-anchor=\"middle\">"
          << fixed(100.0 * value, 1) << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

AlphaSearch grid_search_alpha(const MultiDomainDataset& dataset, const LeaveOneOutSetting& setting,
                              std::span<const double> values, ExperimentConfig config, std::uint64_t seed) {
  if (values.empty()) throw harness_error("empty alpha grid");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  AlphaSearch out;
  double best = -1.0;
  for (double alpha : sorted) {
    config.train.alpha = alpha;
    const auto report = run_setting(dataset, setting, ModelKind::kPada, config, seed, nullptr, false);
    out.dev_scores.emplace_back(alpha, report.source_dev_f1);
    if (report.source_dev_f1 > best) {
      best = report.source_dev_f1;
      out.best_alpha = alpha;
    }
  }
  return out;
}

}  // namespace pada
