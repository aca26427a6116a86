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

#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "pada/baselines.hpp"
#include "pada/error.hpp"

namespace pada::cli {
namespace fs = std::filesystem;

namespace {

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

std::string format_bool(bool value) { return value ? "true" : "false"; }

std::string rule_name(LabelRule rule) {
  switch (rule) {
    case LabelRule::kCueMajority: return "cue-majority";
    case LabelRule::kFamilyFlip: return "family-flip";
    case LabelRule::kDomainParity: return "domain-parity";
    case LabelRule::kFamilyLexicon: return "family-lexicon";
  }
  return "";
}

LabelRule parse_rule(const std::string& name) {
  for (auto rule : {LabelRule::kCueMajority, LabelRule::kFamilyFlip, LabelRule::kDomainParity,
                    LabelRule::kFamilyLexicon}) {
    if (rule_name(rule) == name) return rule;
  }
  throw UsageError("unknown label_rule '" + name + "'");
}

std::vector<ConfigKey> make_keys() {
  const auto desk = desk_experiment();
  const SyntheticSpec synthetic;
  const JsonlSchema schema;
  return {
      {"data", "", "input JSONL dataset"},
      {"out", "", "output directory; nothing is written elsewhere"},
      {"model", "pada", "model for train: pada | pada-nc | pada-dn | noda | moe | ub"},
      {"models", "pada,pada-nc,pada-dn,noda,moe", "comma-separated models for run-loo"},
      {"target", "", "held-out target domain"},
      {"seed", "1", "seed for train"},
      {"seeds", "1", "comma-separated seeds for run-loo"},
      {"task_metric", "binary", "binary | macro"},
      {"drfs", "", "directory of DRF profiles written by drf extract"},
      {"checkpoint", "", "directory written by train"},
      {"reports", "", "directory of per-cell reports for report (default <out>/reports)"},
      {"field_id", schema.id, "JSONL id field"},
      {"field_text", schema.text, "JSONL text field"},
      {"field_premise", schema.premise, "JSONL premise field"},
      {"field_hypothesis", schema.hypothesis, "JSONL hypothesis field"},
      {"field_label", schema.label, "JSONL label field"},
      {"field_domain", schema.domain, "JSONL domain field"},
      {"field_split", schema.split, "JSONL split field"},
      {"labels", "", "comma-separated label set in class order (default: sorted labels seen)"},
      {"positive_label", "pos", "class scored by binary F1"},
      {"domains", std::to_string(synthetic.num_domains), "gen-data: number of domains"},
      {"examples_per_domain", std::to_string(synthetic.examples_per_domain), "gen-data: examples per domain"},
      {"label_rule", rule_name(synthetic.rule), "gen-data: family-lexicon | cue-majority | family-flip | domain-parity"},
      {"label_noise", format_double(synthetic.label_noise), "gen-data: fraction of flipped labels"},
      {"data_seed", std::to_string(synthetic.seed), "gen-data: generator seed"},
      {"rho", format_double(desk.drf.rho), "DRF frequency-ratio bound"},
      {"k_drf", std::to_string(desk.drf.k_drf), "DRFs kept per domain"},
      {"prompt_features", std::to_string(desk.drf.prompt_features), "DRFs per prompt"},
      {"embedding_dim", std::to_string(desk.drf.embedding_dim), "PPMI-SVD embedding size"},
      {"embedding_window", std::to_string(desk.drf.embedding_window), "co-occurrence window"},
      {"min_freq", std::to_string(desk.drf.min_freq), "vocabulary frequency cut-off"},
      {"d_model", std::to_string(desk.model.d_model), "model width"},
      {"n_layers", std::to_string(desk.model.n_layers), "encoder and decoder layers"},
      {"n_heads", std::to_string(desk.model.n_heads), "attention heads"},
      {"d_ffn", std::to_string(desk.model.d_ffn), "feed-forward width"},
      {"max_input_len", std::to_string(desk.model.max_input_len), "input length cap"},
      {"max_output_len", std::to_string(desk.model.max_output_len), "prompt length cap"},
      {"conv_filters", std::to_string(desk.model.conv_filters), "classifier convolution filters"},
      {"conv_width", std::to_string(desk.model.conv_width), "classifier convolution width"},
      {"position_encodings", format_bool(desk.model.position_encodings), "add sinusoidal positions"},
      {"alpha", format_double(desk.train.alpha), "probability of a generative training instance"},
      {"epochs", std::to_string(desk.train.epochs), "training epochs"},
      {"batch_size", std::to_string(desk.train.batch_size), "batch size"},
      {"lr", format_double(desk.train.lr), "peak learning rate"},
      {"warmup_ratio", format_double(desk.train.warmup_ratio), "warmup fraction of all steps"},
      {"patience", std::to_string(desk.train.patience), "epochs without dev gain before stopping"},
      {"beam_size", std::to_string(desk.beam.beam_size), "beam width"},
      {"num_groups", std::to_string(desk.beam.num_groups), "diverse beam groups"},
      {"num_candidates", std::to_string(desk.beam.num_candidates), "prompt candidates returned"},
      {"diversity_penalty", format_double(desk.beam.diversity_penalty), "diverse beam penalty"},
      {"length_normalize", format_bool(desk.beam.length_normalize), "rank candidates by score per token"},
      {"dn_mixture", format_bool(desk.dn_mixture), "pada-dn keeps the name-generation task"},
  };
}

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool known_key(const std::string& key) {
  const auto& keys = config_keys();
  return std::any_of(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == key; });
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cli", "cannot read " + path.string());
  std::ostringstream content;
  content << in.rdbuf();
  return content.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cli", "cannot write " + path.string());
  out << content;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += p + "\n";
  return out;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = make_keys();
  return keys;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + " is not key = value");
    }
    const auto key = trim(std::string_view(body).substr(0, eq));
    if (!known_key(key)) throw UsageError("unknown config key '" + key + "' on line " + std::to_string(line_no));
    out[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

RunConfig RunConfig::merge(const std::map<std::string, std::string>& file,
                           const std::map<std::string, std::string>& flags) {
  RunConfig c;
  for (const auto& key : config_keys()) c.values_[key.name] = key.default_value;
  for (const auto* layer : {&file, &flags}) {
    for (const auto& [key, value] : *layer) {
      if (!known_key(key)) throw UsageError("unknown config key '" + key + "'");
      c.values_[key] = value;
    }
  }
  return c;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
  return it->second;
}

int RunConfig::get_int(const std::string& key) const {
  const auto& text = get(key);
  int value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw UsageError(key + " must be an integer, got '" + text + "'");
  }
  return value;
}

double RunConfig::get_double(const std::string& key) const {
  const auto& text = get(key);
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw UsageError(key + " must be a number, got '" + text + "'");
  }
  return value;
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& text = get(key);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw UsageError(key + " must be true or false, got '" + text + "'");
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(get(key));
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& [key, value] : values_) {
    if (key == "out") continue;
    for (char ch : key + "=" + value + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ull;
    }
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig c;
  c.model.d_model = get_int("d_model");
  c.model.n_layers = get_int("n_layers");
  c.model.n_heads = get_int("n_heads");
  c.model.d_ffn = get_int("d_ffn");
  c.model.max_input_len = get_int("max_input_len");
  c.model.max_output_len = get_int("max_output_len");
  c.model.conv_filters = get_int("conv_filters");
  c.model.conv_width = get_int("conv_width");
  c.model.position_encodings = get_bool("position_encodings");
  c.train.alpha = get_double("alpha");
  c.train.epochs = get_int("epochs");
  c.train.batch_size = get_int("batch_size");
  c.train.lr = get_double("lr");
  c.train.warmup_ratio = get_double("warmup_ratio");
  c.train.patience = get_int("patience");
  c.beam.beam_size = get_int("beam_size");
  c.beam.num_groups = get_int("num_groups");
  c.beam.num_candidates = get_int("num_candidates");
  c.beam.diversity_penalty = get_double("diversity_penalty");
  c.beam.max_output_len = c.model.max_output_len;
  c.beam.length_normalize = get_bool("length_normalize");
  c.drf.rho = get_double("rho");
  c.drf.k_drf = get_int("k_drf");
  c.drf.prompt_features = get_int("prompt_features");
  c.drf.embedding_dim = get_int("embedding_dim");
  c.drf.embedding_window = get_int("embedding_window");
  c.drf.min_freq = get_int("min_freq");
  c.metric = metric();
  c.dn_mixture = get_bool("dn_mixture");
  c.config_hash = hash();
  return c;
}

SyntheticSpec RunConfig::synthetic() const {
  SyntheticSpec s;
  s.num_domains = get_int("domains");
  s.examples_per_domain = get_int("examples_per_domain");
  s.rule = parse_rule(get("label_rule"));
  s.label_noise = get_double("label_noise");
  s.seed = static_cast<std::uint64_t>(get_int("data_seed"));
  return s;
}

JsonlSchema RunConfig::schema() const {
  JsonlSchema s;
  s.id = get("field_id");
  s.text = get("field_text");
  s.premise = get("field_premise");
  s.hypothesis = get("field_hypothesis");
  s.label = get("field_label");
  s.domain = get("field_domain");
  s.split = get("field_split");
  s.labels = get_list("labels");
  if (metric() == MetricKind::kBinaryF1) s.positive_label = get("positive_label");
  return s;
}

MetricKind RunConfig::metric() const {
  const auto& name = get("task_metric");
  if (name == "binary") return MetricKind::kBinaryF1;
  if (name == "macro") return MetricKind::kMacroF1;
  throw UsageError("task_metric must be binary or macro, got '" + name + "'");
}

namespace {

fs::path required_dir(const RunConfig& c, const std::string& key) {
  if (c.get(key).empty()) throw UsageError(flag_name(key) + " is required");
  return c.get(key);
}

fs::path output_dir(const RunConfig& c) {
  const auto out = required_dir(c, "out");
  fs::create_directories(out);
  write_file(out / "run_config.txt", c.to_text());
  return out;
}

MultiDomainDataset load_data(const RunConfig& c) {
  if (c.get("data").empty()) throw UsageError("--data is required");
  return ingest_jsonl(c.get("data"), c.schema());
}

std::vector<std::string> sources_for(const MultiDomainDataset& ds, const std::string& target) {
  if (!target.empty() && !ds.has_domain(target)) throw UsageError("unknown target domain '" + target + "'");
  std::vector<std::string> sources;
  for (const auto& name : ds.domain_names()) {
    if (name != target) sources.push_back(name);
  }
  return sources;
}

ModelKind model_kind(const std::string& name) {
  try {
    return parse_model_kind(name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

int threads_from_env() {
  const char* env = std::getenv("PADA_LAB_THREADS");
  const int hardware = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (env == nullptr || *env == '\0') return hardware;
  const std::string text(env);
  int value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size() || value < 1) {
    throw UsageError("PADA_LAB_THREADS must be a positive integer, got '" + text + "'");
  }
  return std::min(value, hardware);
}

int gen_data(const RunConfig& c) {
  const auto spec = c.synthetic();
  const auto out = output_dir(c);
  write_jsonl(generate_synthetic(spec), out / "data.jsonl");
  std::cout << (out / "data.jsonl").string() << "\n";
  return kExitOk;
}

int drf_extract(const RunConfig& c) {
  const auto ds = load_data(c);
  const auto sources = sources_for(ds, c.get("target"));
  const auto config = c.experiment();
  const auto out = output_dir(c);
  const auto artifacts = prepare_setting(ds, sources, config.drf, true);
  for (const auto& profile : artifacts.profiles) {
    save_profile(profile, out / ("drf-" + domain_token(profile.name) + ".json"));
    std::cout << profile.name << ":";
    for (std::size_t i = 0; i < std::min<std::size_t>(profile.drfs.size(), 8); ++i) {
      std::cout << " " << profile.drfs[i].token;
    }
    std::cout << "\n";
  }
  artifacts.embeddings->save_text(out / "embeddings.txt");
  return kExitOk;
}

std::vector<DomainProfile> load_profiles(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("--drfs must name a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<DomainProfile> profiles;
  for (const auto& f : files) profiles.push_back(load_profile(f));
  return profiles;
}

int train_cmd(const RunConfig& c) {
  const auto& target = c.get("target");
  if (target.empty()) throw UsageError("--target is required");
  const auto kind = model_kind(c.get("model"));
  auto config = c.experiment();
  const auto ds = load_data(c);
  const LeaveOneOutSetting setting{target, sources_for(ds, target)};
  if (!c.get("drfs").empty()) config.drf.profiles = load_profiles(c.get("drfs"));
  const auto out = output_dir(c);

  TrainedSetting trained;
  const auto report =
      run_setting(ds, setting, kind, config, static_cast<std::uint64_t>(c.get_int("seed")), &trained);
  trained.artifacts.vocab.save(out / "vocab.txt");
  write_file(out / "labels.txt", join(ds.labels));
  write_file(out / "sources.txt", join(setting.sources));
  if (kind == ModelKind::kMoe) {
    std::vector<std::string> experts;
    for (const auto& [name, params] : trained.models) {
      experts.push_back(name);
      save_checkpoint(params, out / ("expert-" + domain_token(name) + ".ckpt"));
    }
    write_file(out / "experts.txt", join(experts));
  } else {
    save_checkpoint(trained.models.front().second, out / "model.ckpt");
  }
  write_file(out / "report.json", to_json(report));
  std::cout << report.model << " target=" << target << " target_f1=" << report.target_f1
            << " source_dev_f1=" << report.source_dev_f1 << " shift=" << report.shift << "\n";
  return kExitOk;
}

int predict_cmd(const RunConfig& c) {
  const auto ds = load_data(c);
  const fs::path ckpt = required_dir(c, "checkpoint");
  const auto trained_config = RunConfig::merge(parse_config_text(read_file(ckpt / "run_config.txt")), {});
  const auto kind = parse_model_kind(trained_config.get("model"));
  const auto vocab = Vocabulary::load(ckpt / "vocab.txt");
  const auto labels = read_lines(ckpt / "labels.txt");
  const auto sources = read_lines(ckpt / "sources.txt");
  const auto beam = c.experiment().beam;

  ExpertEnsemble ensemble;
  if (kind == ModelKind::kMoe) {
    for (const auto& name : read_lines(ckpt / "experts.txt")) {
      ensemble.experts.emplace_back(name, load_checkpoint(ckpt / ("expert-" + domain_token(name) + ".ckpt")));
    }
  } else {
    ensemble.experts.emplace_back("", load_checkpoint(ckpt / "model.ckpt"));
  }
  const auto& params = ensemble.experts.front().second;
  if (params.config.n_classes != static_cast<int>(labels.size())) {
    throw Error("cli", "checkpoint has " + std::to_string(params.config.n_classes) + " classes but labels.txt lists " +
                           std::to_string(labels.size()));
  }

  std::vector<Example> examples;
  if (!c.get("target").empty()) {
    if (!ds.has_domain(c.get("target"))) throw UsageError("unknown target domain '" + c.get("target") + "'");
    examples = ds.domain(c.get("target")).evaluation_pool();
  } else {
    for (const auto& d : ds.domains) {
      for (const auto* split : {&d.train, &d.dev, &d.test}) examples.insert(examples.end(), split->begin(), split->end());
    }
  }

  const auto out = output_dir(c);
  std::ofstream file(out / "predictions.jsonl", std::ios::binary);
  if (!file) throw Error("cli", "cannot write " + (out / "predictions.jsonl").string());
  for (const auto& ex : examples) {
    nlohmann::ordered_json record;
    record["id"] = ex.id;
    Eigen::VectorXd probs;
    record["generated_prompt"] = nullptr;
    record["candidates"] = nlohmann::ordered_json::array();
    switch (kind) {
      case ModelKind::kPada: {
        const auto p = predict(params, ex.text, vocab, beam);
        probs = p.class_probs;
        record["generated_prompt"] = vocab.decode(p.prompt.best.tokens);
        for (const auto& cand : p.prompt.candidates) record["candidates"].push_back(vocab.decode(cand.tokens));
        break;
      }
      case ModelKind::kPadaDn:
        probs = pada_dn_predict(params, ex.text, sources, vocab);
        break;
      case ModelKind::kMoe:
        probs = moe_predict(ensemble, ex.text, vocab);
        break;
      default:
        probs = pada_nc_predict(params, ex.text, vocab);
    }
    record["class_probs"] = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < labels.size(); ++k) record["class_probs"][labels[k]] = probs(static_cast<Eigen::Index>(k));
    record["predicted_label"] = labels[static_cast<std::size_t>(argmax_lowest(probs))];
    file << record.dump() << "\n";
  }
  std::cout << examples.size() << " predictions written to " << (out / "predictions.jsonl").string() << "\n";
  return kExitOk;
}

void write_tables(const fs::path& out, const std::vector<ExperimentReport>& reports) {
  const auto matrix = shift_matrix(reports);
  const auto csv = to_csv(matrix);
  write_file(out / "shifts.csv", csv);
  write_file(out / "shifts.svg", to_svg(matrix));
  std::cout << csv;
  const auto abs_shift = mean_abs_shift(matrix);
  for (std::size_t i = 0; i < matrix.models.size(); ++i) {
    std::cout << "mean |shift| " << matrix.models[i] << " = " << abs_shift[i] << "\n";
  }
}

int run_loo(const RunConfig& c) {
  std::vector<ModelKind> models;
  for (const auto& name : c.get_list("models")) models.push_back(model_kind(name));
  if (models.empty()) throw UsageError("--models lists no model");
  std::vector<std::uint64_t> seeds;
  for (const auto& s : c.get_list("seeds")) {
    std::uint64_t value = 0;
    const auto result = std::from_chars(s.data(), s.data() + s.size(), value);
    if (result.ec != std::errc() || result.ptr != s.data() + s.size()) throw UsageError("bad seed '" + s + "'");
    seeds.push_back(value);
  }
  if (seeds.empty()) throw UsageError("--seeds lists no seed");
  const auto config = c.experiment();
  const int threads = threads_from_env();
  const auto ds = load_data(c);
  const auto out = output_dir(c);

  const auto reports = run_leave_one_out(ds, models, config, seeds, threads);
  fs::create_directories(out / "reports");
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%03zu", i);
    write_file(out / "reports" /
                   (std::string(prefix) + "-" + r.model + "-" + domain_token(r.setting.target) + "-seed" +
                    std::to_string(r.seed) + ".json"),
               to_json(r));
  }
  write_tables(out, reports);
  return kExitOk;
}

int report_cmd(const RunConfig& c) {
  const auto out = required_dir(c, "out");
  const fs::path dir = c.get("reports").empty() ? out / "reports" : fs::path(c.get("reports"));
  if (!fs::is_directory(dir)) throw UsageError("no report directory at " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ExperimentReport> reports;
  for (const auto& f : files) reports.push_back(report_from_json(read_file(f)));
  fs::create_directories(out);
  write_tables(out, reports);
  std::cout << "reference mean |shift|: pada " << kReferencePadaMeanAbsShift << ", noda "
            << kReferenceNodaMeanAbsShift << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Prompt-based any-domain adaptation lab", "pada_lab"};
  app.require_subcommand(1);
  std::map<std::string, std::string> flags;
  std::string config_path;
  auto add_config_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value run configuration file");
    for (const auto& key : config_keys()) {
      const auto help = key.help + (key.default_value.empty() ? "" : " [" + key.default_value + "]");
      sub->add_option_function<std::string>(
          flag_name(key.name), [&flags, name = key.name](const std::string& v) { flags[name] = v; }, help);
    }
  };
  auto* gen = app.add_subcommand("gen-data", "write the synthetic multi-domain corpus to <out>/data.jsonl");
  auto* drf = app.add_subcommand("drf", "domain related features");
  drf->require_subcommand(1);
  auto* extract = drf->add_subcommand("extract", "write per-source DRF profiles and embeddings");
  auto* train = app.add_subcommand("train", "train one model on every domain but --target");
  auto* predict_sub = app.add_subcommand("predict", "predict with a trained checkpoint directory");
  auto* loo = app.add_subcommand("run-loo", "leave-one-out runs of several models");
  auto* report = app.add_subcommand("report", "rebuild the shift tables from per-cell reports");
  for (auto* sub : {gen, extract, train, predict_sub, loo, report}) add_config_options(sub);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto file = config_path.empty() ? std::map<std::string, std::string>{}
                                          : parse_config_text(read_file(config_path));
    const auto config = RunConfig::merge(file, flags);
    if (gen->parsed()) return gen_data(config);
    if (extract->parsed()) return drf_extract(config);
    if (train->parsed()) return train_cmd(config);
    if (predict_sub->parsed()) return predict_cmd(config);
    if (loo->parsed()) return run_loo(config);
    return report_cmd(config);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace pada::cli
