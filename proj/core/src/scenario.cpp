// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace ffsim {

namespace {

using nlohmann::json;

enum StreamTag : std::uint64_t {
  kSplitStream = 11,
  kDataStream = 12,
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config: line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(line, "expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    fail(line, "expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  fail(line, "expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string normalize_enum(std::string v) {
  std::replace(v.begin(), v.end(), '-', '_');
  return v;
}

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const char* kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kCentralized: return "centralized";
    case ScenarioKind::kFederated: return "federated";
    case ScenarioKind::kPrivacySweep: return "privacy_sweep";
    case ScenarioKind::kMultiModal: return "multi_modal";
    case ScenarioKind::kMultiDisease: return "multi_disease";
    case ScenarioKind::kUnbalanced: return "unbalanced";
  }
  return "?";
}

const char* learner_name(Learner l) {
  switch (l) {
    case Learner::kMaml: return "maml";
    case Learner::kMetaSgd: return "metasgd";
    case Learner::kMetaDpsgd: return "metadpsgd";
  }
  return "?";
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

ModelConfig ScenarioConfig::model_config() const {
  ModelConfig m;
  m.input_dim = input_side * input_side;
  m.hidden_dims = hidden_dims;
  m.num_classes = episode.n_way;
  m.batchnorm_enabled = batchnorm;
  return m;
}

double ScenarioConfig::resolved_sigma(double eps) const {
  PrivacyBudget budget;
  budget.epsilon = eps;
  budget.delta = delta;
  CalibrationInputs inputs;
  inputs.sampling_probability =
      sampling_probability > 0.0
          ? sampling_probability
          : std::min(1.0, static_cast<double>(tasks_per_batch) /
                              static_cast<double>(tasks_per_epoch));
  inputs.steps = steps > 0 ? steps : std::max(1, rounds * local_batches);
  inputs.c2 = c2;
  inputs.log_base = log_base;
  return calibrate_sigma(budget, inputs);
}

ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig c;
  std::string line;
  std::string section = "scenario";
  int lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(lineno, "unterminated section header");
      section = normalize_enum(trim(line.substr(1, line.size() - 2)));
      if (section != "scenario" && section != "model" && section != "episode" &&
          section != "meta" && section != "privacy" && section != "federation" &&
          section != "data") {
        fail(lineno, "unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(lineno, "empty key");
    const std::string qual = section + "." + key;

    if (qual == "scenario.kind") {
      const std::string v = normalize_enum(value);
      if (v == "centralized") c.kind = ScenarioKind::kCentralized;
      else if (v == "federated") c.kind = ScenarioKind::kFederated;
      else if (v == "privacy_sweep") c.kind = ScenarioKind::kPrivacySweep;
      else if (v == "multi_modal") c.kind = ScenarioKind::kMultiModal;
      else if (v == "multi_disease") c.kind = ScenarioKind::kMultiDisease;
      else if (v == "unbalanced") c.kind = ScenarioKind::kUnbalanced;
      else fail(lineno, "unknown scenario kind '" + value + "'");
    } else if (qual == "scenario.learner") {
      if (value == "maml") c.learner = Learner::kMaml;
      else if (value == "metasgd") c.learner = Learner::kMetaSgd;
      else if (value == "metadpsgd") c.learner = Learner::kMetaDpsgd;
      else fail(lineno, "unknown learner '" + value + "'");
    } else if (qual == "scenario.rounds") {
      const long long v = parse_int(value, lineno);
      if (v < 0) fail(lineno, "rounds must be >= 0");
      c.rounds = static_cast<int>(v);
    } else if (qual == "scenario.eval_cadence") {
      const long long v = parse_int(value, lineno);
      if (v < 0) fail(lineno, "eval_cadence must be >= 0");
      c.eval_cadence = static_cast<int>(v);
    } else if (qual == "scenario.eval_tasks") {
      const long long v = parse_int(value, lineno);
      if (v < 2) fail(lineno, "eval_tasks must be >= 2");
      c.eval_tasks = static_cast<int>(v);
    } else if (qual == "scenario.seed") {
      c.seed = static_cast<std::uint64_t>(parse_int(value, lineno));
    } else if (qual == "scenario.out_dir") {
      if (value.empty()) fail(lineno, "out_dir must not be empty");
      c.out_dir = value;
    } else if (qual == "scenario.sweep_epsilons") {
      c.sweep_epsilons = split_list(value);
      if (c.sweep_epsilons.empty()) fail(lineno, "sweep_epsilons must not be empty");
      for (const std::string& e : c.sweep_epsilons) {
        if (e != "none" && parse_double(e, lineno) <= 0.0) {
          fail(lineno, "sweep epsilon must be positive or 'none'");
        }
      }
    } else if (qual == "model.input_side") {
      const long long v = parse_int(value, lineno);
      if (v < 1) fail(lineno, "input_side must be >= 1");
      c.input_side = static_cast<int>(v);
    } else if (qual == "model.hidden_dims") {
      c.hidden_dims.clear();
      for (const std::string& d : split_list(value)) {
        const long long v = parse_int(d, lineno);
        if (v < 1) fail(lineno, "hidden dims must be positive");
        c.hidden_dims.push_back(static_cast<int>(v));
      }
      if (c.hidden_dims.empty()) fail(lineno, "hidden_dims must not be empty");
    } else if (qual == "model.batchnorm") {
      c.batchnorm = parse_bool(value, lineno);
    } else if (qual == "episode.n_way") {
      const long long v = parse_int(value, lineno);
      if (v < 2) fail(lineno, "n_way must be >= 2");
      c.episode.n_way = static_cast<int>(v);
    } else if (qual == "episode.k_shot") {
      const long long v = parse_int(value, lineno);
      if (v < 1) fail(lineno, "k_shot must be >= 1");
      c.episode.k_shot = static_cast<int>(v);
    } else if (qual == "episode.q_query") {
      const long long v = parse_int(value, lineno);
      if (v < 1) fail(lineno, "q_query must be >= 1");
      c.episode.q_query = static_cast<int>(v);
    } else if (qual == "meta.beta") {
      const double v = parse_double(value, lineno);
      if (v < 0.0) fail(lineno, "beta must be >= 0");
      c.beta = v;
    } else if (qual == "meta.inner_steps") {
      const long long v = parse_int(value, lineno);
      if (v < 1) fail(lineno, "inner_steps must be >= 1");
      c.inner_steps = static_cast<int>(v);
    } else if (qual == "meta.tasks_per_batch") {
      const long long v = parse_int(value, lineno);
      if (v < 1) fail(lineno, "tasks_per_batch must be >= 1");
      c.tasks_per_batch = static_cast<int>(v);
    } else if (qual == "meta.clip_bound") {
      if (value == "inf" || value == "unbounded") {
        c.clip_bound = std::numeric_limits<double>::infinity();
      } else {
        const double v = parse_double(value, lineno);
        if (v <= 0.0) fail(lineno, "clip_bound must be positive");
        c.clip_bound = v;
      }
    } else if (qual == "meta.maml_inner_rate") {
      const double v = parse_double(value, lineno);
      if (v < 0.0) fail(lineno, "maml_inner_rate must be >= 0");
      c.maml_inner_rate = v;
    } else if (qual == "meta.noise_convention") {
      const std::string v = normalize_enum(value);
      if (v == "standard") c.noise_convention = NoiseConvention::kStandardDpsgd;
      else if (v == "paper_literal") c.noise_convention = NoiseConvention::kPaperLiteral;
      else fail(lineno, "unknown noise convention '" + value + "'");
    } else if (qual == "privacy.epsilon") {
      const double v = parse_double(value, lineno);
      if (v <= 0.0) fail(lineno, "epsilon must be positive");
      c.epsilon = v;
    } else if (qual == "privacy.delta") {
      const double v = parse_double(value, lineno);
      if (v <= 0.0 || v >= 1.0) fail(lineno, "delta must be in (0, 1)");
      c.delta = v;
    } else if (qual == "privacy.c2") {
      const double v = parse_double(value, lineno);
      if (v <= 0.0) fail(lineno, "c2 must be positive");
      c.c2 = v;
    } else if (qual == "privacy.sampling_probability") {
      const double v = parse_double(value, lineno);
      if (v < 0.0 || v > 1.0) fail(lineno, "sampling_probability must be in [0, 1]");
      c.sampling_probability = v;
    } else if (qual == "privacy.tasks_per_epoch") {
      const long long v = parse_int(value, lineno);
      if (v < 1) fail(lineno, "tasks_per_epoch must be >= 1");
      c.tasks_per_epoch = static_cast<int>(v);
    } else if (qual == "privacy.steps") {
      const long long v = parse_int(value, lineno);
      if (v < 0) fail(lineno, "steps must be >= 0");
      c.steps = static_cast<int>(v);
    } else if (qual == "privacy.log_base") {
      if (value == "e") {
        c.log_base = 0.0;
      } else {
        const double v = parse_double(value, lineno);
        if (v <= 0.0 || v == 1.0) fail(lineno, "log_base must be positive and != 1");
        c.log_base = v;
      }
    } else if (qual == "federation.num_clients") {
      const long long v = parse_int(value, lineno);
      if (v < 1) fail(lineno, "num_clients must be >= 1");
      c.num_clients = static_cast<int>(v);
    } else if (qual == "federation.ratios") {
      c.ratios.clear();
      for (const std::string& r : split_list(value)) {
        const double v = parse_double(r, lineno);
        if (v <= 0.0) fail(lineno, "ratios must be positive");
        c.ratios.push_back(v);
      }
    } else if (qual == "federation.local_batches") {
      const long long v = parse_int(value, lineno);
      if (v < 0) fail(lineno, "local_batches must be >= 0");
      c.local_batches = static_cast<int>(v);
    } else if (qual == "data.source") {
      if (value == "synthetic") c.source = DataSource::kSynthetic;
      else if (value == "manifest") c.source = DataSource::kManifest;
      else fail(lineno, "unknown data source '" + value + "'");
    } else if (qual == "data.manifest") {
      c.manifest = value;
    } else if (qual == "data.classes") {
      const long long v = parse_int(value, lineno);
      if (v < 2) fail(lineno, "classes must be >= 2");
      c.classes = static_cast<int>(v);
    } else if (qual == "data.per_class") {
      const long long v = parse_int(value, lineno);
      if (v < 1) fail(lineno, "per_class must be >= 1");
      c.per_class = static_cast<int>(v);
    } else if (qual == "data.noise") {
      const double v = parse_double(value, lineno);
      if (v < 0.0) fail(lineno, "noise must be >= 0");
      c.noise = v;
    } else if (qual == "data.modalities") {
      const long long v = parse_int(value, lineno);
      if (v < 1) fail(lineno, "modalities must be >= 1");
      c.modalities = static_cast<int>(v);
    } else if (qual == "data.train_ratio") {
      const double v = parse_double(value, lineno);
      if (v <= 0.0 || v >= 1.0) fail(lineno, "train_ratio must be in (0, 1)");
      c.train_ratio = v;
    } else if (qual == "data.normalization") {
      if (value == "per_image") c.normalization = NormalizationMode::kPerImage;
      else if (value == "per_dataset") c.normalization = NormalizationMode::kPerDataset;
      else fail(lineno, "unknown normalization mode '" + value + "'");
    } else {
      fail(lineno, "unknown key '" + key + "' in section [" + section + "]");
    }
  }
  return c;
}

ScenarioConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return parse_config(in);
}

std::string serialize_config(const ScenarioConfig& c) {
  std::ostringstream os;
  os << "[scenario]\n";
  os << "kind = " << kind_name(c.kind) << "\n";
  os << "learner = " << learner_name(c.learner) << "\n";
  os << "rounds = " << c.rounds << "\n";
  os << "eval_cadence = " << c.eval_cadence << "\n";
  os << "eval_tasks = " << c.eval_tasks << "\n";
  os << "seed = " << c.seed << "\n";
  os << "out_dir = " << c.out_dir << "\n";
  os << "sweep_epsilons = ";
  for (std::size_t i = 0; i < c.sweep_epsilons.size(); ++i) {
    os << (i ? "," : "") << c.sweep_epsilons[i];
  }
  os << "\n\n[model]\n";
  os << "input_side = " << c.input_side << "\n";
  os << "hidden_dims = ";
  for (std::size_t i = 0; i < c.hidden_dims.size(); ++i) os << (i ? "," : "") << c.hidden_dims[i];
  os << "\nbatchnorm = " << (c.batchnorm ? "true" : "false") << "\n";
  os << "\n[episode]\n";
  os << "n_way = " << c.episode.n_way << "\n";
  os << "k_shot = " << c.episode.k_shot << "\n";
  os << "q_query = " << c.episode.q_query << "\n";
  os << "\n[meta]\n";
  os << "beta = " << fmt(c.beta) << "\n";
  os << "inner_steps = " << c.inner_steps << "\n";
  os << "tasks_per_batch = " << c.tasks_per_batch << "\n";
  os << "clip_bound = " << fmt(c.clip_bound) << "\n";
  os << "maml_inner_rate = " << fmt(c.maml_inner_rate) << "\n";
  os << "noise_convention = "
     << (c.noise_convention == NoiseConvention::kStandardDpsgd ? "standard" : "paper_literal")
     << "\n";
  os << "\n[privacy]\n";
  os << "epsilon = " << fmt(c.epsilon) << "\n";
  os << "delta = " << fmt(c.delta) << "\n";
  os << "c2 = " << fmt(c.c2) << "\n";
  os << "sampling_probability = " << fmt(c.sampling_probability) << "\n";
  os << "tasks_per_epoch = " << c.tasks_per_epoch << "\n";
  os << "steps = " << c.steps << "\n";
  os << "log_base = " << (c.log_base == 0.0 ? std::string("e") : fmt(c.log_base)) << "\n";
  os << "\n[federation]\n";
  os << "num_clients = " << c.num_clients << "\n";
  if (!c.ratios.empty()) {
    os << "ratios = ";
    for (std::size_t i = 0; i < c.ratios.size(); ++i) os << (i ? "," : "") << fmt(c.ratios[i]);
    os << "\n";
  }
  os << "local_batches = " << c.local_batches << "\n";
  os << "\n[data]\n";
  os << "source = " << (c.source == DataSource::kSynthetic ? "synthetic" : "manifest") << "\n";
  if (!c.manifest.empty()) os << "manifest = " << c.manifest << "\n";
  os << "classes = " << c.classes << "\n";
  os << "per_class = " << c.per_class << "\n";
  os << "noise = " << fmt(c.noise) << "\n";
  os << "modalities = " << c.modalities << "\n";
  os << "train_ratio = " << fmt(c.train_ratio) << "\n";
  os << "normalization = "
     << (c.normalization == NormalizationMode::kPerImage ? "per_image" : "per_dataset") << "\n";
  return os.str();
}

namespace {

struct Arm {
  std::string name;
  Learner learner;
  double epsilon = 0.0;  // 0 = no DP
  double sigma = 0.0;
};

std::vector<Arm> build_arms(const ScenarioConfig& c) {
  std::vector<Arm> arms;
  if (c.kind == ScenarioKind::kPrivacySweep) {
    for (const std::string& e : c.sweep_epsilons) {
      if (e == "none") {
        arms.push_back({"none", Learner::kMetaSgd, 0.0, 0.0});
      } else {
        const double eps = std::stod(e);
        arms.push_back({"eps" + e, Learner::kMetaDpsgd, eps, c.resolved_sigma(eps)});
      }
    }
  } else {
    Arm arm;
    arm.name = kind_name(c.kind);
    arm.learner = c.learner;
    if (c.learner == Learner::kMetaDpsgd) {
      arm.epsilon = c.epsilon;
      arm.sigma = c.resolved_sigma(c.epsilon);
    }
    arms.push_back(arm);
  }
  return arms;
}

LabeledDataset build_dataset(const ScenarioConfig& c) {
  if (c.source == DataSource::kManifest) {
    if (c.manifest.empty()) throw ConfigError("config: manifest source requires a manifest path");
    return load_manifest_dataset(c.manifest, c.input_side, c.normalization);
  }
  SyntheticSpec spec;
  spec.num_classes = c.classes;
  spec.examples_per_class = c.per_class;
  spec.resolution = c.input_side;
  spec.noise_level = c.noise;
  spec.num_modalities = c.modalities;
  spec.seed = derive_stream({c.seed, kDataStream});
  return generate_synthetic(spec);
}

std::vector<LabeledDataset> build_clients(const ScenarioConfig& c, const LabeledDataset& train) {
  switch (c.kind) {
    case ScenarioKind::kCentralized:
      return {train};
    case ScenarioKind::kFederated:
    case ScenarioKind::kPrivacySweep: {
      if (c.num_clients == 1) return {train};
      Rng rng(derive_stream({c.seed, kSplitStream, 1}));
      return partition_clients(
          train, std::vector<double>(static_cast<std::size_t>(c.num_clients), 1.0), rng);
    }
    case ScenarioKind::kUnbalanced: {
      std::vector<double> ratios = c.ratios;
      if (ratios.empty()) {
        for (int i = 1; i <= c.num_clients; ++i) ratios.push_back(static_cast<double>(i));
      }
      Rng rng(derive_stream({c.seed, kSplitStream, 2}));
      return partition_clients(train, ratios, rng);
    }
    case ScenarioKind::kMultiModal:
      return partition_by_tag(train, 0);
    case ScenarioKind::kMultiDisease: {
      // The lowest label plays the shared healthy class: its examples lose
      // the disease tag and are spread across clients so every client can
      // form 2-way episodes.
      LabeledDataset ds = train;
      const std::vector<int> labels = ds.labels();
      const int shared = labels.empty() ? 0 : labels.front();
      for (Example& e : ds.examples) {
        if (e.label == shared && e.tags.size() > 1) e.tags[1].clear();
      }
      return partition_by_tag(ds, 1);
    }
  }
  throw std::logic_error("unreachable scenario kind");
}

std::string csv_num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void append_csv_rows(std::ostringstream& csv, const std::string& scenario,
                     const Arm& arm, const TrainingResult& result) {
  std::map<int, const EvalPoint*> evals;
  for (const EvalPoint& e : result.evals) evals[e.round] = &e;

  const std::string eps = arm.epsilon > 0.0 ? csv_num(arm.epsilon) : "";
  const std::string sigma = arm.sigma > 0.0 ? csv_num(arm.sigma) : "";
  for (const RoundReport& round : result.history) {
    for (const ClientRoundRecord& client : round.clients) {
      double mean_loss = 0.0;
      for (double l : client.loss_trace) mean_loss += l;
      if (!client.loss_trace.empty()) mean_loss /= static_cast<double>(client.loss_trace.size());
      csv << scenario << ',' << arm.name << ',' << round.round_index + 1 << ','
          << client.client_id << ',' << eps << ',' << sigma << ',' << csv_num(mean_loss)
          << ",,,,\n";
    }
    const auto it = evals.find(round.round_index + 1);
    if (it != evals.end()) {
      const EvalPoint& e = *it->second;
      csv << scenario << ',' << arm.name << ',' << round.round_index + 1 << ",-1," << eps << ','
          << sigma << ',' << csv_num(e.mean_query_loss) << ',' << csv_num(e.report.accuracy.mean)
          << ',' << csv_num(e.report.precision.mean) << ',' << csv_num(e.report.recall.mean)
          << ',' << csv_num(e.report.f1.mean) << "\n";
    }
  }
}

json metric_json(const AggregateMetric& m) {
  return json{{"mean", m.mean},
              {"ci_halfwidth", m.ci_halfwidth},
              {"n", m.n},
              {"excluded", m.excluded}};
}

}  // namespace

std::vector<ArmResult> run_scenario(const ScenarioConfig& config) {
  const std::filesystem::path out_dir(config.out_dir);
  std::filesystem::create_directories(out_dir);

  const LabeledDataset full = build_dataset(config);
  Rng split_rng(derive_stream({config.seed, kSplitStream, 0}));
  auto [train, test] = split_train_test(full, config.train_ratio, split_rng);
  const std::vector<LabeledDataset> clients = build_clients(config, train);

  const std::string scenario = kind_name(config.kind);
  std::ostringstream csv;
  csv << "scenario,arm,round,client_id,epsilon,sigma,loss,accuracy,precision,recall,f1\n";
  json report_json;
  report_json["scenario"] = scenario;
  report_json["seed"] = config.seed;
  report_json["arms"] = json::array();

  std::vector<ArmResult> results;
  for (const Arm& arm : build_arms(config)) {
    TrainingPlan plan;
    plan.model = config.model_config();
    plan.episode_spec = config.episode;
    plan.learner = arm.learner;
    plan.rounds = config.rounds;
    plan.local_batches = config.local_batches;
    plan.eval_cadence = config.eval_cadence;
    plan.eval_tasks = config.eval_tasks;
    plan.seed = config.seed;
    plan.meta.beta = config.beta;
    plan.meta.inner_steps = config.inner_steps;
    plan.meta.tasks_per_batch = config.tasks_per_batch;
    plan.meta.clip_bound = config.clip_bound;
    plan.meta.maml_inner_rate = config.maml_inner_rate;
    plan.meta.noise_convention = config.noise_convention;
    plan.meta.noise_sigma = arm.sigma;

    ArmResult result;
    result.arm = arm.name;
    result.epsilon = arm.epsilon;
    result.sigma = arm.sigma;
    result.training = run_training(plan, clients, test);
    result.report = result.training.evals.back().report;

    append_csv_rows(csv, scenario, arm, result.training);

    json jarm;
    jarm["arm"] = arm.name;
    jarm["epsilon"] = arm.epsilon;
    jarm["sigma"] = arm.sigma;
    jarm["n_tasks"] = result.report.n_tasks;
    jarm["accuracy"] = metric_json(result.report.accuracy);
    jarm["precision"] = metric_json(result.report.precision);
    jarm["recall"] = metric_json(result.report.recall);
    jarm["f1"] = metric_json(result.report.f1);
    report_json["arms"].push_back(jarm);

    save_checkpoint(out_dir / ("checkpoint_" + arm.name + ".ffck"),
                    result.training.server.global_meta, model_config_hash(plan.model),
                    static_cast<std::uint32_t>(result.training.server.round_index));
    results.push_back(std::move(result));
  }

  atomic_write(out_dir / "rounds.csv", csv.str());
  atomic_write(out_dir / "final_report.json", report_json.dump(2) + "\n");
  atomic_write(out_dir / "resolved_config.ini", serialize_config(config));
  return results;
}

std::string compare_arms(const std::vector<std::filesystem::path>& report_paths) {
  if (report_paths.empty()) throw std::invalid_argument("compare: need at least one report");

  struct Row {
    std::string arm;
    std::string acc, prec, rec, f1;
  };
  auto fmt_metric = [](const json& j) {
    AggregateMetric m;
    m.mean = j.at("mean").get<double>();
    m.ci_halfwidth = j.at("ci_halfwidth").get<double>();
    return format_metric(m);
  };

  std::vector<Row> rows;
  for (const auto& path : report_paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("compare: cannot open " + path.string());
    json j = json::parse(in);
    for (const json& arm : j.at("arms")) {
      rows.push_back({arm.at("arm").get<std::string>(), fmt_metric(arm.at("accuracy")),
                      fmt_metric(arm.at("precision")), fmt_metric(arm.at("recall")),
                      fmt_metric(arm.at("f1"))});
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.arm < b.arm; });

  std::ostringstream os;
  os << "arm\taccuracy\tprecision\trecall\tf1\n";
  for (const Row& r : rows) {
    os << r.arm << '\t' << r.acc << '\t' << r.prec << '\t' << r.rec << '\t' << r.f1 << '\n';
  }
  return os.str();
}

void write_synthetic_corpus(const SyntheticSpec& spec, const std::filesystem::path& out_dir,
                            const std::filesystem::path& manifest_path) {
  std::filesystem::create_directories(out_dir);
  DatasetManifest manifest;
  int counter = 0;
  for (const auto& [img, ex] : generate_synthetic_images(spec)) {
    const std::string name = "img_" + std::to_string(counter++) + ".pgm";
    write_pgm(out_dir / name, img);
    ManifestEntry entry;
    // Manifest paths are relative to the manifest file itself.
    entry.path = std::filesystem::relative(out_dir / name, manifest_path.parent_path()).string();
    entry.label = ex.tags.size() > 1 ? ex.tags[1] : ("class" + std::to_string(ex.label));
    entry.modality = ex.tags.empty() ? "" : ex.tags[0];
    manifest.entries.push_back(std::move(entry));
  }
  write_manifest(manifest_path, manifest);
}

}  // namespace ffsim
