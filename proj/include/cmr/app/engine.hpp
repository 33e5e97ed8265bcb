#pragma once

// Glue between data, models and the command-line / HTTP front ends:
// configuration, example preparation, training loops, evaluation and the
// checkpointed inference engine.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmr/data/example.hpp"
#include "cmr/data/metrics.hpp"
#include "cmr/data/synthetic.hpp"
#include "cmr/decision/model.hpp"
#include "cmr/encoder/vocab.hpp"
#include "cmr/segment/segmenter.hpp"
#include "cmr/spanqg/span.hpp"

namespace cmr::app {

struct TrainingOptions {
  std::size_t epochs = 5;
  std::size_t batch_size = 16;
  double learning_rate = 5e-5;
  double warmup_fraction = 0.1;
  std::size_t span_epochs = 5;
  double span_learning_rate = 5e-5;
  std::size_t min_freq = 1;
  std::string segmenter = "edu";  // "edu" or "sentence"
  bool eval_each_epoch = false;
};

struct DataOptions {
  std::string train_path;  // ShARC-format JSON; empty -> synthetic
  std::string dev_path;
  data::SyntheticConfig synthetic;
  std::size_t train_count = 2000;
  std::size_t dev_count = 500;
};

struct AppConfig {
  nn::ModelConfig model;
  bool softmax_mix = false;
  TrainingOptions train;
  DataOptions data;
  std::uint64_t seed = 13;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults. Throws std::invalid_argument on bad values.
  static AppConfig from_json(const nlohmann::json& j);
};

nlohmann::json model_config_json(const nn::ModelConfig& c);
nn::ModelConfig model_config_from_json(const nlohmann::json& j, nn::ModelConfig base = {});

// Throws std::runtime_error naming the path when it cannot be read or parsed.
AppConfig load_config(const std::filesystem::path& path);

std::unique_ptr<segment::EduSegmenter> make_segmenter(const std::string& name);

// Every token of rules, questions, scenarios and history turns, plus the
// answer words.
encoder::Vocabulary build_vocabulary(const std::vector<data::CMRExample>& examples, std::size_t min_freq);

struct PreparedDecision {
  decision::TrainingExample example;
  std::vector<std::string> condition_texts;
};

PreparedDecision prepare_decision(const data::CMRExample& ex, const segment::EduSegmenter& segmenter,
                                  const encoder::Vocabulary& vocab, std::size_t max_length);

// nullopt unless the example is Inquire with a follow-up question.
std::optional<spanqg::SpanTrainingExample> prepare_span(const data::CMRExample& ex, const encoder::Vocabulary& vocab,
                                                        std::size_t max_length);

struct ConditionView {
  std::string text;
  weak::EntailmentLabel state = weak::EntailmentLabel::Neutral;
  double weight = 0;
};

struct Response {
  decision::Decision decision = decision::Decision::Inquire;
  std::optional<std::string> follow_up;
  std::optional<spanqg::SpanPrediction> span;
  std::vector<ConditionView> conditions;
};

class Engine {
 public:
  Engine(const nn::ModelConfig& config, bool softmax_mix, encoder::Vocabulary vocab, std::string segmenter);

  void reset(std::uint64_t seed);

  // Read-only over parameters; safe to call concurrently.
  Response respond(const std::string& rule_text, const std::string& question, const std::string& scenario,
                   const std::vector<weak::HistoryTurn>& history) const;

  void save(const std::filesystem::path& path, const nlohmann::json& extra = nullptr) const;
  static std::unique_ptr<Engine> load(const std::filesystem::path& path);

  const encoder::Vocabulary& vocab() const { return vocab_; }
  const std::string& segmenter_name() const { return segmenter_name_; }
  const segment::EduSegmenter& segmenter() const { return *segmenter_; }
  const nn::ModelConfig& config() const { return config_; }

  decision::DecisionModel decision;
  spanqg::SpanModel span;

 private:
  nn::ModelConfig config_;
  encoder::Vocabulary vocab_;
  std::string segmenter_name_;
  std::unique_ptr<segment::EduSegmenter> segmenter_;
  spanqg::TemplateRephraser rephraser_;
};

struct EvalOptions {
  bool oracle_qg = false;  // BLEU on every gold-Inquire example
  std::optional<data::SubsetKind> subset;
  bool breakdown = true;  // per-type and per-subset tables
};

// Throws std::invalid_argument when the selected subset is empty.
data::MetricsReport evaluate(const Engine& engine, const std::vector<data::CMRExample>& examples,
                             const EvalOptions& options = {});

struct TrainSummary {
  std::vector<decision::StepStats> steps;
  std::vector<spanqg::SpanStepStats> span_steps;
  std::optional<data::MetricsReport> dev;
};

// Trains the decision model, then the span model, writing one JSON line per
// step to `log` when given. Deterministic in options and engine state.
TrainSummary train_engine(Engine& engine, const std::vector<data::CMRExample>& train,
                          const std::vector<data::CMRExample>& dev, const TrainingOptions& options,
                          std::uint64_t seed, std::ostream* log);

// Loads or generates the configured train/dev corpora.
std::pair<std::vector<data::CMRExample>, std::vector<data::CMRExample>> load_corpora(const AppConfig& config);

}  // namespace cmr::app
