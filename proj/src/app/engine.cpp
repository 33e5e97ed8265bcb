#include "cmr/app/engine.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "cmr/encoder/tokenizer.hpp"
#include "cmr/nn/checkpoint.hpp"

namespace cmr::app {

using decision::Decision;

nlohmann::json model_config_json(const nn::ModelConfig& c) {
  return {{"d_model", c.d_model},
          {"n_heads", c.n_heads},
          {"d_ff", c.d_ff},
          {"n_encoder_layers", c.n_encoder_layers},
          {"n_inter_layers", c.n_inter_layers},
          {"dropout_rate", c.dropout_rate},
          {"max_sequence_length", c.max_sequence_length},
          {"vocab_size", c.vocab_size},
          {"lambda_entail", c.lambda_entail}};
}

nn::ModelConfig model_config_from_json(const nlohmann::json& j, nn::ModelConfig c) {
  c.d_model = j.value("d_model", c.d_model);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.n_encoder_layers = j.value("n_encoder_layers", c.n_encoder_layers);
  c.n_inter_layers = j.value("n_inter_layers", c.n_inter_layers);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.max_sequence_length = j.value("max_sequence_length", c.max_sequence_length);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.lambda_entail = j.value("lambda_entail", c.lambda_entail);
  return c;
}

nlohmann::json AppConfig::to_json() const {
  nlohmann::json m = model_config_json(model);
  m["softmax_mix"] = softmax_mix;
  return {{"seed", seed},
          {"model", m},
          {"train",
           {{"epochs", train.epochs},
            {"batch_size", train.batch_size},
            {"learning_rate", train.learning_rate},
            {"warmup_fraction", train.warmup_fraction},
            {"span_epochs", train.span_epochs},
            {"span_learning_rate", train.span_learning_rate},
            {"min_freq", train.min_freq},
            {"segmenter", train.segmenter},
            {"eval_each_epoch", train.eval_each_epoch}}},
          {"data",
           {{"train", data.train_path},
            {"dev", data.dev_path},
            {"train_count", data.train_count},
            {"dev_count", data.dev_count},
            {"synthetic", data.synthetic.to_json()}}}};
}

AppConfig AppConfig::from_json(const nlohmann::json& j) {
  AppConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (auto it = j.find("model"); it != j.end()) {
      c.model = model_config_from_json(*it, c.model);
      c.softmax_mix = it->value("softmax_mix", c.softmax_mix);
    }
    if (auto it = j.find("train"); it != j.end()) {
      const auto& t = *it;
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.warmup_fraction = t.value("warmup_fraction", c.train.warmup_fraction);
      c.train.span_epochs = t.value("span_epochs", c.train.span_epochs);
      c.train.span_learning_rate = t.value("span_learning_rate", c.train.span_learning_rate);
      c.train.min_freq = t.value("min_freq", c.train.min_freq);
      c.train.segmenter = t.value("segmenter", c.train.segmenter);
      c.train.eval_each_epoch = t.value("eval_each_epoch", c.train.eval_each_epoch);
    }
    if (auto it = j.find("data"); it != j.end()) {
      const auto& d = *it;
      c.data.train_path = d.value("train", c.data.train_path);
      c.data.dev_path = d.value("dev", c.data.dev_path);
      c.data.train_count = d.value("train_count", c.data.train_count);
      c.data.dev_count = d.value("dev_count", c.data.dev_count);
      if (auto s = d.find("synthetic"); s != d.end()) c.data.synthetic = data::SyntheticConfig::from_json(*s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  if (c.train.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (c.train.segmenter != "edu" && c.train.segmenter != "sentence") {
    throw std::invalid_argument("segmenter must be 'edu' or 'sentence'");
  }
  c.model.vocab_size = std::max<std::size_t>(c.model.vocab_size, 1);
  c.model.validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return AppConfig::from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::unique_ptr<segment::EduSegmenter> make_segmenter(const std::string& name) {
  if (name == "edu") return std::make_unique<segment::MarkerSegmenter>();
  if (name == "sentence") return std::make_unique<segment::SentenceSegmenter>();
  throw std::invalid_argument("unknown segmenter '" + name + "'");
}

encoder::Vocabulary build_vocabulary(const std::vector<data::CMRExample>& examples, std::size_t min_freq) {
  std::vector<std::vector<std::string>> corpus = {{"yes", "no"}};
  for (const auto& ex : examples) {
    corpus.push_back(encoder::tokenize(ex.rule_text));
    corpus.push_back(encoder::tokenize(ex.question));
    corpus.push_back(encoder::tokenize(ex.scenario));
    for (const auto& t : ex.history) corpus.push_back(encoder::tokenize(t.follow_up_question));
  }
  auto v = encoder::Vocabulary::build(corpus, min_freq);
  return v;
}

PreparedDecision prepare_decision(const data::CMRExample& ex, const segment::EduSegmenter& segmenter,
                                  const encoder::Vocabulary& vocab, std::size_t max_length) {
  const auto parsed = segment::parse_rule(ex.rule_text, segmenter);
  PreparedDecision p;
  encoder::AssemblyInput in;
  for (const auto& c : parsed.conditions) {
    p.condition_texts.push_back(c.text);
    in.conditions.push_back(encoder::tokenize(c.text));
  }
  in.question = encoder::tokenize(ex.question);
  in.scenario = encoder::tokenize(ex.scenario);
  in.history = ex.history;
  p.example.assembly = encoder::assemble(in, vocab, max_length);
  // Turns dropped by truncation do not label conditions either.
  const std::vector<weak::HistoryTurn> kept(ex.history.begin() + std::ptrdiff_t(p.example.assembly.history_dropped),
                                            ex.history.end());
  p.example.labels = weak::label_conditions(p.condition_texts, kept);
  p.example.gold = ex.decision;
  return p;
}

std::optional<spanqg::SpanTrainingExample> prepare_span(const data::CMRExample& ex, const encoder::Vocabulary& vocab,
                                                        std::size_t max_length) {
  if (ex.decision != Decision::Inquire || ex.follow_up.empty()) return std::nullopt;
  const auto rule = spanqg::split_rule(ex.rule_text);
  if (rule.total_tokens() == 0) return std::nullopt;
  const auto label = weak::derive_span_label(rule.token_texts(), ex.follow_up);
  spanqg::SpanTrainingExample s;
  s.assembly = spanqg::assemble_rule(rule, ex.question, ex.scenario, ex.history, vocab, max_length);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < label.sentence_index; ++k) offset += rule.tokens[k].size();
  s.gold_start = offset + label.token_start;
  s.gold_end = offset + label.token_end;
  return s;
}

Engine::Engine(const nn::ModelConfig& config, bool softmax_mix, encoder::Vocabulary vocab, std::string segmenter)
    : decision([&] {
        auto c = config;
        c.vocab_size = vocab.size();
        return c;
      }(), softmax_mix),
      span([&] {
        auto c = config;
        c.vocab_size = vocab.size();
        return c;
      }()),
      config_(config),
      vocab_(std::move(vocab)),
      segmenter_name_(std::move(segmenter)),
      segmenter_(make_segmenter(segmenter_name_)) {
  config_.vocab_size = vocab_.size();
}

void Engine::reset(std::uint64_t seed) {
  nn::Rng rng(seed);
  decision.reset(rng);
  span.reset(rng);
}

Response Engine::respond(const std::string& rule_text, const std::string& question, const std::string& scenario,
                         const std::vector<weak::HistoryTurn>& history) const {
  data::CMRExample ex;
  ex.rule_text = rule_text;
  ex.question = question;
  ex.scenario = scenario;
  ex.history = history;
  const PreparedDecision p = prepare_decision(ex, *segmenter_, vocab_, config_.max_sequence_length);
  const auto pred = decision.predict(p.example.assembly);
  Response r;
  r.decision = pred.decision;
  for (std::size_t i = 0; i < p.condition_texts.size(); ++i) {
    r.conditions.push_back({p.condition_texts[i], pred.states[i], double(pred.weights[i])});
  }
  if (r.decision == Decision::Inquire) {
    const auto rule = spanqg::split_rule(rule_text);
    const auto assembly = spanqg::assemble_rule(rule, question, scenario, history, vocab_, config_.max_sequence_length);
    const auto g = span.generate(rule, assembly, rephraser_);
    r.follow_up = g.question;
    r.span = g.span;
  }
  return r;
}

void Engine::save(const std::filesystem::path& path, const nlohmann::json& extra) const {
  nn::Checkpoint ckpt;
  ckpt.header = {{"format", "cmr-engine"},
                 {"model", model_config_json(config_)},
                 {"softmax_mix", decision.softmax_mix()},
                 {"segmenter", segmenter_name_},
                 {"vocabulary", vocab_.to_json()}};
  if (!extra.is_null()) ckpt.header["extra"] = extra;
  ckpt.add_parameters(decision.params, "decision.");
  ckpt.add_parameters(span.params, "span.");
  nn::save_checkpoint(path, ckpt);
}

std::unique_ptr<Engine> Engine::load(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  if (ckpt.header.value("format", "") != "cmr-engine") throw std::runtime_error(path.string() + ": not an engine checkpoint");
  auto engine = std::make_unique<Engine>(model_config_from_json(ckpt.header.at("model")),
                                         ckpt.header.value("softmax_mix", false),
                                         encoder::Vocabulary::from_json(ckpt.header.at("vocabulary")),
                                         ckpt.header.value("segmenter", "edu"));
  ckpt.load_parameters(engine->decision.params, "decision.");
  ckpt.load_parameters(engine->span.params, "span.");
  return engine;
}

namespace {

std::optional<std::string> meta_type(const data::CMRExample& ex) {
  if (ex.meta.is_object() && ex.meta.contains("logical_type")) return ex.meta.at("logical_type").get<std::string>();
  return std::nullopt;
}

// Logical type per example: stored by the generator, or inferred from all
// dialogs sharing a tree id.
std::vector<std::optional<std::string>> logical_types(const std::vector<data::CMRExample>& examples) {
  std::map<std::string, std::vector<data::DialogRecord>> trees;
  for (const auto& ex : examples) {
    if (!meta_type(ex) && !ex.tree_id.empty()) trees[ex.tree_id].push_back({ex.history, ex.decision});
  }
  std::map<std::string, std::string> inferred;
  for (const auto& [id, dialogs] : trees) inferred[id] = std::string(data::logical_type_name(data::infer_logical_type(dialogs)));
  std::vector<std::optional<std::string>> out;
  for (const auto& ex : examples) {
    if (auto t = meta_type(ex)) out.push_back(t);
    else if (!ex.tree_id.empty()) out.push_back(inferred.at(ex.tree_id));
    else out.push_back(std::nullopt);
  }
  return out;
}

}  // namespace

data::MetricsReport evaluate(const Engine& engine, const std::vector<data::CMRExample>& all,
                             const EvalOptions& options) {
  const std::vector<data::CMRExample> examples = options.subset ? data::subset_filter(all, *options.subset) : all;
  if (examples.empty()) {
    throw std::invalid_argument(options.subset ? "subset '" + std::string(data::subset_name(*options.subset)) + "' is empty"
                                               : std::string("nothing to evaluate"));
  }
  std::vector<Decision> preds, golds;
  std::vector<std::string> hyps, refs;
  std::size_t entail_total = 0, entail_correct = 0;
  for (const auto& ex : examples) {
    const PreparedDecision p = prepare_decision(ex, engine.segmenter(), engine.vocab(), engine.config().max_sequence_length);
    const auto pred = engine.decision.predict(p.example.assembly);
    preds.push_back(pred.decision);
    golds.push_back(ex.decision);
    for (std::size_t i = 0; i < pred.states.size(); ++i) {
      ++entail_total;
      entail_correct += pred.states[i] == p.example.labels[i];
    }
    const bool score_qg = ex.decision == Decision::Inquire && !ex.follow_up.empty() &&
                          (options.oracle_qg || pred.decision == Decision::Inquire);
    if (score_qg) {
      const auto rule = spanqg::split_rule(ex.rule_text);
      const auto assembly = spanqg::assemble_rule(rule, ex.question, ex.scenario, ex.history, engine.vocab(),
                                                  engine.config().max_sequence_length);
      hyps.push_back(engine.span.generate(rule, assembly, spanqg::TemplateRephraser()).question);
      refs.push_back(ex.follow_up);
    }
  }
  data::MetricsReport report;
  report.decisions = data::evaluate_decisions(preds, golds);
  report.bleu_pairs = hyps.size();
  if (!hyps.empty()) {
    report.bleu1 = data::bleu(hyps, refs, 1);
    report.bleu4 = data::bleu(hyps, refs, 4);
  }
  if (entail_total > 0) report.entailment_accuracy = double(entail_correct) / double(entail_total);

  if (options.breakdown) {
    const auto types = logical_types(examples);
    std::map<std::string, std::pair<std::vector<Decision>, std::vector<Decision>>> by_type;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (!types[i]) continue;
      by_type[*types[i]].first.push_back(preds[i]);
      by_type[*types[i]].second.push_back(golds[i]);
    }
    for (const auto& [name, pg] : by_type) report.by_logical_type[name] = data::evaluate_decisions(pg.first, pg.second);

    auto subset = [&](const std::string& name, auto keep) {
      std::vector<Decision> p, g;
      for (std::size_t i = 0; i < examples.size(); ++i) {
        if (!keep(examples[i])) continue;
        p.push_back(preds[i]);
        g.push_back(golds[i]);
      }
      if (!g.empty()) report.by_subset[name] = data::evaluate_decisions(p, g);
    };
    auto blank = [](const std::string& s) { return encoder::tokenize(s).empty(); };
    subset("answerable", [](const data::CMRExample& e) { return e.decision != Decision::Irrelevant; });
    subset("dialog_history_only", [&](const data::CMRExample& e) { return blank(e.scenario); });
    subset("scenario_only", [](const data::CMRExample& e) { return e.history.empty(); });
  }
  return report;
}

namespace {

template <typename Example, typename Step>
void run_epochs(std::size_t n, std::size_t epochs, std::size_t batch_size, nn::Rng& order_rng,
                const std::vector<Example>& examples, Step step) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    for (std::size_t b = 0; b < n; b += batch_size) {
      std::vector<const Example*> batch;
      for (std::size_t i = b; i < std::min(n, b + batch_size); ++i) batch.push_back(&examples[order[i]]);
      step(epoch, batch);
    }
  }
}

std::size_t steps_for(std::size_t n, std::size_t epochs, std::size_t batch) { return epochs * ((n + batch - 1) / batch); }

}  // namespace

TrainSummary train_engine(Engine& engine, const std::vector<data::CMRExample>& train,
                          const std::vector<data::CMRExample>& dev, const TrainingOptions& options,
                          std::uint64_t seed, std::ostream* log) {
  TrainSummary summary;
  const std::size_t max_len = engine.config().max_sequence_length;
  nn::Rng order_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  nn::Rng dropout_rng(seed + 1);

  std::vector<decision::TrainingExample> dec;
  for (const auto& ex : train) dec.push_back(prepare_decision(ex, engine.segmenter(), engine.vocab(), max_len).example);
  if (!dec.empty() && options.epochs > 0) {
    auto state = nn::OptimizerState::for_params(engine.decision.params, nn::Real(options.learning_rate),
                                                nn::Real(options.warmup_fraction),
                                                steps_for(dec.size(), options.epochs, options.batch_size));
    std::size_t last_epoch = 0;
    auto end_of_epoch = [&](std::size_t epoch) {
      if (!options.eval_each_epoch || dev.empty() || !log) return;
      const auto report = evaluate(engine, dev, {false, std::nullopt, false});
      *log << nlohmann::json{{"epoch", epoch}, {"dev_micro", report.decisions.micro}, {"dev_macro", report.decisions.macro}}.dump()
           << '\n';
    };
    run_epochs(dec.size(), options.epochs, options.batch_size, order_rng, dec,
               [&](std::size_t epoch, const std::vector<const decision::TrainingExample*>& batch) {
                 if (epoch != last_epoch) {
                   end_of_epoch(last_epoch);
                   last_epoch = epoch;
                 }
                 const auto s = decision::train_step(engine.decision, batch, state, dropout_rng);
                 summary.steps.push_back(s);
                 if (log) {
                   *log << nlohmann::json{{"model", "decision"}, {"epoch", epoch}, {"step", s.step}, {"lr", s.lr},
                                          {"L_dec", s.decision_loss}, {"L_entail", s.entailment_loss}, {"L", s.loss}}
                               .dump()
                        << '\n';
                 }
               });
    end_of_epoch(last_epoch);
  }

  std::vector<spanqg::SpanTrainingExample> spans;
  for (const auto& ex : train) {
    if (auto s = prepare_span(ex, engine.vocab(), max_len)) spans.push_back(std::move(*s));
  }
  if (!spans.empty() && options.span_epochs > 0) {
    auto state = nn::OptimizerState::for_params(engine.span.params, nn::Real(options.span_learning_rate),
                                                nn::Real(options.warmup_fraction),
                                                steps_for(spans.size(), options.span_epochs, options.batch_size));
    run_epochs(spans.size(), options.span_epochs, options.batch_size, order_rng, spans,
               [&](std::size_t epoch, const std::vector<const spanqg::SpanTrainingExample*>& batch) {
                 const auto s = spanqg::span_train_step(engine.span, batch, state, dropout_rng);
                 summary.span_steps.push_back(s);
                 if (log) {
                   *log << nlohmann::json{{"model", "span"}, {"epoch", epoch}, {"step", s.step}, {"lr", s.lr}, {"L", s.loss}}.dump()
                        << '\n';
                 }
               });
  }
  if (!dev.empty()) summary.dev = evaluate(engine, dev);
  return summary;
}

std::pair<std::vector<data::CMRExample>, std::vector<data::CMRExample>> load_corpora(const AppConfig& config) {
  if (!config.data.train_path.empty()) {
    auto train = data::load_sharc(config.data.train_path);
    std::vector<data::CMRExample> dev;
    if (!config.data.dev_path.empty()) dev = data::load_sharc(config.data.dev_path);
    return {std::move(train), std::move(dev)};
  }
  auto syn = config.data.synthetic;
  syn.count = config.data.train_count;
  auto train = data::generate_synthetic(syn, config.seed);
  syn.count = config.data.dev_count;
  auto dev = data::generate_synthetic(syn, config.seed + 1000003);
  return {std::move(train), std::move(dev)};
}

}  // namespace cmr::app
