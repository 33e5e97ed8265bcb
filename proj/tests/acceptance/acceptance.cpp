// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cmr/app/engine.hpp"
#include "cmr/app/session.hpp"
#include "cmr/data/logic.hpp"
#include "cmr/data/metrics.hpp"
#include "cmr/encoder/tokenizer.hpp"
#include "cmr/segment/segmenter.hpp"
#include "cmr/spanqg/span.hpp"
#include "cmr/weak/weak_labels.hpp"
#include "oracles/fixtures.hpp"
#include "oracles/oracles.hpp"

using namespace cmr;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

std::string config_path(const char* name) { return std::string(CMR_CONFIGS) + "/" + name; }

// Worst per-tensor relative error between backprop and central differences.
// Tensors whose gradient vanishes on both sides are counted in `vanishing`.
double worst_gradient_error(nn::ParameterSet& params, const std::function<nn::Tensor()>& loss, std::string& worst_name,
                            std::size_t& vanishing) {
  params.zero_grad();
  nn::backward(loss());
  double worst = 0;
  for (auto& [name, t] : params.entries()) {
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    const auto numeric = oracle::numeric_gradient(t, [&] {
      nn::NoGradGuard g;
      return double(loss().item());
    });
    if (oracle::gradients_agree(analytic, numeric, 0)) {
      ++vanishing;
      continue;
    }
    const double e = oracle::relative_error(analytic, numeric);
    if (e >= worst) worst = e, worst_name = name;
  }
  return worst;
}

void gradient_fidelity() {
  const auto t0 = Clock::now();
  data::SyntheticConfig sc;
  sc.count = 200;
  const auto corpus = data::generate_synthetic(sc, 3);
  const data::CMRExample* pick = nullptr;
  for (const auto& ex : corpus) {
    if (ex.decision == decision::Decision::Inquire && !ex.history.empty() && !ex.scenario.empty()) {
      pick = &ex;
      break;
    }
  }
  if (pick == nullptr) {
    report(false, "gradient fidelity", "no suitable example");
    return;
  }
  nn::ModelConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ff = 32;
  c.n_encoder_layers = 1;
  c.n_inter_layers = 1;
  c.dropout_rate = 0;
  c.max_sequence_length = 96;
  app::Engine engine(c, false, app::build_vocabulary({*pick}, 1), "edu");
  engine.reset(21);
  // Move gains and vectors off their initial values.
  nn::Rng rng(5);
  std::normal_distribution<double> noise(0, 0.3);
  for (auto* set : {&engine.decision.params, &engine.span.params}) {
    for (const auto& entry : set->entries()) {
      nn::Tensor t = entry.second;
      for (auto& v : t.values()) v += nn::Real(noise(rng));
    }
  }

  const auto prepared = app::prepare_decision(*pick, engine.segmenter(), engine.vocab(), c.max_sequence_length);
  const auto span_ex = app::prepare_span(*pick, engine.vocab(), c.max_sequence_length);
  std::string worst_dec, worst_span;
  std::size_t vanishing = 0;
  const double dec = worst_gradient_error(engine.decision.params, [&] {
    const auto f = engine.decision.forward(prepared.example.assembly, {});
    return decision::total_loss(decision::decision_loss(f.logits, prepared.example.gold),
                                decision::entailment_loss(f.scores, prepared.example.labels,
                                                          prepared.example.assembly.n_conditions),
                                c.lambda_entail);
  }, worst_dec, vanishing);
  const double span = worst_gradient_error(engine.span.params, [&] {
    return spanqg::span_loss(engine.span.forward(span_ex->assembly, {}), span_ex->gold_start, span_ex->gold_end);
  }, worst_span, vanishing);
  const double elapsed = seconds_since(t0);
  const std::size_t n = engine.decision.params.total_size() + engine.span.params.total_size();
  report(dec < 1e-3 && span < 1e-3 && elapsed < 120, "gradient fidelity",
         std::to_string(n) + " parameters, worst decision " + fmt(dec) + " (" + worst_dec + "), worst span " +
             fmt(span) + " (" + worst_span + "), " + std::to_string(vanishing) +
             " tensors with zero gradient, " + fmt(elapsed, 3) + " s");
}

void segmentation() {
  const std::string s = fixture::kFinalPaySentence;
  const auto rule = segment::parse_rule(s);
  const std::vector<std::string> want = {"If a worker has taken more leave than they're entitled to,",
                                         "their employer must not take money from their final pay",
                                         "unless it's been agreed beforehand in writing."};
  bool exact = rule.conditions.size() == want.size();
  for (std::size_t i = 0; exact && i < want.size(); ++i) {
    const auto& cnd = rule.conditions[i];
    exact = s.substr(cnd.char_start, cnd.char_end - cnd.char_start) == want[i];
  }
  const auto f = fixture::boundary_f1(segment::MarkerSegmenter{});
  report(exact && f.f1() >= 0.9, "segmentation",
         std::to_string(rule.conditions.size()) + " conditions on the example sentence" +
             (exact ? " with the expected boundaries" : " (boundaries differ)") + ", corpus boundary F1 " +
             fmt(f.f1()));
}

std::vector<std::string> random_words(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len), w(0, 4);
  std::vector<std::string> out(len(rng));
  for (auto& s : out) s = "w" + std::to_string(w(rng));
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : " ") + s;
  return out;
}

void weak_labels() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> coin(0, 1), punct(0, 6);
  std::size_t label_ok = 0, span_ok = 0;
  const std::size_t trials = 200;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::string> conds(1 + t % 4);
    for (auto& c : conds) c = join(random_words(rng, 8));
    std::vector<weak::HistoryTurn> history(t % 4);
    for (auto& h : history) h = {join(random_words(rng, 8)), coin(rng) ? weak::Answer::Yes : weak::Answer::No};
    label_ok += weak::label_conditions(conds, history) == oracle::label_conditions(conds, history);

    std::vector<std::vector<std::string>> sentences(1 + t % 3);
    for (auto& s : sentences) {
      s = random_words(rng, 8);
      for (auto& tok : s) {
        if (punct(rng) == 0) tok = ",";
      }
      if (std::all_of(s.begin(), s.end(), [](const std::string& x) { return x == ","; })) s.push_back("w1");
    }
    const std::string q = join(random_words(rng, 8));
    span_ok += weak::derive_span_label(sentences, q) == oracle::span_label(sentences, q);
  }
  report(label_ok == trials && span_ok == trials, "weak-label oracle",
         "label_conditions " + std::to_string(label_ok) + "/" + std::to_string(trials) + ", derive_span_label " +
             std::to_string(span_ok) + "/" + std::to_string(trials));
}

void logic() {
  const auto t0 = Clock::now();
  std::size_t checked = 0, agree = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::size_t codes = 1;
    for (std::size_t i = 0; i < n; ++i) codes *= 3;
    for (const auto& base : oracle::trees_over(0, n)) {
      for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        data::LogicNode tree = base;
        oracle::set_negations(tree, mask);
        for (std::size_t code = 0; code < codes; ++code) {
          std::vector<data::State> s(n);
          for (std::size_t i = 0, c = code; i < n; ++i, c /= 3) s[i] = static_cast<data::State>(c % 3);
          for (bool relevant : {true, false}) {
            ++checked;
            agree += data::oracle_decision(tree, s, relevant) == oracle::completion_decision(tree, s, relevant);
          }
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  report(agree == checked && elapsed < 10, "logic oracle",
         std::to_string(agree) + "/" + std::to_string(checked) + " tree/state pairs agree, " + fmt(elapsed, 3) + " s");
}

struct TrainedRun {
  std::unique_ptr<app::Engine> engine;
  data::MetricsReport dev;
  std::vector<data::CMRExample> dev_set;
  double seconds = 0;
};

TrainedRun train_and_evaluate(const app::AppConfig& config) {
  const auto t0 = Clock::now();
  auto [train_set, dev_set] = app::load_corpora(config);
  TrainedRun run;
  run.engine = std::make_unique<app::Engine>(config.model, config.softmax_mix,
                                             app::build_vocabulary(train_set, config.train.min_freq),
                                             config.train.segmenter);
  run.engine->reset(config.seed);
  app::train_engine(*run.engine, train_set, {}, config.train, config.seed, nullptr);
  run.dev = app::evaluate(*run.engine, dev_set);
  run.dev_set = std::move(dev_set);
  run.seconds = seconds_since(t0);
  return run;
}

std::unique_ptr<app::Engine> end_to_end() {
  const auto config = app::load_config(config_path("synthetic.json"));
  TrainedRun run = train_and_evaluate(config);
  const auto& d = run.dev.decisions;
  const auto simple = run.dev.by_logical_type.find("Simple");
  bool ordered = simple != run.dev.by_logical_type.end();
  std::string types;
  for (const auto& [name, m] : run.dev.by_logical_type) {
    types += " " + name + " " + fmt(100 * m.micro, 3);
    if (ordered && m.micro > simple->second.micro) ordered = false;
  }
  const bool ok = d.micro >= 0.9 && d.macro >= 0.85 && run.seconds <= 900 && ordered && config.train.epochs <= 10 &&
                  config.model.d_model == 64;
  report(ok, "end-to-end learning",
         "dev micro " + fmt(100 * d.micro, 3) + " (>= 90), macro " + fmt(100 * d.macro, 3) + " (>= 85), " +
             std::to_string(config.train.epochs) + " epochs in " + fmt(run.seconds, 3) + " s (<= 900), by type" +
             types + (ordered ? ", Simple highest" : ", Simple not highest"));
  std::cout << run.dev.to_table();
  return std::move(run.engine);
}

void ablation() {
  auto config = app::load_config(config_path("ablation.json"));
  config.train.segmenter = "edu";
  const TrainedRun edu = train_and_evaluate(config);
  config.train.segmenter = "sentence";
  const TrainedRun sentence = train_and_evaluate(config);
  const double drop = 100 * (edu.dev.decisions.micro - sentence.dev.decisions.micro);
  report(drop >= 2, "ablation direction",
         "dev micro with EDU segmentation " + fmt(100 * edu.dev.decisions.micro, 3) + ", sentence only " +
             fmt(100 * sentence.dev.decisions.micro, 3) + ", drop " + fmt(drop, 3) + " points (>= 2)");
}

void loss_identity() {
  data::SyntheticConfig sc;
  sc.count = 100;
  const auto corpus = data::generate_synthetic(sc, 8);
  nn::ModelConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ff = 32;
  c.n_encoder_layers = 1;
  c.n_inter_layers = 1;
  c.dropout_rate = nn::Real(0.1);
  app::Engine engine(c, false, app::build_vocabulary(corpus, 1), "edu");
  engine.reset(2);
  app::TrainingOptions opt;
  opt.epochs = 1;
  opt.batch_size = 1;
  opt.learning_rate = 1e-3;
  opt.span_epochs = 0;
  std::stringstream log;
  app::train_engine(engine, corpus, {}, opt, 4, &log);
  std::size_t steps = 0, within = 0;
  double worst = 0;
  std::string line;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j.value("model", "") != "decision") continue;
    ++steps;
    const double gap = std::abs(j["L"].get<double>() -
                                (j["L_dec"].get<double>() + double(c.lambda_entail) * j["L_entail"].get<double>()));
    worst = std::max(worst, gap);
    within += gap <= 1e-10;
  }
  report(steps == 100 && within == steps, "loss identity",
         std::to_string(within) + "/" + std::to_string(steps) + " logged steps within 1e-10, worst gap " + fmt(worst));
}

void span_constraint() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> sentences(1, 4), length(1, 9);
  std::normal_distribution<double> normal(0, 1);
  std::uniform_int_distribution<int> small(-2, 2);
  std::size_t ok = 0;
  const std::size_t trials = 1000;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::vector<nn::Real>> start(sentences(rng)), end(start.size());
    for (std::size_t k = 0; k < start.size(); ++k) {
      const std::size_t n = length(rng);
      for (std::size_t i = 0; i < n; ++i) {
        // Integer scores in half the trials to exercise tie-breaking.
        start[k].push_back(t % 2 ? nn::Real(small(rng)) : nn::Real(normal(rng)));
        end[k].push_back(t % 2 ? nn::Real(small(rng)) : nn::Real(normal(rng)));
      }
    }
    const auto got = spanqg::extract_span(start, end);
    const auto want = oracle::best_span(start, end);
    const bool inside = got.sentence_index < start.size() && got.token_start <= got.token_end &&
                        got.token_end < start[got.sentence_index].size();
    ok += inside && got.sentence_index == want.k && got.token_start == want.i && got.token_end == want.j;
  }
  report(ok == trials, "span constraint",
         std::to_string(ok) + "/" + std::to_string(trials) + " spans inside one sentence and equal to brute force");
}

void bleu() {
  const std::vector<std::string> corpus = {"Are you a for-profit business?", "Do you live in Wales?",
                                           "Is your income below 20,000?"};
  const double identical = data::bleu(corpus, corpus, 4);

  // Every n-gram matches; brevity penalty exp(1 - 7/6).
  const std::vector<std::string> h4 = {"the cat sat on the mat"}, r4 = {"the cat sat on the mat today"};
  const double got4 = data::bleu(h4, r4, 4), want4 = std::exp(1.0 - 7.0 / 6.0);
  // Clipped precisions 5/7, 3/6 and 1/5; no brevity penalty.
  const std::vector<std::string> h3 = {"the cat the cat on the mat"}, r3 = {"the cat is on the mat"};
  const double got3 = data::bleu(h3, r3, 3),
               want3 = std::exp((std::log(5.0 / 7.0) + std::log(3.0 / 6.0) + std::log(1.0 / 5.0)) / 3.0);
  const bool ok = identical == 1.0 && std::abs(got4 - want4) <= 1e-9 && std::abs(got3 - want3) <= 1e-9;
  report(ok, "bleu",
         "identical corpus " + fmt(identical, 17) + ", 4-gram example " + fmt(got4, 12) + " vs " + fmt(want4, 12) +
             ", 3-gram example " + fmt(got3, 12) + " vs " + fmt(want3, 12));
}

void replay(const app::Engine& engine, const std::vector<data::CMRExample>& dialogs) {
  const auto path = std::filesystem::temp_directory_path() / "cmr_acceptance_sessions.jsonl";
  std::filesystem::remove(path);
  const std::size_t sessions = 50;
  {
    app::StoreOptions opt;
    opt.log_path = path.string();
    app::SessionStore store(engine, opt, Clock::now, 50);
    for (std::size_t i = 0; i < sessions; ++i) {
      const auto& ex = dialogs[i % dialogs.size()];
      auto v = store.create(ex.rule_text, ex.question, ex.scenario);
      for (std::size_t turn = 0; turn < 4 && v.status == app::SessionStatus::AwaitingAnswer; ++turn) {
        v = store.answer(v.session_id, (i + turn) % 3 ? "yes" : "no");
      }
    }
  }
  const auto result = app::replay_sessions(engine, app::read_session_log(path));
  std::filesystem::remove(path);
  report(result.sessions == sessions && result.mismatches == 0, "replay determinism",
         std::to_string(result.sessions) + " sessions replayed, " + std::to_string(result.mismatches) + " mismatches");
}

}  // namespace

int main() {
  std::cout << std::unitbuf;
  gradient_fidelity();
  segmentation();
  weak_labels();
  logic();
  loss_identity();
  span_constraint();
  bleu();
  auto engine = end_to_end();
  data::SyntheticConfig sc;
  sc.count = 50;
  replay(*engine, data::generate_synthetic(sc, 90));
  ablation();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
