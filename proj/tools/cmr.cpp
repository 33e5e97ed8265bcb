// cmr: train, evaluate and serve the conversational rule reader.

#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>

#include "cmr/app/engine.hpp"
#include "cmr/app/server.hpp"
#include "cmr/app/session.hpp"
#include "cmr/encoder/tokenizer.hpp"

using namespace cmr;

namespace {

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), {});
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// A single example object, or the first element of an array.
data::CMRExample read_example(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_input(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error((path.empty() ? std::string("stdin") : path) + ": malformed JSON: " + e.what());
  }
  if (j.is_array()) {
    if (j.empty()) throw std::runtime_error("no example in input");
    j = j[0];
  }
  return data::example_from_json(j);
}

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string checkpoint = "cmr.ckpt";
};

app::AppConfig load(const Globals& g) {
  app::AppConfig c = g.config_path.empty() ? app::AppConfig{} : app::load_config(g.config_path);
  if (g.seed_set) c.seed = g.seed;
  return c;
}

std::unique_ptr<app::Engine> load_engine(const Globals& g) {
  if (!std::filesystem::exists(g.checkpoint)) throw std::runtime_error("checkpoint not found: " + g.checkpoint);
  return app::Engine::load(g.checkpoint);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Conversational machine reading over rule texts"};
  cli.require_subcommand(1);
  Globals g;
  cli.add_option("--config", g.config_path, "JSON configuration file");
  cli.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { g.seed = s; g.seed_set = true; }, "Random seed");
  cli.add_option("--checkpoint", g.checkpoint, "Checkpoint path")->capture_default_str();

  std::string log_path;
  auto* train = cli.add_subcommand("train", "Train both models and write a checkpoint");
  train->add_option("--log", log_path, "JSON-lines training log");

  std::string data_path, subset, report_path;
  bool oracle_qg = false;
  auto* evaluate = cli.add_subcommand("evaluate", "Score a checkpoint on a dataset");
  evaluate->add_option("--data", data_path, "ShARC-format JSON (default: the configured dev corpus)");
  evaluate->add_option("--subset", subset, "answerable | dialog_history_only | scenario_only | evidence_substituted");
  evaluate->add_flag("--oracle-qg", oracle_qg, "Score follow-ups on every gold Inquire example");
  evaluate->add_option("--json", report_path, "Write the report JSON here");

  std::string input;
  std::string segmenter_name = "edu";
  auto* segment = cli.add_subcommand("segment", "Split a rule text into conditions");
  segment->add_option("input", input, "Text file, or - for stdin");
  segment->add_option("--segmenter", segmenter_name, "edu | sentence");

  auto* label = cli.add_subcommand("label", "Weak entailment and span labels for an example");
  label->add_option("input", input, "Example JSON file, or - for stdin");

  auto* ask = cli.add_subcommand("ask", "Extract and rephrase a follow-up question");
  ask->add_option("input", input, "Example JSON file, or - for stdin");

  bool debug = false;
  auto* encode = cli.add_subcommand("encode", "Assemble and encode an example");
  encode->add_option("input", input, "Example JSON file, or - for stdin");
  encode->add_flag("--debug", debug, "Dump sentinel positions and vector norms");

  app::ServerConfig server;
  auto* serve = cli.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--host", server.host)->capture_default_str();
  serve->add_option("--port", server.port)->capture_default_str();
  serve->add_option("--max-sessions", server.store.max_sessions)->capture_default_str();
  serve->add_option("--ttl", server.store.ttl_seconds, "Session TTL in seconds")->capture_default_str();
  serve->add_option("--session-log", server.store.log_path, "Append-only session log");

  std::string out_path = "-";
  std::size_t count = 0;
  auto* generate = cli.add_subcommand("generate", "Write a synthetic corpus");
  generate->add_option("--count", count, "Number of examples (default: the configured train_count)");
  generate->add_option("--out", out_path, "Output path, or - for stdout");

  std::string replay_path;
  auto* replay = cli.add_subcommand("replay", "Replay a session log against a checkpoint");
  replay->add_option("log", replay_path)->required();

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*train) {
      const auto config = load(g);
      auto [train_set, dev_set] = app::load_corpora(config);
      auto vocab = app::build_vocabulary(train_set, config.train.min_freq);
      app::Engine engine(config.model, config.softmax_mix, std::move(vocab), config.train.segmenter);
      engine.reset(config.seed);
      std::ofstream log_file;
      if (!log_path.empty()) {
        log_file.open(log_path);
        if (!log_file) throw std::runtime_error("cannot write " + log_path);
      }
      const auto summary = app::train_engine(engine, train_set, dev_set, config.train, config.seed,
                                             log_path.empty() ? nullptr : &log_file);
      engine.save(g.checkpoint, config.to_json());
      std::cerr << "wrote " << g.checkpoint << " after " << summary.steps.size() << " decision steps and "
                << summary.span_steps.size() << " span steps\n";
      if (summary.dev) std::cout << summary.dev->to_table();
    } else if (*evaluate) {
      const auto engine = load_engine(g);
      std::vector<data::CMRExample> examples;
      if (!data_path.empty()) {
        examples = data::load_sharc(data_path);
      } else {
        examples = app::load_corpora(load(g)).second;
      }
      app::EvalOptions options;
      options.oracle_qg = oracle_qg;
      if (!subset.empty()) options.subset = data::parse_subset(subset);
      const auto report = app::evaluate(*engine, examples, options);
      std::cout << report.to_table();
      if (!report_path.empty()) {
        std::ofstream out(report_path);
        out << report.to_json().dump(2) << '\n';
      } else {
        std::cout << report.to_json().dump() << '\n';
      }
    } else if (*segment) {
      const auto seg = app::make_segmenter(segmenter_name);
      const auto parsed = segment::parse_rule(read_input(input), *seg);
      nlohmann::json out = nlohmann::json::array();
      for (const auto& c : parsed.conditions) {
        out.push_back({{"text", c.text},
                       {"char_start", c.char_start},
                       {"char_end", c.char_end},
                       {"sentence_index", c.sentence_index},
                       {"kind", segment::kind_name(c.kind)}});
      }
      std::cout << out.dump(2) << '\n';
    } else if (*label) {
      const auto ex = read_example(input);
      const auto parsed = segment::parse_rule(ex.rule_text);
      std::vector<std::string> texts;
      for (const auto& c : parsed.conditions) texts.push_back(c.text);
      const auto labels = weak::label_conditions(texts, ex.history);
      nlohmann::json out = {{"conditions", nlohmann::json::array()}};
      for (std::size_t i = 0; i < texts.size(); ++i) out["conditions"].push_back({{"text", texts[i]}, {"label", weak::label_name(labels[i])}});
      if (ex.decision == decision::Decision::Inquire && !ex.follow_up.empty()) {
        const auto rule = spanqg::split_rule(ex.rule_text);
        const auto span = weak::derive_span_label(rule.token_texts(), ex.follow_up);
        out["span"] = {{"sentence_index", span.sentence_index},
                       {"token_start", span.token_start},
                       {"token_end", span.token_end},
                       {"distance", span.distance},
                       {"text", rule.span_text(span.sentence_index, span.token_start, span.token_end)}};
      }
      std::cout << out.dump(2) << '\n';
    } else if (*ask) {
      const auto engine = load_engine(g);
      const auto ex = read_example(input);
      const auto rule = spanqg::split_rule(ex.rule_text);
      const auto assembly = spanqg::assemble_rule(rule, ex.question, ex.scenario, ex.history, engine->vocab(),
                                                  engine->config().max_sequence_length);
      const auto gen = engine->span.generate(rule, assembly, spanqg::TemplateRephraser());
      std::cout << nlohmann::json{{"sentence_index", gen.span.sentence_index},
                                  {"token_start", gen.span.token_start},
                                  {"token_end", gen.span.token_end},
                                  {"span", gen.span_text},
                                  {"question", gen.question}}
                       .dump(2)
                << '\n';
    } else if (*encode) {
      const auto engine = load_engine(g);
      const auto ex = read_example(input);
      const auto p = app::prepare_decision(ex, engine->segmenter(), engine->vocab(), engine->config().max_sequence_length);
      nn::NoGradGuard guard;
      const auto enc = engine->decision.encoder.encode(p.example.assembly, nn::Mode{});
      nlohmann::json out = {{"tokens", p.example.assembly.token_ids.size()},
                            {"n_conditions", p.example.assembly.n_conditions},
                            {"n_history", p.example.assembly.n_history},
                            {"sentinel_positions", p.example.assembly.sentinel_positions}};
      if (debug) {
        nlohmann::json norms = nlohmann::json::array();
        const std::size_t d = enc.sentence_vectors.dim(1);
        for (std::size_t r = 0; r < enc.sentence_vectors.dim(0); ++r) {
          double s = 0;
          for (std::size_t c = 0; c < d; ++c) s += double(enc.sentence_vectors.values()[r * d + c]) * double(enc.sentence_vectors.values()[r * d + c]);
          norms.push_back(std::sqrt(s));
        }
        out["sentence_vector_norms"] = norms;
        nlohmann::json tokens = nlohmann::json::array();
        for (auto id : p.example.assembly.token_ids) tokens.push_back(engine->vocab().token(id));
        out["token_text"] = tokens;
      }
      std::cout << out.dump(2) << '\n';
    } else if (*serve) {
      const auto engine = load_engine(g);
      app::serve(*engine, server);
    } else if (*generate) {
      const auto config = load(g);
      auto syn = config.data.synthetic;
      syn.count = count ? count : config.data.train_count;
      const auto examples = data::generate_synthetic(syn, config.seed);
      if (out_path == "-") {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& ex : examples) a.push_back(data::example_to_json(ex));
        std::cout << a.dump(1) << '\n';
      } else {
        data::save_examples(out_path, examples);
      }
    } else if (*replay) {
      const auto engine = load_engine(g);
      const auto result = app::replay_sessions(*engine, app::read_session_log(replay_path));
      std::cout << result.sessions << " sessions, " << result.mismatches << " mismatches\n";
      return result.mismatches == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
