#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmr/data/example.hpp"
#include "cmr/data/logic.hpp"

namespace cmr::data {

struct DecisionMetrics {
  std::size_t total = 0;
  std::size_t correct = 0;
  double micro = 0;
  // Mean of class-wise accuracy over the classes present among the golds.
  double macro = 0;
  std::array<std::size_t, decision::kDecisions> gold_counts{};
  std::array<std::size_t, decision::kDecisions> class_correct{};
  // confusion[gold][pred]
  std::array<std::array<std::size_t, decision::kDecisions>, decision::kDecisions> confusion{};

  // Accuracy on gold class c; nullopt when c never occurs.
  std::optional<double> class_accuracy(decision::Decision c) const;
  nlohmann::json to_json() const;
};

// Throws std::invalid_argument on empty or unequal-length input.
DecisionMetrics evaluate_decisions(std::span<const decision::Decision> predictions,
                                   std::span<const decision::Decision> golds);

// Corpus BLEU with modified n-gram precision up to max_n, uniform weights and
// a brevity penalty; no smoothing, so any zero precision gives 0. Texts are
// split with the encoder tokenizer. An empty corpus scores 0 and warns on
// stderr. Throws std::invalid_argument when the lists differ in length.
double bleu(std::span<const std::string> hypotheses, std::span<const std::string> references, std::size_t max_n);

enum class SubsetKind { Answerable, DialogHistoryOnly, ScenarioOnly, EvidenceSubstituted };
std::string_view subset_name(SubsetKind k);
SubsetKind parse_subset(std::string_view text);

// answerable drops gold Irrelevant; dialog_history_only keeps empty scenarios;
// scenario_only keeps empty histories; evidence_substituted empties the
// scenario and appends the evidence turns to the history (throws
// std::invalid_argument when an example has no evidence).
std::vector<CMRExample> subset_filter(const std::vector<CMRExample>& examples, SubsetKind kind);

struct MetricsReport {
  DecisionMetrics decisions;
  std::optional<double> bleu1;
  std::optional<double> bleu4;
  std::size_t bleu_pairs = 0;
  std::optional<double> entailment_accuracy;
  std::map<std::string, DecisionMetrics> by_logical_type;
  std::map<std::string, DecisionMetrics> by_subset;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

}  // namespace cmr::data
