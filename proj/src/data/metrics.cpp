#include "cmr/data/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cmr/encoder/tokenizer.hpp"

namespace cmr::data {

using decision::Decision;

std::optional<double> DecisionMetrics::class_accuracy(Decision c) const {
  const auto i = static_cast<std::size_t>(c);
  if (gold_counts[i] == 0) return std::nullopt;
  return double(class_correct[i]) / double(gold_counts[i]);
}

nlohmann::json DecisionMetrics::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (std::size_t c = 0; c < decision::kDecisions; ++c) {
    const auto acc = class_accuracy(static_cast<Decision>(c));
    classes[std::string(decision::decision_name(static_cast<Decision>(c)))] =
        acc ? nlohmann::json(*acc) : nlohmann::json(nullptr);
  }
  nlohmann::json confusion_json = nlohmann::json::array();
  for (const auto& row : confusion) confusion_json.push_back(row);
  return {{"total", total}, {"micro", micro}, {"macro", macro}, {"class_accuracy", classes}, {"confusion", confusion_json}};
}

DecisionMetrics evaluate_decisions(std::span<const Decision> predictions, std::span<const Decision> golds) {
  if (predictions.size() != golds.size()) throw std::invalid_argument("predictions and golds differ in length");
  if (golds.empty()) throw std::invalid_argument("cannot evaluate an empty set");
  DecisionMetrics m;
  m.total = golds.size();
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const auto g = static_cast<std::size_t>(golds[i]);
    const auto p = static_cast<std::size_t>(predictions[i]);
    ++m.gold_counts[g];
    ++m.confusion[g][p];
    if (g == p) {
      ++m.correct;
      ++m.class_correct[g];
    }
  }
  m.micro = double(m.correct) / double(m.total);
  double sum = 0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < decision::kDecisions; ++c) {
    if (m.gold_counts[c] == 0) continue;
    sum += double(m.class_correct[c]) / double(m.gold_counts[c]);
    ++present;
  }
  m.macro = sum / double(present);
  return m;
}

double bleu(std::span<const std::string> hypotheses, std::span<const std::string> references, std::size_t max_n) {
  if (hypotheses.size() != references.size()) throw std::invalid_argument("bleu: hypothesis/reference count mismatch");
  if (max_n == 0) throw std::invalid_argument("bleu: max_n must be positive");
  if (hypotheses.empty()) {
    std::cerr << "warning: BLEU over an empty corpus is reported as 0\n";
    return 0;
  }
  std::vector<std::size_t> matched(max_n, 0), candidates(max_n, 0);
  std::size_t hyp_len = 0, ref_len = 0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto h = encoder::tokenize(hypotheses[s]);
    const auto r = encoder::tokenize(references[s]);
    hyp_len += h.size();
    ref_len += r.size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      std::map<std::vector<std::string>, std::size_t> ref_counts;
      for (std::size_t i = 0; i + n <= r.size(); ++i) ++ref_counts[{r.begin() + i, r.begin() + i + n}];
      std::map<std::vector<std::string>, std::size_t> hyp_counts;
      for (std::size_t i = 0; i + n <= h.size(); ++i) ++hyp_counts[{h.begin() + i, h.begin() + i + n}];
      for (const auto& [gram, count] : hyp_counts) {
        candidates[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matched[n - 1] += std::min(count, it->second);
      }
    }
  }
  double log_sum = 0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (matched[n] == 0 || candidates[n] == 0) return 0;
    log_sum += std::log(double(matched[n]) / double(candidates[n]));
  }
  const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - double(ref_len) / double(hyp_len));
  return bp * std::exp(log_sum / double(max_n));
}

std::string_view subset_name(SubsetKind k) {
  switch (k) {
    case SubsetKind::Answerable:
      return "answerable";
    case SubsetKind::DialogHistoryOnly:
      return "dialog_history_only";
    case SubsetKind::ScenarioOnly:
      return "scenario_only";
    case SubsetKind::EvidenceSubstituted:
      return "evidence_substituted";
  }
  return "answerable";
}

SubsetKind parse_subset(std::string_view text) {
  for (auto k : {SubsetKind::Answerable, SubsetKind::DialogHistoryOnly, SubsetKind::ScenarioOnly,
                 SubsetKind::EvidenceSubstituted}) {
    if (subset_name(k) == text) return k;
  }
  throw std::invalid_argument("unknown subset '" + std::string(text) + "'");
}

namespace {
bool blank(const std::string& s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}
}  // namespace

std::vector<CMRExample> subset_filter(const std::vector<CMRExample>& examples, SubsetKind kind) {
  std::vector<CMRExample> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const CMRExample& ex = examples[i];
    switch (kind) {
      case SubsetKind::Answerable:
        if (ex.decision != Decision::Irrelevant) out.push_back(ex);
        break;
      case SubsetKind::DialogHistoryOnly:
        if (blank(ex.scenario)) out.push_back(ex);
        break;
      case SubsetKind::ScenarioOnly:
        if (ex.history.empty()) out.push_back(ex);
        break;
      case SubsetKind::EvidenceSubstituted: {
        if (!ex.evidence) throw std::invalid_argument("example " + std::to_string(i) + " (" + ex.utterance_id + ") has no evidence");
        CMRExample copy = ex;
        copy.scenario.clear();
        copy.history.insert(copy.history.end(), ex.evidence->begin(), ex.evidence->end());
        out.push_back(std::move(copy));
        break;
      }
    }
  }
  return out;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j = decisions.to_json();
  j["bleu1"] = bleu1 ? nlohmann::json(*bleu1) : nlohmann::json(nullptr);
  j["bleu4"] = bleu4 ? nlohmann::json(*bleu4) : nlohmann::json(nullptr);
  j["bleu_pairs"] = bleu_pairs;
  j["entailment_accuracy"] = entailment_accuracy ? nlohmann::json(*entailment_accuracy) : nlohmann::json(nullptr);
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [name, m] : by_logical_type) types[name] = m.to_json();
  j["by_logical_type"] = types;
  nlohmann::json subsets = nlohmann::json::object();
  for (const auto& [name, m] : by_subset) subsets[name] = m.to_json();
  j["by_subset"] = subsets;
  return j;
}

namespace {
std::string pct(std::optional<double> v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * *v;
  return os.str();
}

void row(std::ostringstream& os, const std::string& name, const DecisionMetrics& m) {
  os << std::left << std::setw(22) << name << std::right << std::setw(7) << m.total << std::setw(8) << pct(m.micro)
     << std::setw(8) << pct(m.macro);
  for (std::size_t c = 0; c < decision::kDecisions; ++c) os << std::setw(11) << pct(m.class_accuracy(static_cast<Decision>(c)));
  os << '\n';
}
}  // namespace

std::string MetricsReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(22) << "set" << std::right << std::setw(7) << "n" << std::setw(8) << "micro"
     << std::setw(8) << "macro";
  for (std::size_t c = 0; c < decision::kDecisions; ++c) os << std::setw(11) << decision::decision_name(static_cast<Decision>(c));
  os << '\n';
  row(os, "all", decisions);
  for (const auto& [name, m] : by_logical_type) row(os, "type:" + name, m);
  for (const auto& [name, m] : by_subset) row(os, "subset:" + name, m);
  os << "BLEU1 " << pct(bleu1) << "  BLEU4 " << pct(bleu4) << "  (pairs " << bleu_pairs << ")\n";
  if (entailment_accuracy) os << "entailment accuracy " << pct(entailment_accuracy) << '\n';
  return os.str();
}

}  // namespace cmr::data
