#include "cmr/weak/weak_labels.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>

#include "cmr/encoder/tokenizer.hpp"

namespace cmr::weak {

std::string_view label_name(EntailmentLabel label) {
  switch (label) {
    case EntailmentLabel::Entailment:
      return "Entailment";
    case EntailmentLabel::Contradiction:
      return "Contradiction";
    case EntailmentLabel::Neutral:
      return "Neutral";
  }
  return "Neutral";
}

Answer parse_answer(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (s == "yes") return Answer::Yes;
  if (s == "no") return Answer::No;
  throw std::invalid_argument("answer must be yes or no, got '" + std::string(text) + "'");
}

std::string_view answer_name(Answer answer) { return answer == Answer::Yes ? "yes" : "no"; }

std::size_t token_edit_distance(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t match_turn_to_condition(const HistoryTurn& turn, std::span<const std::string> conditions) {
  if (conditions.empty()) throw std::invalid_argument("cannot match a turn against zero conditions");
  const auto q = encoder::normalized_tokens(turn.follow_up_question);
  std::size_t best = 0;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    const std::size_t d = token_edit_distance(q, encoder::normalized_tokens(conditions[i]));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::vector<EntailmentLabel> label_conditions(std::span<const std::string> conditions,
                                              std::span<const HistoryTurn> history) {
  std::vector<EntailmentLabel> labels(conditions.size(), EntailmentLabel::Neutral);
  if (conditions.empty()) return labels;
  for (const HistoryTurn& turn : history) {
    labels[match_turn_to_condition(turn, conditions)] =
        turn.answer == Answer::Yes ? EntailmentLabel::Entailment : EntailmentLabel::Contradiction;
  }
  return labels;
}

SpanLabel derive_span_label(const std::vector<std::vector<std::string>>& sentences, std::string_view question,
                            std::size_t max_len) {
  const auto q = encoder::normalized_tokens(question);
  const std::size_t m = q.size();
  SpanLabel best;
  bool found = false;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& toks = sentences[s];
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (encoder::is_punctuation_token(toks[i])) continue;
      // prev[k]: distance between the words of toks[i..j] and q[0..k).
      for (std::size_t k = 0; k <= m; ++k) prev[k] = k;
      for (std::size_t j = i; j < toks.size() && j - i < max_len; ++j) {
        if (encoder::is_punctuation_token(toks[j])) continue;
        cur[0] = prev[0] + 1;
        for (std::size_t k = 1; k <= m; ++k) {
          const std::size_t sub = prev[k - 1] + (toks[j] == q[k - 1] ? 0 : 1);
          cur[k] = std::min({prev[k] + 1, cur[k - 1] + 1, sub});
        }
        std::swap(prev, cur);
        if (!found || prev[m] < best.distance) {
          best = {s, i, j, prev[m]};
          found = true;
        }
      }
    }
  }
  if (!found) throw std::invalid_argument("rule has no word tokens to derive a span from");
  return best;
}

}  // namespace cmr::weak
