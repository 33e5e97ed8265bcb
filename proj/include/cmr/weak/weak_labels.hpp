#pragma once

// Noisy training signal derived by minimum token edit distance:
//  - follow-up turns are matched to conditions and turned into per-condition
//    entailment labels;
//  - the follow-up to be asked is matched to a single-sentence rule span.
//
// All comparisons run on normalized tokens (lowercased, punctuation removed).

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cmr::weak {

// Index order matches the three entailment scores (E, C, N).
enum class EntailmentLabel { Entailment = 0, Contradiction = 1, Neutral = 2 };

std::string_view label_name(EntailmentLabel label);

enum class Answer { Yes, No };

// Accepts yes/no in any case with surrounding whitespace or punctuation.
Answer parse_answer(std::string_view text);
std::string_view answer_name(Answer answer);

struct HistoryTurn {
  std::string follow_up_question;
  Answer answer = Answer::Yes;
  friend bool operator==(const HistoryTurn&, const HistoryTurn&) = default;
};

struct SpanLabel {
  std::size_t sentence_index = 0;
  std::size_t token_start = 0;
  std::size_t token_end = 0;  // inclusive
  std::size_t distance = 0;
  friend bool operator==(const SpanLabel&, const SpanLabel&) = default;
};

// Levenshtein distance over tokens with unit costs.
std::size_t token_edit_distance(std::span<const std::string> a, std::span<const std::string> b);

// Index of the condition closest to the turn's question; ties go to the
// smallest index. Throws std::invalid_argument when there are no conditions.
std::size_t match_turn_to_condition(const HistoryTurn& turn, std::span<const std::string> conditions);

// Entailment for conditions matched by a yes-turn, Contradiction for a no-turn,
// Neutral otherwise. When several turns match one condition the later wins.
std::vector<EntailmentLabel> label_conditions(std::span<const std::string> conditions,
                                              std::span<const HistoryTurn> history);

inline constexpr std::size_t kMaxSpanTokens = 30;

// Span of at most max_len tokens inside one sentence that minimizes edit
// distance to the question. `sentences` are raw token lists (as produced by
// encoder::tokenize); spans start and end on word tokens. Ties go to the
// earliest sentence, then start, then shortest span.
// Throws std::invalid_argument when no sentence has a word token.
SpanLabel derive_span_label(const std::vector<std::vector<std::string>>& sentences, std::string_view question,
                            std::size_t max_len = kMaxSpanTokens);

}  // namespace cmr::weak
