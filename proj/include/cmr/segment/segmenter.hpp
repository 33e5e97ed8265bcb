#pragma once

// Rule text -> ordered conditions. Bullet items are taken verbatim; every other
// sentence is cut into clause-like elementary discourse units (EDUs) by an
// EduSegmenter.

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace cmr::segment {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

enum class ConditionKind { Bullet, Clause };

std::string_view kind_name(ConditionKind kind);

struct RuleDocument {
  std::string raw_text;
  std::vector<Span> sentences;
  std::vector<Span> bullet_items;
};

struct Condition {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::size_t sentence_index = 0;
  ConditionKind kind = ConditionKind::Clause;
  friend bool operator==(const Condition&, const Condition&) = default;
};

struct ParsedRule {
  RuleDocument document;
  std::vector<Condition> conditions;
};

// Sentence spans over the non-whitespace content. Every newline is a hard
// boundary, each bullet line is one sentence, and other lines break after
// . ! ? unless the period closes a known abbreviation or initial.
// Throws std::invalid_argument on empty or all-whitespace text.
std::vector<Span> split_sentences(std::string_view text);

// Lines starting with -, *, +, a bullet glyph, "1." / "1)", "a)" or "(a)".
// Spans exclude the marker.
std::vector<Span> detect_bullets(std::string_view text);

class EduSegmenter {
 public:
  virtual ~EduSegmenter() = default;
  // Spans relative to `sentence`; together they cover all its non-whitespace
  // content in order.
  virtual std::vector<Span> segment(std::string_view sentence) const = 0;
};

// Deterministic marker-lexicon segmenter.
class MarkerSegmenter final : public EduSegmenter {
 public:
  std::vector<Span> segment(std::string_view sentence) const override;
};

// One unit per sentence (the no-EDU ablation).
class SentenceSegmenter final : public EduSegmenter {
 public:
  std::vector<Span> segment(std::string_view sentence) const override;
};

std::vector<Span> segment_edus(std::string_view sentence);

ParsedRule parse_rule(std::string_view text, const EduSegmenter& segmenter);
ParsedRule parse_rule(std::string_view text);

}  // namespace cmr::segment
