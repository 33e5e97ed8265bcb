#include "cmr/segment/segmenter.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>
#include <unordered_set>

#include "cmr/encoder/tokenizer.hpp"

namespace cmr::segment {

namespace {

using encoder::Token;

bool is_blank(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

Span trim(std::string_view text, Span s) {
  while (s.begin < s.end && is_blank(text[s.begin])) ++s.begin;
  while (s.end > s.begin && is_blank(text[s.end - 1])) --s.end;
  return s;
}

std::vector<Span> lines_of(std::string_view text) {
  std::vector<Span> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      lines.push_back({start, i});
      start = i + 1;
    }
  }
  return lines;
}

// Offset where the item text starts if the trimmed line opens with a bullet
// marker, else npos.
std::size_t bullet_body_start(std::string_view text, Span line) {
  constexpr auto npos = std::string_view::npos;
  std::size_t i = line.begin;
  const std::size_t end = line.end;
  auto space_at = [&](std::size_t k) { return k < end && (text[k] == ' ' || text[k] == '\t'); };
  if (i >= end) return npos;
  const unsigned char c = static_cast<unsigned char>(text[i]);
  std::size_t after = npos;
  if ((c == '-' || c == '*' || c == '+') && space_at(i + 1)) {
    after = i + 1;
  } else if (text.substr(i, 3) == "\xE2\x80\xA2") {
    after = i + 3;
  } else if (std::isdigit(c)) {
    std::size_t k = i;
    while (k < end && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
    if (k < end && (text[k] == '.' || text[k] == ')') && space_at(k + 1)) after = k + 1;
  } else if (std::isalpha(c) && i + 1 < end && text[i + 1] == ')' && space_at(i + 2)) {
    after = i + 2;
  } else if (c == '(') {
    std::size_t k = i + 1;
    while (k < end && std::isalnum(static_cast<unsigned char>(text[k]))) ++k;
    if (k > i + 1 && k - i <= 4 && k < end && text[k] == ')' && space_at(k + 1)) after = k + 1;
  }
  if (after == npos) return npos;
  while (after < end && is_blank(text[after])) ++after;
  return after;
}

const std::unordered_set<std::string> kNeverBreakAbbrev = {
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "vs", "no", "approx", "dept", "e.g", "i.e", "cf", "fig",
    "u.s", "u.k", "e.u", "nos", "ref", "para", "art", "sec", "ch"};
const std::unordered_set<std::string> kMaybeBreakAbbrev = {"etc", "inc", "ltd", "co", "corp", "plc", "llc", "a.m", "p.m"};

// Word (lowercased, without the final period) that ends at text[dot].
std::string word_before_period(std::string_view text, std::size_t line_begin, std::size_t dot) {
  std::size_t k = dot;
  while (k > line_begin) {
    const unsigned char c = static_cast<unsigned char>(text[k - 1]);
    if (std::isalnum(c) || c == '.') {
      --k;
    } else {
      break;
    }
  }
  std::string w(text.substr(k, dot - k));
  for (char& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return w;
}

bool period_ends_sentence(std::string_view text, std::size_t line_begin, std::size_t dot, std::size_t next) {
  const std::string w = word_before_period(text, line_begin, dot);
  if (kNeverBreakAbbrev.count(w) != 0) return false;
  const bool next_lower = next < text.size() && std::islower(static_cast<unsigned char>(text[next]));
  const bool next_upper = next < text.size() && std::isupper(static_cast<unsigned char>(text[next]));
  if (kMaybeBreakAbbrev.count(w) != 0) return next >= text.size() || next_upper;
  return !next_lower;
}

void split_line(std::string_view text, Span line, std::vector<Span>& out) {
  std::size_t start = line.begin;
  std::size_t i = line.begin;
  while (i < line.end) {
    const char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i + 1;
      while (j < line.end && (text[j] == '.' || text[j] == '!' || text[j] == '?' || text[j] == '"' || text[j] == '\'' ||
                              text[j] == ')' || text[j] == ']')) {
        ++j;
      }
      if (j == line.end || is_blank(text[j])) {
        std::size_t next = j;
        while (next < line.end && is_blank(text[next])) ++next;
        const bool boundary = c != '.' || period_ends_sentence(text, line.begin, i, next < line.end ? next : text.size());
        if (boundary) {
          Span s = trim(text, {start, j});
          if (s.begin < s.end) out.push_back(s);
          start = j;
        }
      }
      i = j;
      continue;
    }
    ++i;
  }
  Span s = trim(text, {start, line.end});
  if (s.begin < s.end) out.push_back(s);
}

// ---------------------------------------------------------------------------
// EDU segmentation

const std::unordered_set<std::string> kStrongSubordinators = {"if", "unless", "because", "although", "though", "whereas"};
const std::unordered_set<std::string> kWeakSubordinators = {"when",  "while", "whilst", "before", "after",
                                                             "until", "once",  "since",  "where"};
const std::unordered_set<std::string> kConnectives = {"and", "or", "but", "so", "nor", "yet"};
const std::unordered_set<std::string> kRelatives = {"who", "which", "whose", "whom"};
const std::unordered_set<std::string> kSubjectLike = {
    "i",      "you",     "he",      "she",     "it",     "we",      "they",   "there", "someone", "anyone",
    "everyone", "somebody", "anybody", "nobody", "you're", "you've", "you'll", "you'd", "it's",    "they're",
    "they've", "we're",  "i'm",     "i've",    "he's",   "she's",   "there's", "your", "their",   "his",
    "her",    "its",     "our",     "my",      "this",   "these",   "those"};
const std::array<std::array<std::string_view, 3>, 10> kOpeners = {{{"as", "long", "as"},
                                                                   {"so", "long", "as"},
                                                                   {"as", "soon", "as"},
                                                                   {"provided", "that", ""},
                                                                   {"providing", "that", ""},
                                                                   {"even", "if", ""},
                                                                   {"even", "though", ""},
                                                                   {"only", "if", ""},
                                                                   {"in", "order", "to"},
                                                                   {"in", "case", ""}}};

std::size_t opener_length_at(const std::vector<Token>& toks, std::size_t t) {
  for (const auto& opener : kOpeners) {
    std::size_t len = 0;
    bool match = true;
    for (std::string_view w : opener) {
      if (w.empty()) break;
      if (t + len >= toks.size() || toks[t + len].text != w) {
        match = false;
        break;
      }
      ++len;
    }
    if (match && len > 0) return len;
  }
  return 0;
}

bool in_set(const std::unordered_set<std::string>& set, const std::vector<Token>& toks, std::size_t t) {
  return t < toks.size() && set.count(toks[t].text) != 0;
}

bool is_subordinator(const std::vector<Token>& toks, std::size_t t) {
  return in_set(kStrongSubordinators, toks, t) || in_set(kWeakSubordinators, toks, t) || opener_length_at(toks, t) > 0;
}

bool is_comma(const std::vector<Token>& toks, std::size_t t) { return t < toks.size() && toks[t].text == ","; }

std::size_t word_count(const std::vector<Token>& toks, std::size_t begin, std::size_t end) {
  std::size_t n = 0;
  for (std::size_t t = begin; t < end; ++t) n += encoder::is_punctuation_token(toks[t].text) ? 0 : 1;
  return n;
}

std::vector<std::size_t> boundary_tokens(const std::vector<Token>& toks) {
  const std::size_t n = toks.size();
  std::vector<bool> start(n, false);
  auto mark = [&](std::size_t t) {
    if (t == 0 || t >= n) return;
    // A connective right before the marker opens the new unit ("or if ...").
    if (in_set(kConnectives, toks, t - 1) && t - 1 > 0) --t;
    start[t] = true;
  };

  std::size_t inside_opener_until = 0;
  for (std::size_t t = 1; t < n; ++t) {
    const std::string& w = toks[t].text;
    const std::string& prev = toks[t - 1].text;
    if (t < inside_opener_until) continue;
    if (const std::size_t len = opener_length_at(toks, t); len > 0) {
      mark(t);
      inside_opener_until = t + len;
      continue;
    }
    if (kStrongSubordinators.count(w) != 0) {
      mark(t);
    } else if (kWeakSubordinators.count(w) != 0) {
      if (prev == "," || in_set(kSubjectLike, toks, t + 1)) mark(t);
    } else if ((prev == "," || prev == ";") && kConnectives.count(w) != 0) {
      if (in_set(kSubjectLike, toks, t + 1) || is_subordinator(toks, t + 1)) start[t] = true;
    } else if (prev == "," && kRelatives.count(w) != 0) {
      mark(t);
    }
    if (prev == ";") start[t] = true;
  }

  // A sentence-initial subordinate clause closes at the comma that introduces
  // the main clause.
  if (n > 0 && is_subordinator(toks, 0)) {
    std::size_t chosen = 0;
    for (std::size_t t = 1; t + 1 < n; ++t) {
      if (is_comma(toks, t) && in_set(kSubjectLike, toks, t + 1)) {
        chosen = t + 1;
        break;
      }
    }
    if (chosen == 0) {
      static const std::unordered_set<std::string> kNotMain = {"a", "an", "the", "and", "or", "but"};
      for (std::size_t t = 1; t + 1 < n; ++t) {
        if (is_comma(toks, t) && !in_set(kNotMain, toks, t + 1) &&
            !std::isdigit(static_cast<unsigned char>(toks[t + 1].text[0]))) {
          chosen = t + 1;
          break;
        }
      }
    }
    if (chosen != 0) start[chosen] = true;
  }

  std::vector<std::size_t> starts = {0};
  for (std::size_t t = 1; t < n; ++t) {
    if (start[t]) starts.push_back(t);
  }
  return starts;
}

}  // namespace

std::string_view kind_name(ConditionKind kind) { return kind == ConditionKind::Bullet ? "bullet" : "clause"; }

std::vector<Span> detect_bullets(std::string_view text) {
  std::vector<Span> items;
  for (Span line : lines_of(text)) {
    Span t = trim(text, line);
    const std::size_t body = bullet_body_start(text, t);
    if (body == std::string_view::npos || body >= t.end) continue;
    items.push_back({body, t.end});
  }
  return items;
}

std::vector<Span> split_sentences(std::string_view text) {
  std::vector<Span> out;
  for (Span line : lines_of(text)) {
    Span t = trim(text, line);
    if (t.begin >= t.end) continue;
    if (bullet_body_start(text, t) != std::string_view::npos && bullet_body_start(text, t) < t.end) {
      out.push_back(t);
    } else {
      split_line(text, t, out);
    }
  }
  if (out.empty()) throw std::invalid_argument("cannot split an empty text into sentences");
  return out;
}

std::vector<Span> MarkerSegmenter::segment(std::string_view sentence) const {
  const std::vector<Token> toks = encoder::tokenize_with_offsets(sentence);
  if (toks.empty()) {
    Span s = trim(sentence, {0, sentence.size()});
    return s.begin < s.end ? std::vector<Span>{s} : std::vector<Span>{};
  }
  std::vector<std::size_t> starts = boundary_tokens(toks);

  // Units with fewer than two words join their left neighbour (the first unit
  // joins its right neighbour).
  bool changed = true;
  while (changed && starts.size() > 1) {
    changed = false;
    for (std::size_t u = 0; u < starts.size(); ++u) {
      const std::size_t end = u + 1 < starts.size() ? starts[u + 1] : toks.size();
      if (word_count(toks, starts[u], end) >= 2) continue;
      starts.erase(starts.begin() + static_cast<std::ptrdiff_t>(u == 0 ? 1 : u));
      changed = true;
      break;
    }
  }

  std::vector<Span> spans;
  for (std::size_t u = 0; u < starts.size(); ++u) {
    const std::size_t last = (u + 1 < starts.size() ? starts[u + 1] : toks.size()) - 1;
    spans.push_back({toks[starts[u]].begin, toks[last].end});
  }
  return spans;
}

std::vector<Span> SentenceSegmenter::segment(std::string_view sentence) const {
  Span s = trim(sentence, {0, sentence.size()});
  if (s.begin >= s.end) return {};
  return {s};
}

std::vector<Span> segment_edus(std::string_view sentence) { return MarkerSegmenter{}.segment(sentence); }

ParsedRule parse_rule(std::string_view text, const EduSegmenter& segmenter) {
  ParsedRule out;
  out.document.raw_text = std::string(text);
  out.document.sentences = split_sentences(text);
  out.document.bullet_items = detect_bullets(text);

  const auto& items = out.document.bullet_items;
  for (std::size_t s = 0; s < out.document.sentences.size(); ++s) {
    const Span sent = out.document.sentences[s];
    auto item = std::find_if(items.begin(), items.end(),
                             [&](const Span& b) { return b.begin >= sent.begin && b.end <= sent.end; });
    if (item != items.end()) {
      out.conditions.push_back({std::string(text.substr(item->begin, item->end - item->begin)), item->begin, item->end, s,
                                ConditionKind::Bullet});
      continue;
    }
    const std::string_view body = text.substr(sent.begin, sent.end - sent.begin);
    for (Span e : segmenter.segment(body)) {
      const std::size_t b = sent.begin + e.begin;
      const std::size_t en = sent.begin + e.end;
      out.conditions.push_back({std::string(text.substr(b, en - b)), b, en, s, ConditionKind::Clause});
    }
  }
  return out;
}

ParsedRule parse_rule(std::string_view text) { return parse_rule(text, MarkerSegmenter{}); }

}  // namespace cmr::segment
