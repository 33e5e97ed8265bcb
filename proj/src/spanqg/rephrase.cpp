#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "cmr/spanqg/span.hpp"

namespace cmr::spanqg {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& w, std::size_t from) {
  std::string s;
  for (std::size_t i = from; i < w.size(); ++i) {
    if (!s.empty()) s += ' ';
    s += w[i];
  }
  return s;
}

const std::set<std::string> kLeading = {"if", "unless", "when", "whether", "that", "and", "or", "provided", "but"};
const std::set<std::string> kModals = {"can", "could", "will", "would", "should", "must", "may", "might", "shall"};
const std::set<std::string> kAux = {"are", "is", "was", "were", "have", "has", "do", "does", "did",
                                    "can", "could", "will", "would", "should", "may"};
const std::set<std::string> kVerbs = {
    "live", "work", "own", "have", "earn", "receive", "get", "pay", "need", "care", "want", "plan", "intend",
    "rent", "study", "run", "employ", "claim", "hold", "meet", "qualify", "provide", "look", "agree", "wish",
    "expect", "use", "drive", "reside", "apply", "make", "keep", "know", "attend", "belong", "come", "spend",
    "sell", "buy", "export", "import", "trade", "travel", "share", "support", "owe", "lease", "manage"};
const std::set<std::string> kCopular = {"a", "an", "the", "over", "under", "aged", "older", "younger", "at",
                                        "in", "on", "between", "not", "eligible", "able", "resident", "entitled",
                                        "responsible", "liable", "currently", "still", "also", "already", "part",
                                        "self-employed", "unemployed", "pregnant", "married", "single", "blind",
                                        "deaf", "disabled", "ill", "sick", "retired", "homeless", "older"};

bool adjectival(const std::string& w) {
  auto ends = [&](std::string_view suf) { return w.size() > suf.size() + 2 && w.ends_with(suf); };
  return ends("ed") || ends("ing") || ends("ble") || ends("ful") || ends("ive") || ends("ous");
}

// Position of the copula in "your <noun phrase> is ...", or 0.
std::size_t invert_at(const std::vector<std::string>& lw) {
  for (std::size_t i = 2; i < lw.size() && i <= 4; ++i) {
    if (lw[i] == "is" || lw[i] == "are" || lw[i] == "was" || lw[i] == "were") return i;
  }
  return 0;
}

// Lowercase a leading capital unless the word looks like an acronym or "I".
void soften_first(std::string& w) {
  if (w.size() >= 2 && std::isupper(static_cast<unsigned char>(w[0])) && std::islower(static_cast<unsigned char>(w[1]))) {
    w[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(w[0])));
  }
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string with_subject(const std::string& lead, const std::vector<std::string>& w, std::size_t from) {
  const std::string rest = join(w, from);
  return rest.empty() ? lead : lead + " " + rest;
}

}  // namespace

std::string TemplateRephraser::rephrase(std::string_view span) const {
  std::string s(span);
  auto is_trailing = [](char c) { return std::isspace(static_cast<unsigned char>(c)) || c == '.' || c == ',' || c == ';' || c == ':' || c == '?' || c == '!'; };
  while (!s.empty() && is_trailing(s.back())) s.pop_back();
  std::vector<std::string> w = words_of(s);
  if (w.empty()) return "Is the following true: " + std::string(span) + "?";
  const std::vector<std::string> original = w;

  // Drop leading subordinators and connectives ("as long as" included).
  for (;;) {
    if (w.size() > 1 && kLeading.count(lower(w[0]))) {
      w.erase(w.begin());
    } else if (w.size() > 3 && lower(w[0]) == "as" && lower(w[1]) == "long" && lower(w[2]) == "as") {
      w.erase(w.begin(), w.begin() + 3);
    } else if (w.size() > 2 && (lower(w[0]) == "only" || lower(w[0]) == "even") && lower(w[1]) == "if") {
      w.erase(w.begin(), w.begin() + 2);
    } else {
      break;
    }
  }
  soften_first(w[0]);

  for (auto& word : w) {
    const std::string l = lower(word);
    if (l == "they") word = "you";
    else if (l == "their") word = "your";
    else if (l == "them") word = "you";
    else if (l == "theirs") word = "yours";
    else if (l == "themselves") word = "yourself";
    else if (l == "they're") word = "you're";
    else if (l == "they've") word = "you've";
  }

  std::vector<std::string> lw;
  for (const auto& word : w) lw.push_back(lower(word));
  const auto at = [&](std::size_t i) -> std::string { return i < lw.size() ? lw[i] : std::string(); };

  std::string q;
  if ((at(0) == "it's" || at(0) == "it’s") && at(1) == "been") {
    q = with_subject("has it been", w, 2);
  } else if (at(0) == "it" && at(1) == "has" && at(2) == "been") {
    q = with_subject("has it been", w, 3);
  } else if (at(0) == "it's" || at(0) == "it’s") {
    q = with_subject("is it", w, 1);
  } else if (at(0) == "it" && at(1) == "is") {
    q = with_subject("is it", w, 2);
  } else if (at(0) == "you're" || (at(0) == "you" && at(1) == "are")) {
    q = with_subject("are you", w, at(0) == "you're" ? 1 : 2);
  } else if ((at(0) == "you've" && at(1) == "been") || (at(0) == "you" && at(1) == "have" && at(2) == "been")) {
    q = with_subject("have you been", w, at(0) == "you've" ? 2 : 3);
  } else if (at(0) == "you" && at(1) == "were") {
    q = with_subject("were you", w, 2);
  } else if (at(0) == "you" && kModals.count(at(1))) {
    q = with_subject(at(1) + " you", w, 2);
  } else if (at(0) == "you" && lw.size() > 1) {
    q = with_subject("do you", w, 1);
  } else if (at(0) == "your" && invert_at(lw) != 0) {
    const std::size_t v = invert_at(lw);
    std::vector<std::string> subject(w.begin(), w.begin() + std::ptrdiff_t(v));
    q = lw[v] + " " + join(subject, 0);
    if (v + 1 < w.size()) q += " " + join(w, v + 1);
  } else if (kAux.count(at(0)) && lw.size() > 1) {
    q = join(w, 0);
  } else if (at(0) == "born") {
    q = with_subject("were you", w, 0);
  } else if (kVerbs.count(at(0))) {
    q = with_subject("do you", w, 0);
  } else if (kCopular.count(at(0)) || adjectival(at(0))) {
    q = with_subject("are you", w, 0);
  } else {
    return "Is the following true: " + join(original, 0) + "?";
  }
  return capitalize(q) + "?";
}

std::string rephrase(std::string_view span) { return TemplateRephraser().rephrase(span); }

}  // namespace cmr::spanqg
