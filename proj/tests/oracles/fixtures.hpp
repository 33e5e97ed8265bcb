#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmr/segment/segmenter.hpp"

namespace fixture {

inline std::string path(const std::string& name) { return std::string(CMR_FIXTURES) + "/" + name; }

inline std::string read_text(const std::string& name) {
  std::ifstream in(path(name));
  if (!in) throw std::runtime_error("missing fixture " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json(const std::string& name) { return nlohmann::json::parse(read_text(name)); }

struct EduSentence {
  std::string text;
  std::set<std::size_t> boundaries;  // char offsets where a non-initial unit starts
};

inline std::vector<EduSentence> edu_corpus() {
  std::vector<EduSentence> out;
  std::istringstream in(read_text("edu_corpus.txt"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    EduSentence s;
    std::size_t pos = 0;
    while (true) {
      const std::size_t bar = line.find(" | ", pos);
      const std::string unit = line.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos);
      if (!s.text.empty()) {
        s.text += " ";
        s.boundaries.insert(s.text.size());
      }
      s.text += unit;
      if (bar == std::string::npos) break;
      pos = bar + 3;
    }
    out.push_back(s);
  }
  return out;
}

struct F1 {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision() const { return tp + fp == 0 ? 1 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 1 : double(tp) / double(tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0 ? 0 : 2 * p * r / (p + r);
  }
};

inline F1 boundary_f1(const cmr::segment::EduSegmenter& seg) {
  F1 f;
  for (const auto& s : edu_corpus()) {
    std::set<std::size_t> predicted;
    for (const auto& span : seg.segment(s.text)) {
      if (span.begin != 0) predicted.insert(span.begin);
    }
    for (std::size_t b : predicted) (s.boundaries.count(b) ? f.tp : f.fp)++;
    for (std::size_t b : s.boundaries) f.fn += predicted.count(b) ? 0 : 1;
  }
  return f;
}

inline const char* kFinalPaySentence =
    "If a worker has taken more leave than they're entitled to, their employer must not take money from their final "
    "pay unless it's been agreed beforehand in writing.";

inline const char* kLoanRule =
    "7(a) loans are the most basic and most used type loan of the Small Business Administration's (SBA) business loan "
    "programs. It's name comes from section 7(a) of the Small Business Act, which authorizes the agency to provide "
    "business loans to American small businesses. The loan program is designed to assist for-profit businesses that are "
    "not able to get other financing from other resources.";

}  // namespace fixture
