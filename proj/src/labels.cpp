#include "intentsieve/labels.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "intentsieve/error.hpp"

namespace isv {

namespace {

constexpr std::array<const char*, 7> kNames = {
    "fragment",           "statement",          "question",           "command",
    "rhetorical_question", "rhetorical_command", "intonation_dependent"};

std::string normalize(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u == '-' || u == ' ') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  return out;
}

int parse_code(const std::string& raw, int limit) {
  const std::string s = normalize(raw);
  if (!s.empty() && std::all_of(s.begin(), s.end(),
                                [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    if (s.size() <= 2) {
      const int code = std::stoi(s);
      if (code < limit) return code;
    }
    throw UnknownLabel("label code out of range: " + raw);
  }
  static const std::array<const char*, 7> kShort = {"fr", "s", "q", "c", "rq", "rc", "iu"};
  for (int i = 0; i < limit; ++i) {
    if (s == kShort[static_cast<std::size_t>(i)] || s == kNames[static_cast<std::size_t>(i)])
      return i;
  }
  // Common spelled-out variants.
  if (s == "rhetoricalquestion" && limit > 4) return 4;
  if (s == "rhetoricalcommand" && limit > 5) return 5;
  if ((s == "intodepu" || s == "intonation_dependent_utterance") && limit > 6) return 6;
  throw UnknownLabel("unknown label: " + raw);
}

}  // namespace

std::string label7_name(IntentLabel7 l) {
  const int i = static_cast<int>(l);
  if (i < 0 || i >= kNumLabels7) throw InvalidInput("label code out of range");
  return kNames[static_cast<std::size_t>(i)];
}

std::string label6_name(IntentLabel6 l) {
  const int i = static_cast<int>(l);
  if (i < 0 || i >= kNumLabels6) throw InvalidInput("label code out of range");
  return kNames[static_cast<std::size_t>(i)];
}

IntentLabel7 parse_label7(const std::string& s) {
  return static_cast<IntentLabel7>(parse_code(s, kNumLabels7));
}

IntentLabel6 parse_label6(const std::string& s) {
  return static_cast<IntentLabel6>(parse_code(s, kNumLabels6));
}

IntentLabel6 to_label6(IntentLabel7 l) {
  if (l == IntentLabel7::IntonationDependent)
    throw InvalidInput("intonation-dependent label has no six-way equivalent");
  return static_cast<IntentLabel6>(static_cast<int>(l));
}

}  // namespace isv
