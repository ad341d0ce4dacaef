#ifndef INTENTSIEVE_LABELS_HPP
#define INTENTSIEVE_LABELS_HPP

#include <string>

namespace isv {

/// Seven-way intention label used by the text-only sieve. The first six
/// values double as the audio-aided six-way label space; the seventh marks
/// utterances whose intention cannot be resolved from text alone.
enum class IntentLabel7 : int {
  Fragment = 0,
  Statement = 1,
  Question = 2,
  Command = 3,
  RhetoricalQuestion = 4,
  RhetoricalCommand = 5,
  IntonationDependent = 6,
};

/// Six-way label space of the audio-aided disambiguator.
enum class IntentLabel6 : int {
  Fragment = 0,
  Statement = 1,
  Question = 2,
  Command = 3,
  RhetoricalQuestion = 4,
  RhetoricalCommand = 5,
};

inline constexpr int kNumLabels7 = 7;
inline constexpr int kNumLabels6 = 6;

/// Canonical lowercase name ("fragment", ..., "intonation_dependent").
std::string label7_name(IntentLabel7 l);
std::string label6_name(IntentLabel6 l);

/// Parse a label from a numeric code ("0".."6"), a short tag ("fr", "s",
/// "q", "c", "rq", "rc", "iu"), or a full name, case-insensitively.
/// Throws UnknownLabel on anything else.
IntentLabel7 parse_label7(const std::string& s);
IntentLabel6 parse_label6(const std::string& s);

/// Narrow a seven-way label to the six-way space.
/// Throws InvalidInput for IntonationDependent.
IntentLabel6 to_label6(IntentLabel7 l);

inline IntentLabel7 to_label7(IntentLabel6 l) {
  return static_cast<IntentLabel7>(static_cast<int>(l));
}

}  // namespace isv

#endif  // INTENTSIEVE_LABELS_HPP
