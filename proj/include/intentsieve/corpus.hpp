#ifndef INTENTSIEVE_CORPUS_HPP
#define INTENTSIEVE_CORPUS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "intentsieve/labels.hpp"
#include "intentsieve/rng.hpp"

namespace isv::corpus {

/// One transcript with its seven-way intention label.
struct TextExample {
  std::string text;  ///< punctuation-free, non-empty
  IntentLabel7 label = IntentLabel7::Fragment;
};

/// One recorded utterance. label6 is the audio-disambiguated intention and
/// must be present whenever label7 is IntonationDependent.
struct SpeechExample {
  std::string audio_path;
  std::string text;
  IntentLabel7 label7 = IntentLabel7::Fragment;
  std::optional<IntentLabel6> label6;
};

struct SplitSpec {
  double train_ratio = 0.9;
  RngSeed seed;
  bool stratified = true;
};

/// Text corpus: UTF-8 TSV, one `label<TAB>text` line per example. Labels
/// accept canonical names, short tags, or numeric codes, case-insensitively;
/// emission uses canonical lowercase names.
std::vector<TextExample> load_text_corpus(const std::string& path);
void save_text_corpus(const std::string& path, const std::vector<TextExample>& examples);

/// Speech manifest: JSON-lines, one {audio, text, label7, label6?} object
/// per line.
std::vector<SpeechExample> load_speech_manifest(const std::string& path);
void save_speech_manifest(const std::string& path, const std::vector<SpeechExample>& examples);

/// Deterministic train/validation split. Stratified mode keeps each class's
/// train share within one example of the requested ratio; a class with
/// fewer than two members goes wholly to train with a warning. Requires at
/// least 10 examples when stratified.
std::pair<std::vector<TextExample>, std::vector<TextExample>> split(
    const std::vector<TextExample>& examples, const SplitSpec& spec);
std::pair<std::vector<SpeechExample>, std::vector<SpeechExample>> split(
    const std::vector<SpeechExample>& examples, const SplitSpec& spec);

/// Balanced inverse-frequency weights: w_c = total / (K * count_c).
std::vector<double> class_weights(const std::vector<std::int64_t>& counts);

/// Fleiss' kappa over an (n_items, K) matrix of per-category rating counts.
/// Every row must sum to the same rater count n >= 2.
double fleiss_kappa(const std::vector<std::vector<std::int64_t>>& ratings);

/// Load a ratings matrix for fleiss_kappa: one line per item, K whitespace-
/// separated non-negative integers.
std::vector<std::vector<std::int64_t>> load_ratings(const std::string& path);

/// Modal label across annotators; std::nullopt when the top count is tied
/// (unresolved, left for manual adjudication).
std::optional<IntentLabel7> majority_vote(const std::vector<IntentLabel7>& labels);

}  // namespace isv::corpus

#endif  // INTENTSIEVE_CORPUS_HPP
