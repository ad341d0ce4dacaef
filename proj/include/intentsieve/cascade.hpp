#ifndef INTENTSIEVE_CASCADE_HPP
#define INTENTSIEVE_CASCADE_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentsieve/codec.hpp"
#include "intentsieve/corpus.hpp"
#include "intentsieve/dsp.hpp"
#include "intentsieve/labels.hpp"
#include "intentsieve/models.hpp"

namespace isv::cascade {

enum class Route { TextOnly, AudioAided };

/// What to do when the sieve routes an utterance to the audio stage but no
/// audio is available: raise AudioRequired, or fall back to the sieve's best
/// non-intonation-dependent class.
enum class FallbackPolicy { Error, SecondBest };

FallbackPolicy parse_fallback_policy(const std::string& name);
std::string fallback_policy_name(FallbackPolicy p);

struct StageCosts {
  std::int64_t text_ns = 0;
  std::int64_t audio_ns = 0;
};

struct RoutedPrediction {
  IntentLabel6 label = IntentLabel6::Fragment;
  Route route = Route::TextOnly;
  std::vector<double> fci_probs;                     ///< 7-way sieve output
  std::optional<std::vector<double>> threeA_probs;   ///< present iff AudioAided
  StageCosts stage_costs;
};

/// Aggregate accounting over a routed stream. Serializes as
/// {n_total, n_text_only, n_audio_aided, text_ns, audio_ns}.
struct CostReport {
  std::int64_t n_total = 0;
  std::int64_t n_text_only = 0;
  std::int64_t n_audio_aided = 0;
  std::int64_t text_ns = 0;
  std::int64_t audio_ns = 0;

  nlohmann::json to_json() const;
};

/// The sieve's best class outside IntonationDependent (ties break toward
/// the lower class code). Input must be a 7-way probability vector.
IntentLabel6 second_best(const std::vector<double>& fci_probs);
/// Apply a fallback policy: Error raises AudioRequired carrying the probs.
IntentLabel6 apply_fallback(const std::vector<double>& fci_probs, FallbackPolicy policy);

/// Two-stage router: the text sieve classifies every utterance; only those
/// it routes to IntonationDependent touch the acoustic pipeline (WAV read,
/// feature extraction, audio-aided model). Stateless across calls except
/// for the instrumentation counter.
class Router {
 public:
  Router(std::unique_ptr<model::IntentModel> fci, pipeline::TextCodec fci_codec,
         std::unique_ptr<model::IntentModel> three_a, pipeline::TextCodec three_a_codec,
         dsp::FeatureConfig feature_cfg, FallbackPolicy fallback);

  /// Route one utterance. `audio` may be null; it is only touched when the
  /// sieve routes to the audio stage.
  RoutedPrediction route(const std::string& text, const dsp::Waveform* audio);

  struct RowResult {
    std::optional<RoutedPrediction> prediction;  ///< empty on error
    std::string error;                           ///< empty on success
  };

  /// Route a manifest; audio files are opened lazily, per-row failures are
  /// recorded and the batch continues. Results align with the input rows.
  std::vector<RowResult> route_batch(const std::vector<corpus::SpeechExample>& rows,
                                     CostReport* report);

  /// How many acoustic feature extractions have run (the sieve-bypass
  /// instrumentation counter).
  std::int64_t audio_extraction_count() const { return extractions_; }

  const dsp::FeatureConfig& feature_config() const { return feature_cfg_; }
  model::IntentModel& fci_model() { return *fci_; }
  model::IntentModel& three_a_model() { return *three_a_; }

 private:
  dsp::AcousticFeature extract_counted(const dsp::Waveform& w);
  RoutedPrediction route_lazy(const std::string& text,
                              const std::function<const dsp::Waveform*()>& lazy_audio);

  std::unique_ptr<model::IntentModel> fci_;
  pipeline::TextCodec fci_codec_;
  std::unique_ptr<model::IntentModel> three_a_;
  pipeline::TextCodec three_a_codec_;
  dsp::FeatureConfig feature_cfg_;
  FallbackPolicy fallback_;
  std::int64_t extractions_ = 0;
};

}  // namespace isv::cascade

#endif  // INTENTSIEVE_CASCADE_HPP
