#include "intentsieve/cascade.hpp"

#include <chrono>

#include "intentsieve/error.hpp"
#include "intentsieve/wav.hpp"

namespace isv::cascade {

namespace {

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  return best;  // ties keep the lowest class code
}

}  // namespace

FallbackPolicy parse_fallback_policy(const std::string& name) {
  if (name == "error") return FallbackPolicy::Error;
  if (name == "second-best" || name == "second_best") return FallbackPolicy::SecondBest;
  throw InvalidInput("unknown fallback policy: " + name + " (expected error or second-best)");
}

std::string fallback_policy_name(FallbackPolicy p) {
  return p == FallbackPolicy::Error ? "error" : "second-best";
}

nlohmann::json CostReport::to_json() const {
  return {{"n_total", n_total},
          {"n_text_only", n_text_only},
          {"n_audio_aided", n_audio_aided},
          {"text_ns", text_ns},
          {"audio_ns", audio_ns}};
}

IntentLabel6 second_best(const std::vector<double>& fci_probs) {
  if (fci_probs.size() != kNumLabels7)
    throw InvalidInput("expected a 7-way probability vector");
  int best = 0;
  for (int i = 1; i < kNumLabels6; ++i)
    if (fci_probs[static_cast<std::size_t>(i)] > fci_probs[static_cast<std::size_t>(best)])
      best = i;
  return static_cast<IntentLabel6>(best);
}

IntentLabel6 apply_fallback(const std::vector<double>& fci_probs, FallbackPolicy policy) {
  if (policy == FallbackPolicy::SecondBest) return second_best(fci_probs);
  throw AudioRequired(
      "utterance routed to the audio stage but no audio is available", fci_probs);
}

Router::Router(std::unique_ptr<model::IntentModel> fci, pipeline::TextCodec fci_codec,
               std::unique_ptr<model::IntentModel> three_a, pipeline::TextCodec three_a_codec,
               dsp::FeatureConfig feature_cfg, FallbackPolicy fallback)
    : fci_(std::move(fci)),
      fci_codec_(std::move(fci_codec)),
      three_a_(std::move(three_a)),
      three_a_codec_(std::move(three_a_codec)),
      feature_cfg_(feature_cfg),
      fallback_(fallback) {
  if (!fci_ || !three_a_) throw InvalidConfig("router needs both stage models");
  if (fci_->num_classes() != kNumLabels7)
    throw InvalidConfig("first-stage model must have 7 outputs, has " +
                        std::to_string(fci_->num_classes()));
  if (three_a_->num_classes() != kNumLabels6)
    throw InvalidConfig("second-stage model must have 6 outputs, has " +
                        std::to_string(three_a_->num_classes()));
  feature_cfg_.validate();
  if (feature_cfg_.tail_frames != three_a_->config().audio_rows ||
      feature_cfg_.n_mels + 1 != three_a_->config().audio_cols)
    throw InvalidConfig("feature config shape does not match the audio-aided model input");
}

dsp::AcousticFeature Router::extract_counted(const dsp::Waveform& w) {
  ++extractions_;
  return dsp::extract_feature(w, feature_cfg_);
}

RoutedPrediction Router::route_lazy(const std::string& text,
                                    const std::function<const dsp::Waveform*()>& lazy_audio) {
  if (text.empty()) throw InvalidInput("cannot route empty text");

  RoutedPrediction out;

  const std::int64_t t0 = now_ns();
  model::Batch sieve_in;
  fci_codec_.encode_into(&sieve_in, {text});
  const nn::Tensor probs7 = fci_->predict_probs(sieve_in);
  out.fci_probs.assign(probs7.data(), probs7.data() + kNumLabels7);
  out.stage_costs.text_ns = now_ns() - t0;

  const int arg = argmax(out.fci_probs);
  if (arg != static_cast<int>(IntentLabel7::IntonationDependent)) {
    out.label = static_cast<IntentLabel6>(arg);
    out.route = Route::TextOnly;
    return out;
  }

  const dsp::Waveform* audio = lazy_audio();
  if (!audio) {
    // apply_fallback throws AudioRequired under the Error policy.
    out.label = apply_fallback(out.fci_probs, fallback_);
    out.route = Route::TextOnly;
    return out;
  }

  const std::int64_t t1 = now_ns();
  const dsp::AcousticFeature feat = extract_counted(*audio);
  model::Batch aided_in;
  three_a_codec_.encode_into(&aided_in, {text});
  aided_in.audio = pipeline::audio_batch({&feat});
  const nn::Tensor probs6 = three_a_->predict_probs(aided_in);
  out.threeA_probs.emplace(probs6.data(), probs6.data() + kNumLabels6);
  out.stage_costs.audio_ns = now_ns() - t1;

  out.label = static_cast<IntentLabel6>(argmax(*out.threeA_probs));
  out.route = Route::AudioAided;
  return out;
}

RoutedPrediction Router::route(const std::string& text, const dsp::Waveform* audio) {
  return route_lazy(text, [audio] { return audio; });
}

std::vector<Router::RowResult> Router::route_batch(const std::vector<corpus::SpeechExample>& rows,
                                                   CostReport* report) {
  std::vector<RowResult> results;
  results.reserve(rows.size());
  CostReport acc;

  for (const corpus::SpeechExample& row : rows) {
    RowResult res;
    try {
      // Only utterances the sieve routes to the audio stage pay for the
      // WAV read.
      dsp::Waveform wave;
      bool loaded = false;
      RoutedPrediction pred = route_lazy(row.text, [&]() -> const dsp::Waveform* {
        if (!loaded && !row.audio_path.empty()) {
          wave = dsp::read_wav(row.audio_path);
          loaded = true;
        }
        return loaded ? &wave : nullptr;
      });

      ++acc.n_total;
      acc.text_ns += pred.stage_costs.text_ns;
      acc.audio_ns += pred.stage_costs.audio_ns;
      if (pred.route == Route::TextOnly)
        ++acc.n_text_only;
      else
        ++acc.n_audio_aided;
      res.prediction = std::move(pred);
    } catch (const Error& e) {
      ++acc.n_total;
      res.error = e.what();
    }
    results.push_back(std::move(res));
  }

  if (report) *report = acc;
  return results;
}

}  // namespace isv::cascade
