#ifndef INTENTSIEVE_PIPELINE_HPP
#define INTENTSIEVE_PIPELINE_HPP

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentsieve/cascade.hpp"
#include "intentsieve/codec.hpp"
#include "intentsieve/dsp.hpp"
#include "intentsieve/eval.hpp"
#include "intentsieve/models.hpp"
#include "intentsieve/trainer.hpp"

namespace isv::pipeline {

nlohmann::json feature_config_json(const dsp::FeatureConfig& fc);
dsp::FeatureConfig feature_config_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// train

/// `stage` selects what to train: "fci", "threeA", or "baseline:<kind>"
/// where <kind> is a model-kind name. Seven-way text models read the TSV
/// corpus; six-way models (threeA, only_speech, only_text6) read the speech
/// manifest. Without a vectors file the text branch falls back to a
/// trainable character embedding built from the training split.
struct TrainJob {
  std::string stage;
  std::string corpus_path;
  std::string manifest_path;
  std::string vectors_path;
  std::string checkpoint_out;
  dsp::FeatureConfig feature;
  model::ModelConfig model_cfg;
  TrainOptions train;
};

struct TrainJobResult {
  model::ModelKind kind = model::ModelKind::Fci;
  TrainResult stats;
  std::int64_t parameter_count = 0;
  std::string checkpoint_path;
};

TrainJobResult run_train_job(const TrainJob& job);

/// Model plus the side data its checkpoint carries.
struct LoadedModel {
  std::unique_ptr<model::IntentModel> model;
  TextCodec codec;
  dsp::FeatureConfig feature;
  bool has_feature = false;
};

LoadedModel load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// route

struct RouteJob {
  std::string fci_checkpoint;
  std::string three_a_checkpoint;
  std::string manifest_path;
  std::string predictions_out;  ///< JSONL, one line per manifest row
  std::string cost_out;         ///< CostReport JSON; empty = skip
  cascade::FallbackPolicy fallback = cascade::FallbackPolicy::Error;
  /// Include per-row stage timings in the predictions file. Off by default
  /// so prediction files are byte-stable across runs.
  bool include_timings = false;
};

struct RouteJobResult {
  cascade::CostReport cost;
  std::int64_t rows = 0;
  std::int64_t errors = 0;
  std::int64_t extractions = 0;
};

RouteJobResult run_route_job(const RouteJob& job);

// ---------------------------------------------------------------------------
// eval

/// Score a predictions file (from a route job) against the manifest's
/// six-way gold labels, matched line by line.
struct EvalJob {
  std::string predictions_path;
  std::string manifest_path;
  std::string report_out;  ///< JSON report; empty = skip
};

struct EvalJobResult {
  eval::ConfusionMatrix cm;
  eval::MetricReport report;
};

EvalJobResult run_eval_job(const EvalJob& job);

// ---------------------------------------------------------------------------
// compare

/// Run the model family on one manifest: (a) audio-only, (b) text-only
/// six-way, (c) always-multimodal, (d) the two-stage cascade; report
/// accuracy, macro F1, and timed-inference wall seconds side by side.
struct CompareJob {
  std::string manifest_path;
  std::string only_speech_checkpoint;
  std::string only_text_checkpoint;
  std::string three_a_checkpoint;
  std::string fci_checkpoint;  ///< sieve for the cascade row
  std::string report_out;      ///< JSON report; empty = skip
};

struct CompareRow {
  std::string name;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double seconds = 0.0;
  std::int64_t audio_extractions = -1;  ///< -1 = not instrumented
};

struct CompareJobResult {
  std::vector<CompareRow> rows;
};

CompareJobResult run_compare_job(const CompareJob& job);
std::string compare_table(const CompareJobResult& result);
nlohmann::json compare_json(const CompareJobResult& result);

// ---------------------------------------------------------------------------
// kappa / featurize

struct KappaResult {
  double kappa = 0.0;
  std::size_t items = 0;
  std::int64_t raters = 0;
};

KappaResult run_kappa_job(const std::string& ratings_path);

struct FeaturizeJob {
  std::vector<std::string> inputs;  ///< WAV paths
  std::string out_dir;
  dsp::FeatureConfig feature;
};

struct FeaturizeResult {
  std::vector<std::string> outputs;
  std::vector<std::string> errors;  ///< "path: message" per failed input
};

FeaturizeResult run_featurize_job(const FeaturizeJob& job);

}  // namespace isv::pipeline

#endif  // INTENTSIEVE_PIPELINE_HPP
