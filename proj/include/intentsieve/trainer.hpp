#ifndef INTENTSIEVE_TRAINER_HPP
#define INTENTSIEVE_TRAINER_HPP

#include <optional>
#include <string>
#include <vector>

#include "intentsieve/codec.hpp"
#include "intentsieve/corpus.hpp"
#include "intentsieve/dsp.hpp"
#include "intentsieve/models.hpp"
#include "intentsieve/rng.hpp"

namespace isv::pipeline {

struct TrainOptions {
  int epochs = 200;
  int batch_size = 16;
  double lr = 5e-4;
  RngSeed seed;
  double train_ratio = 0.9;
  bool stratified = true;
  /// Stop once inference-mode accuracy on the training split reaches this
  /// threshold (checked after each epoch); 0 disables the check.
  double early_stop_train_acc = 0.0;
  /// Per-epoch JSONL log ({epoch, loss, val_accuracy, val_macro_f1}).
  std::string log_path;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double val_accuracy = 0.0;
  double val_macro_f1 = 0.0;
  std::optional<double> train_accuracy;  ///< set when early stopping is active
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  int epochs_run = 0;
  double final_train_accuracy = 0.0;  ///< inference-mode, training split
  double final_val_accuracy = 0.0;
  double final_val_macro_f1 = 0.0;
  std::vector<std::int64_t> train_class_counts;
};

/// One training example after encoding-independent preparation. `audio` is
/// null for text-only models; `label` lives in the model's label space.
struct TrainItem {
  std::string text;
  const dsp::AcousticFeature* audio = nullptr;
  int label = 0;
};

/// Core loop shared by every model kind: stratified split upstream, batches
/// of `batch_size` (a trailing singleton batch is merged into its
/// predecessor for audio models, whose batchnorm needs batch > 1), weighted
/// cross entropy from the training split's class counts, Adam updates, and
/// per-epoch validation scoring.
TrainResult train_model(model::IntentModel& m, const TextCodec& codec,
                        const std::vector<TrainItem>& train_items,
                        const std::vector<TrainItem>& val_items, const TrainOptions& opts);

/// Inference-mode predictions over prepared items, batched.
std::vector<int> predict_items(model::IntentModel& m, const TextCodec& codec,
                               const std::vector<TrainItem>& items, int batch_size = 16);

/// Extract (and cache) acoustic features for every manifest row.
std::vector<dsp::AcousticFeature> featurize_rows(const std::vector<corpus::SpeechExample>& rows,
                                                 const dsp::FeatureConfig& fc);

}  // namespace isv::pipeline

#endif  // INTENTSIEVE_TRAINER_HPP
