#include "intentsieve/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "intentsieve/error.hpp"
#include "intentsieve/layers.hpp"
#include "intentsieve/optim.hpp"
#include "intentsieve/wav.hpp"

namespace isv::pipeline {

namespace {

/// Assemble one encoded batch from item indices.
model::Batch make_batch(const TextCodec& codec, const std::vector<TrainItem>& items,
                        const std::vector<std::size_t>& idx, bool needs_text, bool needs_audio,
                        std::vector<int>* labels) {
  model::Batch b;
  if (needs_text) {
    std::vector<std::string> texts;
    texts.reserve(idx.size());
    for (std::size_t i : idx) texts.push_back(items[i].text);
    codec.encode_into(&b, texts);
  }
  if (needs_audio) {
    std::vector<const dsp::AcousticFeature*> feats;
    feats.reserve(idx.size());
    for (std::size_t i : idx) {
      if (!items[i].audio)
        throw InvalidInput("model needs audio but item has no acoustic feature");
      feats.push_back(items[i].audio);
    }
    b.audio = audio_batch(feats);
  }
  if (labels) {
    labels->clear();
    for (std::size_t i : idx) labels->push_back(items[i].label);
  }
  return b;
}

double accuracy_of(const std::vector<int>& preds, const std::vector<TrainItem>& items) {
  if (items.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (preds[i] == items[i].label) ++hit;
  return static_cast<double>(hit) / static_cast<double>(items.size());
}

double macro_f1_of(const std::vector<int>& preds, const std::vector<TrainItem>& items, int k) {
  if (items.empty()) return 0.0;
  std::vector<int> answers;
  answers.reserve(items.size());
  for (const TrainItem& it : items) answers.push_back(it.label);
  // Inline scoring to avoid pulling the eval module into the train loop.
  std::vector<std::int64_t> diag(static_cast<std::size_t>(k), 0),
      col(static_cast<std::size_t>(k), 0), row(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = static_cast<std::size_t>(preds[i]);
    const auto a = static_cast<std::size_t>(answers[i]);
    ++row[p];
    ++col[a];
    if (p == a) ++diag[p];
  }
  double sum = 0.0;
  int classes = 0;
  for (int c = 0; c < k; ++c) {
    const auto cs = static_cast<std::size_t>(c);
    if (col[cs] == 0) continue;
    const double rec = static_cast<double>(diag[cs]) / static_cast<double>(col[cs]);
    const double pre =
        row[cs] > 0 ? static_cast<double>(diag[cs]) / static_cast<double>(row[cs]) : 0.0;
    sum += (pre + rec) > 0.0 ? 2.0 * pre * rec / (pre + rec) : 0.0;
    ++classes;
  }
  return classes > 0 ? sum / classes : 0.0;
}

}  // namespace

std::vector<int> predict_items(model::IntentModel& m, const TextCodec& codec,
                               const std::vector<TrainItem>& items, int batch_size) {
  const bool needs_text = model::model_kind_uses_text(m.kind());
  const bool needs_audio = model::model_kind_uses_audio(m.kind());
  std::vector<int> preds;
  preds.reserve(items.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < items.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(items.size(), start + static_cast<std::size_t>(batch_size));
    idx.clear();
    for (std::size_t i = start; i < end; ++i) idx.push_back(i);
    model::Batch b = make_batch(codec, items, idx, needs_text, needs_audio, nullptr);
    for (int p : m.predict_labels(b)) preds.push_back(p);
  }
  return preds;
}

TrainResult train_model(model::IntentModel& m, const TextCodec& codec,
                        const std::vector<TrainItem>& train_items,
                        const std::vector<TrainItem>& val_items, const TrainOptions& opts) {
  if (train_items.empty()) throw InvalidInput("empty training set");
  if (opts.epochs <= 0) throw InvalidConfig("epochs must be positive");
  if (opts.batch_size <= 0) throw InvalidConfig("batch_size must be positive");

  const int k = m.num_classes();
  const bool needs_text = model::model_kind_uses_text(m.kind());
  const bool needs_audio = model::model_kind_uses_audio(m.kind());

  // Class weights from the training split; an unrepresented class aborts.
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
  for (const TrainItem& it : train_items) {
    if (it.label < 0 || it.label >= k)
      throw InvalidInput("training label out of range: " + std::to_string(it.label));
    ++counts[static_cast<std::size_t>(it.label)];
  }
  for (int c = 0; c < k; ++c)
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw InvalidInput("class " + std::to_string(c) +
                         " has no training examples after the split; aborting");

  nn::WeightedCrossEntropy loss_fn(corpus::class_weights(counts));
  nn::Adam adam(m.params(), nn::AdamConfig{opts.lr, 0.9, 0.999, 1e-8});

  std::ofstream log;
  if (!opts.log_path.empty()) {
    log.open(opts.log_path, std::ios::trunc);
    if (!log) throw IoError("cannot open training log: " + opts.log_path);
  }

  TrainResult result;
  result.train_class_counts = counts;

  std::vector<std::size_t> order(train_items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(opts.seed.value, 0xE000 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    // Batch boundaries; a trailing singleton joins the previous batch when
    // the model contains batchnorm (train mode needs batch > 1).
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opts.batch_size))
      batches.emplace_back(start,
                           std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size)));
    if (needs_audio && batches.size() >= 2) {
      auto& last = batches.back();
      if (last.second - last.first == 1) {
        batches[batches.size() - 2].second = last.second;
        batches.pop_back();
      }
    }
    if (needs_audio && batches.size() == 1 && batches[0].second - batches[0].first == 1)
      throw InvalidInput("audio models need more than one training example");

    double loss_sum = 0.0;
    std::vector<std::size_t> idx;
    std::vector<int> labels;
    for (const auto& [bs, be] : batches) {
      idx.assign(order.begin() + static_cast<std::ptrdiff_t>(bs),
                 order.begin() + static_cast<std::ptrdiff_t>(be));
      model::Batch batch = make_batch(codec, train_items, idx, needs_text, needs_audio, &labels);

      adam.zero_grad();
      const nn::Tensor logits = m.forward(batch, nn::Mode::Train);
      if (!logits.all_finite())
        throw TrainingDiverged("non-finite logits at epoch " + std::to_string(epoch));
      const double loss = loss_fn.forward(logits, labels);
      if (!std::isfinite(loss))
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += loss * static_cast<double>(idx.size());
      m.backward(loss_fn.backward());
      adam.step();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / static_cast<double>(train_items.size());

    if (!val_items.empty()) {
      const std::vector<int> val_preds = predict_items(m, codec, val_items, opts.batch_size);
      stats.val_accuracy = accuracy_of(val_preds, val_items);
      stats.val_macro_f1 = macro_f1_of(val_preds, val_items, k);
    }

    bool stop = false;
    if (opts.early_stop_train_acc > 0.0) {
      const std::vector<int> train_preds = predict_items(m, codec, train_items, opts.batch_size);
      stats.train_accuracy = accuracy_of(train_preds, train_items);
      stop = *stats.train_accuracy >= opts.early_stop_train_acc;
    }

    if (log.is_open()) {
      nlohmann::json j = {{"epoch", stats.epoch},
                          {"loss", stats.loss},
                          {"val_accuracy", stats.val_accuracy},
                          {"val_macro_f1", stats.val_macro_f1}};
      if (stats.train_accuracy) j["train_accuracy"] = *stats.train_accuracy;
      log << j.dump() << '\n';
    }

    result.epochs.push_back(stats);
    result.epochs_run = epoch;
    result.final_val_accuracy = stats.val_accuracy;
    result.final_val_macro_f1 = stats.val_macro_f1;
    if (stop) break;
  }

  {
    const std::vector<int> train_preds = predict_items(m, codec, train_items, opts.batch_size);
    result.final_train_accuracy = accuracy_of(train_preds, train_items);
  }
  return result;
}

std::vector<dsp::AcousticFeature> featurize_rows(const std::vector<corpus::SpeechExample>& rows,
                                                 const dsp::FeatureConfig& fc) {
  std::vector<dsp::AcousticFeature> feats;
  feats.reserve(rows.size());
  for (const corpus::SpeechExample& row : rows) {
    if (row.audio_path.empty())
      throw InvalidInput("manifest row for '" + row.text + "' has no audio path");
    feats.push_back(dsp::extract_feature(dsp::read_wav(row.audio_path), fc));
  }
  return feats;
}

}  // namespace isv::pipeline
