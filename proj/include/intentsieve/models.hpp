#ifndef INTENTSIEVE_MODELS_HPP
#define INTENTSIEVE_MODELS_HPP

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentsieve/layers.hpp"
#include "intentsieve/rng.hpp"
#include "intentsieve/tensor.hpp"

namespace isv::model {

/// The model family: the text sieve (fci), the audio-aided disambiguator
/// (three_a), the text-only baselines, and the two single-modality ablations.
enum class ModelKind {
  Fci,               ///< char BiLSTM-Att -> MLP, 7 classes
  ThreeA,            ///< audio encoder + char BiLSTM-Att -> MLP, 6 classes
  CharCnn,           ///< text CNN -> MLP, 7 classes
  CharBiLstm,        ///< char BiLSTM (final states) -> MLP, 7 classes
  CharCnnBiLstm,     ///< text CNN ++ char BiLSTM -> MLP, 7 classes
  CharBiLstmAtt,     ///< same topology as Fci
  CharCnnBiLstmAtt,  ///< text CNN ++ char BiLSTM-Att -> MLP, 7 classes
  OnlySpeech,        ///< audio encoder -> MLP, 6 classes
  OnlyText6,         ///< Fci topology with 6 outputs
};

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
/// Output width of a kind's classifier head (6 or 7).
int model_kind_classes(ModelKind kind);
/// Whether the kind consumes the acoustic feature.
bool model_kind_uses_audio(ModelKind kind);
/// Whether the kind consumes the character feature.
bool model_kind_uses_text(ModelKind kind);

struct ModelConfig {
  int mlp_hidden = 128;  ///< classifier hidden width, 64 or 128
  double dropout = 0.3;
  int label_space = 0;  ///< 6 or 7; 0 = derive from the model kind
  int fusion_proj_dim = 128;

  int max_chars = 50;
  int char_dim = 100;  ///< pretrained vector width / embedding width
  int audio_rows = 300;
  int audio_cols = 129;

  bool trainable_embedding = false;  ///< no pretrained vectors: learn them
  int vocab_size = 0;                ///< id count (excluding UNK) when embedding

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// One batch of encoded inputs. A model reads only the fields its topology
/// needs: `text` (N, max_chars, char_dim) for pretrained-vector text input,
/// `text_ids` (N, max_chars) for the trainable-embedding fallback, `audio`
/// (N, audio_rows, audio_cols) for acoustic input.
struct Batch {
  nn::Tensor text;
  nn::Tensor text_ids;
  nn::Tensor audio;
};

/// A fully assembled classifier. All kinds share this class; the kind picks
/// which branches exist. Forward returns logits (N, K); call backward with
/// the loss gradient to accumulate parameter gradients.
class IntentModel {
 public:
  IntentModel(ModelKind kind, ModelConfig cfg, RngSeed seed);
  ~IntentModel();
  IntentModel(const IntentModel&) = delete;
  IntentModel& operator=(const IntentModel&) = delete;

  ModelKind kind() const { return kind_; }
  const ModelConfig& config() const { return cfg_; }
  int num_classes() const;

  nn::Tensor forward(const Batch& batch, nn::Mode mode);
  void backward(const nn::Tensor& dlogits);

  /// Inference-mode probabilities (N, K); rows are softmax simplex points.
  nn::Tensor predict_probs(const Batch& batch);
  /// Argmax labels with lowest-index tie-break.
  std::vector<int> predict_labels(const Batch& batch);

  std::vector<nn::Parameter*> params();
  /// Total element count of trainable parameters.
  std::int64_t parameter_count();

  /// Attention layers for instrumentation; null when the topology lacks one.
  const nn::SelfAttention* text_attention() const;
  const nn::SelfAttention* audio_attention() const;

  /// Reseed every dropout layer (used by tests to repeat a mask stream).
  void reseed_dropout(std::uint64_t seed);

  /// Mark batchnorm running statistics as trained (checkpoint load path).
  void mark_loaded();

 private:
  friend void save_model(const std::string&, IntentModel&, const nlohmann::json&);
  friend std::unique_ptr<IntentModel> load_model(const std::string&, nlohmann::json*);

  struct Impl;
  ModelKind kind_;
  ModelConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

/// Save/load a model checkpoint.
///
/// Layout: the 4 bytes "ISV1", a little-endian uint32 header length, a JSON
/// header {model_kind, config, extra, tensors: [{name, shape, offset}]}
/// (offset counts floats into the payload), then every tensor's values as
/// row-major little-endian 32-bit floats in manifest order.
///
/// `extra` rides along for callers (text codec, feature config, ...).
void save_model(const std::string& path, IntentModel& model,
                const nlohmann::json& extra = nlohmann::json::object());
/// Load a checkpoint; every manifest shape is validated against the rebuilt
/// model. When `extra` is non-null it receives the stored side data.
std::unique_ptr<IntentModel> load_model(const std::string& path, nlohmann::json* extra = nullptr);

/// Convenience wrapper matching the family list: builds an untrained model.
std::unique_ptr<IntentModel> build_model(ModelKind kind, const ModelConfig& cfg, RngSeed seed);

}  // namespace isv::model

#endif  // INTENTSIEVE_MODELS_HPP
