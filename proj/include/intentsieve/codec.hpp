#ifndef INTENTSIEVE_CODEC_HPP
#define INTENTSIEVE_CODEC_HPP

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentsieve/dsp.hpp"
#include "intentsieve/models.hpp"
#include "intentsieve/textenc.hpp"

namespace isv::pipeline {

/// Stack acoustic features into a (N, rows, cols) batch tensor.
nn::Tensor audio_batch(const std::vector<const dsp::AcousticFeature*>& feats);

/// How a model turns transcripts into its text input: either rows from a
/// pretrained character-vector table, or integer ids for a trainable
/// embedding. The codec is stored inside the model checkpoint so a loaded
/// model encodes new text exactly as it did in training.
struct TextCodec {
  bool trainable = false;
  int max_chars = 50;
  int dim = 100;  ///< vector width (pretrained) or embedding width
  text::CharVocab vectors;
  text::CharIdVocab ids;

  static TextCodec pretrained(text::CharVocab v, int max_chars = 50);
  static TextCodec embedding(text::CharIdVocab v, int dim, int max_chars = 50);

  /// Encode transcripts into the batch field this codec feeds (`text` for
  /// pretrained vectors, `text_ids` for the embedding fallback).
  void encode_into(model::Batch* batch, const std::vector<std::string>& texts) const;

  nlohmann::json to_json() const;
  static TextCodec from_json(const nlohmann::json& j);
};

}  // namespace isv::pipeline

#endif  // INTENTSIEVE_CODEC_HPP
