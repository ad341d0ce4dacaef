#include "intentsieve/codec.hpp"

#include <algorithm>

#include "intentsieve/error.hpp"

namespace isv::pipeline {

nn::Tensor audio_batch(const std::vector<const dsp::AcousticFeature*>& feats) {
  if (feats.empty()) throw InvalidInput("cannot batch zero acoustic features");
  const int rows = feats[0]->rows, cols = feats[0]->cols;
  nn::Tensor t({static_cast<int>(feats.size()), rows, cols});
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const dsp::AcousticFeature* f = feats[i];
    if (f->rows != rows || f->cols != cols)
      throw DimensionMismatch("acoustic features in one batch disagree on shape");
    std::copy(f->matrix.begin(), f->matrix.end(),
              t.values().begin() + i * f->matrix.size());
  }
  return t;
}

TextCodec TextCodec::pretrained(text::CharVocab v, int max_chars) {
  TextCodec c;
  c.trainable = false;
  c.max_chars = max_chars;
  c.dim = v.dim;
  c.vectors = std::move(v);
  return c;
}

TextCodec TextCodec::embedding(text::CharIdVocab v, int dim, int max_chars) {
  TextCodec c;
  c.trainable = true;
  c.max_chars = max_chars;
  c.dim = dim;
  c.ids = std::move(v);
  return c;
}

void TextCodec::encode_into(model::Batch* batch, const std::vector<std::string>& texts) const {
  const int n = static_cast<int>(texts.size());
  if (n == 0) throw InvalidInput("cannot encode an empty text batch");

  if (trainable) {
    nn::Tensor t({n, max_chars});
    for (int r = 0; r < n; ++r) {
      const std::vector<int> row = text::encode_ids(texts[static_cast<std::size_t>(r)], ids, max_chars);
      for (int c = 0; c < max_chars; ++c)
        t[static_cast<std::int64_t>(r) * max_chars + c] = row[static_cast<std::size_t>(c)];
    }
    batch->text_ids = std::move(t);
  } else {
    nn::Tensor t({n, max_chars, dim});
    for (int r = 0; r < n; ++r) {
      const text::CharSequenceFeature f =
          text::encode(texts[static_cast<std::size_t>(r)], vectors, max_chars);
      std::copy(f.matrix.begin(), f.matrix.end(),
                t.values().begin() + static_cast<std::size_t>(r) * f.matrix.size());
    }
    batch->text = std::move(t);
  }
}

nlohmann::json TextCodec::to_json() const {
  nlohmann::json j = {{"max_chars", max_chars}, {"dim", dim}};
  if (trainable) {
    j["type"] = "embedding";
    j["tokens"] = ids.tokens;
  } else {
    j["type"] = "pretrained";
    // Tokens in row order so the table reconstructs exactly.
    std::vector<std::string> tokens(static_cast<std::size_t>(vectors.size()));
    for (const auto& [tok, row] : vectors.index) tokens[static_cast<std::size_t>(row)] = tok;
    j["tokens"] = tokens;
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < vectors.size(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      const double* v = vectors.vectors.data() + static_cast<std::size_t>(r) * vectors.dim;
      for (int c = 0; c < vectors.dim; ++c) row.push_back(v[c]);
      rows.push_back(std::move(row));
    }
    j["vectors"] = std::move(rows);
  }
  return j;
}

TextCodec TextCodec::from_json(const nlohmann::json& j) {
  TextCodec c;
  c.max_chars = j.at("max_chars").get<int>();
  c.dim = j.at("dim").get<int>();
  const std::string type = j.at("type").get<std::string>();
  if (type == "embedding") {
    c.trainable = true;
    const auto tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const std::string& t : tokens) {
      c.ids.ids.emplace(t, c.ids.size());
      c.ids.tokens.push_back(t);
    }
  } else if (type == "pretrained") {
    c.trainable = false;
    const auto tokens = j.at("tokens").get<std::vector<std::string>>();
    const auto& rows = j.at("vectors");
    if (rows.size() != tokens.size())
      throw ParseError("text codec: token/vector count mismatch");
    c.vectors.dim = c.dim;
    for (std::size_t r = 0; r < tokens.size(); ++r) {
      const auto row = rows[r].get<std::vector<double>>();
      if (static_cast<int>(row.size()) != c.dim)
        throw DimensionMismatch("text codec: vector row width mismatch");
      c.vectors.index.emplace(tokens[r], static_cast<int>(r));
      c.vectors.vectors.insert(c.vectors.vectors.end(), row.begin(), row.end());
    }
  } else {
    throw ParseError("unknown text codec type: " + type);
  }
  return c;
}

}  // namespace isv::pipeline
