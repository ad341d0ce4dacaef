#ifndef INTENTSIEVE_TEXTENC_HPP
#define INTENTSIEVE_TEXTENC_HPP

#include <string>
#include <unordered_map>
#include <vector>

namespace isv::text {

/// Pretrained character-vector table. Tokens are UTF-8 strings (normally a
/// single Unicode scalar; the file spells the space character "<space>").
struct CharVocab {
  std::unordered_map<std::string, int> index;  ///< token → row in `vectors`
  std::vector<double> vectors;                 ///< row-major (size, dim)
  int dim = 100;

  int size() const { return static_cast<int>(index.size()); }
  bool has(const std::string& token) const { return index.count(token) != 0; }
  /// Pointer to the token's vector, or nullptr when absent.
  const double* vector_of(const std::string& token) const;
};

/// Fixed-size character-sequence feature: the last `rows` characters of a
/// transcript, one vector per row, left-padded with zero rows so
/// sentence-final characters always occupy the bottom rows.
struct CharSequenceFeature {
  int rows = 0;
  int cols = 0;
  int valid_chars = 0;         ///< trailing rows holding real characters
  std::vector<double> matrix;  ///< row-major, rows x cols

  double at(int r, int c) const { return matrix[static_cast<std::size_t>(r) * cols + c]; }
  double& at(int r, int c) { return matrix[static_cast<std::size_t>(r) * cols + c]; }
};

/// Load a character-vector file: one `token v1 ... vDim` line per entry,
/// whitespace-separated; an optional first line `count dim` is skipped.
/// Duplicate tokens keep the last occurrence (with a warning). Malformed
/// lines raise ParseError, inconsistent widths DimensionMismatch, both with
/// the offending line number.
CharVocab load_char_vectors(const std::string& path);

/// Split UTF-8 text into Unicode scalar values, each returned as the UTF-8
/// bytes of one character. Spaces are ordinary characters. Invalid UTF-8
/// raises InvalidInput.
std::vector<std::string> split_codepoints(const std::string& text);

/// Encode a transcript to (max_chars, vocab.dim): keep the last max_chars
/// characters, look each up in the vocabulary (out-of-vocabulary characters
/// get a zero row), and left-pad short texts with zero rows. Text that is
/// empty after trimming raises InvalidInput.
CharSequenceFeature encode(const std::string& text, const CharVocab& vocab, int max_chars = 50);

/// Character-to-id table for the trainable-embedding fallback used when no
/// pretrained vectors are available. Ids follow first-appearance order over
/// the corpus; unknown characters share one id (`unk_id`), one past the
/// last real id, backed by a learned row in the embedding layer.
struct CharIdVocab {
  std::unordered_map<std::string, int> ids;
  std::vector<std::string> tokens;  ///< id → token

  int size() const { return static_cast<int>(tokens.size()); }
  int unk_id() const { return size(); }

  static CharIdVocab build(const std::vector<std::string>& texts);
};

inline constexpr int kPadId = -1;

/// Encode a transcript to max_chars character ids: last max_chars
/// characters, left-padded with kPadId, unknown characters → unk_id.
std::vector<int> encode_ids(const std::string& text, const CharIdVocab& vocab, int max_chars = 50);

}  // namespace isv::text

#endif  // INTENTSIEVE_TEXTENC_HPP
