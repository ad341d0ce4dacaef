#include "intentsieve/textenc.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "intentsieve/error.hpp"

namespace isv::text {

namespace {

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

/// Decode one UTF-8 scalar starting at `i`; returns its byte length.
std::size_t utf8_len(const std::string& s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len;
  if (b0 < 0x80) {
    len = 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
  } else {
    throw InvalidInput("invalid UTF-8 lead byte in text");
  }
  if (i + len > s.size()) throw InvalidInput("truncated UTF-8 sequence in text");
  for (std::size_t j = 1; j < len; ++j)
    if ((static_cast<unsigned char>(s[i + j]) & 0xC0) != 0x80)
      throw InvalidInput("invalid UTF-8 continuation byte in text");
  return len;
}

}  // namespace

const double* CharVocab::vector_of(const std::string& token) const {
  auto it = index.find(token);
  if (it == index.end()) return nullptr;
  return vectors.data() + static_cast<std::size_t>(it->second) * dim;
}

CharVocab load_char_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open character-vector file: " + path);

  CharVocab vocab;
  int dim = 0;  // learned from the header or the first entry
  std::string line;
  long line_no = 0;
  bool first_content_line = true;

  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;

    std::istringstream ls(line);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(f);

    if (first_content_line) {
      first_content_line = false;
      // Optional `count dim` header: exactly two integer fields.
      if (fields.size() == 2) {
        char* end1 = nullptr;
        char* end2 = nullptr;
        const long cnt = std::strtol(fields[0].c_str(), &end1, 10);
        const long hdim = std::strtol(fields[1].c_str(), &end2, 10);
        if (*end1 == '\0' && *end2 == '\0' && cnt >= 0 && hdim > 0) {
          dim = static_cast<int>(hdim);
          continue;
        }
      }
    }

    if (fields.size() < 2)
      throw ParseError("line " + std::to_string(line_no) + ": expected a token and its vector");

    std::string token = fields[0];
    if (token == "<space>") token = " ";

    const int got = static_cast<int>(fields.size()) - 1;
    if (dim == 0) dim = got;
    if (got != dim)
      throw DimensionMismatch("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(dim) + " vector components, got " +
                              std::to_string(got));

    std::vector<double> vec(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) {
      const std::string& f = fields[static_cast<std::size_t>(k) + 1];
      char* end = nullptr;
      vec[static_cast<std::size_t>(k)] = std::strtod(f.c_str(), &end);
      if (end == f.c_str() || *end != '\0')
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + f + "'");
    }

    auto it = vocab.index.find(token);
    if (it != vocab.index.end()) {
      warn("character-vector file " + path + " line " + std::to_string(line_no) +
           ": duplicate token, keeping the later entry");
      std::copy(vec.begin(), vec.end(),
                vocab.vectors.begin() + static_cast<std::size_t>(it->second) * dim);
    } else {
      const int row = static_cast<int>(vocab.index.size());
      vocab.index.emplace(std::move(token), row);
      vocab.vectors.insert(vocab.vectors.end(), vec.begin(), vec.end());
    }
  }

  if (dim > 0) vocab.dim = dim;
  if (!vocab.index.empty() && !vocab.has(" "))
    warn("character-vector file " + path +
         ": no space vector; spaces will encode as zero rows");
  return vocab;
}

std::vector<std::string> split_codepoints(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t len = utf8_len(text, i);
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

CharSequenceFeature encode(const std::string& text, const CharVocab& vocab, int max_chars) {
  if (max_chars <= 0) throw InvalidConfig("max_chars must be positive");
  if (is_blank(text)) throw InvalidInput("cannot encode empty text");

  const std::vector<std::string> chars = split_codepoints(text);
  const int kept = static_cast<int>(std::min<std::size_t>(chars.size(), static_cast<std::size_t>(max_chars)));
  const std::size_t first = chars.size() - static_cast<std::size_t>(kept);

  CharSequenceFeature f;
  f.rows = max_chars;
  f.cols = vocab.dim;
  f.valid_chars = kept;
  f.matrix.assign(static_cast<std::size_t>(f.rows) * f.cols, 0.0);

  const int row0 = max_chars - kept;
  for (int r = 0; r < kept; ++r) {
    const double* vec = vocab.vector_of(chars[first + static_cast<std::size_t>(r)]);
    if (vec)
      std::copy(vec, vec + vocab.dim,
                f.matrix.begin() + static_cast<std::size_t>(row0 + r) * f.cols);
    // Out-of-vocabulary characters keep their zero row.
  }
  return f;
}

CharIdVocab CharIdVocab::build(const std::vector<std::string>& texts) {
  CharIdVocab v;
  for (const std::string& t : texts) {
    for (std::string& c : split_codepoints(t)) {
      if (v.ids.emplace(c, v.size()).second) v.tokens.push_back(std::move(c));
    }
  }
  return v;
}

std::vector<int> encode_ids(const std::string& text, const CharIdVocab& vocab, int max_chars) {
  if (max_chars <= 0) throw InvalidConfig("max_chars must be positive");
  if (is_blank(text)) throw InvalidInput("cannot encode empty text");

  const std::vector<std::string> chars = split_codepoints(text);
  const int kept = static_cast<int>(std::min<std::size_t>(chars.size(), static_cast<std::size_t>(max_chars)));
  const std::size_t first = chars.size() - static_cast<std::size_t>(kept);

  std::vector<int> ids(static_cast<std::size_t>(max_chars), kPadId);
  const int row0 = max_chars - kept;
  for (int r = 0; r < kept; ++r) {
    auto it = vocab.ids.find(chars[first + static_cast<std::size_t>(r)]);
    ids[static_cast<std::size_t>(row0 + r)] = it == vocab.ids.end() ? vocab.unk_id() : it->second;
  }
  return ids;
}

}  // namespace isv::text
