#include "intentsieve/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "intentsieve/error.hpp"

namespace isv::corpus {

namespace {

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

/// Indices 0..n-1 grouped by class, preserving input order inside groups.
template <typename T, typename LabelOf>
std::map<int, std::vector<std::size_t>> group_by_class(const std::vector<T>& examples,
                                                       LabelOf label_of) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i)
    groups[label_of(examples[i])].push_back(i);
  return groups;
}

template <typename T, typename LabelOf>
std::pair<std::vector<T>, std::vector<T>> split_impl(const std::vector<T>& examples,
                                                     const SplitSpec& spec, LabelOf label_of) {
  if (!(spec.train_ratio > 0.0 && spec.train_ratio < 1.0))
    throw InvalidConfig("train_ratio must lie strictly between 0 and 1");
  if (examples.empty()) throw InvalidInput("cannot split an empty corpus");

  std::vector<std::size_t> train_idx, val_idx;

  if (spec.stratified) {
    if (examples.size() < 10)
      throw InvalidInput("stratified split needs at least 10 examples, got " +
                         std::to_string(examples.size()));
    auto groups = group_by_class(examples, label_of);
    for (auto& [cls, idx] : groups) {
      if (idx.size() < 2) {
        warn("class " + std::to_string(cls) +
             " has fewer than 2 examples; placing all of them in the training split");
        train_idx.insert(train_idx.end(), idx.begin(), idx.end());
        continue;
      }
      Rng rng(Rng::derive(spec.seed.value, 1000 + static_cast<std::uint64_t>(cls)));
      rng.shuffle(idx);
      auto n_train = static_cast<std::size_t>(
          std::llround(spec.train_ratio * static_cast<double>(idx.size())));
      n_train = std::min(n_train, idx.size());
      train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
      val_idx.insert(val_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
  } else {
    std::vector<std::size_t> idx(examples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(Rng::derive(spec.seed.value, 1000));
    rng.shuffle(idx);
    auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_ratio * static_cast<double>(idx.size())));
    n_train = std::min(n_train, idx.size());
    train_idx.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    val_idx.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }

  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(train_idx.size());
  out.second.reserve(val_idx.size());
  for (std::size_t i : train_idx) out.first.push_back(examples[i]);
  for (std::size_t i : val_idx) out.second.push_back(examples[i]);
  return out;
}

}  // namespace

std::vector<TextExample> load_text_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open text corpus: " + path);

  std::vector<TextExample> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("text corpus " + path + " line " + std::to_string(line_no) +
                       ": expected `label<TAB>text`");
    const std::string label_str = line.substr(0, tab);
    std::string text = line.substr(tab + 1);
    if (is_blank(text))
      throw ParseError("text corpus " + path + " line " + std::to_string(line_no) +
                       ": empty text");
    TextExample ex;
    try {
      ex.label = parse_label7(label_str);
    } catch (const UnknownLabel& e) {
      throw UnknownLabel(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
    ex.text = std::move(text);
    out.push_back(std::move(ex));
  }
  return out;
}

void save_text_corpus(const std::string& path, const std::vector<TextExample>& examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const TextExample& ex : examples)
    out << label7_name(ex.label) << '\t' << ex.text << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::vector<SpeechExample> load_speech_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open speech manifest: " + path);

  std::vector<SpeechExample> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("speech manifest " + path + " line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    auto label_str = [&](const nlohmann::json& v) -> std::string {
      if (v.is_number_integer()) return std::to_string(v.get<int>());
      return v.get<std::string>();
    };
    SpeechExample ex;
    try {
      ex.audio_path = j.at("audio").get<std::string>();
      ex.text = j.at("text").get<std::string>();
      ex.label7 = parse_label7(label_str(j.at("label7")));
      if (j.contains("label6")) ex.label6 = parse_label6(label_str(j.at("label6")));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("speech manifest " + path + " line " + std::to_string(line_no) + ": " +
                       e.what());
    } catch (const UnknownLabel& e) {
      throw UnknownLabel(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
    if (is_blank(ex.text))
      throw ParseError("speech manifest " + path + " line " + std::to_string(line_no) +
                       ": empty text");
    if (ex.label7 == IntentLabel7::IntonationDependent && !ex.label6)
      throw ParseError("speech manifest " + path + " line " + std::to_string(line_no) +
                       ": intonation-dependent rows need label6");
    out.push_back(std::move(ex));
  }
  return out;
}

void save_speech_manifest(const std::string& path, const std::vector<SpeechExample>& examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const SpeechExample& ex : examples) {
    nlohmann::json j = {
        {"audio", ex.audio_path}, {"text", ex.text}, {"label7", label7_name(ex.label7)}};
    if (ex.label6) j["label6"] = label6_name(*ex.label6);
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::pair<std::vector<TextExample>, std::vector<TextExample>> split(
    const std::vector<TextExample>& examples, const SplitSpec& spec) {
  return split_impl(examples, spec,
                    [](const TextExample& e) { return static_cast<int>(e.label); });
}

std::pair<std::vector<SpeechExample>, std::vector<SpeechExample>> split(
    const std::vector<SpeechExample>& examples, const SplitSpec& spec) {
  return split_impl(examples, spec,
                    [](const SpeechExample& e) { return static_cast<int>(e.label7); });
}

std::vector<double> class_weights(const std::vector<std::int64_t>& counts) {
  if (counts.empty()) throw InvalidInput("empty class-count vector");
  std::int64_t total = 0;
  for (std::int64_t c : counts) {
    if (c <= 0) throw InvalidInput("class weights need every class count > 0");
    total += c;
  }
  const auto k = static_cast<double>(counts.size());
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    w[i] = static_cast<double>(total) / (k * static_cast<double>(counts[i]));
  return w;
}

double fleiss_kappa(const std::vector<std::vector<std::int64_t>>& ratings) {
  if (ratings.empty()) throw InvalidInput("empty ratings matrix");
  const std::size_t k = ratings[0].size();
  if (k == 0) throw InvalidInput("ratings matrix has no categories");

  std::int64_t n_raters = -1;
  for (const auto& row : ratings) {
    if (row.size() != k) throw InvalidInput("ragged ratings matrix");
    std::int64_t sum = 0;
    for (std::int64_t v : row) {
      if (v < 0) throw InvalidInput("negative rating count");
      sum += v;
    }
    if (n_raters == -1) n_raters = sum;
    if (sum != n_raters)
      throw InvalidInput("inconsistent rater count per item: " + std::to_string(sum) + " vs " +
                         std::to_string(n_raters));
  }
  if (n_raters < 2) throw InvalidInput("fleiss kappa needs at least 2 raters per item");

  const auto n_items = static_cast<double>(ratings.size());
  const auto n = static_cast<double>(n_raters);

  double pbar = 0.0;
  std::vector<double> pj(k, 0.0);
  for (const auto& row : ratings) {
    double sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      sq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
      pj[j] += static_cast<double>(row[j]);
    }
    pbar += (sq - n) / (n * (n - 1.0));
  }
  pbar /= n_items;
  double pe = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    pj[j] /= n_items * n;
    pe += pj[j] * pj[j];
  }

  if (pe >= 1.0) {
    if (pbar >= 1.0) return 1.0;  // every rating in one category = full agreement
    throw InvalidInput("degenerate ratings: chance agreement is 1 but observed agreement is not");
  }
  return (pbar - pe) / (1.0 - pe);
}

std::vector<std::vector<std::int64_t>> load_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ratings file: " + path);
  std::vector<std::vector<std::int64_t>> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    std::istringstream ls(line);
    std::vector<std::int64_t> row;
    long long v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof())
      throw ParseError("ratings file " + path + " line " + std::to_string(line_no) +
                       ": expected whitespace-separated integers");
    out.push_back(std::move(row));
  }
  return out;
}

std::optional<IntentLabel7> majority_vote(const std::vector<IntentLabel7>& labels) {
  if (labels.empty()) throw InvalidInput("majority vote needs at least one annotator");
  std::array<int, kNumLabels7> counts{};
  for (IntentLabel7 l : labels) ++counts[static_cast<std::size_t>(static_cast<int>(l))];
  int best = 0;
  for (int i = 1; i < kNumLabels7; ++i)
    if (counts[static_cast<std::size_t>(i)] > counts[static_cast<std::size_t>(best)]) best = i;
  const int top = counts[static_cast<std::size_t>(best)];
  int ties = 0;
  for (int c : counts)
    if (c == top) ++ties;
  if (ties > 1) return std::nullopt;
  return static_cast<IntentLabel7>(best);
}

}  // namespace isv::corpus
