#include "intentsieve/eval.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "intentsieve/error.hpp"

namespace isv::eval {

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), static_cast<std::int64_t>(0));
}

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& answers, int k,
                          std::vector<std::string> label_names) {
  if (k <= 0) throw InvalidInput("confusion matrix needs k > 0 classes");
  if (preds.size() != answers.size())
    throw InvalidInput("prediction/answer length mismatch: " + std::to_string(preds.size()) +
                       " vs " + std::to_string(answers.size()));
  ConfusionMatrix cm;
  cm.k = k;
  cm.counts.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0);
  if (label_names.empty()) {
    for (int i = 0; i < k; ++i) label_names.push_back("c" + std::to_string(i));
  }
  if (static_cast<int>(label_names.size()) != k)
    throw InvalidInput("label_names size does not match class count");
  cm.label_names = std::move(label_names);

  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], a = answers[i];
    if (p < 0 || p >= k || a < 0 || a >= k)
      throw InvalidInput("label out of range at item " + std::to_string(i));
    ++cm.at(p, a);
  }
  return cm;
}

MetricReport metrics(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (cm.k <= 0 || total == 0) throw InvalidInput("cannot score an empty confusion matrix");

  MetricReport r;
  std::int64_t trace = 0;
  for (int i = 0; i < cm.k; ++i) trace += cm.at(i, i);
  r.accuracy = static_cast<double>(trace) / static_cast<double>(total);

  r.per_class_recall.assign(static_cast<std::size_t>(cm.k), 0.0);
  r.per_class_precision.assign(static_cast<std::size_t>(cm.k), 0.0);
  r.per_class_f1.assign(static_cast<std::size_t>(cm.k), 0.0);

  double f1_sum = 0.0;
  int f1_classes = 0;
  for (int c = 0; c < cm.k; ++c) {
    std::int64_t col = 0, row = 0;
    for (int i = 0; i < cm.k; ++i) {
      col += cm.at(i, c);
      row += cm.at(c, i);
    }
    const auto cs = static_cast<std::size_t>(c);
    const double diag = static_cast<double>(cm.at(c, c));
    if (col == 0) {
      warn("class " + cm.label_names[cs] +
           " never appears as an answer; excluded from the macro average");
    } else {
      r.per_class_recall[cs] = diag / static_cast<double>(col);
    }
    if (row == 0) {
      if (col != 0)
        warn("class " + cm.label_names[cs] + " is never predicted; precision reported as 0");
    } else {
      r.per_class_precision[cs] = diag / static_cast<double>(row);
    }
    if (col != 0) {
      const double p = r.per_class_precision[cs], rec = r.per_class_recall[cs];
      r.per_class_f1[cs] = (p + rec) > 0.0 ? 2.0 * p * rec / (p + rec) : 0.0;
      f1_sum += r.per_class_f1[cs];
      ++f1_classes;
    }
  }
  r.macro_f1 = f1_classes > 0 ? f1_sum / f1_classes : 0.0;
  return r;
}

nlohmann::json report_json(const ConfusionMatrix& cm, const MetricReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (int p = 0; p < cm.k; ++p) {
    nlohmann::json row = nlohmann::json::array();
    for (int a = 0; a < cm.k; ++a) row.push_back(cm.at(p, a));
    rows.push_back(std::move(row));
  }
  nlohmann::json per_class = nlohmann::json::array();
  for (int c = 0; c < cm.k; ++c) {
    const auto cs = static_cast<std::size_t>(c);
    per_class.push_back({{"label", cm.label_names[cs]},
                         {"recall", r.per_class_recall[cs]},
                         {"precision", r.per_class_precision[cs]},
                         {"f1", r.per_class_f1[cs]}});
  }
  return {{"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},
          {"total", cm.total()},
          {"orientation", "rows=predicted, columns=answer"},
          {"labels", cm.label_names},
          {"per_class", per_class},
          {"confusion", rows}};
}

std::string report_table(const ConfusionMatrix& cm, const MetricReport& r) {
  std::size_t name_w = 8;
  for (const std::string& n : cm.label_names) name_w = std::max(name_w, n.size());
  std::size_t cell_w = 6;
  for (std::int64_t v : cm.counts)
    cell_w = std::max(cell_w, std::to_string(v).size() + 1);
  for (const std::string& n : cm.label_names) cell_w = std::max(cell_w, n.size() + 1);

  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w + 2)) << "pred \\ ans";
  for (const std::string& n : cm.label_names)
    os << std::right << std::setw(static_cast<int>(cell_w)) << n;
  os << '\n';
  for (int p = 0; p < cm.k; ++p) {
    os << std::left << std::setw(static_cast<int>(name_w + 2))
       << cm.label_names[static_cast<std::size_t>(p)];
    for (int a = 0; a < cm.k; ++a)
      os << std::right << std::setw(static_cast<int>(cell_w)) << cm.at(p, a);
    os << '\n';
  }
  os << '\n';
  os << std::left << std::setw(static_cast<int>(name_w + 2)) << "class" << std::right
     << std::setw(10) << "recall" << std::setw(12) << "precision" << std::setw(10) << "f1"
     << '\n';
  os << std::fixed << std::setprecision(4);
  for (int c = 0; c < cm.k; ++c) {
    const auto cs = static_cast<std::size_t>(c);
    os << std::left << std::setw(static_cast<int>(name_w + 2)) << cm.label_names[cs] << std::right
       << std::setw(10) << r.per_class_recall[cs] << std::setw(12) << r.per_class_precision[cs]
       << std::setw(10) << r.per_class_f1[cs] << '\n';
  }
  os << '\n';
  os << "accuracy  " << r.accuracy << '\n';
  os << "macro F1  " << r.macro_f1 << '\n';
  os << "items     " << cm.total() << '\n';
  return os.str();
}

TimedInferenceResult timed_inference(const std::function<std::vector<int>()>& run,
                                     const std::vector<int>& answers, int num_classes,
                                     std::vector<std::string> label_names) {
  (void)run();  // warm-up pass: caches, lazily created plans, page faults

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<int> preds = run();
  const auto t1 = std::chrono::steady_clock::now();

  TimedInferenceResult res;
  res.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  res.cm = confusion(preds, answers, num_classes, std::move(label_names));
  res.report = metrics(res.cm);
  res.predictions = std::move(preds);
  return res;
}

}  // namespace isv::eval
