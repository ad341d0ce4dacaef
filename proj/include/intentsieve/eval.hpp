#ifndef INTENTSIEVE_EVAL_HPP
#define INTENTSIEVE_EVAL_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace isv::eval {

/// Square count matrix with rows = predicted label, columns = answer label.
struct ConfusionMatrix {
  int k = 0;
  std::vector<std::int64_t> counts;  ///< row-major (k, k)
  std::vector<std::string> label_names;

  std::int64_t at(int pred, int ans) const {
    return counts[static_cast<std::size_t>(pred) * static_cast<std::size_t>(k) +
                  static_cast<std::size_t>(ans)];
  }
  std::int64_t& at(int pred, int ans) {
    return counts[static_cast<std::size_t>(pred) * static_cast<std::size_t>(k) +
                  static_cast<std::size_t>(ans)];
  }
  std::int64_t total() const;
};

/// Build a confusion matrix from parallel prediction/answer sequences.
/// Out-of-range labels raise InvalidInput. Empty label_names get generated
/// placeholders c0..c{k-1}.
ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& answers, int k,
                          std::vector<std::string> label_names = {});

struct MetricReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_recall;
  std::vector<double> per_class_precision;
  std::vector<double> per_class_f1;
};

/// accuracy = trace/total; recall = diagonal/column-sum; precision =
/// diagonal/row-sum; macro F1 = unweighted mean of per-class F1. Classes
/// that never appear as an answer are excluded from the macro average with
/// a warning; zero-denominator ratios are reported as 0 with a warning.
MetricReport metrics(const ConfusionMatrix& cm);

nlohmann::json report_json(const ConfusionMatrix& cm, const MetricReport& r);
/// Aligned plain-text rendering: the count matrix (rows predicted, columns
/// answer) followed by per-class and aggregate metrics.
std::string report_table(const ConfusionMatrix& cm, const MetricReport& r);

struct TimedInferenceResult {
  double wall_seconds = 0.0;  ///< timed pass only; one warm-up pass excluded
  std::vector<int> predictions;
  ConfusionMatrix cm;
  MetricReport report;
};

/// Run `run` once as warm-up, then once timed on a monotonic clock, and
/// score the timed pass's predictions against `answers`.
TimedInferenceResult timed_inference(const std::function<std::vector<int>()>& run,
                                     const std::vector<int>& answers, int num_classes,
                                     std::vector<std::string> label_names = {});

}  // namespace isv::eval

#endif  // INTENTSIEVE_EVAL_HPP
