#pragma once

#include <cstddef>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>

#include "wlgnn/error.hpp"

namespace wlgnn {

struct Metrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.5;

  // 0/0 is taken as 0 for each ratio.
  static Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn,
                             double threshold = 0.5) {
    Metrics m{tp, fp, fn, tn, 0.0, 0.0, 0.0, threshold};
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (m.precision + m.recall > 0.0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
  }
};

/// Positive prediction iff probability >= threshold.
inline Metrics score_predictions(std::span<const double> probs, std::span<const int> labels,
                                 double threshold) {
  if (probs.size() != labels.size()) throw ShapeError("metrics: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool predicted = probs[i] >= threshold;
    if (predicted) {
      (labels[i] ? tp : fp) += 1;
    } else {
      (labels[i] ? fn : tn) += 1;
    }
  }
  return Metrics::from_counts(tp, fp, fn, tn, threshold);
}

inline void write_metrics_header(std::ostream& out) {
  out << "dataset\tprecision\trecall\tf1\ttp\tfp\tfn\ttn\tthreshold\n";
}

inline void write_metrics_row(std::ostream& out, const std::string& dataset, const Metrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\t%.6f\t%zu\t%zu\t%zu\t%zu\t%.6f\n", m.precision,
                m.recall, m.f1, m.tp, m.fp, m.fn, m.tn, m.threshold);
  out << dataset << buf;
}

}  // namespace wlgnn
