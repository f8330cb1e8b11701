#pragma once

// Binary classification metrics. Class 1 (fake) is the positive class for ROC.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

namespace heterosgt::metrics {

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct Metrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<RocPoint> roc;
  std::optional<double> auc;  // empty when only one class is present
};

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Confusion confusion(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (predicted.size() != labels.size()) throw std::invalid_argument("confusion: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predicted[i] == 1, y = labels[i] == 1;
    if (p && y) ++c.tp;
    else if (p) ++c.fp;
    else if (y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

inline double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

/// Accuracy plus precision / recall / F1 averaged over both classes.
inline Metrics from_confusion(const Confusion& c) {
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
  Metrics m;
  m.accuracy = safe_div(tp + tn, tp + fp + fn + tn);
  const double p1 = safe_div(tp, tp + fp), r1 = safe_div(tp, tp + fn);
  const double p0 = safe_div(tn, tn + fn), r0 = safe_div(tn, tn + fp);
  m.macro_precision = (p0 + p1) / 2.0;
  m.macro_recall = (r0 + r1) / 2.0;
  m.macro_f1 = (f1(p0, r0) + f1(p1, r1)) / 2.0;
  return m;
}

/// Threshold sweep over the distinct scores, highest first. The first point
/// uses an infinite threshold (nothing predicted positive); the last predicts
/// everything positive.
inline std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_curve: length mismatch");
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double neg = static_cast<double>(labels.size()) - pos;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] == 1 ? tp : fp) += 1.0;
    out.push_back({s, safe_div(fp, neg), safe_div(tp, pos)});
  }
  return out;
}

inline double trapezoid_auc(const std::vector<RocPoint>& roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i)
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  return area;
}

/// Probability that a random positive outranks a random negative, ties 1/2.
inline double rank_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("rank_auc: length mismatch");
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  if (pairs == 0.0) throw std::domain_error("AUC is undefined when only one class is present");
  return wins / pairs;
}

/// Predictions are argmax with ties going to class 0 (real).
inline std::vector<int> predictions(const std::vector<double>& fake_scores) {
  std::vector<int> out;
  for (double s : fake_scores) out.push_back(s > 0.5 ? 1 : 0);
  return out;
}

/// `fake_scores[i]` is the predicted probability that item i is fake.
inline Metrics evaluate(const std::vector<double>& fake_scores, const std::vector<int>& labels) {
  if (fake_scores.empty() || fake_scores.size() != labels.size())
    throw std::invalid_argument("evaluate: scores and labels must be aligned and non-empty");
  Metrics m = from_confusion(confusion(predictions(fake_scores), labels));
  m.roc = roc_curve(fake_scores, labels);
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos > 0 && static_cast<std::size_t>(pos) < labels.size()) m.auc = rank_auc(fake_scores, labels);
  return m;
}

/// Like evaluate(), but single-class inputs are an error.
inline double roc_auc(const std::vector<double>& fake_scores, const std::vector<int>& labels) {
  return rank_auc(fake_scores, labels);
}

}  // namespace heterosgt::metrics
