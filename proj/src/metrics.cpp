#include "locaug/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "locaug/error.hpp"

namespace locaug {

namespace {

bool is_on(double v) { return v >= 0.5; }

std::size_t class_of(double v, std::size_t classes, const char* what) {
  if (v < 0 || v != std::floor(v) || v >= static_cast<double>(classes)) {
    throw Error(ErrorKind::invalid_argument, std::string(what) + " class value " + std::to_string(v) +
                                                 " outside 0.." + std::to_string(classes - 1));
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

PrecisionRecall precision_recall(const Tensor& pred_mask, const Tensor& gt_mask) {
  const auto& ps = pred_mask.shape();
  const auto& gs = gt_mask.shape();
  if (pred_mask.size() != gt_mask.size() || ps.size() < 2 || gs.size() < 2 || ps[ps.size() - 1] != gs[gs.size() - 1] ||
      ps[ps.size() - 2] != gs[gs.size() - 2]) {
    throw Error(ErrorKind::shape_mismatch, "precision_recall: mask sizes differ (" +
                                               shape_string(pred_mask.shape()) + " vs " +
                                               shape_string(gt_mask.shape()) + ")");
  }
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred_mask.size(); ++i) {
    const bool p = is_on(pred_mask[i]);
    const bool g = is_on(gt_mask[i]);
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  if (tp + fp == 0 && tp + fn == 0) return {1.0, 1.0};
  PrecisionRecall r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return r;
}

double f_measure(double precision, double recall, double beta2) {
  if (beta2 <= 0) throw Error(ErrorKind::invalid_argument, "f_measure: beta^2 must be positive");
  const double denom = beta2 * precision + recall;
  if (denom == 0.0) return 0.0;
  return (1.0 + beta2) * precision * recall / denom;
}

Tensor binarize(const Tensor& saliency, double threshold) {
  Tensor out = Tensor::zeros_like(saliency);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = saliency[i] >= threshold ? 1.0 : 0.0;
  return out;
}

double adaptive_threshold(const Tensor& saliency) {
  double sum = 0.0;
  for (double v : saliency.values()) sum += v;
  const double mean = saliency.empty() ? 0.0 : sum / static_cast<double>(saliency.size());
  return std::clamp(2.0 * mean, 0.0, 1.0);
}

std::string Threshold::describe() const {
  if (adaptive) return "adaptive";
  std::ostringstream os;
  os << value;
  return os.str();
}

Threshold parse_threshold(const std::string& text) {
  if (text == "adaptive") return {};
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || v < 0.0 || v > 1.0) throw std::invalid_argument(text);
    return Threshold::fixed(v);
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_argument,
                "threshold must be 'adaptive' or a number in [0,1], got '" + text + "'");
  }
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
  if (classes < 2) throw Error(ErrorKind::invalid_argument, "confusion matrix needs at least 2 classes");
}

void ConfusionMatrix::accumulate(const Tensor& pred_classes, const Tensor& gt_classes) {
  if (pred_classes.size() != gt_classes.size()) {
    throw Error(ErrorKind::shape_mismatch, "confusion: prediction and ground truth sizes differ");
  }
  for (std::size_t i = 0; i < gt_classes.size(); ++i) {
    if (gt_classes[i] == kIgnoreLabel) continue;
    const std::size_t g = class_of(gt_classes[i], classes_, "ground-truth");
    const std::size_t p = class_of(pred_classes[i], classes_, "predicted");
    ++counts_[g * classes_ + p];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw Error(ErrorKind::shape_mismatch, "confusion: class counts differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::vector<std::optional<double>> ConfusionMatrix::per_class_iou() const {
  std::vector<std::optional<double>> iou(classes_);
  for (std::size_t k = 0; k < classes_; ++k) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < classes_; ++j) {
      row += count(k, j);
      col += count(j, k);
    }
    const std::uint64_t diag = count(k, k);
    const std::uint64_t uni = row + col - diag;
    if (uni > 0) iou[k] = static_cast<double>(diag) / static_cast<double>(uni);
  }
  return iou;
}

double ConfusionMatrix::mean_iou() const {
  double sum = 0.0;
  std::size_t present = 0;
  for (const auto& v : per_class_iou()) {
    if (v) {
      sum += *v;
      ++present;
    }
  }
  return present ? sum / static_cast<double>(present) : 0.0;
}

Tensor argmax_channels(const Tensor& logits) {
  if (logits.rank() != 4) throw Error(ErrorKind::shape_mismatch, "argmax_channels: expected NCHW");
  const std::size_t classes = logits.extent(1);
  const std::size_t plane = logits.extent(2) * logits.extent(3);
  Tensor out({logits.extent(0), 1, logits.extent(2), logits.extent(3)});
  for (std::size_t n = 0; n < logits.extent(0); ++n) {
    for (std::size_t p = 0; p < plane; ++p) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < classes; ++c) {
        if (logits[(n * classes + c) * plane + p] > logits[(n * classes + best) * plane + p]) best = c;
      }
      out[n * plane + p] = static_cast<double>(best);
    }
  }
  return out;
}

std::string Task::describe() const {
  return kind == Kind::saliency ? "saliency" : "multiclass:" + std::to_string(classes);
}

Task parse_task(const std::string& text) {
  if (text == "saliency") return Task::saliency();
  const std::string prefix = "multiclass:";
  if (text.rfind(prefix, 0) == 0) {
    try {
      const int k = std::stoi(text.substr(prefix.size()));
      if (k >= 2 && k < static_cast<int>(kIgnoreLabel)) return Task::multiclass(static_cast<std::size_t>(k));
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorKind::invalid_argument, "task must be 'saliency' or 'multiclass:K' (K >= 2), got '" + text + "'");
}

double MetricReport::foreground_iou() const {
  if (per_class_iou.size() < 2 || !per_class_iou[1]) return 0.0;
  return *per_class_iou[1];
}

std::string MetricReport::key_values() const {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << "task=" << task.describe() << '\n';
  os << "images=" << images << '\n';
  if (task.kind == Task::Kind::saliency) {
    os << "threshold=" << threshold << '\n';
    os << "beta2=" << beta2 << '\n';
    os << "precision=" << precision << '\n';
    os << "recall=" << recall << '\n';
    os << "f_beta=" << f_beta << '\n';
  }
  for (std::size_t k = 0; k < per_class_iou.size(); ++k) {
    os << "iou_" << k << '=';
    if (per_class_iou[k]) {
      os << *per_class_iou[k];
    } else {
      os << "absent";
    }
    os << '\n';
  }
  os << "mean_iou=" << mean_iou << '\n';
  return os.str();
}

std::string MetricReport::table() const {
  std::ostringstream os;
  os << std::setprecision(4) << std::fixed;
  os << "images      " << images << '\n';
  if (task.kind == Task::Kind::saliency) {
    os << "threshold   " << threshold << '\n';
    os << "precision   " << precision << '\n';
    os << "recall      " << recall << '\n';
    os << "F_beta      " << f_beta << "  (beta^2=" << std::setprecision(2) << beta2 << ")\n"
       << std::setprecision(4);
  }
  for (std::size_t k = 0; k < per_class_iou.size(); ++k) {
    os << "IoU[" << k << "]" << std::string(k < 10 ? 7 : 6, ' ');
    if (per_class_iou[k]) {
      os << *per_class_iou[k] << '\n';
    } else {
      os << "-\n";
    }
  }
  os << "mean IoU    " << mean_iou << '\n';
  return os.str();
}

MetricReport evaluate_predictions(std::span<const Tensor> predictions, std::span<const Tensor> masks,
                                  const Task& task, const Threshold& threshold, double beta2) {
  if (predictions.empty()) throw Error(ErrorKind::invalid_argument, "evaluate: empty dataset");
  if (predictions.size() != masks.size()) {
    throw Error(ErrorKind::invalid_argument, "evaluate: prediction and mask counts differ");
  }
  MetricReport report;
  report.task = task;
  report.images = predictions.size();
  report.beta2 = beta2;
  ConfusionMatrix confusion(task.kind == Task::Kind::saliency ? 2 : task.classes);
  if (task.kind == Task::Kind::saliency) {
    report.threshold = threshold.describe();
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const double t = threshold.adaptive ? adaptive_threshold(predictions[i]) : threshold.value;
      const Tensor binary = binarize(predictions[i], t);
      const Tensor gt = binarize(masks[i], 0.5);
      const PrecisionRecall pr = precision_recall(binary, gt);
      report.precision += pr.precision;
      report.recall += pr.recall;
      report.f_beta += f_measure(pr.precision, pr.recall, beta2);
      confusion.accumulate(binary, gt);
    }
    const double n = static_cast<double>(predictions.size());
    report.precision /= n;
    report.recall /= n;
    report.f_beta /= n;
  } else {
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      if (predictions[i].rank() != 4 || predictions[i].extent(1) != task.classes) {
        throw Error(ErrorKind::shape_mismatch, "evaluate: expected [N," + std::to_string(task.classes) +
                                                   ",H,W] logits, got " +
                                                   shape_string(predictions[i].shape()));
      }
      confusion.accumulate(argmax_channels(predictions[i]), masks[i]);
    }
  }
  report.per_class_iou = confusion.per_class_iou();
  report.mean_iou = confusion.mean_iou();
  return report;
}

}  // namespace locaug
