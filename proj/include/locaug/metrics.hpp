#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "locaug/loss.hpp"
#include "locaug/tensor.hpp"

namespace locaug {

inline constexpr double kDefaultBeta2 = 0.3;

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// Binary masks of equal shape. An empty prediction has precision 0, an
// empty ground truth has recall 0, except that both empty scores (1, 1).
PrecisionRecall precision_recall(const Tensor& pred_mask, const Tensor& gt_mask);

// (1 + b2) P R / (b2 P + R); 0 when the denominator is 0.
double f_measure(double precision, double recall, double beta2 = kDefaultBeta2);

// 1 where value >= threshold.
Tensor binarize(const Tensor& saliency, double threshold);

// Twice the mean saliency, clamped to [0, 1].
double adaptive_threshold(const Tensor& saliency);

struct Threshold {
  bool adaptive = true;
  double value = 0.5;

  static Threshold fixed(double v) { return {false, v}; }
  std::string describe() const;
};
Threshold parse_threshold(const std::string& text);

// K x K counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  std::size_t classes() const noexcept { return classes_; }
  std::uint64_t count(std::size_t gt, std::size_t pred) const { return counts_[gt * classes_ + pred]; }

  // Class maps of equal size; pixels whose ground truth is kIgnoreLabel are skipped.
  void accumulate(const Tensor& pred_classes, const Tensor& gt_classes);
  void merge(const ConfusionMatrix& other);

  // IoU_k = C[k,k] / (row_k + col_k - C[k,k]); nullopt for classes absent
  // from both ground truth and prediction.
  std::vector<std::optional<double>> per_class_iou() const;
  // Mean over present classes; 0 when none are present.
  double mean_iou() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

// Per-pixel argmax over the channel axis of [N,K,H,W] logits -> [N,1,H,W].
Tensor argmax_channels(const Tensor& logits);

struct Task {
  enum class Kind { saliency, multiclass } kind = Kind::saliency;
  std::size_t classes = 2;

  static Task saliency() { return {Kind::saliency, 2}; }
  static Task multiclass(std::size_t k) { return {Kind::multiclass, k}; }
  std::size_t out_channels() const { return kind == Kind::saliency ? 1 : classes; }
  std::string describe() const;
};
Task parse_task(const std::string& text);

struct MetricReport {
  Task task;
  std::size_t images = 0;
  // Saliency only: per-image values averaged over the dataset.
  double precision = 0.0;
  double recall = 0.0;
  double f_beta = 0.0;
  double beta2 = kDefaultBeta2;
  std::string threshold;
  // Dataset-wide confusion; saliency uses classes {background, foreground}.
  std::vector<std::optional<double>> per_class_iou;
  double mean_iou = 0.0;

  // Foreground IoU of a saliency report (class 1), 0 if absent.
  double foreground_iou() const;
  // "key=value" lines for scripting.
  std::string key_values() const;
  std::string table() const;
};

// Saliency: predictions are maps in [0,1] (any shape matching the mask).
// Multi-class: predictions are [1,K,H,W] logits, masks [1,1,H,W] labels.
MetricReport evaluate_predictions(std::span<const Tensor> predictions, std::span<const Tensor> masks,
                                  const Task& task, const Threshold& threshold = {},
                                  double beta2 = kDefaultBeta2);

}  // namespace locaug
