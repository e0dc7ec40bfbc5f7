#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "htss/types.hpp"

namespace htss {

/// L x L counts, rows = ground truth, columns = prediction. Row/column 0 is
/// void and never enters the metrics.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int class_count);

  int class_count() const { return classes_; }
  std::uint64_t at(int gt, int pred) const { return counts_[index(gt, pred)]; }

  /// counts[gt][pred] += 1 for every pixel whose ground truth is not void.
  void accumulate(const StrongLabel& gt, std::span<const int> pred);
  void add(int gt, int pred, std::uint64_t n = 1) { counts_[index(gt, pred)] += n; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

 private:
  std::size_t index(int gt, int pred) const {
    return static_cast<std::size_t>(gt) * static_cast<std::size_t>(classes_) + static_cast<std::size_t>(pred);
  }

  int classes_;
  std::vector<std::uint64_t> counts_;
};

struct ClassIoU {
  double iou = 0.0;
  bool present = false;  // TP + FP + FN > 0
};

/// Entries 1..L-1; entry 0 (void) is always not-present.
std::vector<ClassIoU> iou_per_class(const ConfusionMatrix& m);

/// Arithmetic mean over present classes; 0 when none is present.
double mean_iou(std::span<const ClassIoU> ious);

/// (1/N_T) sum over t in {0, 1/N_T, ..., 1 - 1/N_T} of min(#{IoU > t}, c) / c.
double knowledgeability(std::span<const double> ious, int c, int n_t);

struct MetricReport {
  std::vector<std::string> class_names;  // index 0 = void
  std::vector<ClassIoU> per_class;
  double miou = 0.0;
  std::map<std::pair<int, int>, double> knowledgeability;  // (c, N_T) -> value

  std::string to_table() const;
  std::string to_json() const;
};

/// Builds the full report; not-present classes count as IoU 0 for the
/// knowledgeability thresholds. An empty `c_values` means c = L - 1.
MetricReport make_report(const ConfusionMatrix& m, std::vector<std::string> class_names,
                         std::span<const int> c_values, int n_t);

}  // namespace htss
