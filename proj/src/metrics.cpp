#include "htss/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "htss/error.hpp"

namespace htss {

ConfusionMatrix::ConfusionMatrix(int class_count)
    : classes_(class_count), counts_(static_cast<std::size_t>(class_count) * class_count, 0) {
  if (class_count < 1) throw Error(ErrorCode::invalid_argument, "confusion matrix needs at least one class");
}

void ConfusionMatrix::accumulate(const StrongLabel& gt, std::span<const int> pred) {
  if (gt.class_ids.size() != pred.size() ||
      gt.class_ids.size() != static_cast<std::size_t>(gt.height) * gt.width) {
    throw Error(ErrorCode::shape_mismatch, "ground truth and prediction sizes differ");
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int g = gt.class_ids[i];
    const int p = pred[i];
    if (g >= classes_ || p < 0 || p >= classes_) {
      throw Error(ErrorCode::index_out_of_range, "class id outside the confusion matrix");
    }
    if (g == 0) continue;
    ++counts_[index(g, p)];
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw Error(ErrorCode::shape_mismatch, "confusion matrix sizes differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::vector<ClassIoU> iou_per_class(const ConfusionMatrix& m) {
  const int n = m.class_count();
  std::vector<ClassIoU> out(static_cast<std::size_t>(n));
  for (int c = 1; c < n; ++c) {
    const std::uint64_t tp = m.at(c, c);
    std::uint64_t fn = 0;
    std::uint64_t fp = 0;
    for (int k = 1; k < n; ++k) {
      if (k == c) continue;
      fn += m.at(c, k);
      fp += m.at(k, c);
    }
    // Predictions of void on non-void ground truth still count as misses.
    fn += m.at(c, 0);
    const std::uint64_t denom = tp + fp + fn;
    if (denom == 0) continue;
    out[static_cast<std::size_t>(c)] = {static_cast<double>(tp) / static_cast<double>(denom), true};
  }
  return out;
}

double mean_iou(std::span<const ClassIoU> ious) {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : ious) {
    if (!c.present) continue;
    sum += c.iou;
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

double knowledgeability(std::span<const double> ious, int c, int n_t) {
  if (c < 1 || n_t < 1) throw Error(ErrorCode::invalid_argument, "c and N_T must be >= 1");
  // Integer count sum with one final division, so rational results are exact.
  std::int64_t total = 0;
  for (int k = 0; k < n_t; ++k) {
    const double t = static_cast<double>(k) / n_t;
    const auto above = std::count_if(ious.begin(), ious.end(), [t](double v) { return v > t; });
    total += std::min<std::int64_t>(above, c);
  }
  return static_cast<double>(total) / (static_cast<double>(c) * n_t);
}

MetricReport make_report(const ConfusionMatrix& m, std::vector<std::string> class_names,
                         std::span<const int> c_values, int n_t) {
  if (static_cast<int>(class_names.size()) != m.class_count()) {
    throw Error(ErrorCode::shape_mismatch, "class name count does not match the confusion matrix");
  }
  MetricReport r;
  r.class_names = std::move(class_names);
  r.per_class = iou_per_class(m);
  r.miou = mean_iou(r.per_class);
  std::vector<double> values;
  for (std::size_t c = 1; c < r.per_class.size(); ++c) values.push_back(r.per_class[c].present ? r.per_class[c].iou : 0.0);
  std::vector<int> cs(c_values.begin(), c_values.end());
  if (cs.empty()) cs.push_back(std::max(1, m.class_count() - 1));
  for (int c : cs) r.knowledgeability[{c, n_t}] = knowledgeability(values, c, n_t);
  return r;
}

std::string MetricReport::to_table() const {
  std::string out = "class                            IoU\n";
  char line[160];
  for (std::size_t c = 1; c < per_class.size(); ++c) {
    if (per_class[c].present) {
      std::snprintf(line, sizeof line, "%-28s %8.4f\n", class_names[c].c_str(), per_class[c].iou);
    } else {
      std::snprintf(line, sizeof line, "%-28s %8s\n", class_names[c].c_str(), "n/a");
    }
    out += line;
  }
  std::snprintf(line, sizeof line, "%-28s %8.4f\n", "mIoU", miou);
  out += line;
  for (const auto& [key, value] : knowledgeability) {
    std::snprintf(line, sizeof line, "K(c=%d, N_T=%d)%*s %8.4f\n", key.first, key.second, 10, "", value);
    out += line;
  }
  return out;
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["classes"] = nlohmann::ordered_json::array();
  for (std::size_t c = 1; c < per_class.size(); ++c) {
    doc["classes"].push_back({{"class", class_names[c]}, {"iou", per_class[c].iou}, {"present", per_class[c].present}});
  }
  doc["miou"] = miou;
  doc["knowledgeability"] = nlohmann::ordered_json::array();
  for (const auto& [key, value] : knowledgeability) {
    doc["knowledgeability"].push_back({{"c", key.first}, {"n_t", key.second}, {"value", value}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace htss
