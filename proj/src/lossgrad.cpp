#include "htss/lossgrad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "htss/error.hpp"

namespace htss {

namespace {

void check_target(const PseudoCanvas& target, const AtomDistribution& dist, const GroupMap& groups) {
  if (!target.same_grid(dist)) throw Error(ErrorCode::shape_mismatch, "target and prediction grids differ");
  if (target.class_count() != groups.size()) {
    throw Error(ErrorCode::shape_mismatch, "target has " + std::to_string(target.class_count()) +
                                               " classes but the group map has " + std::to_string(groups.size()));
  }
  for (const auto& g : groups.classes) {
    for (int a : g) {
      if (a < 0 || a >= dist.depth) throw Error(ErrorCode::index_out_of_range, "group atom index out of range");
    }
  }
}

double class_mass(std::span<const double> y, int classes) {
  double mass = 0.0;
  for (int m = 0; m < classes; ++m) mass += y[m];
  return mass;
}

double group_sum(std::span<const double> sigma, const AtomSet& group) {
  double s = 0.0;
  for (int a : group) s += sigma[a];
  return s;
}

// Loss summed over supervised pixels (not normalized) and their count.
std::pair<double, int> loss_sum(const PseudoCanvas& target, const AtomDistribution& dist, const GroupMap& groups) {
  const int classes = groups.size();
  double total = 0.0;
  int count = 0;
  for (int p = 0; p < target.pixels(); ++p) {
    const auto y = target.at(p);
    if (class_mass(y, classes) <= 0.0) continue;
    ++count;
    const auto sigma = dist.at(p);
    for (int m = 0; m < classes; ++m) {
      if (y[m] == 0.0) continue;
      total -= y[m] * std::log(std::max(group_sum(sigma, groups[m]), kLogFloor));
    }
  }
  return {total, count};
}

void add_scaled_grad(const PseudoCanvas& target, const AtomDistribution& dist, const GroupMap& groups, double scale,
                     LogitRaster& out) {
  const int classes = groups.size();
  for (int p = 0; p < target.pixels(); ++p) {
    const auto y = target.at(p);
    const double mass = class_mass(y, classes);
    if (mass <= 0.0) continue;
    const auto sigma = dist.at(p);
    auto g = out.at(p);
    for (int j = 0; j < dist.depth; ++j) g[j] += scale * mass * sigma[j];
    for (int m = 0; m < classes; ++m) {
      if (y[m] == 0.0) continue;
      const double s = std::max(group_sum(sigma, groups[m]), kLogFloor);
      for (int a : groups[m]) g[a] -= scale * (y[m] * sigma[a]) / s;
    }
  }
}

}  // namespace

AtomDistribution softmax_atoms(const LogitRaster& logits, int first, int count) {
  if (count < 0) count = logits.depth - first;
  if (first < 0 || count <= 0 || first + count > logits.depth) {
    throw Error(ErrorCode::index_out_of_range, "softmax channel range outside the logits");
  }
  AtomDistribution out(logits.height, logits.width, count);
  for (int p = 0; p < logits.pixels(); ++p) {
    const auto in = logits.at(p).subspan(static_cast<std::size_t>(first), static_cast<std::size_t>(count));
    auto o = out.at(p);
    double peak = in[0];
    for (double v : in) {
      if (!std::isfinite(v)) throw Error(ErrorCode::non_finite_input, "non-finite logit");
      peak = std::max(peak, v);
    }
    double sum = 0.0;
    for (int k = 0; k < count; ++k) {
      o[k] = std::exp(in[k] - peak);
      sum += o[k];
    }
    for (int k = 0; k < count; ++k) o[k] /= sum;
  }
  return out;
}

PixelField accumulate_groups(const AtomDistribution& dist, const GroupMap& groups) {
  for (const auto& g : groups.classes) {
    for (int a : g) {
      if (a < 0 || a >= dist.depth) throw Error(ErrorCode::index_out_of_range, "group atom index out of range");
    }
  }
  PixelField out(dist.height, dist.width, groups.size());
  for (int p = 0; p < dist.pixels(); ++p) {
    const auto sigma = dist.at(p);
    auto s = out.at(p);
    for (int m = 0; m < groups.size(); ++m) s[m] = group_sum(sigma, groups[m]);
  }
  return out;
}

int supervised_pixels(const PseudoCanvas& target) {
  int count = 0;
  for (int p = 0; p < target.pixels(); ++p) {
    if (class_mass(target.at(p), target.class_count()) > 0.0) ++count;
  }
  return count;
}

double ce_loss_image(const PseudoCanvas& target, const AtomDistribution& dist, const GroupMap& groups) {
  check_target(target, dist, groups);
  const auto [total, count] = loss_sum(target, dist, groups);
  if (count == 0) throw Error(ErrorCode::no_supervised_pixels, "target has no supervised pixel");
  return total / count;
}

LogitRaster grad_logits(const PseudoCanvas& target, const AtomDistribution& dist, const GroupMap& groups) {
  check_target(target, dist, groups);
  LogitRaster grad(dist.height, dist.width, dist.depth);
  const int count = supervised_pixels(target);
  if (count == 0) throw Error(ErrorCode::no_supervised_pixels, "target has no supervised pixel");
  add_scaled_grad(target, dist, groups, 1.0 / count, grad);
  return grad;
}

BatchLossResult batch_loss(std::span<const BatchItem> items) {
  std::vector<int> supervised(items.size(), 0);
  int strong_images = 0;
  int weak_images = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const BatchItem& item = items[i];
    if (!item.target || !item.dist || !item.groups) throw Error(ErrorCode::invalid_argument, "incomplete batch item");
    check_target(*item.target, *item.dist, *item.groups);
    supervised[i] = supervised_pixels(*item.target);
    if (supervised[i] == 0) continue;
    (is_strong(item.kind) ? strong_images : weak_images) += 1;
  }
  if (strong_images + weak_images == 0) throw Error(ErrorCode::no_supervised_pixels, "batch has no supervised pixel");

  BatchLossResult result;
  result.grads.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const BatchItem& item = items[i];
    result.grads.emplace_back(item.dist->height, item.dist->width, item.dist->depth);
    if (supervised[i] == 0) continue;
    const bool strong = is_strong(item.kind);
    const double scale = 1.0 / (static_cast<double>(supervised[i]) * (strong ? strong_images : weak_images));
    const double image_loss = loss_sum(*item.target, *item.dist, *item.groups).first / supervised[i];
    (strong ? result.strong_loss : result.weak_loss) += image_loss;
    add_scaled_grad(*item.target, *item.dist, *item.groups, scale, result.grads.back());
  }
  if (strong_images > 0) result.strong_loss /= strong_images;
  if (weak_images > 0) result.weak_loss /= weak_images;
  result.loss = result.strong_loss + result.weak_loss;
  return result;
}

std::vector<int> merge_subclass_predictions(const AtomDistribution& ap_probs, const AtomDistribution& s_probs,
                                            const AtomPartition& partition) {
  if (ap_probs.depth != partition.ap_count()) {
    throw Error(ErrorCode::shape_mismatch, "main-head depth does not match the partition");
  }
  const bool has_sub = partition.has_subclasses();
  if (has_sub && (!ap_probs.same_grid(s_probs) || s_probs.depth != partition.s_count())) {
    throw Error(ErrorCode::shape_mismatch, "subclass-head shape does not match the partition");
  }
  std::vector<std::vector<int>> children(static_cast<std::size_t>(partition.ap_count()));
  for (int p : partition.p_set) {
    children[static_cast<std::size_t>(p)] = partition.children_of(p);
    if (children[static_cast<std::size_t>(p)].empty()) {
      throw Error(ErrorCode::missing_children, "parent '" + partition.ap_atoms[static_cast<std::size_t>(p)] +
                                                   "' has no subclasses");
    }
  }
  std::vector<int> out(static_cast<std::size_t>(ap_probs.pixels()));
  for (int p = 0; p < ap_probs.pixels(); ++p) {
    const auto ap = ap_probs.at(p);
    const int best = static_cast<int>(std::max_element(ap.begin(), ap.end()) - ap.begin());
    const auto& kids = children[static_cast<std::size_t>(best)];
    if (kids.empty()) {
      out[static_cast<std::size_t>(p)] = best;
      continue;
    }
    const auto s = s_probs.at(p);
    int child = kids.front();
    for (int k : kids) {
      if (s[k] > s[child]) child = k;
    }
    out[static_cast<std::size_t>(p)] = partition.ap_count() + child;
  }
  return out;
}

}  // namespace htss
