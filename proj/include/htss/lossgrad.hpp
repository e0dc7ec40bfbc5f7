#pragma once

#include <span>
#include <vector>

#include "htss/taxonomy.hpp"
#include "htss/types.hpp"

namespace htss {

/// Floor applied to probabilities inside logarithms and divisions.
inline constexpr double kLogFloor = 1e-12;

/// Per-pixel softmax over channels [first, first + count) of the logits
/// (count < 0 means "to the end"). Max-subtracted; throws NonFiniteInput.
AtomDistribution softmax_atoms(const LogitRaster& logits, int first = 0, int count = -1);

/// s_m = sum of sigma over G_m, per pixel; output depth = number of classes.
PixelField accumulate_groups(const AtomDistribution& dist, const GroupMap& groups);

/// Pixels whose target has positive mass on class slots.
int supervised_pixels(const PseudoCanvas& target);

/// -(1/|P|) sum_p sum_m y_pm log s_pm with |P| the supervised pixels. The
/// trailing unlabeled slot of the target is ignored. Throws
/// NoSupervisedPixels when every pixel is unlabeled.
double ce_loss_image(const PseudoCanvas& target, const AtomDistribution& dist, const GroupMap& groups);

/// Exact gradient of ce_loss_image w.r.t. the logits that produced `dist`:
/// for each supervised pixel, d/d lambda_j = sum_m y_m (sigma_j - sigma_j [j in G_m] / s_m) / |P|.
LogitRaster grad_logits(const PseudoCanvas& target, const AtomDistribution& dist, const GroupMap& groups);

struct BatchItem {
  const PseudoCanvas* target = nullptr;
  const AtomDistribution* dist = nullptr;
  const GroupMap* groups = nullptr;
  Supervision kind = Supervision::pixel_dense;
};

struct BatchLossResult {
  double loss = 0.0;
  double strong_loss = 0.0;
  double weak_loss = 0.0;
  std::vector<LogitRaster> grads;  // one per item, w.r.t. that item's logits
};

/// Mixed strong/weak batch loss: the mean per-image loss of the strong items
/// plus the mean per-image loss of the weak items. Items without supervised
/// pixels do not count. Throws NoSupervisedPixels if nothing is supervised.
BatchLossResult batch_loss(std::span<const BatchItem> items);

/// Final per-pixel ids over [ap atoms..., s atoms...]: the main-head argmax,
/// except that a parent (p set) is replaced by the best of its subclasses.
std::vector<int> merge_subclass_predictions(const AtomDistribution& ap_probs, const AtomDistribution& s_probs,
                                            const AtomPartition& partition);

}  // namespace htss
