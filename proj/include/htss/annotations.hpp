#pragma once

#include <vector>

#include "htss/types.hpp"

namespace htss {

/// Axis-aligned box over the half-open pixel ranges [x_min, x_max) x [y_min, y_max).
struct Box {
  int class_index = 0;
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  auto operator<=>(const Box&) const = default;
};

struct WeakLabel {
  std::vector<Box> boxes;
  std::vector<int> tags;
};

/// Throws InvalidArgument on out-of-bounds/empty boxes or void/out-of-range classes.
void check_weak_label(const WeakLabel& label, int height, int width, int class_count);

/// Each box casts one vote for its class on every covered pixel; votes are
/// normalized over the class slots and uncovered pixels become unlabeled.
PseudoCanvas canvas_from_boxes(const WeakLabel& label, int height, int width, int class_count);

/// Tags are treated as full-image boxes. Boxes in `label` are ignored.
PseudoCanvas canvas_from_tags(const WeakLabel& label, int height, int width, int class_count);

/// One-hot canvas; void pixels become unlabeled.
PseudoCanvas strong_to_canvas(const StrongLabel& label, int class_count);

/// Class slot with the largest probability, lowest index on ties, or -1 for
/// an unlabeled pixel.
int pseudo_argmax(const PseudoCanvas& canvas, int pixel);

bool is_unlabeled(const PseudoCanvas& canvas, int pixel);

/// Keeps a pixel's pseudo-label only where the prediction agrees with the
/// pseudo argmax and the predicted probability of that class is >= threshold;
/// everything else becomes unlabeled. `predicted` holds per-pixel class
/// probabilities over the same L classes (depth L). A class counts as the
/// prediction when no other class has strictly larger probability.
PseudoCanvas refine_canvas(const PseudoCanvas& canvas, const PixelField& predicted, double threshold);

/// Canvas with every class outside `keep` (by slot) turned unlabeled.
PseudoCanvas restrict_canvas(const PseudoCanvas& canvas, const std::vector<bool>& keep);

}  // namespace htss
