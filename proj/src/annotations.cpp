#include "htss/annotations.hpp"

#include <cstdint>
#include <string>

#include "htss/error.hpp"

namespace htss {

namespace {

void set_unlabeled(PseudoCanvas& canvas, int pixel) {
  auto v = canvas.at(pixel);
  std::fill(v.begin(), v.end(), 0.0);
  v[static_cast<std::size_t>(canvas.unlabeled_slot())] = 1.0;
}

PseudoCanvas vote(const std::vector<Box>& boxes, int height, int width, int class_count) {
  const int slots = class_count + 1;
  std::vector<std::uint32_t> votes(static_cast<std::size_t>(height) * width * slots, 0);
  for (const Box& b : boxes) {
    for (int y = b.y_min; y < b.y_max; ++y) {
      for (int x = b.x_min; x < b.x_max; ++x) {
        ++votes[(static_cast<std::size_t>(y) * width + x) * slots + b.class_index];
      }
    }
  }
  PseudoCanvas canvas(height, width, slots);
  for (int p = 0; p < canvas.pixels(); ++p) {
    const std::uint32_t* counts = votes.data() + static_cast<std::size_t>(p) * slots;
    std::uint64_t total = 0;
    for (int m = 0; m < class_count; ++m) total += counts[m];
    if (total == 0) {
      set_unlabeled(canvas, p);
      continue;
    }
    auto v = canvas.at(p);
    for (int m = 0; m < class_count; ++m) v[m] = static_cast<double>(counts[m]) / static_cast<double>(total);
  }
  return canvas;
}

}  // namespace

void check_weak_label(const WeakLabel& label, int height, int width, int class_count) {
  if (height <= 0 || width <= 0) throw Error(ErrorCode::invalid_argument, "canvas size must be positive");
  auto check_class = [&](int c) {
    if (c <= 0 || c >= class_count) {
      throw Error(ErrorCode::invalid_argument, "weak label class " + std::to_string(c) + " is void or out of range");
    }
  };
  for (const Box& b : label.boxes) {
    check_class(b.class_index);
    if (b.x_min < 0 || b.y_min < 0 || b.x_max > width || b.y_max > height || b.x_min >= b.x_max ||
        b.y_min >= b.y_max) {
      throw Error(ErrorCode::invalid_argument,
                  "box [" + std::to_string(b.x_min) + "," + std::to_string(b.y_min) + "," + std::to_string(b.x_max) +
                      "," + std::to_string(b.y_max) + ") is empty or outside the image");
    }
  }
  for (int t : label.tags) check_class(t);
}

PseudoCanvas canvas_from_boxes(const WeakLabel& label, int height, int width, int class_count) {
  check_weak_label({label.boxes, {}}, height, width, class_count);
  return vote(label.boxes, height, width, class_count);
}

PseudoCanvas canvas_from_tags(const WeakLabel& label, int height, int width, int class_count) {
  check_weak_label({{}, label.tags}, height, width, class_count);
  std::vector<Box> boxes;
  boxes.reserve(label.tags.size());
  for (int t : label.tags) boxes.push_back({t, 0, 0, width, height});
  return vote(boxes, height, width, class_count);
}

PseudoCanvas strong_to_canvas(const StrongLabel& label, int class_count) {
  if (label.class_ids.size() != static_cast<std::size_t>(label.height) * label.width) {
    throw Error(ErrorCode::shape_mismatch, "label raster size does not match its dimensions");
  }
  PseudoCanvas canvas(label.height, label.width, class_count + 1);
  for (int p = 0; p < canvas.pixels(); ++p) {
    const int id = label.class_ids[static_cast<std::size_t>(p)];
    if (id >= class_count) {
      throw Error(ErrorCode::index_out_of_range, "class id " + std::to_string(id) + " >= " + std::to_string(class_count));
    }
    canvas.at(p)[static_cast<std::size_t>(id == 0 ? canvas.unlabeled_slot() : id)] = 1.0;
  }
  return canvas;
}

bool is_unlabeled(const PseudoCanvas& canvas, int pixel) {
  return canvas.at(pixel)[static_cast<std::size_t>(canvas.unlabeled_slot())] >= 1.0;
}

int pseudo_argmax(const PseudoCanvas& canvas, int pixel) {
  if (is_unlabeled(canvas, pixel)) return -1;
  const auto v = canvas.at(pixel);
  int best = -1;
  for (int m = 0; m < canvas.class_count(); ++m) {
    if (v[m] > 0.0 && (best < 0 || v[m] > v[best])) best = m;
  }
  return best;
}

PseudoCanvas refine_canvas(const PseudoCanvas& canvas, const PixelField& predicted, double threshold) {
  if (!canvas.same_grid(predicted) || predicted.depth != canvas.class_count()) {
    throw Error(ErrorCode::shape_mismatch, "prediction shape does not match the pseudo-label canvas");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::invalid_argument, "threshold must be in [0, 1]");
  PseudoCanvas out = canvas;
  for (int p = 0; p < canvas.pixels(); ++p) {
    const int target = pseudo_argmax(canvas, p);
    if (target < 0) continue;
    const auto probs = predicted.at(p);
    bool keep = probs[target] >= threshold;
    for (int m = 0; keep && m < predicted.depth; ++m) {
      if (probs[m] > probs[target]) keep = false;
    }
    if (!keep) set_unlabeled(out, p);
  }
  return out;
}

PseudoCanvas restrict_canvas(const PseudoCanvas& canvas, const std::vector<bool>& keep) {
  if (keep.size() != static_cast<std::size_t>(canvas.class_count())) {
    throw Error(ErrorCode::shape_mismatch, "class mask length does not match the canvas");
  }
  PseudoCanvas out = canvas;
  for (int p = 0; p < out.pixels(); ++p) {
    if (is_unlabeled(out, p)) continue;
    auto v = out.at(p);
    double mass = 0.0;
    for (int m = 0; m < out.class_count(); ++m) {
      if (!keep[static_cast<std::size_t>(m)]) v[m] = 0.0;
      mass += v[m];
    }
    if (mass <= 0.0) {
      set_unlabeled(out, p);
    } else {
      for (int m = 0; m < out.class_count(); ++m) v[m] /= mass;
    }
  }
  return out;
}

}  // namespace htss
