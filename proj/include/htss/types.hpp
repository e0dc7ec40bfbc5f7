#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace htss {

enum class Supervision { pixel_dense, pixel_coarse, bbox, image_tag };

const char* to_string(Supervision s);
Supervision parse_supervision(std::string_view text);

/// Dense and coarse pixel labels are "strong"; boxes and tags are "weak".
constexpr bool is_strong(Supervision s) {
  return s == Supervision::pixel_dense || s == Supervision::pixel_coarse;
}

/// Row-major H x W grid of fixed-length per-pixel vectors.
struct PixelField {
  int height = 0;
  int width = 0;
  int depth = 0;
  std::vector<double> values;

  PixelField() = default;
  PixelField(int h, int w, int d, double fill = 0.0)
      : height(h), width(w), depth(d), values(static_cast<std::size_t>(h) * w * d, fill) {}

  int pixels() const { return height * width; }

  std::span<double> at(int pixel) {
    return {values.data() + static_cast<std::size_t>(pixel) * depth, static_cast<std::size_t>(depth)};
  }
  std::span<const double> at(int pixel) const {
    return {values.data() + static_cast<std::size_t>(pixel) * depth, static_cast<std::size_t>(depth)};
  }

  bool same_grid(const PixelField& other) const {
    return height == other.height && width == other.width;
  }
};

/// Network input: H x W x C features.
struct FeatureRaster : PixelField {
  using PixelField::PixelField;
};

/// Per-pixel real scores over output atoms.
struct LogitRaster : PixelField {
  using PixelField::PixelField;
};

/// Per-pixel softmax over atoms; each vector is on the simplex.
struct AtomDistribution : PixelField {
  using PixelField::PixelField;
};

/// Per-pixel categorical target over L classes plus a trailing unlabeled slot.
/// Slot 0 is the void class and never carries mass.
struct PseudoCanvas : PixelField {
  using PixelField::PixelField;

  int class_count() const { return depth - 1; }
  int unlabeled_slot() const { return depth - 1; }
};

/// Ordered class list of one dataset; index 0 is void.
struct LabelSpace {
  std::string dataset_id;
  std::vector<std::string> classes;
  Supervision supervision = Supervision::pixel_dense;

  int size() const { return static_cast<int>(classes.size()); }
  int index_of(std::string_view name) const;
};

/// Throws if the label space breaks its invariants (void at 0, unique, non-empty).
void check_label_space(const LabelSpace& space);

/// Per-pixel class ids for one image, row-major.
struct StrongLabel {
  int height = 0;
  int width = 0;
  std::vector<std::uint16_t> class_ids;
};

}  // namespace htss
