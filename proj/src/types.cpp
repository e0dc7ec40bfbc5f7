#include "htss/types.hpp"

#include <set>

#include "htss/error.hpp"

namespace htss {

const char* to_string(Supervision s) {
  switch (s) {
    case Supervision::pixel_dense: return "pixel_dense";
    case Supervision::pixel_coarse: return "pixel_coarse";
    case Supervision::bbox: return "bbox";
    case Supervision::image_tag: return "image_tag";
  }
  return "unknown";
}

Supervision parse_supervision(std::string_view text) {
  if (text == "pixel_dense") return Supervision::pixel_dense;
  if (text == "pixel_coarse") return Supervision::pixel_coarse;
  if (text == "bbox") return Supervision::bbox;
  if (text == "image_tag") return Supervision::image_tag;
  throw Error(ErrorCode::parse, "unknown supervision kind '" + std::string(text) + "'");
}

int LabelSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void check_label_space(const LabelSpace& space) {
  if (space.dataset_id.empty()) throw Error(ErrorCode::invalid_argument, "label space without dataset_id");
  if (space.classes.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "label space '" + space.dataset_id + "' has no classes beyond void");
  }
  if (space.classes.front() != "void") {
    throw Error(ErrorCode::invalid_argument, "label space '" + space.dataset_id + "' must have 'void' at index 0");
  }
  std::set<std::string> seen;
  for (const auto& name : space.classes) {
    if (name.empty()) throw Error(ErrorCode::invalid_argument, "empty class name in '" + space.dataset_id + "'");
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate class '" + name + "' in '" + space.dataset_id + "'");
    }
  }
}

}  // namespace htss
