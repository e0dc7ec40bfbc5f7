#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "htss/annotations.hpp"
#include "htss/io.hpp"
#include "htss/relations.hpp"
#include "htss/types.hpp"

namespace htss {

struct Concept {
  std::string name;
  std::vector<double> signature;  // mean feature vector, length = channels
  double noise = 0.0;             // per-channel gaussian sigma
};

/// One synthetic world. Fine label ids are 1 + index into `concepts`.
struct WorldSpec {
  int height = 24;
  int width = 24;
  int channels = 4;
  std::string background;
  std::vector<Concept> concepts;
  /// coarse concept -> fine concepts, in document order.
  std::vector<std::pair<std::string, std::vector<std::string>>> hierarchy;
  int min_objects = 1;
  int max_objects = 4;
  int min_size = 4;
  int max_size = 10;
  std::uint64_t seed = 0;

  int fine_id(std::string_view name) const;
  /// Coarse concept index (0-based, hierarchy order) of a fine concept.
  int coarse_of(int fine_index) const;
};

/// Throws InvalidArgument when the world is inconsistent.
void check_world(const WorldSpec& world);

struct Scene {
  FeatureRaster features;
  StrongLabel labels;      // fine ids, no void
  std::vector<Box> boxes;  // fine ids, pre-occlusion extents, drawing order
};

/// Rectangles of random concepts (except the background and `exclude`)
/// drawn over the background; later rectangles occlude earlier ones.
Scene generate_scene(const WorldSpec& world, std::uint64_t index, const std::set<std::string>& exclude = {});

struct ViewSpec {
  std::string dataset_id;
  Supervision supervision = Supervision::pixel_dense;
  Granularity granularity = Granularity::fine;
  int count = 0;
  std::uint64_t first_index = 0;
  std::set<std::string> exclude;     // concepts never placed in this view's scenes
  std::vector<std::string> classes;  // optional restriction of the label space
  int box_padding = 0;
};

/// Label space of a view: void + fine or coarse names, optionally restricted.
LabelSpace view_label_space(const WorldSpec& world, const ViewSpec& view);

/// hypernym(coarse, fine) for every hierarchy edge with distinct names.
RelationTable hierarchy_relations(const WorldSpec& world);

/// Per-pixel view label ids for a fine label raster (0 where the view's
/// label space does not contain the mapped class).
StrongLabel map_labels(const WorldSpec& world, const ViewSpec& view, const LabelSpace& space, const StrongLabel& fine);

/// Weak annotation of a scene in the view's label space.
WeakLabel weak_label_for(const WorldSpec& world, const ViewSpec& view, const LabelSpace& space, const Scene& scene);

/// Writes <out>/<dataset_id>/{label_space.json, relations.tsv, manifest.json,
/// images/, labels/} and returns the manifest (paths absolute).
DatasetManifest emit_dataset(const WorldSpec& world, const ViewSpec& view, const std::filesystem::path& out_dir);

struct WorldDocument {
  WorldSpec world;
  std::vector<ViewSpec> views;
};

WorldDocument parse_world(const std::string& json_text);
WorldDocument read_world(const std::filesystem::path& path);

}  // namespace htss
