#include "htss/synthgen.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <nlohmann/json.hpp>

#include "htss/error.hpp"
#include "htss/raster.hpp"
#include "htss/rng.hpp"

namespace htss {

int WorldSpec::fine_id(std::string_view name) const {
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (concepts[i].name == name) return static_cast<int>(i) + 1;
  }
  return -1;
}

int WorldSpec::coarse_of(int fine_index) const {
  const std::string& name = concepts[static_cast<std::size_t>(fine_index)].name;
  for (std::size_t c = 0; c < hierarchy.size(); ++c) {
    const auto& kids = hierarchy[c].second;
    if (std::find(kids.begin(), kids.end(), name) != kids.end()) return static_cast<int>(c);
  }
  return -1;
}

void check_world(const WorldSpec& w) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::invalid_argument, "world: " + msg); };
  if (w.height < 3 || w.width < 3) fail("canvas must be at least 3x3");
  if (w.channels < 1) fail("channels must be >= 1");
  if (w.concepts.empty()) fail("no concepts");
  if (w.fine_id(w.background) < 0) fail("background '" + w.background + "' is not a concept");
  if (w.min_objects < 0 || w.max_objects < w.min_objects) fail("bad object count range");
  if (w.min_size < 1 || w.max_size < w.min_size) fail("bad object size range");
  std::set<std::string> names;
  for (const auto& c : w.concepts) {
    if (!names.insert(c.name).second) fail("duplicate concept '" + c.name + "'");
    if (static_cast<int>(c.signature.size()) != w.channels) fail("signature of '" + c.name + "' has wrong length");
    if (c.noise < 0.0) fail("negative noise for '" + c.name + "'");
  }
  for (std::size_t i = 0; i < w.concepts.size(); ++i) {
    for (std::size_t j = i + 1; j < w.concepts.size(); ++j) {
      if (w.concepts[i].signature == w.concepts[j].signature) {
        fail("signatures of '" + w.concepts[i].name + "' and '" + w.concepts[j].name + "' coincide");
      }
    }
  }
  if (!w.hierarchy.empty()) {
    std::map<std::string, int> covered;
    std::set<std::string> coarse;
    for (const auto& [parent, kids] : w.hierarchy) {
      if (!coarse.insert(parent).second) fail("duplicate coarse concept '" + parent + "'");
      if (kids.empty()) fail("coarse concept '" + parent + "' has no children");
      if (names.contains(parent) && (kids.size() != 1 || kids.front() != parent)) {
        fail("coarse concept '" + parent + "' reuses a fine name for a different group");
      }
      for (const auto& k : kids) {
        if (!names.contains(k)) fail("hierarchy names unknown concept '" + k + "'");
        ++covered[k];
      }
    }
    for (const auto& n : names) {
      if (covered[n] != 1) fail("concept '" + n + "' must belong to exactly one coarse concept");
    }
  }
}

Scene generate_scene(const WorldSpec& w, std::uint64_t index, const std::set<std::string>& exclude) {
  Rng rng(w.seed ^ index);
  const int bg = w.fine_id(w.background);
  std::vector<int> candidates;
  for (std::size_t i = 0; i < w.concepts.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (id != bg && !exclude.contains(w.concepts[i].name)) candidates.push_back(id);
  }

  Scene scene;
  scene.labels = {w.height, w.width, std::vector<std::uint16_t>(static_cast<std::size_t>(w.height) * w.width,
                                                                static_cast<std::uint16_t>(bg))};
  const int objects = candidates.empty() ? 0 : rng.between(w.min_objects, w.max_objects);
  for (int k = 0; k < objects; ++k) {
    const int id = candidates[static_cast<std::size_t>(rng.below(candidates.size()))];
    const int bw = std::min(rng.between(w.min_size, w.max_size), w.width);
    const int bh = std::min(rng.between(w.min_size, w.max_size), w.height);
    const int x0 = rng.between(0, w.width - bw);
    const int y0 = rng.between(0, w.height - bh);
    for (int y = y0; y < y0 + bh; ++y) {
      for (int x = x0; x < x0 + bw; ++x) scene.labels.class_ids[static_cast<std::size_t>(y) * w.width + x] = static_cast<std::uint16_t>(id);
    }
    scene.boxes.push_back({id, x0, y0, x0 + bw, y0 + bh});
  }

  scene.features = FeatureRaster(w.height, w.width, w.channels);
  for (int p = 0; p < scene.features.pixels(); ++p) {
    const Concept& c = w.concepts[static_cast<std::size_t>(scene.labels.class_ids[static_cast<std::size_t>(p)] - 1)];
    auto f = scene.features.at(p);
    for (int ch = 0; ch < w.channels; ++ch) f[ch] = c.signature[static_cast<std::size_t>(ch)] + c.noise * rng.normal();
  }
  return scene;
}

LabelSpace view_label_space(const WorldSpec& w, const ViewSpec& view) {
  LabelSpace space;
  space.dataset_id = view.dataset_id;
  space.supervision = view.supervision;
  space.classes.push_back("void");
  std::vector<std::string> all;
  if (view.granularity == Granularity::fine) {
    for (const auto& c : w.concepts) all.push_back(c.name);
  } else {
    if (w.hierarchy.empty()) throw Error(ErrorCode::invalid_argument, "coarse view '" + view.dataset_id + "' needs a hierarchy");
    for (const auto& [parent, kids] : w.hierarchy) all.push_back(parent);
  }
  if (view.classes.empty()) {
    space.classes.insert(space.classes.end(), all.begin(), all.end());
  } else {
    for (const auto& name : view.classes) {
      if (std::find(all.begin(), all.end(), name) == all.end()) {
        throw Error(ErrorCode::invalid_argument, "view '" + view.dataset_id + "' restricts to unknown class '" + name + "'");
      }
      space.classes.push_back(name);
    }
  }
  check_label_space(space);
  return space;
}

RelationTable hierarchy_relations(const WorldSpec& w) {
  RelationTable table;
  for (const auto& [parent, kids] : w.hierarchy) {
    for (const auto& k : kids) {
      if (k != parent) table.add(RelationKind::hypernym, parent, k);
    }
  }
  return table;
}

namespace {

// fine id -> view class id (0 when not in the view's space).
std::vector<int> view_mapping(const WorldSpec& w, const ViewSpec& view, const LabelSpace& space) {
  std::vector<int> map(w.concepts.size() + 1, 0);
  for (std::size_t i = 0; i < w.concepts.size(); ++i) {
    const std::string& name = view.granularity == Granularity::fine
                                  ? w.concepts[i].name
                                  : w.hierarchy[static_cast<std::size_t>(w.coarse_of(static_cast<int>(i)))].first;
    map[i + 1] = std::max(0, space.index_of(name));
  }
  return map;
}

}  // namespace

StrongLabel map_labels(const WorldSpec& w, const ViewSpec& view, const LabelSpace& space, const StrongLabel& fine) {
  const auto map = view_mapping(w, view, space);
  StrongLabel out = fine;
  for (auto& id : out.class_ids) id = static_cast<std::uint16_t>(map[id]);
  return out;
}

WeakLabel weak_label_for(const WorldSpec& w, const ViewSpec& view, const LabelSpace& space, const Scene& scene) {
  const auto map = view_mapping(w, view, space);
  WeakLabel label;
  if (view.supervision == Supervision::bbox) {
    for (const Box& b : scene.boxes) {
      const int c = map[static_cast<std::size_t>(b.class_index)];
      if (c == 0) continue;
      label.boxes.push_back({c, std::max(0, b.x_min - view.box_padding), std::max(0, b.y_min - view.box_padding),
                             std::min(w.width, b.x_max + view.box_padding),
                             std::min(w.height, b.y_max + view.box_padding)});
    }
  } else if (view.supervision == Supervision::image_tag) {
    std::set<int> present;
    for (auto id : scene.labels.class_ids) {
      if (const int c = map[id]; c != 0) present.insert(c);
    }
    label.tags.assign(present.begin(), present.end());
  } else {
    throw Error(ErrorCode::invalid_argument, "weak_label_for needs a bbox or image_tag view");
  }
  return label;
}

DatasetManifest emit_dataset(const WorldSpec& w, const ViewSpec& view, const std::filesystem::path& out_dir) {
  check_world(w);
  if (view.count < 0) throw Error(ErrorCode::invalid_argument, "negative image count");
  const LabelSpace space = view_label_space(w, view);
  const auto dir = out_dir / view.dataset_id;
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "labels");

  DatasetManifest manifest;
  manifest.dataset_id = view.dataset_id;
  manifest.supervision = view.supervision;
  manifest.granularity = view.granularity;
  manifest.label_space = dir / "label_space.json";
  write_label_space(manifest.label_space, space);
  write_text(dir / "relations.tsv", format_relations(hierarchy_relations(w)));

  for (int i = 0; i < view.count; ++i) {
    const Scene scene = generate_scene(w, view.first_index + static_cast<std::uint64_t>(i), view.exclude);
    char stem[32];
    std::snprintf(stem, sizeof stem, "%05d", i);
    ManifestRecord rec;
    rec.image = dir / "images" / (std::string(stem) + ".rast");
    write_field(rec.image, scene.features);
    if (is_strong(view.supervision)) {
      rec.label = dir / "labels" / (std::string(stem) + ".rast");
      write_label(rec.label, map_labels(w, view, space, scene.labels));
    } else {
      rec.label = dir / "labels" / (std::string(stem) + ".txt");
      write_text(rec.label, format_weak_label(weak_label_for(w, view, space, scene)));
    }
    manifest.records.push_back(std::move(rec));
  }
  write_manifest(dir / "manifest.json", manifest);
  return manifest;
}

WorldDocument parse_world(const std::string& text) {
  using json = nlohmann::ordered_json;
  WorldDocument doc;
  try {
    const json j = json::parse(text);
    WorldSpec& w = doc.world;
    w.height = j.value("height", w.height);
    w.width = j.value("width", w.width);
    w.channels = j.value("channels", w.channels);
    w.seed = j.value("seed", w.seed);
    w.background = j.at("background").get<std::string>();
    for (const auto& c : j.at("concepts")) {
      w.concepts.push_back({c.at("name").get<std::string>(), c.at("signature").get<std::vector<double>>(),
                            c.value("noise", 0.0)});
    }
    if (j.contains("hierarchy")) {
      for (const auto& [parent, kids] : j.at("hierarchy").items()) {
        w.hierarchy.emplace_back(parent, kids.get<std::vector<std::string>>());
      }
    }
    if (j.contains("objects")) {
      const json& o = j.at("objects");
      w.min_objects = o.value("min", w.min_objects);
      w.max_objects = o.value("max", w.max_objects);
      w.min_size = o.value("min_size", w.min_size);
      w.max_size = o.value("max_size", w.max_size);
    }
    for (const auto& v : j.value("views", json::array())) {
      ViewSpec view;
      view.dataset_id = v.at("dataset_id").get<std::string>();
      view.supervision = parse_supervision(v.at("supervision").get<std::string>());
      view.granularity = parse_granularity(v.value("granularity", std::string("fine")));
      view.count = v.at("count").get<int>();
      view.first_index = v.value("first_index", std::uint64_t{0});
      for (const auto& e : v.value("exclude", json::array())) view.exclude.insert(e.get<std::string>());
      view.classes = v.value("classes", std::vector<std::string>{});
      view.box_padding = v.value("box_padding", 0);
      doc.views.push_back(std::move(view));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("world spec: ") + e.what());
  }
  check_world(doc.world);
  return doc;
}

WorldDocument read_world(const std::filesystem::path& path) { return parse_world(read_text(path)); }

}  // namespace htss
