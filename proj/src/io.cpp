#include "htss/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <nlohmann/json.hpp>
#include <sstream>

#include "htss/error.hpp"

namespace htss {

using json = nlohmann::ordered_json;

namespace {

json parse_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
}

template <typename T>
T field(const json& doc, const char* key, const fs::path& path) {
  if (!doc.contains(key)) throw Error(ErrorCode::parse, path.string() + ": missing key '" + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": bad value for '" + key + "': " + e.what());
  }
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

int to_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error(ErrorCode::parse, "expected integer, got '" + s + "'");
  return v;
}

std::string shortest(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

LabelSpace read_label_space(const fs::path& path) {
  const json doc = parse_json(path);
  LabelSpace space;
  space.dataset_id = field<std::string>(doc, "dataset_id", path);
  space.supervision = parse_supervision(field<std::string>(doc, "supervision", path));
  space.classes = field<std::vector<std::string>>(doc, "classes", path);
  check_label_space(space);
  return space;
}

void write_label_space(const fs::path& path, const LabelSpace& space) {
  json doc;
  doc["dataset_id"] = space.dataset_id;
  doc["supervision"] = to_string(space.supervision);
  doc["classes"] = space.classes;
  write_text(path, doc.dump(2) + "\n");
}

RelationTable parse_relations(const std::string& text) {
  RelationTable table;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      cols.push_back(line.substr(start, tab - start));
    }
    cols.push_back(line.substr(start));
    if (cols.size() != 3) {
      throw Error(ErrorCode::parse, "relation line " + std::to_string(line_no) + ": expected kind<TAB>subject<TAB>object");
    }
    try {
      table.add(parse_relation_kind(cols[0]), cols[1], cols[2]);
    } catch (const Error& e) {
      throw Error(ErrorCode::parse, "relation line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

RelationTable read_relations(const fs::path& path) { return parse_relations(read_text(path)); }

std::string format_relations(const RelationTable& table) {
  std::string out;
  for (const auto& r : table.relations()) {
    // Synonyms are stored twice; emit one direction.
    if (r.kind == RelationKind::synonym && r.object < r.subject) continue;
    out += std::string(to_string(r.kind)) + "\t" + r.subject + "\t" + r.object + "\n";
  }
  return out;
}

WeakLabel parse_weak_label(const std::string& text) {
  WeakLabel label;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("tags:", 0) == 0) {
      for (const auto& tok : split_ws(line.substr(5))) label.tags.push_back(to_int(tok));
      continue;
    }
    const auto cols = split_ws(line);
    if (cols.empty()) continue;
    if (cols.size() != 5) throw Error(ErrorCode::parse, "weak label box needs 5 fields: '" + line + "'");
    label.boxes.push_back({to_int(cols[0]), to_int(cols[1]), to_int(cols[2]), to_int(cols[3]), to_int(cols[4])});
  }
  return label;
}

WeakLabel read_weak_label(const fs::path& path) { return parse_weak_label(read_text(path)); }

std::string format_weak_label(const WeakLabel& label) {
  std::string out;
  for (const Box& b : label.boxes) {
    out += std::to_string(b.class_index) + " " + std::to_string(b.x_min) + " " + std::to_string(b.y_min) + " " +
           std::to_string(b.x_max) + " " + std::to_string(b.y_max) + "\n";
  }
  out += "tags:";
  for (int t : label.tags) out += " " + std::to_string(t);
  out += "\n";
  return out;
}

const char* to_string(Granularity g) { return g == Granularity::fine ? "fine" : "coarse"; }

Granularity parse_granularity(std::string_view text) {
  if (text == "fine") return Granularity::fine;
  if (text == "coarse") return Granularity::coarse;
  throw Error(ErrorCode::parse, "unknown granularity '" + std::string(text) + "'");
}

DatasetManifest read_manifest(const fs::path& path) {
  const json doc = parse_json(path);
  const fs::path base = path.parent_path();
  DatasetManifest m;
  m.dataset_id = field<std::string>(doc, "dataset_id", path);
  m.supervision = parse_supervision(field<std::string>(doc, "supervision", path));
  m.granularity = parse_granularity(field<std::string>(doc, "granularity", path));
  m.label_space = base / field<std::string>(doc, "label_space", path);
  for (const auto& rec : field<json>(doc, "records", path)) {
    m.records.push_back({base / field<std::string>(rec, "image", path), base / field<std::string>(rec, "label", path)});
  }
  return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) { return p.lexically_relative(base).generic_string(); };
  json doc;
  doc["dataset_id"] = manifest.dataset_id;
  doc["supervision"] = to_string(manifest.supervision);
  doc["granularity"] = to_string(manifest.granularity);
  doc["label_space"] = rel(manifest.label_space);
  doc["records"] = json::array();
  for (const auto& r : manifest.records) doc["records"].push_back({{"image", rel(r.image)}, {"label", rel(r.label)}});
  write_text(path, doc.dump(2) + "\n");
}

std::string format_taxonomy(const Taxonomy& taxonomy, std::span<const LabelSpace> spaces,
                            const AtomPartition* partition) {
  json doc;
  doc["atoms"] = taxonomy.atoms;
  doc["datasets"] = json::array();
  for (const auto& d : taxonomy.datasets) {
    const auto space = std::find_if(spaces.begin(), spaces.end(),
                                    [&](const LabelSpace& s) { return s.dataset_id == d.dataset_id; });
    if (space == spaces.end() || space->size() != d.groups.size()) {
      throw Error(ErrorCode::invalid_argument, "no label space for taxonomy dataset '" + d.dataset_id + "'");
    }
    json groups = json::array();
    for (int m = 0; m < d.groups.size(); ++m) {
      std::vector<std::string> names;
      for (int a : d.groups[m]) names.push_back(taxonomy.atoms[static_cast<std::size_t>(a)]);
      groups.push_back({{"class", space->classes[static_cast<std::size_t>(m)]}, {"atoms", names}});
    }
    doc["datasets"].push_back({{"dataset_id", d.dataset_id}, {"groups", groups}});
  }
  if (partition) {
    json p;
    p["ap_atoms"] = partition->ap_atoms;
    p["s_atoms"] = partition->s_atoms;
    json parents = json::object();
    for (int s = 0; s < partition->s_count(); ++s) {
      parents[partition->s_atoms[static_cast<std::size_t>(s)]] =
          partition->ap_atoms[static_cast<std::size_t>(partition->parent_of[static_cast<std::size_t>(s)])];
    }
    p["parent_of"] = parents;
    doc["partition"] = p;
  }
  return doc.dump(2) + "\n";
}

TaxonomyDocument read_taxonomy(const fs::path& path) {
  const json doc = parse_json(path);
  TaxonomyDocument out;
  Taxonomy& t = out.taxonomy;
  t.atoms = field<std::vector<std::string>>(doc, "atoms", path);
  for (const auto& d : field<json>(doc, "datasets", path)) {
    DatasetGroups entry{field<std::string>(d, "dataset_id", path), {}};
    for (const auto& g : field<json>(d, "groups", path)) {
      AtomSet set;
      for (const auto& name : field<std::vector<std::string>>(g, "atoms", path)) {
        const int index = t.atom_index(name);
        if (index < 0) throw Error(ErrorCode::parse, path.string() + ": unknown atom '" + name + "'");
        set.push_back(index);
      }
      std::sort(set.begin(), set.end());
      entry.groups.classes.push_back(std::move(set));
    }
    t.datasets.push_back(std::move(entry));
  }
  if (doc.contains("partition")) {
    const json& p = doc.at("partition");
    AtomPartition part;
    part.ap_atoms = field<std::vector<std::string>>(p, "ap_atoms", path);
    part.s_atoms = field<std::vector<std::string>>(p, "s_atoms", path);
    const auto parents = field<std::map<std::string, std::string>>(p, "parent_of", path);
    std::set<int> p_set;
    for (const auto& s : part.s_atoms) {
      const auto it = parents.find(s);
      const auto pos = it == parents.end() ? part.ap_atoms.end()
                                           : std::find(part.ap_atoms.begin(), part.ap_atoms.end(), it->second);
      if (pos == part.ap_atoms.end()) throw Error(ErrorCode::parse, path.string() + ": subclass '" + s + "' has no parent");
      part.parent_of.push_back(static_cast<int>(pos - part.ap_atoms.begin()));
      p_set.insert(part.parent_of.back());
    }
    for (int i = 0; i < part.ap_count(); ++i) (p_set.contains(i) ? part.p_set : part.a_set).push_back(i);
    out.partition = std::move(part);
  }
  return out;
}

void write_checkpoint(const fs::path& path, const MicroNetParams& params) {
  std::string out = "HTSSCKPT";
  auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  };
  put_u32(kCheckpointVersion);
  put_u32(static_cast<std::uint32_t>(params.shape.in_channels));
  put_u32(static_cast<std::uint32_t>(params.shape.features));
  put_u32(static_cast<std::uint32_t>(params.shape.outputs));
  params.for_each([&](const std::vector<double>& t) {
    for (double v : t) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
    }
  });
  write_text(path, out);
}

MicroNetParams read_checkpoint(const fs::path& path) {
  const std::string bytes = read_text(path);
  std::size_t pos = 0;
  auto take = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw Error(ErrorCode::parse, "truncated checkpoint " + path.string());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    pos += n;
    return p;
  };
  auto u32 = [&] {
    const auto* p = take(4);
    return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
  };
  if (std::memcmp(take(8), "HTSSCKPT", 8) != 0) throw Error(ErrorCode::parse, path.string() + " is not a checkpoint");
  if (const auto version = u32(); version != kCheckpointVersion) {
    throw Error(ErrorCode::parse, "unsupported checkpoint version " + std::to_string(version));
  }
  MicroNetShape shape;
  shape.in_channels = static_cast<int>(u32());
  shape.features = static_cast<int>(u32());
  shape.outputs = static_cast<int>(u32());
  MicroNetParams params = MicroNetParams::zeros(shape);
  params.for_each([&](std::vector<double>& t) {
    for (double& v : t) {
      const auto* p = take(8);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= std::uint64_t{p[i]} << (8 * i);
      v = std::bit_cast<double>(bits);
    }
  });
  if (pos != bytes.size()) throw Error(ErrorCode::parse, "trailing bytes in checkpoint " + path.string());
  return params;
}

std::string format_loss_csv(std::span<const double> losses) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out += std::to_string(i + 1) + "," + shortest(losses[i]) + "\n";
  return out;
}

}  // namespace htss
