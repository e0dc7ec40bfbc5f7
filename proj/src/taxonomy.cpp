#include "htss/taxonomy.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "htss/error.hpp"

namespace htss {

namespace {

void check_spaces(std::span<const LabelSpace> spaces) {
  if (spaces.empty()) throw Error(ErrorCode::invalid_argument, "no label spaces given");
  std::set<std::string> ids;
  for (const auto& space : spaces) {
    check_label_space(space);
    if (!ids.insert(space.dataset_id).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate dataset_id '" + space.dataset_id + "'");
    }
  }
}

int find_index(std::span<const std::string> names, std::string_view name) {
  const auto it = std::lower_bound(names.begin(), names.end(), name);
  if (it == names.end() || *it != name) return -1;
  return static_cast<int>(it - names.begin());
}

}  // namespace

int Taxonomy::atom_index(std::string_view name) const {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i] == name) return static_cast<int>(i);
  }
  return -1;
}

const GroupMap& Taxonomy::groups_for(std::string_view dataset_id) const {
  for (const auto& d : datasets) {
    if (d.dataset_id == dataset_id) return d.groups;
  }
  throw Error(ErrorCode::invalid_argument, "dataset '" + std::string(dataset_id) + "' is not in the taxonomy");
}

std::vector<std::string> build_semantic_atoms(std::span<const LabelSpace> spaces,
                                              const RelationTable& relations) {
  check_spaces(spaces);
  if (std::none_of(spaces.begin(), spaces.end(), [](const LabelSpace& s) { return is_strong(s.supervision); })) {
    throw Error(ErrorCode::invalid_argument, "at least one pixel-labeled dataset is required");
  }
  const RelationGraph graph(relations);

  // The multiset union collapses to a set: identical names are one atom.
  std::set<std::string> labels;
  for (const auto& space : spaces) labels.insert(space.classes.begin() + 1, space.classes.end());

  auto removable = [&](const std::string& subject, const std::string& object) {
    if (graph.ancestor(subject, object)) return true;
    return object < subject && graph.synonym(subject, object);
  };

  bool removed = true;
  while (removed) {
    removed = false;
    for (auto subject = labels.begin(); subject != labels.end() && !removed; ++subject) {
      for (const auto& object : labels) {
        if (object != *subject && removable(*subject, object)) {
          labels.erase(subject);
          removed = true;
          break;
        }
      }
    }
  }
  if (labels.empty()) throw Error(ErrorCode::empty_result, "every label was eliminated by the relation table");
  return {labels.begin(), labels.end()};
}

Taxonomy build_group_sets(std::span<const std::string> atoms, std::span<const LabelSpace> spaces,
                          const RelationTable& relations) {
  check_spaces(spaces);
  const RelationGraph graph(relations);

  Taxonomy taxonomy;
  taxonomy.atoms.assign(atoms.begin(), atoms.end());
  std::sort(taxonomy.atoms.begin(), taxonomy.atoms.end());
  taxonomy.atoms.erase(std::unique(taxonomy.atoms.begin(), taxonomy.atoms.end()), taxonomy.atoms.end());

  for (const auto& space : spaces) {
    DatasetGroups entry{space.dataset_id, {}};
    entry.groups.classes.resize(space.classes.size());
    for (std::size_t m = 1; m < space.classes.size(); ++m) {
      const std::string& name = space.classes[m];
      AtomSet& group = entry.groups.classes[m];
      for (std::size_t a = 0; a < taxonomy.atoms.size(); ++a) {
        if (taxonomy.atoms[a] == name || graph.related(name, taxonomy.atoms[a])) {
          group.push_back(static_cast<int>(a));
        }
      }
      if (group.empty()) {
        throw Error(ErrorCode::uncovered_class, "class '" + name + "' of dataset '" + space.dataset_id +
                                                    "' maps to no semantic atom");
      }
    }
    taxonomy.datasets.push_back(std::move(entry));
  }
  return taxonomy;
}

const char* to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::overlap: return "overlap";
    case Violation::Kind::uncovered: return "uncovered";
    case Violation::Kind::out_of_range: return "out_of_range";
    case Violation::Kind::void_grouped: return "void_grouped";
    case Violation::Kind::shape: return "shape";
  }
  return "unknown";
}

std::string Violation::describe() const {
  std::string text = std::string(to_string(kind)) + " dataset=" + dataset_id;
  if (!classes.empty()) {
    text += " classes=";
    for (std::size_t i = 0; i < classes.size(); ++i) text += (i ? "," : "") + classes[i];
  }
  if (!atom.empty()) text += " atom=" + atom;
  return text;
}

std::vector<Violation> validate_taxonomy(const Taxonomy& taxonomy, std::span<const LabelSpace> spaces) {
  std::vector<Violation> report;
  const int atom_count = taxonomy.atom_count();
  for (const auto& space : spaces) {
    const auto it = std::find_if(taxonomy.datasets.begin(), taxonomy.datasets.end(),
                                 [&](const DatasetGroups& d) { return d.dataset_id == space.dataset_id; });
    if (it == taxonomy.datasets.end() || it->groups.size() != space.size()) {
      report.push_back({Violation::Kind::shape, space.dataset_id, {}, {}});
      continue;
    }
    const GroupMap& groups = it->groups;
    if (!groups[0].empty()) report.push_back({Violation::Kind::void_grouped, space.dataset_id, {"void"}, {}});

    std::map<int, std::vector<std::string>> owners;
    for (int m = 1; m < groups.size(); ++m) {
      const std::string& name = space.classes[static_cast<std::size_t>(m)];
      if (groups[m].empty()) report.push_back({Violation::Kind::uncovered, space.dataset_id, {name}, {}});
      for (int atom : groups[m]) {
        if (atom < 0 || atom >= atom_count) {
          report.push_back({Violation::Kind::out_of_range, space.dataset_id, {name}, std::to_string(atom)});
          continue;
        }
        owners[atom].push_back(name);
      }
    }
    for (const auto& [atom, names] : owners) {
      if (names.size() > 1) {
        report.push_back({Violation::Kind::overlap, space.dataset_id, names,
                          taxonomy.atoms[static_cast<std::size_t>(atom)]});
      }
    }
  }
  return report;
}

std::vector<int> AtomPartition::children_of(int ap_index) const {
  std::vector<int> out;
  for (std::size_t s = 0; s < parent_of.size(); ++s) {
    if (parent_of[s] == ap_index) out.push_back(static_cast<int>(s));
  }
  return out;
}

AtomPartition partition_atoms(const Taxonomy& taxonomy, std::span<const LabelSpace> spaces,
                              const RelationTable& relations) {
  const RelationGraph graph(relations);
  std::set<std::string> strong_names;
  for (const auto& space : spaces) {
    if (is_strong(space.supervision)) strong_names.insert(space.classes.begin() + 1, space.classes.end());
  }

  std::set<std::string> a_names;
  std::map<std::string, std::string> parent_name;  // s atom -> p class
  for (const auto& atom : taxonomy.atoms) {
    const bool strongly_named = strong_names.contains(atom) ||
                                std::any_of(strong_names.begin(), strong_names.end(),
                                            [&](const std::string& c) { return graph.synonym(c, atom); });
    if (strongly_named) {
      a_names.insert(atom);
      continue;
    }
    // Nearest pixel-labeled ancestor; ties resolved by name order.
    const std::string* best = nullptr;
    int best_distance = 0;
    for (const auto& candidate : strong_names) {
      const int d = graph.distance(candidate, atom);
      if (d > 0 && (best == nullptr || d < best_distance)) {
        best = &candidate;
        best_distance = d;
      }
    }
    if (best == nullptr) {
      throw Error(ErrorCode::no_strong_parent,
                  "weakly-labeled atom '" + atom + "' has no pixel-labeled ancestor class");
    }
    parent_name[atom] = *best;
  }

  AtomPartition part;
  std::set<std::string> ap(a_names);
  for (const auto& [child, parent] : parent_name) ap.insert(parent);
  part.ap_atoms.assign(ap.begin(), ap.end());
  for (const auto& [child, parent] : parent_name) part.s_atoms.push_back(child);

  std::set<int> parents;
  for (const auto& [child, parent] : parent_name) {
    const int index = find_index(part.ap_atoms, parent);
    part.parent_of.push_back(index);
    parents.insert(index);
  }
  for (int i = 0; i < part.ap_count(); ++i) {
    if (parents.contains(i)) {
      part.p_set.push_back(i);
    } else {
      part.a_set.push_back(i);
    }
  }
  return part;
}

AtomPartition trivial_partition(const Taxonomy& taxonomy) {
  AtomPartition part;
  part.ap_atoms = taxonomy.atoms;
  for (int i = 0; i < part.ap_count(); ++i) part.a_set.push_back(i);
  return part;
}

HeadGroups head_groups(const Taxonomy& taxonomy, const AtomPartition& partition, std::string_view dataset_id) {
  const GroupMap& groups = taxonomy.groups_for(dataset_id);
  HeadGroups out;
  out.main.classes.resize(groups.classes.size());
  out.sub.classes.resize(groups.classes.size());
  for (int m = 1; m < groups.size(); ++m) {
    std::set<int> main;
    std::set<int> sub;
    for (int atom : groups[m]) {
      const std::string& name = taxonomy.atoms[static_cast<std::size_t>(atom)];
      const int ap_index = find_index(partition.ap_atoms, name);
      if (ap_index >= 0) {
        main.insert(ap_index);
        continue;
      }
      const int s_index = find_index(partition.s_atoms, name);
      if (s_index < 0) {
        throw Error(ErrorCode::invalid_argument, "atom '" + name + "' is missing from the partition");
      }
      main.insert(partition.parent_of[static_cast<std::size_t>(s_index)]);
      sub.insert(s_index);
    }
    out.main.classes[static_cast<std::size_t>(m)].assign(main.begin(), main.end());
    out.sub.classes[static_cast<std::size_t>(m)].assign(sub.begin(), sub.end());
  }
  return out;
}

}  // namespace htss
