#pragma once

#include <span>
#include <string>
#include <vector>

#include "htss/relations.hpp"
#include "htss/types.hpp"

namespace htss {

/// Sorted atom indices.
using AtomSet = std::vector<int>;

/// For one dataset: one atom set per class. Entry 0 (void) is always empty.
struct GroupMap {
  std::vector<AtomSet> classes;

  int size() const { return static_cast<int>(classes.size()); }
  const AtomSet& operator[](int m) const { return classes[static_cast<std::size_t>(m)]; }
};

struct DatasetGroups {
  std::string dataset_id;
  GroupMap groups;
};

/// Unified label space: atoms in canonical (sorted) order plus per-dataset
/// group sets. Void is implicit and is never an atom.
struct Taxonomy {
  std::vector<std::string> atoms;
  std::vector<DatasetGroups> datasets;

  int atom_count() const { return static_cast<int>(atoms.size()); }
  int atom_index(std::string_view name) const;
  /// Throws InvalidArgument when the dataset is unknown.
  const GroupMap& groups_for(std::string_view dataset_id) const;
};

/// Extract semantic atoms: starting from the union of all non-void labels,
/// repeatedly drop a label that is a synonym, hypernym or holonym of another
/// surviving label. Pairs are visited in lexicographic (subject, object)
/// order; among synonyms the lexicographically smaller name survives.
std::vector<std::string> build_semantic_atoms(std::span<const LabelSpace> spaces,
                                              const RelationTable& relations);

/// Group set of each class: atoms equal to the class, synonyms of it, or
/// reachable from it through hypernym/holonym edges.
Taxonomy build_group_sets(std::span<const std::string> atoms, std::span<const LabelSpace> spaces,
                          const RelationTable& relations);

struct Violation {
  enum class Kind { overlap, uncovered, out_of_range, void_grouped, shape };
  Kind kind;
  std::string dataset_id;
  std::vector<std::string> classes;
  std::string atom;

  std::string describe() const;
};

const char* to_string(Violation::Kind kind);

/// Lists every broken taxonomy invariant; empty iff the taxonomy is valid.
std::vector<Violation> validate_taxonomy(const Taxonomy& taxonomy, std::span<const LabelSpace> spaces);

/// Split for mixed supervision. Atoms named only by weakly-labeled datasets
/// (s set) are replaced in the main head by their nearest pixel-labeled
/// ancestor class (p set); everything else stays in the a set. The main
/// head predicts over ap_atoms = a ∪ p and the subclass head over s_atoms.
struct AtomPartition {
  std::vector<std::string> ap_atoms;
  std::vector<std::string> s_atoms;
  std::vector<int> a_set;       // indices into ap_atoms
  std::vector<int> p_set;       // indices into ap_atoms
  std::vector<int> parent_of;   // s index -> ap index (member of p_set)

  bool has_subclasses() const { return !s_atoms.empty(); }
  int ap_count() const { return static_cast<int>(ap_atoms.size()); }
  int s_count() const { return static_cast<int>(s_atoms.size()); }
  int output_count() const { return ap_count() + s_count(); }
  std::vector<int> children_of(int ap_index) const;
};

AtomPartition partition_atoms(const Taxonomy& taxonomy, std::span<const LabelSpace> spaces,
                              const RelationTable& relations);

/// Partition with no subclasses: ap = all atoms.
AtomPartition trivial_partition(const Taxonomy& taxonomy);

/// Group maps for the two heads of a dataset. Taxonomy atoms in the s set
/// are routed to their parent in the main head and to themselves in the
/// subclass head; for a trivial partition `main` equals the taxonomy groups
/// and `sub` is all-empty.
struct HeadGroups {
  GroupMap main;
  GroupMap sub;
};

HeadGroups head_groups(const Taxonomy& taxonomy, const AtomPartition& partition,
                       std::string_view dataset_id);

}  // namespace htss
