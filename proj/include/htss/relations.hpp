#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace htss {

enum class RelationKind { synonym, hypernym, holonym };

const char* to_string(RelationKind kind);
RelationKind parse_relation_kind(std::string_view text);

/// kind(subject, object): for hypernym/holonym the subject is the broader
/// concept (hypernym(vehicle, car), holonym(car, wheel)).
struct Relation {
  RelationKind kind;
  std::string subject;
  std::string object;

  auto operator<=>(const Relation&) const = default;
};

/// Normalized set of lexico-semantic relations. Synonyms are stored in both
/// directions; self relations are rejected.
class RelationTable {
 public:
  RelationTable() = default;

  void add(RelationKind kind, std::string subject, std::string object);
  const std::set<Relation>& relations() const { return relations_; }
  bool empty() const { return relations_.empty(); }

  /// Subset of the table whose subject and object are both in `names`.
  RelationTable restricted_to(const std::set<std::string>& names) const;

 private:
  std::set<Relation> relations_;
};

/// Closure of a relation table. Synonym classes are collapsed and the
/// hypernym/holonym edges between them must form a DAG; construction throws
/// CyclicRelations otherwise.
class RelationGraph {
 public:
  explicit RelationGraph(const RelationTable& table);

  /// a and b are distinct names in the same synonym class.
  bool synonym(std::string_view a, std::string_view b) const;

  /// b is reachable from a through at least one hypernym/holonym edge,
  /// synonyms being interchangeable along the path.
  bool ancestor(std::string_view a, std::string_view b) const;

  /// ancestor(a, b) or synonym(a, b).
  bool related(std::string_view a, std::string_view b) const {
    return synonym(a, b) || ancestor(a, b);
  }

  /// Length of the shortest edge path from a to b, or -1 when unreachable.
  int distance(std::string_view a, std::string_view b) const;

 private:
  int node_of(std::string_view name) const;

  std::map<std::string, int, std::less<>> names_;
  std::vector<int> class_of_;                 // name node -> synonym class
  std::vector<std::vector<int>> distance_;    // class x class, -1 if unreachable
};

}  // namespace htss
