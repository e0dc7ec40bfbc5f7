#include "htss/relations.hpp"

#include <deque>
#include <numeric>

#include "htss/error.hpp"

namespace htss {

const char* to_string(RelationKind kind) {
  switch (kind) {
    case RelationKind::synonym: return "synonym";
    case RelationKind::hypernym: return "hypernym";
    case RelationKind::holonym: return "holonym";
  }
  return "unknown";
}

RelationKind parse_relation_kind(std::string_view text) {
  if (text == "synonym") return RelationKind::synonym;
  if (text == "hypernym") return RelationKind::hypernym;
  if (text == "holonym") return RelationKind::holonym;
  throw Error(ErrorCode::parse, "unknown relation kind '" + std::string(text) + "'");
}

void RelationTable::add(RelationKind kind, std::string subject, std::string object) {
  if (subject.empty() || object.empty()) throw Error(ErrorCode::invalid_argument, "relation with empty name");
  if (subject == object) throw Error(ErrorCode::invalid_argument, "self relation on '" + subject + "'");
  if (kind == RelationKind::synonym) relations_.insert({kind, object, subject});
  relations_.insert({kind, std::move(subject), std::move(object)});
}

RelationTable RelationTable::restricted_to(const std::set<std::string>& names) const {
  RelationTable out;
  for (const auto& r : relations_) {
    if (names.contains(r.subject) && names.contains(r.object)) out.relations_.insert(r);
  }
  return out;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

RelationGraph::RelationGraph(const RelationTable& table) {
  for (const auto& r : table.relations()) {
    names_.try_emplace(r.subject, static_cast<int>(names_.size()));
    names_.try_emplace(r.object, static_cast<int>(names_.size()));
  }
  const std::size_t n = names_.size();
  UnionFind uf(n);
  for (const auto& r : table.relations()) {
    if (r.kind == RelationKind::synonym) uf.unite(names_.at(r.subject), names_.at(r.object));
  }
  std::vector<int> class_id(n, -1);
  int classes = 0;
  class_of_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int root = uf.find(static_cast<int>(i));
    if (class_id[root] < 0) class_id[root] = classes++;
    class_of_[i] = class_id[root];
  }

  std::vector<std::vector<int>> edges(classes);
  for (const auto& r : table.relations()) {
    if (r.kind == RelationKind::synonym) continue;
    const int from = class_of_[names_.at(r.subject)];
    const int to = class_of_[names_.at(r.object)];
    if (from == to) {
      throw Error(ErrorCode::cyclic_relations,
                  to_string(r.kind) + std::string("(") + r.subject + ", " + r.object + ") links synonyms");
    }
    edges[from].push_back(to);
  }

  // Cycle check: iterative DFS with colors.
  std::vector<int> color(classes, 0);
  for (int start = 0; start < classes; ++start) {
    if (color[start] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
    color[start] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < edges[node].size()) {
        const int child = edges[node][next++];
        if (color[child] == 1) throw Error(ErrorCode::cyclic_relations, "hypernym/holonym graph has a cycle");
        if (color[child] == 0) {
          color[child] = 1;
          stack.emplace_back(child, 0);
        }
      } else {
        color[node] = 2;
        stack.pop_back();
      }
    }
  }

  distance_.assign(classes, std::vector<int>(classes, -1));
  for (int source = 0; source < classes; ++source) {
    auto& row = distance_[source];
    std::deque<int> queue;
    for (int child : edges[source]) {
      if (row[child] < 0) {
        row[child] = 1;
        queue.push_back(child);
      }
    }
    while (!queue.empty()) {
      const int node = queue.front();
      queue.pop_front();
      for (int child : edges[node]) {
        if (row[child] < 0) {
          row[child] = row[node] + 1;
          queue.push_back(child);
        }
      }
    }
  }
}

int RelationGraph::node_of(std::string_view name) const {
  const auto it = names_.find(name);
  return it == names_.end() ? -1 : it->second;
}

bool RelationGraph::synonym(std::string_view a, std::string_view b) const {
  if (a == b) return false;
  const int na = node_of(a);
  const int nb = node_of(b);
  return na >= 0 && nb >= 0 && class_of_[na] == class_of_[nb];
}

int RelationGraph::distance(std::string_view a, std::string_view b) const {
  const int na = node_of(a);
  const int nb = node_of(b);
  if (na < 0 || nb < 0) return -1;
  return distance_[class_of_[na]][class_of_[nb]];
}

bool RelationGraph::ancestor(std::string_view a, std::string_view b) const { return distance(a, b) > 0; }

}  // namespace htss
