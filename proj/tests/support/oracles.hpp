// Independent reference implementations used by the unit and acceptance tests.
// Nothing here calls into the toolkit's algorithms.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "htss/relations.hpp"
#include "htss/rng.hpp"
#include "htss/types.hpp"

namespace oracle {

inline htss::LabelSpace space(std::string id, htss::Supervision kind, std::vector<std::string> classes) {
  htss::LabelSpace s;
  s.dataset_id = std::move(id);
  s.supervision = kind;
  s.classes = {"void"};
  s.classes.insert(s.classes.end(), classes.begin(), classes.end());
  return s;
}

// Dense closure of a relation table over its names (Floyd-Warshall style).
class Closure {
 public:
  explicit Closure(const htss::RelationTable& table) {
    for (const auto& r : table.relations()) {
      index(r.subject);
      index(r.object);
    }
    const std::size_t n = names_.size();
    syn_.assign(n, std::vector<bool>(n, false));
    anc_.assign(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) syn_[i][i] = true;
    std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
    for (const auto& r : table.relations()) {
      const auto a = names_.at(r.subject);
      const auto b = names_.at(r.object);
      if (r.kind == htss::RelationKind::synonym) {
        syn_[a][b] = syn_[b][a] = true;
      } else {
        edge[a][b] = true;
      }
    }
    warshall(syn_);
    // one step = synonym* edge synonym*; ancestor = one or more steps
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t x = 0; x < n; ++x)
          for (std::size_t y = 0; y < n; ++y)
            if (syn_[a][x] && edge[x][y] && syn_[y][b]) anc_[a][b] = true;
    warshall(anc_);
  }

  bool synonym(const std::string& a, const std::string& b) const {
    if (a == b) return false;
    const auto ia = names_.find(a), ib = names_.find(b);
    return ia != names_.end() && ib != names_.end() && syn_[ia->second][ib->second];
  }
  bool ancestor(const std::string& a, const std::string& b) const {
    const auto ia = names_.find(a), ib = names_.find(b);
    return ia != names_.end() && ib != names_.end() && anc_[ia->second][ib->second];
  }
  bool cyclic() const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (anc_[i][i]) return true;
    return false;
  }

 private:
  std::size_t index(const std::string& name) {
    return names_.try_emplace(name, names_.size()).first->second;
  }
  static void warshall(std::vector<std::vector<bool>>& m) {
    const std::size_t n = m.size();
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        if (m[i][k])
          for (std::size_t j = 0; j < n; ++j)
            if (m[k][j]) m[i][j] = true;
  }

  std::map<std::string, std::size_t> names_;
  std::vector<std::vector<bool>> syn_, anc_;
};

// Fixed-point removal in a random order: drop any label that is an ancestor
// of another survivor, or a synonym of a lexicographically smaller survivor.
inline std::vector<std::string> brute_force_atoms(const std::vector<htss::LabelSpace>& spaces,
                                                  const htss::RelationTable& table, std::uint64_t seed) {
  const Closure c(table);
  std::set<std::string> pool;
  for (const auto& s : spaces)
    for (std::size_t i = 1; i < s.classes.size(); ++i) pool.insert(s.classes[i]);
  std::vector<std::string> live(pool.begin(), pool.end());
  htss::Rng rng(seed);
  for (;;) {
    std::vector<std::size_t> removable;
    for (std::size_t i = 0; i < live.size(); ++i)
      for (std::size_t j = 0; j < live.size(); ++j)
        if (i != j && (c.ancestor(live[i], live[j]) || (c.synonym(live[i], live[j]) && live[j] < live[i]))) {
          removable.push_back(i);
          break;
        }
    if (removable.empty()) break;
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(removable[rng.below(removable.size())]));
  }
  std::sort(live.begin(), live.end());
  return live;
}

// Random consistent instance: a forest hierarchy (hypernym/holonym edges
// from parent to child), some synonym aliases, and label spaces that are
// antichains of the resulting order. The first space is pixel-labeled.
struct Instance {
  htss::RelationTable relations;
  std::vector<htss::LabelSpace> spaces;
};

inline Instance random_forest_instance(htss::Rng& rng, int max_labels = 8, int max_spaces = 3) {
  static const char* kPool[] = {"ant", "bee", "cat", "dog", "eel", "fox", "gnu", "hen", "ibis", "jay", "kiwi", "lynx"};
  Instance inst;
  const int n = rng.between(2, max_labels);
  std::vector<std::string> names(std::begin(kPool), std::end(kPool));
  rng.shuffle(std::span<std::string>(names));
  names.resize(static_cast<std::size_t>(n));
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  for (int i = 1; i < n; ++i) {
    if (rng.uniform() < 0.6) {
      parent[static_cast<std::size_t>(i)] = rng.between(0, i - 1);
      const auto kind = rng.uniform() < 0.5 ? htss::RelationKind::hypernym : htss::RelationKind::holonym;
      inst.relations.add(kind, names[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])],
                         names[static_cast<std::size_t>(i)]);
    }
  }
  // A few nodes become aliases of an earlier, unrelated-by-edges node.
  std::vector<std::string> all = names;
  for (int i = 0; i < n && static_cast<int>(all.size()) < max_labels; ++i) {
    if (rng.uniform() < 0.15) {
      const std::string alias = names[static_cast<std::size_t>(i)] + "_syn";
      inst.relations.add(htss::RelationKind::synonym, names[static_cast<std::size_t>(i)], alias);
      all.push_back(alias);
    }
  }
  const Closure c(inst.relations);
  const int spaces = rng.between(1, max_spaces);
  for (int s = 0; s < spaces; ++s) {
    std::vector<std::string> pick = all;
    rng.shuffle(std::span<std::string>(pick));
    std::vector<std::string> chosen;
    for (const auto& name : pick) {
      if (static_cast<int>(chosen.size()) >= max_labels) break;
      if (rng.uniform() < 0.4) continue;
      bool ok = true;
      for (const auto& o : chosen)
        if (c.ancestor(name, o) || c.ancestor(o, name) || c.synonym(name, o)) ok = false;
      if (ok) chosen.push_back(name);
    }
    if (chosen.empty()) chosen.push_back(pick.front());
    const htss::Supervision kinds[] = {htss::Supervision::pixel_dense, htss::Supervision::pixel_coarse,
                                       htss::Supervision::bbox, htss::Supervision::image_tag};
    const auto kind = s == 0 ? htss::Supervision::pixel_dense : kinds[rng.below(4)];
    inst.spaces.push_back(space("d" + std::to_string(s), kind, chosen));
  }
  return inst;
}

// Random acyclic relation table over arbitrary DAG shapes (multiple parents,
// synonyms across unrelated nodes). Spaces are arbitrary subsets.
inline Instance random_dag_instance(htss::Rng& rng, int max_labels = 8, int max_spaces = 3) {
  for (;;) {
    Instance inst;
    const int n = rng.between(1, max_labels);
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)) + "x");
    rng.shuffle(std::span<std::string>(names));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double u = rng.uniform();
        if (u < 0.15) inst.relations.add(htss::RelationKind::hypernym, names[i], names[j]);
        else if (u < 0.25) inst.relations.add(htss::RelationKind::holonym, names[i], names[j]);
        else if (u < 0.32) inst.relations.add(htss::RelationKind::synonym, names[i], names[j]);
      }
    if (Closure(inst.relations).cyclic()) continue;
    const int spaces = rng.between(1, max_spaces);
    for (int s = 0; s < spaces; ++s) {
      std::vector<std::string> chosen;
      for (const auto& name : names)
        if (rng.uniform() < 0.5) chosen.push_back(name);
      if (chosen.empty()) chosen.push_back(names[rng.below(names.size())]);
      rng.shuffle(std::span<std::string>(chosen));
      inst.spaces.push_back(space("d" + std::to_string(s), htss::Supervision::pixel_dense, chosen));
    }
    return inst;
  }
}

// Plain per-pixel softmax cross-entropy over one-hot integer targets
// (target < 0 = ignored), mean over labeled pixels.
struct PlainCE {
  double loss = 0.0;
  std::vector<double> grad;
};

inline PlainCE plain_softmax_ce(const std::vector<double>& logits, int depth, const std::vector<int>& target) {
  PlainCE out;
  out.grad.assign(logits.size(), 0.0);
  const std::size_t pixels = target.size();
  int labeled = 0;
  for (int t : target) labeled += t >= 0 ? 1 : 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (target[p] < 0) continue;
    const double* l = logits.data() + p * depth;
    double peak = l[0];
    for (int k = 1; k < depth; ++k) peak = std::max(peak, l[k]);
    double z = 0.0;
    for (int k = 0; k < depth; ++k) z += std::exp(l[k] - peak);
    out.loss += -((l[target[p]] - peak) - std::log(z)) / labeled;
    for (int k = 0; k < depth; ++k) {
      const double prob = std::exp(l[k] - peak) / z;
      out.grad[p * depth + k] = (prob - (k == target[p] ? 1.0 : 0.0)) / labeled;
    }
  }
  return out;
}

// Fourth-order central finite differences of f around x.
inline std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double eps = 1e-4) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    const auto at = [&](double d) {
      x[i] = keep + d;
      return f(x);
    };
    g[i] = (at(-2 * eps) - 8 * at(-eps) + 8 * at(eps) - at(2 * eps)) / (12.0 * eps);
    x[i] = keep;
  }
  return g;
}

// Norm-wise relative error: max |a - b| over max |b| (b is the reference).
// The scale is floored at 1e-3 so that near-zero gradients, where the
// reference is pure round-off, are judged on absolute error.
inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / std::max(scale, 1e-3);
}

}  // namespace oracle
