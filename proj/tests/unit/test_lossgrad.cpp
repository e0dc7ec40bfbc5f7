#include <doctest.h>

#include <cmath>

#include "htss/annotations.hpp"
#include "htss/error.hpp"
#include "htss/lossgrad.hpp"
#include "oracles.hpp"

using namespace htss;

namespace {

LogitRaster logits_1px(std::vector<double> v) {
  LogitRaster l(1, 1, static_cast<int>(v.size()));
  l.values = std::move(v);
  return l;
}

PseudoCanvas one_hot_1px(int classes, int m) { return strong_to_canvas(StrongLabel{1, 1, {static_cast<std::uint16_t>(m)}}, classes); }

GroupMap singletons(int atoms) {
  GroupMap g;
  g.classes.push_back({});
  for (int a = 0; a < atoms; ++a) g.classes.push_back({a});
  return g;
}

}  // namespace

TEST_CASE("softmax closed forms") {
  CHECK(softmax_atoms(logits_1px({0, 0})).values == std::vector<double>{0.5, 0.5});
  for (double c : {-700.0, 0.0, 3.5, 900.0}) {
    const auto s = softmax_atoms(logits_1px({c, c, c})).values;
    for (double v : s) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  const auto s = softmax_atoms(logits_1px({std::log(1.0), std::log(3.0)})).values;
  CHECK(std::abs(s[0] - 0.25) < 1e-15);
  CHECK(std::abs(s[1] - 0.75) < 1e-15);
  CHECK_THROWS_AS(softmax_atoms(logits_1px({0, NAN})), Error);
  CHECK_THROWS_AS(softmax_atoms(logits_1px({0, INFINITY})), Error);
  const auto tail = softmax_atoms(logits_1px({5, 0, 0}), 1, 2).values;
  CHECK(tail == std::vector<double>{0.5, 0.5});
}

TEST_CASE("group accumulation") {
  AtomDistribution d(1, 1, 3);
  d.values = {0.2, 0.3, 0.5};
  const GroupMap g{{{}, {0, 1}, {2}}};
  const auto s = accumulate_groups(d, g).values;
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s[2] == 0.5);
  CHECK(accumulate_groups(d, singletons(3)).values == std::vector<double>{0, 0.2, 0.3, 0.5});
  CHECK(accumulate_groups(d, GroupMap{{{}, {0, 1, 2}}}).values[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(accumulate_groups(d, GroupMap{{{}, {3}}}), Error);
}

TEST_CASE("loss closed forms") {
  const auto d2 = softmax_atoms(logits_1px({0, 0}));
  CHECK(std::abs(ce_loss_image(one_hot_1px(3, 1), d2, singletons(2)) - std::log(2.0)) < 1e-15);
  CHECK(ce_loss_image(one_hot_1px(2, 1), d2, GroupMap{{{}, {0, 1}}}) == doctest::Approx(0.0));

  const auto d3 = softmax_atoms(logits_1px({0, 0, 0}));
  const GroupMap ab{{{}, {0, 1}, {2}}};
  CHECK(std::abs(ce_loss_image(one_hot_1px(3, 1), d3, ab) + std::log(2.0 / 3.0)) < 1e-15);
  CHECK_THROWS_AS(ce_loss_image(canvas_from_boxes({}, 1, 1, 3), d3, ab), Error);
}

TEST_CASE("gradient closed forms") {
  const auto g = grad_logits(one_hot_1px(3, 2), softmax_atoms(logits_1px({0, 0})), singletons(2)).values;
  CHECK(std::abs(g[0] - 0.5) < 1e-12);
  CHECK(std::abs(g[1] + 0.5) < 1e-12);

  const auto g3 = grad_logits(one_hot_1px(3, 1), softmax_atoms(logits_1px({0, 0, 0})), GroupMap{{{}, {0, 1}, {2}}}).values;
  CHECK(std::abs(g3[0] + 1.0 / 6.0) < 1e-12);
  CHECK(std::abs(g3[1] + 1.0 / 6.0) < 1e-12);
  CHECK(std::abs(g3[2] - 1.0 / 3.0) < 1e-12);

  const auto g0 = grad_logits(one_hot_1px(2, 1), softmax_atoms(logits_1px({0.3, -1, 2})), GroupMap{{{}, {0, 1, 2}}}).values;
  for (double v : g0) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("gradient matches finite differences on soft targets") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int atoms = rng.between(2, 8);
    const int h = rng.between(1, 3), w = rng.between(1, 3);
    LogitRaster l(h, w, atoms);
    for (auto& v : l.values) v = rng.uniform(-3, 3);
    // random groups over a random subset of atoms
    const int classes = rng.between(1, atoms);
    GroupMap g{std::vector<AtomSet>(static_cast<std::size_t>(classes + 1))};
    for (int a = 0; a < atoms; ++a) {
      const int m = rng.between(0, classes);
      if (m > 0) g.classes[static_cast<std::size_t>(m)].push_back(a);
    }
    for (int m = 1; m <= classes; ++m) {
      if (g.classes[static_cast<std::size_t>(m)].empty()) g.classes[static_cast<std::size_t>(m)].push_back(0);
    }
    for (auto& c : g.classes) {
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
    }
    PseudoCanvas t(h, w, classes + 2);
    for (int p = 0; p < t.pixels(); ++p) {
      auto v = t.at(p);
      double sum = 0;
      for (int m = 1; m <= classes; ++m) sum += v[m] = rng.uniform() < 0.5 ? rng.uniform() : 0.0;
      if (sum == 0) v[1] = sum = 1;
      for (int m = 1; m <= classes; ++m) v[m] /= sum;
    }
    const auto f = [&](const std::vector<double>& x) {
      LogitRaster lx = l;
      lx.values = x;
      return ce_loss_image(t, softmax_atoms(lx), g);
    };
    const auto fd = oracle::finite_diff(f, l.values);
    CHECK(oracle::rel_error(grad_logits(t, softmax_atoms(l), g).values, fd) < 1e-5);
  }
}

TEST_CASE("shift invariance and zero-sum per pixel") {
  Rng rng(11);
  LogitRaster l(2, 2, 5);
  for (auto& v : l.values) v = rng.uniform(-2, 2);
  const GroupMap g{{{}, {0, 3}, {1}, {2, 4}}};
  WeakLabel w;
  w.boxes = {{1, 0, 0, 2, 1}, {3, 0, 0, 1, 2}};
  const PseudoCanvas t = canvas_from_boxes(w, 2, 2, 4);
  LogitRaster shifted = l;
  for (int p = 0; p < 4; ++p)
    for (auto& v : shifted.at(p)) v += 10.0 * (p + 1);
  CHECK(std::abs(ce_loss_image(t, softmax_atoms(l), g) - ce_loss_image(t, softmax_atoms(shifted), g)) < 1e-12);
  const auto a = grad_logits(t, softmax_atoms(l), g);
  const auto b = grad_logits(t, softmax_atoms(shifted), g);
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(std::abs(a.values[i] - b.values[i]) < 1e-12);
  for (int p = 0; p < 4; ++p) {
    double sum = 0;
    for (double v : a.at(p)) sum += v;
    CHECK(std::abs(sum) < 1e-15);
  }
}

TEST_CASE("batch loss normalizes strong and weak populations separately") {
  const auto d = softmax_atoms(logits_1px({0, 0, 0}));
  const GroupMap g{{{}, {0}, {1}, {2}}};
  const PseudoCanvas t = one_hot_1px(4, 1);
  const PseudoCanvas none = canvas_from_boxes({}, 1, 1, 4);

  const BatchItem strong{&t, &d, &g, Supervision::pixel_dense};
  const BatchItem weak{&t, &d, &g, Supervision::bbox};
  const BatchItem dead{&none, &d, &g, Supervision::image_tag};

  const BatchItem one[] = {strong};
  CHECK(batch_loss(one).loss == ce_loss_image(t, d, g));

  const BatchItem mixed[] = {strong, weak};
  const auto r = batch_loss(mixed);
  CHECK(std::abs(r.loss - 2 * std::log(3.0)) < 1e-15);
  CHECK(r.strong_loss == r.weak_loss);

  const BatchItem with_dead[] = {strong, dead};
  const auto rd = batch_loss(with_dead);
  CHECK(rd.loss == ce_loss_image(t, d, g));
  for (double v : rd.grads[1].values) CHECK(v == 0.0);

  const BatchItem only_dead[] = {dead};
  CHECK_THROWS_AS(batch_loss(only_dead), Error);
}

TEST_CASE("strong-only batch equals the mean of per-image losses") {
  Rng rng(5);
  std::vector<LogitRaster> logits;
  std::vector<AtomDistribution> dists;
  std::vector<PseudoCanvas> targets;
  const GroupMap g{{{}, {0, 1}, {2}, {3}}};
  for (int i = 0; i < 4; ++i) {
    LogitRaster l(3, 2, 4);
    for (auto& v : l.values) v = rng.uniform(-2, 2);
    StrongLabel s{3, 2, {}};
    for (int p = 0; p < 6; ++p) s.class_ids.push_back(static_cast<std::uint16_t>(rng.between(0, 3)));
    s.class_ids[0] = 1;
    dists.push_back(softmax_atoms(l));
    targets.push_back(strong_to_canvas(s, 4));
  }
  std::vector<BatchItem> items;
  double mean = 0;
  for (int i = 0; i < 4; ++i) {
    items.push_back({&targets[i], &dists[i], &g, Supervision::pixel_coarse});
    mean += ce_loss_image(targets[i], dists[i], g) / 4;
  }
  CHECK(std::abs(batch_loss(items).loss - mean) < 1e-12);
}

TEST_CASE("subclass predictions replace their parent") {
  AtomPartition part;
  part.ap_atoms = {"road", "traffic_sign_front"};
  part.s_atoms = {"speed_limit", "stop_sign"};
  part.a_set = {0};
  part.p_set = {1};
  part.parent_of = {1, 1};

  AtomDistribution ap(1, 2, 2), s(1, 2, 2);
  ap.values = {0.2, 0.8, 0.9, 0.1};
  s.values = {0.3, 0.7, 0.9, 0.1};
  CHECK(merge_subclass_predictions(ap, s, part) == std::vector<int>{2 + 1, 0});

  AtomPartition flat;
  flat.ap_atoms = {"a", "b"};
  flat.a_set = {0, 1};
  CHECK(merge_subclass_predictions(ap, AtomDistribution{}, flat) == std::vector<int>{1, 0});

  AtomPartition orphan = part;
  orphan.s_atoms = {"speed_limit"};
  orphan.parent_of = {0};
  AtomDistribution s1(1, 2, 1, 1.0);
  CHECK_THROWS_AS(merge_subclass_predictions(ap, s1, orphan), Error);
}
