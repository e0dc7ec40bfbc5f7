#include <doctest.h>

#include "htss/error.hpp"
#include "htss/lossgrad.hpp"
#include "htss/model.hpp"
#include "oracles.hpp"

using namespace htss;

namespace {

FeatureRaster random_image(Rng& rng, int h, int w, int c) {
  FeatureRaster f(h, w, c);
  for (auto& v : f.values) v = rng.uniform(-1, 1);
  return f;
}

std::vector<double> flatten(const MicroNetParams& p) {
  std::vector<double> out;
  p.for_each([&](const std::vector<double>& t) { out.insert(out.end(), t.begin(), t.end()); });
  return out;
}

void unflatten(MicroNetParams& p, const std::vector<double>& x) {
  std::size_t i = 0;
  p.for_each([&](std::vector<double>& t) {
    for (auto& v : t) v = x[i++];
  });
}

}  // namespace

TEST_CASE("zero parameters give zero logits") {
  Rng rng(1);
  const auto p = MicroNetParams::zeros({3, 4, 5});
  const auto r = forward(p, random_image(rng, 4, 5, 3));
  for (double v : r.logits.values) CHECK(v == 0.0);
  for (double v : softmax_atoms(r.logits).values) CHECK(v == doctest::Approx(0.2));
}

TEST_CASE("zero convolutions leave the head bias") {
  Rng rng(2);
  auto p = MicroNetParams::zeros({2, 3, 2});
  p.head_b = {0.7, -1.5};
  const auto r = forward(p, random_image(rng, 3, 3, 2));
  for (int px = 0; px < r.logits.pixels(); ++px) {
    CHECK(r.logits.at(px)[0] == 0.7);
    CHECK(r.logits.at(px)[1] == -1.5);
  }
}

TEST_CASE("forward is deterministic and checks shapes") {
  Rng rng(3);
  const auto p = MicroNetParams::random({4, 3, 2}, 99);
  const auto img = random_image(rng, 5, 6, 4);
  CHECK(forward(p, img).logits.values == forward(p, img).logits.values);
  CHECK(MicroNetParams::random({4, 3, 2}, 99).conv1_w == p.conv1_w);
  for (double v : flatten(p)) CHECK(std::abs(v) <= 0.05);
  CHECK_THROWS_AS(forward(p, random_image(rng, 5, 5, 3)), Error);
  CHECK_THROWS_AS(forward(p, random_image(rng, 2, 5, 4)), Error);
}

TEST_CASE("backward matches finite differences of the full network") {
  Rng rng(4);
  const MicroNetShape shape{2, 2, 3};
  auto p = MicroNetParams::random(shape, 17, 0.5);
  const auto img = random_image(rng, 5, 5, 2);
  LogitRaster up(5, 5, 3);
  for (auto& v : up.values) v = rng.uniform(-1, 1);

  const auto f = [&](const std::vector<double>& x) {
    MicroNetParams q = p;
    unflatten(q, x);
    const auto l = forward(q, img).logits;
    double s = 0;
    for (std::size_t i = 0; i < l.values.size(); ++i) s += l.values[i] * up.values[i];
    return s;
  };
  const auto fd = oracle::finite_diff(f, flatten(p), 1e-6);
  const auto g = backward(p, forward(p, img).cache, up);
  CHECK(oracle::rel_error(flatten(g), fd) < 1e-5);
}

TEST_CASE("backward is linear in the upstream gradient") {
  Rng rng(5);
  const auto p = MicroNetParams::random({3, 4, 2}, 5, 0.3);
  const auto img = random_image(rng, 4, 4, 3);
  const auto fr = forward(p, img);
  LogitRaster up(4, 4, 2);
  for (auto& v : up.values) v = rng.uniform(-1, 1);
  LogitRaster twice = up;
  for (auto& v : twice.values) v *= 2;
  const auto a = flatten(backward(p, fr.cache, up));
  const auto b = flatten(backward(p, fr.cache, twice));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == 2 * a[i]);
  for (double v : flatten(backward(p, fr.cache, LogitRaster(4, 4, 2)))) CHECK(v == 0.0);
}

TEST_CASE("stale caches are rejected") {
  Rng rng(6);
  auto p = MicroNetParams::random({1, 2, 2}, 1);
  const auto fr = forward(p, random_image(rng, 3, 3, 1));
  OptimizerState o(0.1, 0.0, p.shape);
  sgd_step(p, MicroNetParams::zeros(p.shape), o);
  try {
    backward(p, fr.cache, LogitRaster(3, 3, 2));
    FAIL("expected StaleCache");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::stale_cache);
  }
}

TEST_CASE("sgd with momentum follows the scalar recurrence") {
  const MicroNetShape shape{1, 1, 1};
  auto p = MicroNetParams::zeros(shape);
  p.head_b = {1.0};
  auto g = MicroNetParams::zeros(shape);
  g.head_b = {0.5};
  OptimizerState o(0.1, 0.9, shape);
  sgd_step(p, g, o);  // v = 0.5, p = 1 - 0.05
  CHECK(o.velocity.head_b[0] == 0.5);
  CHECK(p.head_b[0] == doctest::Approx(0.95).epsilon(1e-15));
  g.head_b = {-0.25};
  sgd_step(p, g, o);  // v = 0.45 - 0.25 = 0.2, p = 0.95 - 0.02
  CHECK(o.velocity.head_b[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(p.head_b[0] == doctest::Approx(0.93).epsilon(1e-15));

  auto q = MicroNetParams::random(shape, 2);
  const auto before = flatten(q);
  OptimizerState plain(0.1, 0.0, shape);
  sgd_step(q, MicroNetParams::zeros(shape), plain);
  CHECK(flatten(q) == before);

  CHECK_THROWS_AS(OptimizerState(0.0, 0.5, shape), Error);
  CHECK_THROWS_AS(OptimizerState(0.1, 1.0, shape), Error);
}
