#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "emtr/error.hpp"
#include "emtr/optimizer.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

using namespace emtr;
using namespace emtr::pso;

namespace {

double sphere(const Vec& x) {
  double s = 0.0;
  for (double v : x) s += (v - 0.1) * (v - 0.1);
  return s;
}

std::vector<double> evaluate(const Subpopulation& sub) {
  std::vector<double> f;
  for (const auto& p : sub.particles) f.push_back(sphere(p.position));
  return f;
}

bool same_population(const Subpopulation& a, const Subpopulation& b) {
  if (a.particles.size() != b.particles.size()) return false;
  for (std::size_t i = 0; i < a.particles.size(); ++i) {
    if (a.particles[i].position != b.particles[i].position) return false;
    if (a.particles[i].velocity != b.particles[i].velocity) return false;
  }
  return a.gbest_position == b.gbest_position;
}

}  // namespace

TEST_CASE("bounds presets") {
  const auto r = Bounds::rotation();
  CHECK(r.dim() == 3);
  CHECK(r.hi[1] == std::numbers::pi / 2);
  const auto rt = Bounds::rotation_translation(0.5);
  CHECK(rt.dim() == 6);
  CHECK(rt.lo[5] == -0.5);
  CHECK(rt.default_vmax() == Vec{std::numbers::pi, std::numbers::pi / 2, std::numbers::pi, 0.5, 0.5, 0.5});
}

TEST_CASE("inertia schedule") {
  const PsoParams p;
  CHECK(p.omega(0, 100) == 0.9);
  CHECK(p.omega(100, 100) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(p.omega(50, 100) == doctest::Approx(0.65).epsilon(1e-15));
}

TEST_CASE("init_subpopulation") {
  Rng rng(51);
  const auto one = init_subpopulation(1, Bounds::rotation(), rng);
  CHECK(one.gbest_position == one.particles[0].position);

  Rng a(52), b(52);
  CHECK(same_population(init_subpopulation(20, Bounds::rotation_translation(), a),
                        init_subpopulation(20, Bounds::rotation_translation(), b)));

  Rng rng2(53);
  const auto bounds = Bounds::rotation_translation(0.5);
  const auto big = init_subpopulation(10000, bounds, rng2);
  for (std::size_t d = 0; d < bounds.dim(); ++d) {
    double lo = 1e9, hi = -1e9, sum = 0.0;
    for (const auto& p : big.particles) {
      lo = std::min(lo, p.position[d]);
      hi = std::max(hi, p.position[d]);
      sum += p.position[d];
      REQUIRE(std::abs(p.velocity[d]) <= big.vmax[d]);
    }
    CHECK(lo >= bounds.lo[d]);
    CHECK(hi <= bounds.hi[d]);
    const double width = bounds.hi[d] - bounds.lo[d];
    const double sigma = width / std::sqrt(12.0) / std::sqrt(10000.0);
    CHECK(std::abs(sum / 10000.0 - 0.5 * (bounds.lo[d] + bounds.hi[d])) < 3 * sigma);
  }

  CHECK_THROWS_AS(init_subpopulation(0, bounds, rng), Error);
  CHECK_THROWS_AS(init_subpopulation(3, bounds, Vec{1.0}, rng), Error);
}

TEST_CASE("velocity update examples") {
  CHECK(blend_velocity(2.0, 0.0, 3.0, -2.0, 0.5, 1.0, 0.5) == 3.0);

  Rng rng(54);
  Particle p;
  p.position = {0.2, -0.1};
  p.pbest_position = p.position;
  p.velocity = {0.0, 0.0};
  const Vec vmax{10, 10};
  const auto v = step_velocity(p, p.position, PsoParams{}, 3, 10, vmax, rng);
  CHECK(v == Vec{0.0, 0.0});

  PsoParams inertia_only;
  inertia_only.c1 = inertia_only.c2 = 0.0;
  inertia_only.omega_start = 1.0;
  inertia_only.omega_drop = 0.0;
  p.velocity = {1.0, 1.0};
  p.pbest_position = {5, 5};
  CHECK(step_velocity(p, Vec{-3, 4}, inertia_only, 7, 10, vmax, rng) == Vec{1.0, 1.0});

  // Clamped to vmax.
  p.velocity = {50.0, -50.0};
  CHECK(step_velocity(p, p.position, inertia_only, 0, 10, vmax, rng) == Vec{10.0, -10.0});
}

TEST_CASE("per-particle scalar r draws") {
  PsoParams scalar;
  scalar.per_dimension_r = false;
  scalar.omega_start = 0.0;
  scalar.omega_drop = 0.0;
  scalar.c2 = 0.0;
  Particle p;
  p.position = {0, 0, 0};
  p.velocity = {0, 0, 0};
  p.pbest_position = {1, 2, 3};
  Rng rng(55);
  const auto v = step_velocity(p, p.position, scalar, 0, 1, Vec{100, 100, 100}, rng);
  // One shared r1 scales every coordinate of (pbest - x) equally.
  CHECK(v[1] == doctest::Approx(2 * v[0]));
  CHECK(v[2] == doctest::Approx(3 * v[0]));
}

TEST_CASE("position update examples") {
  Bounds b{{-1, -1}, {1, 1}};
  Vec v{0, 0};
  CHECK(step_position(Vec{0.3, 0.4}, v, b) == Vec{0.3, 0.4});

  Vec v2{0.5, 0.1};
  const auto x = step_position(Vec{0.9, 0.0}, v2, b);
  CHECK(x == Vec{1.0, 0.1});
  CHECK(v2 == Vec{0.0, 0.1});

  Vec v3{0.1, -0.2};
  CHECK(step_position(Vec{0, 0}, v3, b) == Vec{0.1, -0.2});

  Vec v4{-5, 0};
  CHECK(step_position(Vec{0, 0}, v4, b) == Vec{-1, 0});
  CHECK(v4[0] == 0.0);

  Vec wrong{1};
  CHECK_THROWS_AS(step_position(Vec{0, 0}, wrong, b), Error);
}

TEST_CASE("update_bests examples") {
  Rng rng(56);
  auto sub = init_subpopulation(3, Bounds{{-1}, {1}}, rng);
  const std::vector<double> first{3.0, 2.0, 5.0};
  auto u = update_bests(sub, first);
  CHECK(u.gbest_changed);
  CHECK(sub.gbest_fitness == 2.0);
  CHECK(sub.gbest_position == sub.particles[1].position);
  const auto version = sub.gbest_version;

  // Everything worse: nothing changes.
  const auto saved = sub;
  for (auto& p : sub.particles) p.position[0] += 0.1;
  const std::vector<double> worse{4.0, 9.0, 6.0};
  u = update_bests(sub, worse);
  CHECK_FALSE(u.gbest_changed);
  CHECK(u.improved_pbests == 0);
  CHECK(sub.gbest_version == version);
  for (std::size_t i = 0; i < 3; ++i) CHECK(sub.particles[i].pbest_position == saved.particles[i].pbest_position);

  // A tie keeps the incumbent.
  const std::vector<double> tie{3.0, 2.0, 2.0};
  u = update_bests(sub, tie);
  CHECK_FALSE(u.gbest_changed);
  CHECK(sub.gbest_position == saved.gbest_position);
  CHECK(sub.particles[2].pbest_fitness == 2.0);

  // One particle improves below gbest.
  const std::vector<double> better{4.0, 9.0, 1.0};
  u = update_bests(sub, better);
  CHECK(u.gbest_changed);
  CHECK(sub.gbest_fitness == 1.0);
  CHECK(sub.gbest_position == sub.particles[2].position);
  CHECK(sub.gbest_version == version + 1);

  const std::vector<double> nan{std::nan(""), 0.5, std::nan("")};
  u = update_bests(sub, nan);
  CHECK(u.nan_fitness == 2);
  CHECK(sub.gbest_fitness == 0.5);

  const std::vector<double> short_list{1.0};
  CHECK_THROWS_AS(update_bests(sub, short_list), Error);
}

TEST_CASE("offer_gbest accepts strict improvements only") {
  Rng rng(57);
  auto sub = init_subpopulation(2, Bounds{{-1}, {1}}, rng);
  const std::vector<double> f{1.0, 2.0};
  update_bests(sub, f);
  const auto v = sub.gbest_version;
  CHECK_FALSE(offer_gbest(sub, Vec{0.5}, 1.0));
  CHECK(sub.gbest_version == v);
  CHECK(offer_gbest(sub, Vec{0.5}, 0.5));
  CHECK(sub.gbest_position == Vec{0.5});
  CHECK(sub.gbest_version == v + 1);
  CHECK(clamp_to(Vec{3.0}, sub.bounds) == Vec{1.0});
}

TEST_CASE("1000 generations stay in bounds with monotone gbest") {
  Rng rng(58);
  const auto bounds = Bounds::rotation_translation(0.5);
  auto sub = init_subpopulation(50, bounds, rng);
  const PsoParams params;
  double last = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= 1000; ++it) {
    update_bests(sub, evaluate(sub));
    REQUIRE(sub.gbest_fitness <= last);
    last = sub.gbest_fitness;
    advance(sub, params, it, 1000, rng);
    for (const auto& p : sub.particles) {
      for (std::size_t d = 0; d < bounds.dim(); ++d) {
        REQUIRE(p.position[d] >= bounds.lo[d]);
        REQUIRE(p.position[d] <= bounds.hi[d]);
        REQUIRE(std::abs(p.velocity[d]) <= sub.vmax[d]);
      }
    }
  }
  CHECK(last < 1e-6);  // the sphere minimum sits inside the box
}

TEST_CASE("whole runs are bit-reproducible") {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    auto sub = init_subpopulation(30, Bounds::rotation_translation(), rng);
    for (int it = 1; it <= 50; ++it) {
      update_bests(sub, evaluate(sub));
      advance(sub, PsoParams{}, it, 50, rng);
    }
    return sub;
  };
  const auto a = run(59), b = run(59), c = run(60);
  CHECK(same_population(a, b));
  CHECK(std::memcmp(&a.gbest_fitness, &b.gbest_fitness, sizeof(double)) == 0);
  CHECK_FALSE(same_population(a, c));
}
