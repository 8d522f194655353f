#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "emtr/error.hpp"
#include "emtr/features.hpp"
#include "emtr/ingest.hpp"
#include "support.hpp"

#include <cstring>
#include <fstream>
#include <set>

using namespace emtr;
using namespace emtr::features;
using geom::Point3;
using geom::PointCloud;
using geom::Vector3;

namespace {

PointCloud sphere(std::mt19937_64& rng, std::size_t n) {
  PointCloud c;
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) c.points.push_back(Vector3(g(rng), g(rng), g(rng)).normalized());
  return c;
}

std::vector<Descriptor> fpfh_of(const PointCloud& cloud, double radius_scale = 5.0) {
  const auto normals = estimate_normals(cloud, 10);
  return compute_fpfh(normals.cloud, radius_scale * geom::mean_resolution(cloud), normals.valid);
}

Descriptor make_descriptor(std::size_t index, double fill) {
  Descriptor d;
  d.bins.fill(fill);
  d.point_index = index;
  d.valid = true;
  return d;
}

}  // namespace

TEST_CASE("planar normals are vertical") {
  std::mt19937_64 rng(31);
  PointCloud plane;
  for (int i = 0; i < 400; ++i) plane.points.push_back({support::uniform(rng, -1, 1), support::uniform(rng, -1, 1), 0});
  const auto n = estimate_normals(plane, 8);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    REQUIRE(n.valid[i] == 1);
    CHECK(std::abs(std::abs(n.cloud.normals[i].z()) - 1.0) < 1e-12);
  }
}

TEST_CASE("sphere normals are radial and face the viewpoint") {
  std::mt19937_64 rng(32);
  const auto s = sphere(rng, 3000);
  const auto n = estimate_normals(s, 10);
  const double cos5 = std::cos(5.0 * std::numbers::pi / 180.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    REQUIRE(n.valid[i] == 1);
    CHECK(-n.cloud.normals[i].dot(s.points[i]) > cos5);  // inward, toward the origin
  }
}

TEST_CASE("collinear neighborhoods are flagged invalid") {
  PointCloud line;
  for (int i = 0; i < 30; ++i) line.points.push_back({0.1 * i, 0.2 * i, -0.05 * i});
  const auto n = estimate_normals(line, 10);
  for (auto v : n.valid) CHECK(v == 0);
  const auto d = compute_fpfh(n.cloud, 1.0, n.valid);
  for (const auto& x : d) CHECK_FALSE(x.valid);
  CHECK_THROWS_AS(estimate_normals(line, 2), Error);
}

TEST_CASE("pair_features reference instance") {
  std::array<double, 3> f{};
  // Two points on the x axis with normals along +z and +y.
  REQUIRE(pair_features({0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, f));
  // u = (0,0,1), v = dp x u = (1,0,0)x(0,0,1) = (0,-1,0), w = u x v = (1,0,0).
  CHECK(f[0] == doctest::Approx(std::atan2(0.0, 0.0)));
  CHECK(f[1] == doctest::Approx(-1.0));
  CHECK(f[2] == doctest::Approx(0.0));
  CHECK_FALSE(pair_features({0, 0, 0}, {0, 0, 1}, {0, 0, 0}, {0, 0, 1}, f));
  CHECK_FALSE(pair_features({0, 0, 0}, {1, 0, 0}, {1, 0, 0}, {1, 0, 0}, f));
}

TEST_CASE("FPFH is deterministic") {
  std::mt19937_64 rng(33);
  const auto s = sphere(rng, 800);
  const auto a = fpfh_of(s);
  const auto b = fpfh_of(s);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::memcmp(a[i].bins.data(), b[i].bins.data(), sizeof(double) * kFpfhBins) == 0);
    CHECK(a[i].valid == b[i].valid);
  }
}

TEST_CASE("FPFH is invariant under rotation about the viewpoint") {
  const auto cloud = ingest::centralize_normalize(ingest::synthetic_surrogate(1500, 3)).cloud;
  std::mt19937_64 rng(34);
  const auto r = support::random_rotation(rng);
  const auto moved = geom::apply_transform(cloud, {r, Vector3::Zero()});
  const auto a = fpfh_of(cloud);
  const auto b = fpfh_of(moved);
  std::size_t compared = 0, equal = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].valid || !b[i].valid) continue;
    ++compared;
    double worst = 0.0;
    for (std::size_t k = 0; k < kFpfhBins; ++k) worst = std::max(worst, std::abs(a[i].bins[k] - b[i].bins[k]));
    equal += worst < 1e-6 ? 1 : 0;
  }
  REQUIRE(compared > 1000);
  CHECK(equal == compared);
}

TEST_CASE("FPFH bins are finite and non-negative on random clouds") {
  std::mt19937_64 rng(35);
  for (int k = 0; k < 1000; ++k) {
    const auto c = support::random_cloud(rng, 40);
    const auto n = estimate_normals(c, 10);
    const auto d = compute_fpfh(n.cloud, support::uniform(rng, 0.2, 1.5), n.valid);
    for (const auto& x : d) {
      for (double v : x.bins) REQUIRE((std::isfinite(v) && v >= 0.0));
    }
  }
}

TEST_CASE("FPFH sub-histograms sum to 200 for valid points") {
  std::mt19937_64 rng(36);
  const auto s = sphere(rng, 600);
  for (const auto& d : fpfh_of(s)) {
    if (!d.valid) continue;
    for (int h = 0; h < 3; ++h) {
      double sum = 0.0;
      for (int b = 0; b < 11; ++b) sum += d.bins[h * 11 + b];
      // SPFH part sums to 100 and the weighted neighbor part is rescaled to 100.
      CHECK(sum == doctest::Approx(200.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("compute_fpfh argument checks") {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(compute_fpfh(c, 1.0), Error);
  c.normals = {{0, 0, 1}, {0, 0, 1}};
  CHECK_THROWS_AS(compute_fpfh(c, 0.0), Error);
  const std::vector<std::uint8_t> wrong(3, 1);
  CHECK_THROWS_AS(compute_fpfh(c, 1.0, wrong), Error);
}

TEST_CASE("identical descriptor lists match each point to itself") {
  std::mt19937_64 rng(37);
  const auto d = fpfh_of(sphere(rng, 500));
  const auto m = match_correspondences(d, d, 10000);
  std::size_t valid = 0;
  for (const auto& x : d) valid += x.valid ? 1 : 0;
  CHECK(m.size() == valid);
  for (const auto& c : m) {
    CHECK(c.source_index == c.target_index);
    CHECK(c.feature_distance == 0.0);
  }
}

TEST_CASE("a single perfect pair ranks first") {
  std::vector<Descriptor> src, tgt;
  for (std::size_t i = 0; i < 5; ++i) src.push_back(make_descriptor(i, 10.0 * i));
  for (std::size_t j = 0; j < 5; ++j) tgt.push_back(make_descriptor(j, 10.0 * j + 3.0));
  tgt[3] = make_descriptor(3, 20.0);  // equals src[2] exactly
  const auto m = match_correspondences(src, tgt, 10);
  REQUIRE_FALSE(m.empty());
  CHECK(m.front().source_index == 2);
  CHECK(m.front().target_index == 3);
  CHECK(m.front().feature_distance == 0.0);
}

TEST_CASE("matches are mutual nearest neighbors by exhaustive scan") {
  std::mt19937_64 rng(38);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<Descriptor> src(60), tgt(50);
    for (std::size_t i = 0; i < src.size(); ++i) {
      for (auto& b : src[i].bins) b = support::uniform(rng, 0, 10);
      src[i].point_index = i;
      src[i].valid = rng() % 10 != 0;
    }
    for (std::size_t j = 0; j < tgt.size(); ++j) {
      for (auto& b : tgt[j].bins) b = support::uniform(rng, 0, 10);
      tgt[j].point_index = j;
      tgt[j].valid = true;
    }
    auto dist = [](const Descriptor& a, const Descriptor& b) {
      double s = 0.0;
      for (std::size_t k = 0; k < kFpfhBins; ++k) s += (a.bins[k] - b.bins[k]) * (a.bins[k] - b.bins[k]);
      return s;
    };
    const std::size_t cap = 1 + rng() % 40;
    const auto m = match_correspondences(src, tgt, cap);
    CHECK(m.size() <= std::min({src.size(), tgt.size(), cap}));
    for (std::size_t k = 0; k < m.size(); ++k) {
      const auto& c = m[k];
      REQUIRE(src[c.source_index].valid);
      for (std::size_t j = 0; j < tgt.size(); ++j) {
        REQUIRE(dist(src[c.source_index], tgt[j]) >= dist(src[c.source_index], tgt[c.target_index]));
      }
      for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i].valid) REQUIRE(dist(src[i], tgt[c.target_index]) >= dist(src[c.source_index], tgt[c.target_index]));
      }
      if (k > 0) CHECK(m[k - 1].feature_distance <= c.feature_distance);
    }
  }
}

TEST_CASE("matching with nothing to match throws") {
  std::vector<Descriptor> none;
  std::vector<Descriptor> one{make_descriptor(0, 1.0)};
  CHECK_THROWS_AS(match_correspondences(none, one, 10), Error);
  std::vector<Descriptor> invalid{Descriptor{}};
  CHECK_THROWS_AS(match_correspondences(invalid, one, 10), Error);
}

TEST_CASE("build_tims examples") {
  std::mt19937_64 rng(39);
  const auto src = support::random_cloud(rng, 200);
  const auto r = support::random_rotation(rng);
  const auto tgt = geom::apply_transform(src, {r, Vector3(0.3, -0.2, 0.9)});

  std::vector<Correspondence> three{{0, 0, 0}, {5, 5, 0}, {9, 9, 0}};
  CHECK(build_tims(three, src, tgt, 3, 1).pairs.size() == 3);
  CHECK(build_tims(three, src, tgt, 1000, 1).pairs.size() == 3);

  std::vector<Correspondence> hundred;
  for (std::size_t i = 0; i < 100; ++i) hundred.push_back({i, i, 0});
  const auto a = build_tims(hundred, src, tgt, 500, 7);
  const auto b = build_tims(hundred, src, tgt, 500, 7);
  REQUIRE(a.pairs.size() == 500);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t k = 0; k < a.pairs.size(); ++k) {
    CHECK(a.pairs[k].j < a.pairs[k].k);
    seen.insert({a.pairs[k].j, a.pairs[k].k});
    CHECK(a.pairs[k].j == b.pairs[k].j);
    CHECK(a.pairs[k].k == b.pairs[k].k);
    CHECK((a.pairs[k].target_tim - r * a.pairs[k].source_tim).norm() < 1e-9);
    CHECK(a.pairs[k].target_tim.norm() == doctest::Approx(a.pairs[k].source_tim.norm()).epsilon(1e-12));
  }
  CHECK(seen.size() == 500);
  CHECK(a.tau == doctest::Approx(support::brute_resolution(src.points)).epsilon(1e-12));
  CHECK(build_tims(hundred, src, tgt, 500, 7, TauReference::Target).tau ==
        doctest::Approx(support::brute_resolution(tgt.points)).epsilon(1e-9));

  std::vector<Correspondence> single{{0, 0, 0}};
  CHECK_THROWS_AS(build_tims(single, src, tgt, 10, 1), Error);
}

TEST_CASE("descriptor CSV has one row per valid descriptor") {
  std::vector<Descriptor> d{make_descriptor(4, 1.5), Descriptor{}, make_descriptor(9, 0.0)};
  const auto path = std::filesystem::temp_directory_path() / "emtr_desc_test.csv";
  write_descriptor_csv(d, path);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  std::filesystem::remove(path);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0].rfind("point_index,b0,", 0) == 0);
  CHECK(lines[1].rfind("4,1.5,", 0) == 0);
  CHECK(lines[2].rfind("9,0,", 0) == 0);
}
