#include "emtr/features.hpp"

#include "emtr/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <unordered_set>

namespace emtr::features {

using geom::NnIndex;
using geom::Point3;
using geom::PointCloud;
using geom::Vector3;

NormalEstimate estimate_normals(const PointCloud& cloud, std::size_t k, const Point3& viewpoint) {
  if (k < 3) throw Error(ErrorCode::InvalidArgument, "normal estimation needs k >= 3");
  if (cloud.size() < k + 1) {
    throw Error(ErrorCode::DegenerateCloud, "normal estimation needs at least k+1 points");
  }
  const NnIndex index(cloud);
  NormalEstimate out;
  out.cloud.points = cloud.points;
  out.cloud.normals.resize(cloud.size());
  out.valid.assign(cloud.size(), 0);

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nbrs = index.knn(cloud.points[i], k);
    Point3 mean = Point3::Zero();
    for (const auto& nb : nbrs) mean += cloud.points[nb.index];
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& nb : nbrs) {
      const Vector3 d = cloud.points[nb.index] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const auto& ev = solver.eigenvalues();  // ascending
    const double largest = ev[2];
    if (!(largest > 0.0) || ev[1] <= 1e-12 * largest) {
      out.cloud.normals[i] = Vector3::UnitZ();
      continue;
    }
    Vector3 n = solver.eigenvectors().col(0).normalized();
    if (n.dot(viewpoint - cloud.points[i]) < 0.0) n = -n;
    out.cloud.normals[i] = n;
    out.valid[i] = 1;
  }
  return out;
}

bool pair_features(const Point3& p1, const Vector3& n1, const Point3& p2, const Vector3& n2,
                   std::array<double, 3>& out) {
  Vector3 dp = p2 - p1;
  const double dist = dp.norm();
  if (dist == 0.0) return false;
  dp /= dist;

  // The source of the Darboux frame is the point whose normal makes the
  // smaller angle with the connecting line. Near-ties keep p1 so that
  // rounding cannot flip the frame (and the sign of phi) under rotation.
  constexpr double kTieTolerance = 1e-9;
  Vector3 u = n1, other = n2;
  double phi = n1.dot(dp);
  if (std::abs(n2.dot(dp)) - std::abs(n1.dot(dp)) > kTieTolerance) {
    u = n2;
    other = n1;
    dp = -dp;
    phi = n2.dot(dp);
  }
  Vector3 v = dp.cross(u);
  const double v_norm = v.norm();
  if (v_norm == 0.0) return false;
  v /= v_norm;
  const Vector3 w = u.cross(v);
  out[0] = std::atan2(w.dot(other), u.dot(other));  // theta in (-pi, pi]
  if (out[0] < -std::numbers::pi + kTieTolerance) out[0] = std::numbers::pi;
  out[1] = v.dot(other);                            // alpha in [-1, 1]
  out[2] = phi;                                     // phi in [-1, 1]
  return true;
}

namespace {

int bin_of(double value, double lo, double hi) {
  const int b = static_cast<int>(std::floor(11.0 * (value - lo) / (hi - lo)));
  return std::clamp(b, 0, 10);
}

}  // namespace

std::vector<Descriptor> compute_fpfh(const PointCloud& cloud, double radius, std::span<const std::uint8_t> valid) {
  if (!cloud.has_normals()) throw Error(ErrorCode::InvalidArgument, "FPFH requires normals");
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "FPFH radius must be positive");
  if (!valid.empty() && valid.size() != cloud.size()) {
    throw Error(ErrorCode::InvalidArgument, "validity mask size mismatch");
  }
  const std::size_t n = cloud.size();
  auto usable = [&](std::size_t i) { return valid.empty() || valid[i] != 0; };

  const NnIndex index(cloud);
  std::vector<std::vector<geom::Neighbor>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!usable(i)) continue;
    for (const auto& nb : index.radius(cloud.points[i], radius)) {
      if (nb.index != i && usable(nb.index)) neighbors[i].push_back(nb);
    }
  }

  using Hist = std::array<double, kFpfhBins>;
  std::vector<Hist> spfh(n, Hist{});
  for (std::size_t i = 0; i < n; ++i) {
    if (neighbors[i].empty()) continue;
    const double incr = 100.0 / static_cast<double>(neighbors[i].size());
    for (const auto& nb : neighbors[i]) {
      std::array<double, 3> f{};
      if (!pair_features(cloud.points[i], cloud.normals[i], cloud.points[nb.index],
                         cloud.normals[nb.index], f)) {
        continue;
      }
      spfh[i][bin_of(f[0], -std::numbers::pi, std::numbers::pi)] += incr;
      spfh[i][11 + bin_of(f[1], -1.0, 1.0)] += incr;
      spfh[i][22 + bin_of(f[2], -1.0, 1.0)] += incr;
    }
  }

  std::vector<Descriptor> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].point_index = i;
    if (neighbors[i].size() < 2) continue;
    Hist weighted{};
    std::array<double, 3> sums{};
    for (const auto& nb : neighbors[i]) {
      if (nb.distance == 0.0) continue;
      const double w = 1.0 / nb.distance;
      for (std::size_t b = 0; b < kFpfhBins; ++b) {
        const double v = w * spfh[nb.index][b];
        weighted[b] += v;
        sums[b / 11] += v;
      }
    }
    for (std::size_t b = 0; b < kFpfhBins; ++b) {
      const double norm = sums[b / 11] > 0.0 ? 100.0 / sums[b / 11] : 0.0;
      out[i].bins[b] = spfh[i][b] + weighted[b] * norm;
    }
    out[i].valid = true;
  }
  return out;
}

std::vector<Correspondence> match_correspondences(std::span<const Descriptor> source,
                                                  std::span<const Descriptor> target,
                                                  std::size_t max_pairs) {
  if (source.empty() || target.empty()) {
    throw Error(ErrorCode::EmptyCorrespondence, "descriptor list is empty");
  }
  auto dist2 = [](const Descriptor& a, const Descriptor& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < kFpfhBins; ++k) {
      const double d = a.bins[k] - b.bins[k];
      s += d * d;
    }
    return s;
  };
  constexpr auto none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> best_for_src(source.size(), none);
  std::vector<double> best_src_d(source.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> best_for_tgt(target.size(), none);
  std::vector<double> best_tgt_d(target.size(), std::numeric_limits<double>::infinity());

  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!source[i].valid) continue;
    for (std::size_t j = 0; j < target.size(); ++j) {
      if (!target[j].valid) continue;
      const double d = dist2(source[i], target[j]);
      // Strict comparisons keep the lowest index on ties (scan order).
      if (d < best_src_d[i]) {
        best_src_d[i] = d;
        best_for_src[i] = j;
      }
      if (d < best_tgt_d[j]) {
        best_tgt_d[j] = d;
        best_for_tgt[j] = i;
      }
    }
  }

  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const std::size_t j = best_for_src[i];
    if (j != none && best_for_tgt[j] == i) {
      out.push_back({source[i].point_index, target[j].point_index, std::sqrt(best_src_d[i])});
    }
  }
  if (out.empty()) throw Error(ErrorCode::EmptyCorrespondence, "no mutual feature matches");
  std::stable_sort(out.begin(), out.end(), [](const Correspondence& a, const Correspondence& b) {
    return a.feature_distance < b.feature_distance;
  });
  if (out.size() > max_pairs) out.resize(max_pairs);
  return out;
}

TimPairSet build_tims(std::span<const Correspondence> correspondences, const PointCloud& source,
                      const PointCloud& target, std::size_t max_tims, std::uint64_t rng_seed,
                      TauReference tau_from) {
  const std::size_t n = correspondences.size();
  if (n < 2) throw Error(ErrorCode::EmptyCorrespondence, "TIMs need at least two correspondences");
  if (max_tims == 0) throw Error(ErrorCode::InvalidArgument, "max_tims must be positive");

  TimPairSet set;
  set.tau = geom::mean_resolution(tau_from == TauReference::Source ? source : target);
  auto emit = [&](std::size_t j, std::size_t k) {
    const auto& cj = correspondences[j];
    const auto& ck = correspondences[k];
    set.pairs.push_back({source.points.at(ck.source_index) - source.points.at(cj.source_index),
                         target.points.at(ck.target_index) - target.points.at(cj.target_index), j, k});
  };

  const std::size_t total = n * (n - 1) / 2;
  if (total <= max_tims) {
    set.pairs.reserve(total);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) emit(j, k);
    return set;
  }
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::unordered_set<std::size_t> seen;
  set.pairs.reserve(max_tims);
  while (set.pairs.size() < max_tims) {
    std::size_t j = pick(rng), k = pick(rng);
    if (j == k) continue;
    if (j > k) std::swap(j, k);
    if (seen.insert(j * n + k).second) emit(j, k);
  }
  return set;
}

void write_descriptor_csv(std::span<const Descriptor> descriptors, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out << "point_index";
  for (std::size_t b = 0; b < kFpfhBins; ++b) out << ",b" << b;
  out << '\n';
  out.precision(17);
  for (const auto& d : descriptors) {
    if (!d.valid) continue;
    out << d.point_index;
    for (double v : d.bins) out << ',' << v;
    out << '\n';
  }
}

}  // namespace emtr::features
