#pragma once

#include "emtr/geom.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace emtr::features {

constexpr std::size_t kFpfhBins = 33;

struct NormalEstimate {
  geom::PointCloud cloud;  // input points with normals attached
  std::vector<std::uint8_t> valid;  // 0 where the neighborhood had rank < 2
};

/// PCA normals from the k nearest neighbors (the query point included),
/// oriented toward `viewpoint`. Invalid normals are set to +Z and flagged.
NormalEstimate estimate_normals(const geom::PointCloud& cloud, std::size_t k,
                                const geom::Point3& viewpoint = geom::Point3::Zero());

struct Descriptor {
  std::array<double, kFpfhBins> bins{};
  std::size_t point_index = 0;
  bool valid = false;  // excluded from matching when false
};

/// Fast Point Feature Histograms: three 11-bin angular histograms per point,
/// each neighbor's SPFH weighted by the inverse of its distance. `valid`
/// (optional) masks points whose normals are unusable.
std::vector<Descriptor> compute_fpfh(const geom::PointCloud& cloud, double radius,
                                     std::span<const std::uint8_t> valid = {});

/// Angular pair features (theta in (-pi, pi], alpha, phi) between two oriented points;
/// returns false for coincident points or parallel geometry.
bool pair_features(const geom::Point3& p1, const geom::Vector3& n1, const geom::Point3& p2,
                   const geom::Vector3& n2, std::array<double, 3>& out);

struct Correspondence {
  std::size_t source_index = 0;
  std::size_t target_index = 0;
  double feature_distance = 0.0;
};

/// Mutual nearest neighbors in descriptor space, ascending by distance and
/// truncated to `max_pairs`. Throws EmptyCorrespondence when none exist.
std::vector<Correspondence> match_correspondences(std::span<const Descriptor> source,
                                                  std::span<const Descriptor> target,
                                                  std::size_t max_pairs);

struct TimPair {
  geom::Vector3 source_tim;  // p_k - p_j
  geom::Vector3 target_tim;  // q_phi(k) - q_phi(j)
  std::size_t j = 0;         // correspondence indices that produced the pair
  std::size_t k = 0;
};

struct TimPairSet {
  std::vector<TimPair> pairs;
  double tau = 0.0;  // noise bound
};

enum class TauReference { Source, Target };

/// Translation-invariant measurement pairs from a correspondence list. All
/// C(n,2) pairs are emitted when that fits in `max_tims`, otherwise
/// `max_tims` distinct pairs are drawn uniformly. tau is the mean resolution
/// of the chosen cloud.
TimPairSet build_tims(std::span<const Correspondence> correspondences, const geom::PointCloud& source,
                      const geom::PointCloud& target, std::size_t max_tims, std::uint64_t rng_seed,
                      TauReference tau_from = TauReference::Source);

/// CSV rows "point_index,b0,...,b32" for valid descriptors.
void write_descriptor_csv(std::span<const Descriptor> descriptors, const std::filesystem::path& path);

}  // namespace emtr::features
