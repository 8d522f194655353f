#pragma once

#include "emtr/geom.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>

namespace emtr::ingest {

enum class CloudFormat { Auto, PlyAscii, PlyBinaryLE, XyzText };

/// Reads a cloud. `Auto` picks by extension (.ply header decides ASCII vs
/// binary, anything else is XYZ text). Parse errors name the line or byte
/// offset where they occurred.
geom::PointCloud load_cloud(const std::filesystem::path& path,
                            CloudFormat format = CloudFormat::Auto);

/// Writes x,y,z as doubles (PLY) or full-precision text (XYZ), plus normals
/// when present. `Auto` resolves to binary PLY for .ply and XYZ otherwise.
void save_cloud(const geom::PointCloud& cloud, const std::filesystem::path& path,
                CloudFormat format = CloudFormat::Auto);

/// Maps a normalized point back to raw coordinates: raw = p * scale + centroid.
struct NormalizationRecord {
  geom::Vector3 centroid = geom::Vector3::Zero();
  double scale = 1.0;

  geom::Point3 to_raw(const geom::Point3& p) const { return p * scale + centroid; }
  geom::Point3 to_normalized(const geom::Point3& p) const { return (p - centroid) / scale; }
  geom::PointCloud to_raw(const geom::PointCloud& cloud) const;
};

struct NormalizedCloud {
  geom::PointCloud cloud;
  NormalizationRecord record;
};

/// Moves the centroid to the origin and scales uniformly so the largest
/// absolute coordinate is exactly 1.
NormalizedCloud centralize_normalize(const geom::PointCloud& cloud);

/// Centers on the centroid and divides by a caller-chosen scale.
NormalizedCloud centralize_with_scale(const geom::PointCloud& cloud, double scale);

/// Max absolute coordinate after centering (the factor centralize_normalize uses).
double normalization_scale(const geom::PointCloud& cloud);

/// Voxel grid anchored at the cloud's minimum corner; each occupied voxel
/// contributes the centroid of its points. Output order follows the first
/// point seen in each voxel. Normals are dropped.
geom::PointCloud voxel_downsample(const geom::PointCloud& cloud, double voxel);

/// Voxel-downsamples with the smallest searched voxel that keeps the count
/// at or below `cap`. Clouds already within the cap are returned unchanged.
geom::PointCloud downsample_to_cap(const geom::PointCloud& cloud, std::size_t cap);

enum class TransformSubspace { SR_ST, SR_LT, LR_ST, LR_LT, Full };

std::string_view to_string(TransformSubspace subspace);
TransformSubspace subspace_from_string(std::string_view name);

/// Samples Euler angles and translation uniformly inside a subspace. Angles
/// are (alpha, beta, gamma) = (theta1 about Z, theta2 about Y, theta3 about X).
geom::EulerPose random_pose(TransformSubspace subspace, double diag, std::mt19937_64& rng);
geom::RigidTransform random_transform(TransformSubspace subspace, double diag,
                                      std::uint64_t rng_seed);

struct DatasetPair {
  geom::PointCloud source;
  geom::PointCloud target;
  /// Maps `source` onto `target` (both in the coordinates stored here).
  geom::RigidTransform ground_truth;
  NormalizationRecord source_record;
  NormalizationRecord target_record;
};

/// source = T_gt(cloud), target = cloud. With `normalize`, both are
/// centralized independently and divided by a shared scale so the rigid
/// relation survives; ground_truth is re-expressed in that space.
DatasetPair make_pair(const geom::PointCloud& cloud, const geom::RigidTransform& t_gt,
                      bool normalize = true);

/// Normalizes an externally supplied source/target pair the same way
/// make_pair does. `raw_ground_truth`, if given, maps raw source to raw target.
DatasetPair normalize_pair(const geom::PointCloud& source, const geom::PointCloud& target,
                           const geom::RigidTransform* raw_ground_truth = nullptr);

/// Deterministic asymmetric animal-like surface (a body, head, two tilted
/// ears, a tail and a foot) sampled with `num_points` points. Used as the
/// bundled stand-in for the Stanford Bunny.
geom::PointCloud synthetic_surrogate(std::size_t num_points, std::uint64_t seed);

}  // namespace emtr::ingest
