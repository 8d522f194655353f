#pragma once

#include <Eigen/Core>

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace emtr::geom {

using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;
using RotationMatrix = Eigen::Matrix3d;

/// Ordered list of 3D points with optional per-point unit normals.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<Vector3> normals;  // empty, or one per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }
};

/// Throws emtr::Error if the cloud is empty, holds a non-finite coordinate,
/// or carries normals of the wrong count or length.
void validate(const PointCloud& cloud);

/// Euler angles in Z-Y-X order about fixed axes, plus an optional translation.
/// Rotation-only poses (the auxiliary task) leave `translation` empty.
struct EulerPose {
  double theta1 = 0.0;  // about Z, [-pi, pi]
  double theta2 = 0.0;  // about Y, [-pi/2, pi/2]
  double theta3 = 0.0;  // about X, [-pi, pi]
  std::optional<Vector3> translation;

  /// Decodes a particle position of dimension 3 (angles) or 6 (angles + t).
  static EulerPose from_position(std::span<const double> position);
  std::vector<double> to_position() const;
};

struct RigidTransform {
  RotationMatrix rotation = RotationMatrix::Identity();
  Vector3 translation = Vector3::Zero();

  Point3 apply(const Point3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  /// (this * other)(p) == this->apply(other.apply(p))
  RigidTransform operator*(const RigidTransform& other) const;

  static RigidTransform identity() { return {}; }
};

RotationMatrix euler_to_rotation(double theta1, double theta2, double theta3);
RotationMatrix euler_to_rotation(const EulerPose& pose);
RigidTransform pose_to_transform(const EulerPose& pose);

/// Z-Y-X angles of a rotation; theta2 lands in [-pi/2, pi/2].
EulerPose rotation_to_euler(const RotationMatrix& rotation);

/// Points are mapped by R·p + t, normals by R only.
PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform);

/// Angle of R_gt·R_estᵀ in radians, in [0, pi].
double rotation_error(const RotationMatrix& r_gt, const RotationMatrix& r_est);
double translation_error(const Vector3& t_gt, const Vector3& t_est);

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Exact kd-tree over a fixed point set. Every query (nearest, knn, radius)
/// increments the call counter by one; the counter is safe to bump from
/// concurrent readers.
class NnIndex {
 public:
  NnIndex() = default;
  explicit NnIndex(std::span<const Point3> points);
  explicit NnIndex(const PointCloud& cloud) : NnIndex(std::span<const Point3>(cloud.points)) {}

  NnIndex(const NnIndex& other);
  NnIndex& operator=(const NnIndex& other);
  NnIndex(NnIndex&& other) noexcept;
  NnIndex& operator=(NnIndex&& other) noexcept;

  /// Closest indexed point; ties go to the lowest point index.
  Neighbor nearest(const Point3& query) const;
  /// k closest points sorted by (distance, index).
  std::vector<Neighbor> knn(const Point3& query, std::size_t k) const;
  /// All points within `radius` (inclusive) sorted by (distance, index).
  std::vector<Neighbor> radius(const Point3& query, double radius) const;

  std::size_t size() const { return order_.size(); }
  const Point3& point(std::size_t original_index) const;

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset_calls() { calls_.store(0, std::memory_order_relaxed); }

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search_nearest(std::int32_t node, const Point3& q, double& best_d2,
                      std::uint32_t& best_idx) const;

  std::vector<Point3> sorted_;          // points in tree order
  std::vector<std::uint32_t> order_;    // tree slot -> original index
  std::vector<std::uint32_t> slot_of_;  // original index -> tree slot
  std::vector<Node> nodes_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Mean over all points of the distance to the nearest *other* point.
/// Throws DegenerateCloud for fewer than two points.
double mean_resolution(const PointCloud& cloud);

/// Diagonal length of the axis-aligned bounding box.
double bounding_box_diagonal(const PointCloud& cloud);

Point3 centroid(std::span<const Point3> points);

}  // namespace emtr::geom
