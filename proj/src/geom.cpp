#include "emtr/geom.hpp"

#include "emtr/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

namespace emtr::geom {

namespace {

constexpr std::uint32_t kLeafSize = 12;

bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

}  // namespace

void validate(const PointCloud& cloud) {
  if (cloud.empty()) {
    throw Error(ErrorCode::DegenerateCloud, "point cloud is empty");
  }
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (!cloud.points[i].allFinite()) {
      std::ostringstream os;
      os << "point " << i << " has a non-finite coordinate";
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
  }
  if (cloud.has_normals()) {
    if (cloud.normals.size() != cloud.points.size()) {
      throw Error(ErrorCode::InvalidArgument, "normal count does not match point count");
    }
    for (std::size_t i = 0; i < cloud.normals.size(); ++i) {
      if (!cloud.normals[i].allFinite() || std::abs(cloud.normals[i].norm() - 1.0) > 1e-6) {
        std::ostringstream os;
        os << "normal " << i << " is not unit length";
        throw Error(ErrorCode::InvalidArgument, os.str());
      }
    }
  }
}

EulerPose EulerPose::from_position(std::span<const double> position) {
  if (position.size() != 3 && position.size() != 6) {
    throw Error(ErrorCode::InvalidArgument, "pose position must have 3 or 6 components");
  }
  EulerPose pose;
  pose.theta1 = position[0];
  pose.theta2 = position[1];
  pose.theta3 = position[2];
  if (position.size() == 6) {
    pose.translation = Vector3(position[3], position[4], position[5]);
  }
  return pose;
}

std::vector<double> EulerPose::to_position() const {
  std::vector<double> out{theta1, theta2, theta3};
  if (translation) {
    out.insert(out.end(), {(*translation)[0], (*translation)[1], (*translation)[2]});
  }
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

RotationMatrix euler_to_rotation(double theta1, double theta2, double theta3) {
  const double s1 = std::sin(theta1), c1 = std::cos(theta1);
  const double s2 = std::sin(theta2), c2 = std::cos(theta2);
  const double s3 = std::sin(theta3), c3 = std::cos(theta3);
  RotationMatrix r;
  r << c1 * c2, c1 * s2 * s3 - s1 * c3, c1 * s2 * c3 + s1 * s3,
       s1 * c2, s1 * s2 * s3 + c1 * c3, s1 * s2 * c3 - c1 * s3,
       -s2,     c2 * s3,                c2 * c3;
  return r;
}

RotationMatrix euler_to_rotation(const EulerPose& pose) {
  return euler_to_rotation(pose.theta1, pose.theta2, pose.theta3);
}

RigidTransform pose_to_transform(const EulerPose& pose) {
  RigidTransform t;
  t.rotation = euler_to_rotation(pose);
  if (pose.translation) t.translation = *pose.translation;
  return t;
}

EulerPose rotation_to_euler(const RotationMatrix& r) {
  EulerPose pose;
  const double s2 = std::clamp(-r(2, 0), -1.0, 1.0);
  pose.theta2 = std::asin(s2);
  if (std::abs(s2) < 1.0 - 1e-12) {
    pose.theta1 = std::atan2(r(1, 0), r(0, 0));
    pose.theta3 = std::atan2(r(2, 1), r(2, 2));
  } else {
    // Gimbal lock: only theta1 -/+ theta3 is observable; put it all in theta1.
    pose.theta3 = 0.0;
    pose.theta1 = std::atan2(-r(0, 1), r(1, 1));
  }
  return pose;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(transform.apply(p));
  out.normals.reserve(cloud.normals.size());
  for (const auto& n : cloud.normals) out.normals.push_back(transform.rotation * n);
  return out;
}

double rotation_error(const RotationMatrix& r_gt, const RotationMatrix& r_est) {
  const double cos_angle = ((r_gt * r_est.transpose()).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(cos_angle, -1.0, 1.0));
}

double translation_error(const Vector3& t_gt, const Vector3& t_est) {
  return (t_gt - t_est).norm();
}

// ---------------------------------------------------------------------------
// NnIndex

NnIndex::NnIndex(std::span<const Point3> points) {
  const auto n = static_cast<std::uint32_t>(points.size());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  sorted_.assign(points.begin(), points.end());
  if (n > 0) {
    nodes_.reserve(2 * (n / kLeafSize + 1));
    build(0, n);
  }
  // build() permuted order_ only; materialize points in tree order.
  std::vector<Point3> tree_points(n);
  slot_of_.resize(n);
  for (std::uint32_t slot = 0; slot < n; ++slot) {
    tree_points[slot] = points[order_[slot]];
    slot_of_[order_[slot]] = slot;
  }
  sorted_ = std::move(tree_points);
}

NnIndex::NnIndex(const NnIndex& other)
    : sorted_(other.sorted_),
      order_(other.order_),
      slot_of_(other.slot_of_),
      nodes_(other.nodes_),
      calls_(other.calls()) {}

NnIndex& NnIndex::operator=(const NnIndex& other) {
  if (this != &other) {
    sorted_ = other.sorted_;
    order_ = other.order_;
    slot_of_ = other.slot_of_;
    nodes_ = other.nodes_;
    calls_.store(other.calls(), std::memory_order_relaxed);
  }
  return *this;
}

NnIndex::NnIndex(NnIndex&& other) noexcept
    : sorted_(std::move(other.sorted_)),
      order_(std::move(other.order_)),
      slot_of_(std::move(other.slot_of_)),
      nodes_(std::move(other.nodes_)),
      calls_(other.calls()) {}

NnIndex& NnIndex::operator=(NnIndex&& other) noexcept {
  sorted_ = std::move(other.sorted_);
  order_ = std::move(other.order_);
  slot_of_ = std::move(other.slot_of_);
  nodes_ = std::move(other.nodes_);
  calls_.store(other.calls(), std::memory_order_relaxed);
  return *this;
}

std::int32_t NnIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end, -1, -1, 0, 0.0});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(sorted_[order_[i]]);
    hi = hi.cwiseMax(sorted_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return sorted_[a][axis] < sorted_[b][axis];
                   });
  const double split = sorted_[order_[mid]][axis];
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NnIndex::search_nearest(std::int32_t id, const Point3& q, double& best_d2,
                             std::uint32_t& best_idx) const {
  const Node& node = nodes_[id];
  if (node.left < 0) {
    for (std::uint32_t s = node.begin; s < node.end; ++s) {
      const double d2 = (sorted_[s] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && order_[s] < best_idx)) {
        best_d2 = d2;
        best_idx = order_[s];
      }
    }
    return;
  }
  // Left subtree holds coordinates <= split, right holds >= split.
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff <= 0.0 ? node.left : node.right;
  const std::int32_t far = diff <= 0.0 ? node.right : node.left;
  search_nearest(near, q, best_d2, best_idx);
  if (diff * diff <= best_d2) search_nearest(far, q, best_d2, best_idx);
}

Neighbor NnIndex::nearest(const Point3& query) const {
  calls_.fetch_add(1, std::memory_order_relaxed);
  if (nodes_.empty()) throw Error(ErrorCode::InvalidArgument, "nearest() on an empty index");
  double best_d2 = std::numeric_limits<double>::infinity();
  std::uint32_t best_idx = std::numeric_limits<std::uint32_t>::max();
  search_nearest(0, query, best_d2, best_idx);
  return Neighbor{best_idx, std::sqrt(best_d2)};
}

std::vector<Neighbor> NnIndex::knn(const Point3& query, std::size_t k) const {
  calls_.fetch_add(1, std::memory_order_relaxed);
  k = std::min(k, order_.size());
  if (k == 0) return {};

  // Max-heap on (d2, index) holding the current k best.
  auto cmp = [](const std::pair<double, std::uint32_t>& a,
                const std::pair<double, std::uint32_t>& b) { return a < b; };
  std::priority_queue<std::pair<double, std::uint32_t>,
                      std::vector<std::pair<double, std::uint32_t>>, decltype(cmp)>
      heap(cmp);

  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.left < 0) {
      for (std::uint32_t s = node.begin; s < node.end; ++s) {
        std::pair<double, std::uint32_t> cand{(sorted_[s] - query).squaredNorm(), order_[s]};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff <= 0.0 ? node.left : node.right;
    const std::int32_t far = diff <= 0.0 ? node.right : node.left;
    // Visit near first: push far underneath it. The heap top only shrinks,
    // so a slab pruned here stays prunable.
    if (heap.size() < k || diff * diff <= heap.top().first) stack.push_back(far);
    stack.push_back(near);
  }
  std::vector<Neighbor> out(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = Neighbor{heap.top().second, std::sqrt(heap.top().first)};
    heap.pop();
  }
  return out;
}

std::vector<Neighbor> NnIndex::radius(const Point3& query, double radius) const {
  calls_.fetch_add(1, std::memory_order_relaxed);
  std::vector<Neighbor> out;
  if (nodes_.empty()) return out;
  const double r2 = radius * radius;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.left < 0) {
      for (std::uint32_t s = node.begin; s < node.end; ++s) {
        const double d2 = (sorted_[s] - query).squaredNorm();
        if (d2 <= r2) out.push_back(Neighbor{order_[s], std::sqrt(d2)});
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    if (diff <= radius) stack.push_back(node.left);
    if (diff >= -radius) stack.push_back(node.right);
  }
  std::sort(out.begin(), out.end(), neighbor_less);
  return out;
}

const Point3& NnIndex::point(std::size_t original_index) const {
  return sorted_[slot_of_.at(original_index)];
}

// ---------------------------------------------------------------------------

double mean_resolution(const PointCloud& cloud) {
  if (cloud.size() < 2) {
    throw Error(ErrorCode::DegenerateCloud, "mean resolution needs at least two points");
  }
  const NnIndex index(cloud);
  double sum = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (const auto& nb : index.knn(cloud.points[i], 2)) {
      if (nb.index != i) {
        sum += nb.distance;
        break;
      }
    }
  }
  return sum / static_cast<double>(cloud.size());
}

double bounding_box_diagonal(const PointCloud& cloud) {
  if (cloud.empty()) return 0.0;
  Eigen::Vector3d lo = cloud.points.front(), hi = cloud.points.front();
  for (const auto& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

Point3 centroid(std::span<const Point3> points) {
  Point3 sum = Point3::Zero();
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : Point3(sum / static_cast<double>(points.size()));
}

}  // namespace emtr::geom
