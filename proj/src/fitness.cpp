#include "emtr/fitness.hpp"

#include "emtr/error.hpp"

#include <cmath>

namespace emtr::fitness {

double rho(double r, double c) {
  if (r > c) return 1.0;
  const double u = r / c;
  const double s = 1.0 - u * u;
  return 1.0 - s * s * s;
}

AlphaContext::AlphaContext(geom::PointCloud sparse_source, geom::PointCloud dense_source,
                           geom::PointCloud dense_target, double c, Stage stage)
    : sparse_source_(std::move(sparse_source)),
      dense_source_(std::move(dense_source)),
      dense_target_(std::move(dense_target)),
      c_(c),
      stage_(stage) {
  if (!(c_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "M-estimator threshold c must be positive");
  if (dense_source_.empty() || dense_target_.empty()) {
    throw Error(ErrorCode::DegenerateCloud, "dense clouds must be non-empty");
  }
  if (stage_ == Stage::Sparse && sparse_source_.empty()) {
    throw Error(ErrorCode::DegenerateCloud, "sparse source must be non-empty");
  }
  nn_dense_target_ = geom::NnIndex(dense_target_);
  nn_dense_source_ = geom::NnIndex(dense_source_);
}

void AlphaContext::switch_stage() {
  if (stage_ != Stage::Sparse) {
    throw Error(ErrorCode::StageViolation, "sparse-to-dense switch requested twice");
  }
  stage_ = Stage::Dense;
}

std::uint64_t AlphaContext::calls_per_evaluation() const {
  return stage_ == Stage::Sparse ? sparse_source_.size() : dense_source_.size() + dense_target_.size();
}

AlphaContext switch_stage(AlphaContext ctx) {
  ctx.switch_stage();
  return ctx;
}

double fitness_alpha(const AlphaContext& ctx, const geom::RigidTransform& transform) {
  const double c = ctx.c();
  const auto& rot = transform.rotation;
  const auto& t = transform.translation;
  double sum = 0.0;
  if (ctx.stage() == Stage::Sparse) {
    for (const auto& p : ctx.sparse_source().points) {
      sum += rho(ctx.dense_target_index().nearest(rot * p + t).distance, c);
    }
    return sum;
  }
  for (const auto& p : ctx.dense_source().points) {
    sum += rho(ctx.dense_target_index().nearest(rot * p + t).distance, c);
  }
  // Reverse term: |R p + t - q| == |p - R^T (q - t)|, so query the source
  // index with inverse-mapped target points.
  const geom::RotationMatrix rot_t = rot.transpose();
  for (const auto& q : ctx.dense_target().points) {
    sum += rho(ctx.dense_source_index().nearest(rot_t * (q - t)).distance, c);
  }
  return sum;
}

double fitness_alpha(const AlphaContext& ctx, const geom::EulerPose& pose) {
  if (!pose.translation) {
    throw Error(ErrorCode::InvalidArgument, "full-pose fitness needs a translation");
  }
  return fitness_alpha(ctx, geom::pose_to_transform(pose));
}

BetaContext BetaContext::from_tims(features::TimPairSet tims, double eta_factor, double threshold_factor) {
  if (!(tims.tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "TIM noise bound must be positive");
  BetaContext ctx;
  ctx.eta = eta_factor * tims.tau;
  ctx.inlier_threshold = threshold_factor * tims.tau;
  ctx.tims = std::move(tims);
  return ctx;
}

double fitness_beta(const BetaContext& ctx, const geom::RotationMatrix& rotation) {
  double inlier_sum = 0.0;
  std::size_t outliers = 0;
  for (const auto& pair : ctx.tims.pairs) {
    const double r = (pair.target_tim - rotation * pair.source_tim).norm();
    if (r < ctx.inlier_threshold) {
      inlier_sum += r;
    } else {
      ++outliers;
    }
  }
  return ctx.eta * static_cast<double>(outliers) + inlier_sum;
}

double fitness_beta(const BetaContext& ctx, const geom::EulerPose& pose) {
  return fitness_beta(ctx, geom::euler_to_rotation(pose));
}

}  // namespace emtr::fitness
