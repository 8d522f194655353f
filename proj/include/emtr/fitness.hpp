#pragma once

#include "emtr/features.hpp"
#include "emtr/geom.hpp"

#include <cstdint>

namespace emtr::fitness {

/// Saturating M-estimator: 1 - (1 - (r/c)^2)^3 for r <= c, else 1.
double rho(double r, double c);

enum class Stage { Sparse, Dense };

/// Evaluation state of the full-pose task. Indexes are built once at
/// construction; the stage moves from Sparse to Dense at most once.
class AlphaContext {
 public:
  AlphaContext(geom::PointCloud sparse_source, geom::PointCloud dense_source,
               geom::PointCloud dense_target, double c, Stage stage = Stage::Sparse);

  Stage stage() const { return stage_; }
  double c() const { return c_; }

  /// Throws StageViolation unless the context is still in the Sparse stage.
  void switch_stage();

  const geom::PointCloud& sparse_source() const { return sparse_source_; }
  const geom::PointCloud& dense_source() const { return dense_source_; }
  const geom::PointCloud& dense_target() const { return dense_target_; }
  const geom::NnIndex& dense_target_index() const { return nn_dense_target_; }
  const geom::NnIndex& dense_source_index() const { return nn_dense_source_; }

  /// Nearest-neighbor queries issued by evaluations so far.
  std::uint64_t nns_calls() const { return nn_dense_target_.calls() + nn_dense_source_.calls(); }
  /// Queries one evaluation issues in the current stage.
  std::uint64_t calls_per_evaluation() const;

 private:
  geom::PointCloud sparse_source_;
  geom::PointCloud dense_source_;
  geom::PointCloud dense_target_;
  geom::NnIndex nn_dense_target_;
  geom::NnIndex nn_dense_source_;
  double c_;
  Stage stage_;
};

/// Returns a copy of `ctx` moved to the Dense stage (free-function form).
AlphaContext switch_stage(AlphaContext ctx);

/// M-estimator Chamfer distance of a 6-dof pose. Sparse stage: one-directional
/// sum over sparse source points against the dense target. Dense stage: the
/// bidirectional sum over the dense clouds. Lower is better.
double fitness_alpha(const AlphaContext& ctx, const geom::EulerPose& pose);
double fitness_alpha(const AlphaContext& ctx, const geom::RigidTransform& transform);

struct BetaContext {
  features::TimPairSet tims;
  double eta = 0.0;
  double inlier_threshold = 0.0;

  /// eta = eta_factor * tau, inlier threshold = threshold_factor * tau.
  static BetaContext from_tims(features::TimPairSet tims, double eta_factor = 50.0,
                               double threshold_factor = 5.0);
};

/// Modified consensus maximization over TIM pairs for a rotation:
/// eta * (#outliers) + sum of inlier residuals.
double fitness_beta(const BetaContext& ctx, const geom::RotationMatrix& rotation);
double fitness_beta(const BetaContext& ctx, const geom::EulerPose& pose);

}  // namespace emtr::fitness
