#pragma once

#include "emtr/features.hpp"
#include "emtr/fitness.hpp"
#include "emtr/geom.hpp"
#include "emtr/ingest.hpp"
#include "emtr/optimizer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace emtr::multitask {

struct EmtoConfig {
  // Swarm loop.
  int max_it = 100;
  std::size_t pop_size = 50;  // per task
  double rmp = 0.7;
  double delta = 0.6;
  bool sparse_to_dense = true;
  // Linear transfer schedules, exact at it = 0 and it = max_it.
  double lambda_alpha_start = 0.1;
  double lambda_alpha_end = 0.7;
  double lambda_beta_start = 0.999;
  double lambda_beta_end = 0.199;
  bool transfer_overwrite = false;
  pso::PsoParams pso;
  double translation_half_extent = 0.5;

  // Knowledge complement.
  int max_it_kc = 10;
  double tukey_scale = 10.0;  // d = tukey_scale * mean resolution of the dense target

  // Fitness scales.
  double c_scale = 10.0;    // c = c_scale * mean resolution of the dense target
  double tau_scale = 1.0;   // tau multiplier on the feature-cloud resolution
  double eta_factor = 50.0; // eta = eta_factor * tau
  double inlier_factor = 5.0;

  // Problem preparation.
  std::size_t dense_cap = 5000;
  std::size_t sparse_cap = 1000;
  std::size_t feature_cap = 1500;
  std::size_t normal_k = 10;
  double fpfh_radius_scale = 5.0;
  std::size_t max_pairs = 300;
  std::size_t max_tims = 1000;
  features::TauReference tau_from = features::TauReference::Source;

  // Single-task baseline.
  std::size_t baseline_pop = 100;

  double lambda_alpha(int it) const;
  double lambda_beta(int it) const;
  /// ceil(delta * max_it): the iteration after whose evaluation the stage flips.
  int switch_iteration() const;
  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

/// Everything the swarm loop evaluates against, built once per pair.
struct Problem {
  fitness::AlphaContext alpha;
  std::optional<fitness::BetaContext> beta;  // empty: TIMs could not be built
  geom::NnIndex complement_index;            // dense target; separate call counter
  double tukey_d = 0.0;
  std::uint64_t feature_nns_calls = 0;
  std::size_t correspondences = 0;
  std::string warning;
};

/// Downsamples to the configured caps, extracts FPFH correspondences and TIMs
/// from the feature clouds, and derives c, tau, eta and d from resolutions.
/// A failure in the feature stage leaves `beta` empty and sets `warning`.
Problem prepare_problem(const ingest::DatasetPair& pair, const EmtoConfig& config, std::uint64_t seed);

/// Builds a problem directly from already-sized clouds (no capping). Used
/// when exact point counts matter.
Problem make_problem(geom::PointCloud sparse_source, geom::PointCloud dense_source,
                     geom::PointCloud dense_target, std::optional<fitness::BetaContext> beta,
                     const EmtoConfig& config);

struct ComplementResult {
  geom::Vector3 translation = geom::Vector3::Zero();
  int iterations = 0;
  bool degenerate_weights = false;
};

/// Tukey weight (1 - (r/d)^2)^2 for r <= d, else 0.
double tukey_weight(double r, double d);

/// IRLS translation estimate for a fixed rotation: rotate the source, then
/// repeatedly match closest target points, weight them, and shift by the
/// difference of weighted centroids. Returns the sum of the shifts.
ComplementResult knowledge_complement(std::span<const geom::Point3> source,
                                      const geom::RotationMatrix& r_srch,
                                      const geom::NnIndex& target_index, int max_it_kc, double d);

/// lambda * self + (1 - lambda) * other.
pso::Vec arithmetic_crossover(const pso::Vec& self, const pso::Vec& other, double lambda);

struct TransferState {
  std::optional<geom::Vector3> last_t_est;
  std::optional<std::uint64_t> last_beta_gbest_version;
};

struct TransferOutcome {
  pso::Vec candidate;
  double fitness = 0.0;
  bool accepted = false;
  bool complement_ran = false;
  bool complement_degenerate = false;
};

/// beta -> alpha: complete beta's gbest rotation with a translation (re-estimated
/// only when beta's gbest moved), blend with lambda_alpha(it) and offer the
/// result to alpha's gbest.
TransferOutcome transfer_beta_to_alpha(pso::Subpopulation& alpha, const pso::Subpopulation& beta,
                                       TransferState& state, int it, const EmtoConfig& config,
                                       const fitness::AlphaContext& alpha_ctx,
                                       const geom::NnIndex& complement_index, double tukey_d);

/// alpha -> beta: blend beta's gbest with the angles of `alpha_gbest`
/// using lambda_beta(it) and offer the result to beta's gbest.
TransferOutcome transfer_alpha_to_beta(pso::Subpopulation& beta, const pso::Vec& alpha_gbest, int it,
                                       const EmtoConfig& config, const fitness::BetaContext& beta_ctx);

struct IterationRecord {
  int it = 0;
  double gbest_fit_alpha = 0.0;
  double gbest_fit_beta = 0.0;  // NaN when no beta task runs
  std::uint64_t nns_calls = 0;  // swarm-evaluation calls issued this iteration
  bool transfer_fired = false;
  fitness::Stage stage = fitness::Stage::Sparse;
};

struct RunTrace {
  std::string mode;
  std::vector<IterationRecord> iterations;
  std::uint64_t swarm_calls = 0;       // per-iteration population evaluations
  std::uint64_t transfer_calls = 0;    // evaluating blended candidates
  std::uint64_t switch_calls = 0;      // re-evaluation at the stage switch
  std::uint64_t complement_calls = 0;  // knowledge complement
  std::uint64_t feature_calls = 0;     // normals / FPFH / resolution
  std::size_t transfers = 0;
  std::size_t accepted_beta_to_alpha = 0;
  std::size_t accepted_alpha_to_beta = 0;
  std::size_t complement_runs = 0;
  std::size_t degenerate_complements = 0;
  std::size_t nan_evaluations = 0;
  bool degraded_single_task = false;
  int switch_iteration = 0;  // 0 when no switch happened

  std::uint64_t total_calls() const {
    return swarm_calls + transfer_calls + switch_calls + complement_calls + feature_calls;
  }
};

/// JSON text of a trace (schema in docs/schemas.md).
std::string trace_to_json(const RunTrace& trace, int indent = 2);

struct RunResult {
  geom::RigidTransform transform;
  pso::Vec position;  // 6-dof gbest of the full-pose task
  double fitness = 0.0;
  std::optional<geom::RotationMatrix> beta_rotation;
  RunTrace trace;
};

/// The two-task evolutionary registration loop. The returned transform maps
/// the problem's source onto its target.
RunResult run_emtr_ssc(const Problem& problem, const EmtoConfig& config, std::uint64_t rng_seed);

/// Single 6-dof swarm of `config.baseline_pop` particles on the dense-stage
/// fitness for `iterations` iterations.
RunResult run_single_task_pso(const Problem& problem, const EmtoConfig& config, std::uint64_t rng_seed,
                              int iterations);

/// Baseline iteration count whose swarm NNS budget does not exceed the
/// multitask run's predicted swarm budget (at least 1).
int baseline_iterations(const EmtoConfig& config, std::size_t n_sparse, std::size_t n_dense_source,
                        std::size_t n_dense_target);

/// Predicted swarm-loop NNS calls: P*I*(delta*N_s + (1-delta)*(N_d + M_d))
/// with sparse-to-dense, P*I*(N_d + M_d) without.
double predicted_calls_with_s2d(double pop, double iterations, double delta, double n_sparse,
                                double n_dense_source, double n_dense_target);
double predicted_calls_without_s2d(double pop, double iterations, double n_dense_source,
                                   double n_dense_target);

}  // namespace emtr::multitask
