#include "emtr/multitask.hpp"

#include "emtr/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace emtr::multitask {

using geom::EulerPose;
using geom::Point3;
using geom::Vector3;

double EmtoConfig::lambda_alpha(int it) const {
  return std::lerp(lambda_alpha_start, lambda_alpha_end, static_cast<double>(it) / static_cast<double>(max_it));
}

double EmtoConfig::lambda_beta(int it) const {
  return std::lerp(lambda_beta_start, lambda_beta_end, static_cast<double>(it) / static_cast<double>(max_it));
}

int EmtoConfig::switch_iteration() const {
  return static_cast<int>(std::ceil(delta * static_cast<double>(max_it)));
}

void EmtoConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (max_it < 1) fail("max_it must be >= 1");
  if (pop_size < 1) fail("population size must be >= 1");
  if (!(rmp >= 0.0 && rmp <= 1.0)) fail("rmp must lie in [0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) fail("delta must lie in (0, 1)");
  if (!(pso.c1 > 0.0 && pso.c2 > 0.0)) fail("c1 and c2 must be positive");
  if (max_it_kc < 1) fail("max_it_kc must be >= 1");
  if (!(c_scale > 0.0 && tau_scale > 0.0 && tukey_scale > 0.0)) fail("scale factors must be positive");
  if (!(translation_half_extent > 0.0)) fail("translation extent must be positive");
  if (dense_cap < 1 || sparse_cap < 1 || feature_cap < 1) fail("point caps must be positive");
  if (max_tims < 1 || max_pairs < 2) fail("max_tims >= 1 and max_pairs >= 2 required");
  if (baseline_pop < 1) fail("baseline population must be >= 1");
  for (int it : {0, max_it}) {
    const double la = lambda_alpha(it), lb = lambda_beta(it);
    if (!(la >= 0.0 && la <= 1.0 && lb >= 0.0 && lb <= 1.0)) fail("lambda schedules must stay in [0, 1]");
  }
}

// ---------------------------------------------------------------------------

Problem make_problem(geom::PointCloud sparse_source, geom::PointCloud dense_source,
                     geom::PointCloud dense_target, std::optional<fitness::BetaContext> beta,
                     const EmtoConfig& config) {
  const double resolution = geom::mean_resolution(dense_target);
  const std::uint64_t resolution_calls = dense_target.size();
  const auto stage = config.sparse_to_dense ? fitness::Stage::Sparse : fitness::Stage::Dense;
  fitness::AlphaContext alpha(std::move(sparse_source), std::move(dense_source), std::move(dense_target),
                              config.c_scale * resolution, stage);
  geom::NnIndex complement_index(alpha.dense_target());
  Problem problem{std::move(alpha), std::move(beta), std::move(complement_index),
                  config.tukey_scale * resolution, resolution_calls, 0, {}};
  if (problem.beta && problem.beta->tims.pairs.empty()) {
    problem.beta.reset();
    problem.warning = "empty TIM set";
  }
  return problem;
}

Problem prepare_problem(const ingest::DatasetPair& pair, const EmtoConfig& config, std::uint64_t seed) {
  config.validate();
  auto dense_source = ingest::downsample_to_cap(pair.source, config.dense_cap);
  auto dense_target = ingest::downsample_to_cap(pair.target, config.dense_cap);
  auto sparse_source = ingest::downsample_to_cap(dense_source, config.sparse_cap);
  if (dense_source.size() < 2 || dense_target.size() < 2) {
    throw Error(ErrorCode::DegenerateCloud, "clouds need at least two points after downsampling");
  }

  std::optional<fitness::BetaContext> beta;
  std::string warning;
  std::uint64_t feature_calls = 0;
  std::size_t correspondences = 0;
  try {
    const auto feat_source = ingest::downsample_to_cap(pair.source, config.feature_cap);
    const auto feat_target = ingest::downsample_to_cap(pair.target, config.feature_cap);
    const auto normals_source = features::estimate_normals(feat_source, config.normal_k);
    const auto normals_target = features::estimate_normals(feat_target, config.normal_k);
    const double radius = config.fpfh_radius_scale * geom::mean_resolution(feat_source);
    const auto desc_source = features::compute_fpfh(normals_source.cloud, radius, normals_source.valid);
    const auto desc_target = features::compute_fpfh(normals_target.cloud, radius, normals_target.valid);
    // knn per point for normals and resolution, one radius query per usable point.
    feature_calls = 2 * feat_source.size() + feat_target.size() +
                    static_cast<std::uint64_t>(std::count(normals_source.valid.begin(), normals_source.valid.end(), 1)) +
                    static_cast<std::uint64_t>(std::count(normals_target.valid.begin(), normals_target.valid.end(), 1));
    const auto matches = features::match_correspondences(desc_source, desc_target, config.max_pairs);
    correspondences = matches.size();
    auto tims = features::build_tims(matches, feat_source, feat_target, config.max_tims, seed, config.tau_from);
    feature_calls += config.tau_from == features::TauReference::Source ? feat_source.size() : feat_target.size();
    tims.tau *= config.tau_scale;
    beta = fitness::BetaContext::from_tims(std::move(tims), config.eta_factor, config.inlier_factor);
  } catch (const Error& e) {
    warning = std::string("auxiliary task unavailable: ") + e.what();
  }

  Problem problem = make_problem(std::move(sparse_source), std::move(dense_source), std::move(dense_target),
                                 std::move(beta), config);
  problem.feature_nns_calls += feature_calls;
  problem.correspondences = correspondences;
  if (!warning.empty()) problem.warning = warning;
  return problem;
}

// ---------------------------------------------------------------------------

double tukey_weight(double r, double d) {
  if (r > d) return 0.0;
  const double u = r / d;
  const double s = 1.0 - u * u;
  return s * s;
}

ComplementResult knowledge_complement(std::span<const Point3> source, const geom::RotationMatrix& r_srch,
                                      const geom::NnIndex& target_index, int max_it_kc, double d) {
  if (!(d > 0.0)) throw Error(ErrorCode::InvalidArgument, "Tukey threshold d must be positive");
  if (source.empty() || target_index.size() == 0) {
    throw Error(ErrorCode::DegenerateCloud, "knowledge complement needs non-empty clouds");
  }
  std::vector<Point3> moved(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) moved[i] = r_srch * source[i];

  ComplementResult result;
  for (int k = 0; k < max_it_kc; ++k) {
    Vector3 sum_p = Vector3::Zero(), sum_q = Vector3::Zero();
    double sum_w = 0.0;
    for (const auto& p : moved) {
      const auto nb = target_index.nearest(p);
      const double w = tukey_weight(nb.distance, d);
      if (w == 0.0) continue;
      sum_w += w;
      sum_p += w * p;
      sum_q += w * target_index.point(nb.index);
    }
    if (!(sum_w > 0.0)) {
      result.degenerate_weights = true;
      break;
    }
    const Vector3 step = (sum_q - sum_p) / sum_w;
    for (auto& p : moved) p += step;
    result.translation += step;
    result.iterations = k + 1;
  }
  return result;
}

pso::Vec arithmetic_crossover(const pso::Vec& self, const pso::Vec& other, double lambda) {
  if (self.size() != other.size()) throw Error(ErrorCode::InvalidArgument, "crossover dimension mismatch");
  pso::Vec out(self.size());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = lambda * self[d] + (1.0 - lambda) * other[d];
  return out;
}

namespace {

bool offer(pso::Subpopulation& sub, const pso::Vec& candidate, double fitness, bool overwrite) {
  if (!overwrite) return pso::offer_gbest(sub, candidate, fitness);
  sub.gbest_position = candidate;
  sub.gbest_fitness = fitness;
  ++sub.gbest_version;
  return true;
}

}  // namespace

TransferOutcome transfer_beta_to_alpha(pso::Subpopulation& alpha, const pso::Subpopulation& beta,
                                       TransferState& state, int it, const EmtoConfig& config,
                                       const fitness::AlphaContext& alpha_ctx,
                                       const geom::NnIndex& complement_index, double tukey_d) {
  TransferOutcome out;
  const auto& angles = beta.gbest_position;
  const bool beta_moved = !state.last_beta_gbest_version || *state.last_beta_gbest_version != beta.gbest_version;
  if (beta_moved || !state.last_t_est) {
    const auto r_srch = geom::euler_to_rotation(angles[0], angles[1], angles[2]);
    const auto kc = knowledge_complement(alpha_ctx.sparse_source().points, r_srch, complement_index,
                                         config.max_it_kc, tukey_d);
    state.last_t_est = kc.translation;
    state.last_beta_gbest_version = beta.gbest_version;
    out.complement_ran = true;
    out.complement_degenerate = kc.degenerate_weights;
  }
  const Vector3& t = *state.last_t_est;
  const pso::Vec assembled{angles[0], angles[1], angles[2], t.x(), t.y(), t.z()};
  out.candidate = pso::clamp_to(arithmetic_crossover(alpha.gbest_position, assembled, config.lambda_alpha(it)),
                                alpha.bounds);
  out.fitness = fitness::fitness_alpha(alpha_ctx, EulerPose::from_position(out.candidate));
  out.accepted = offer(alpha, out.candidate, out.fitness, config.transfer_overwrite);
  return out;
}

TransferOutcome transfer_alpha_to_beta(pso::Subpopulation& beta, const pso::Vec& alpha_gbest, int it,
                                       const EmtoConfig& config, const fitness::BetaContext& beta_ctx) {
  TransferOutcome out;
  const pso::Vec angles(alpha_gbest.begin(), alpha_gbest.begin() + 3);
  out.candidate =
      pso::clamp_to(arithmetic_crossover(beta.gbest_position, angles, config.lambda_beta(it)), beta.bounds);
  out.fitness = fitness::fitness_beta(beta_ctx, EulerPose::from_position(out.candidate));
  out.accepted = offer(beta, out.candidate, out.fitness, config.transfer_overwrite);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> evaluate_alpha(const fitness::AlphaContext& ctx, const pso::Subpopulation& sub,
                                   bool use_pbest = false) {
  std::vector<double> f(sub.particles.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& x = use_pbest ? sub.particles[i].pbest_position : sub.particles[i].position;
    f[i] = fitness::fitness_alpha(ctx, EulerPose::from_position(x));
  }
  return f;
}

std::vector<double> evaluate_beta(const fitness::BetaContext& ctx, const pso::Subpopulation& sub) {
  std::vector<double> f(sub.particles.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = fitness::fitness_beta(ctx, EulerPose::from_position(sub.particles[i].position));
  }
  return f;
}

// Re-scores positions, personal bests and the global best under the dense
// objective; each pbest keeps the better of its old position and the current one.
void rescore_after_switch(const fitness::AlphaContext& ctx, pso::Subpopulation& sub) {
  const auto current = evaluate_alpha(ctx, sub);
  const auto pbests = evaluate_alpha(ctx, sub, true);
  sub.gbest_fitness = fitness::fitness_alpha(ctx, EulerPose::from_position(sub.gbest_position));
  for (std::size_t i = 0; i < sub.particles.size(); ++i) {
    auto& p = sub.particles[i];
    if (current[i] < pbests[i]) {
      p.pbest_position = p.position;
      p.pbest_fitness = current[i];
    } else {
      p.pbest_fitness = pbests[i];
    }
  }
  for (const auto& p : sub.particles) {
    if (p.pbest_fitness < sub.gbest_fitness) {
      sub.gbest_fitness = p.pbest_fitness;
      sub.gbest_position = p.pbest_position;
    }
  }
  ++sub.gbest_version;
}

}  // namespace

RunResult run_emtr_ssc(const Problem& problem, const EmtoConfig& config, std::uint64_t rng_seed) {
  config.validate();
  fitness::AlphaContext alpha_ctx = problem.alpha;
  geom::NnIndex complement_index = problem.complement_index;
  complement_index.reset_calls();

  pso::Rng rng(rng_seed);
  std::uniform_real_distribution<double> gate(0.0, 1.0);
  const auto alpha_bounds = pso::Bounds::rotation_translation(config.translation_half_extent);
  const auto beta_bounds = pso::Bounds::rotation();
  auto alpha = pso::init_subpopulation(config.pop_size, alpha_bounds, rng);
  const bool multitask = problem.beta.has_value();
  pso::Subpopulation beta;
  if (multitask) beta = pso::init_subpopulation(config.pop_size, beta_bounds, rng);

  RunResult result;
  RunTrace& trace = result.trace;
  trace.mode = "emtr-ssc";
  trace.degraded_single_task = !multitask;
  trace.feature_calls = problem.feature_nns_calls;
  TransferState state;
  const int switch_it = config.sparse_to_dense ? config.switch_iteration() : -1;

  for (int it = 1; it <= config.max_it; ++it) {
    IterationRecord rec;
    rec.it = it;

    std::uint64_t before = alpha_ctx.nns_calls();
    const auto f_alpha = evaluate_alpha(alpha_ctx, alpha);
    rec.nns_calls = alpha_ctx.nns_calls() - before;
    trace.swarm_calls += rec.nns_calls;
    trace.nan_evaluations += pso::update_bests(alpha, f_alpha).nan_fitness;

    if (multitask) {
      const auto f_beta = evaluate_beta(*problem.beta, beta);
      trace.nan_evaluations += pso::update_bests(beta, f_beta).nan_fitness;

      if (gate(rng) < config.rmp) {
        rec.transfer_fired = true;
        ++trace.transfers;
        const pso::Vec alpha_gbest_before = alpha.gbest_position;
        before = alpha_ctx.nns_calls();
        const auto to_alpha = transfer_beta_to_alpha(alpha, beta, state, it, config, alpha_ctx,
                                                     complement_index, problem.tukey_d);
        trace.transfer_calls += alpha_ctx.nns_calls() - before;
        trace.complement_runs += to_alpha.complement_ran ? 1 : 0;
        trace.degenerate_complements += to_alpha.complement_degenerate ? 1 : 0;
        trace.accepted_beta_to_alpha += to_alpha.accepted ? 1 : 0;
        const auto to_beta = transfer_alpha_to_beta(beta, alpha_gbest_before, it, config, *problem.beta);
        trace.accepted_alpha_to_beta += to_beta.accepted ? 1 : 0;
      }
    }

    if (it == switch_it) {
      alpha_ctx.switch_stage();
      before = alpha_ctx.nns_calls();
      rescore_after_switch(alpha_ctx, alpha);
      trace.switch_calls += alpha_ctx.nns_calls() - before;
      trace.switch_iteration = it;
    }

    rec.stage = alpha_ctx.stage();
    rec.gbest_fit_alpha = alpha.gbest_fitness;
    rec.gbest_fit_beta = multitask ? beta.gbest_fitness : std::numeric_limits<double>::quiet_NaN();
    trace.iterations.push_back(rec);

    pso::advance(alpha, config.pso, it, config.max_it, rng);
    if (multitask) pso::advance(beta, config.pso, it, config.max_it, rng);
  }

  trace.complement_calls = complement_index.calls();
  result.position = alpha.gbest_position;
  result.fitness = alpha.gbest_fitness;
  result.transform = geom::pose_to_transform(EulerPose::from_position(alpha.gbest_position));
  if (multitask) {
    const auto& b = beta.gbest_position;
    result.beta_rotation = geom::euler_to_rotation(b[0], b[1], b[2]);
  }
  return result;
}

RunResult run_single_task_pso(const Problem& problem, const EmtoConfig& config, std::uint64_t rng_seed,
                              int iterations) {
  config.validate();
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "baseline needs at least one iteration");
  fitness::AlphaContext ctx = problem.alpha;
  if (ctx.stage() == fitness::Stage::Sparse) ctx.switch_stage();

  pso::Rng rng(rng_seed);
  auto swarm = pso::init_subpopulation(config.baseline_pop,
                                       pso::Bounds::rotation_translation(config.translation_half_extent), rng);
  RunResult result;
  RunTrace& trace = result.trace;
  trace.mode = "single-task-pso";
  trace.degraded_single_task = true;
  for (int it = 1; it <= iterations; ++it) {
    IterationRecord rec;
    rec.it = it;
    const std::uint64_t before = ctx.nns_calls();
    const auto f = evaluate_alpha(ctx, swarm);
    rec.nns_calls = ctx.nns_calls() - before;
    trace.swarm_calls += rec.nns_calls;
    trace.nan_evaluations += pso::update_bests(swarm, f).nan_fitness;
    rec.stage = fitness::Stage::Dense;
    rec.gbest_fit_alpha = swarm.gbest_fitness;
    rec.gbest_fit_beta = std::numeric_limits<double>::quiet_NaN();
    trace.iterations.push_back(rec);
    pso::advance(swarm, config.pso, it, iterations, rng);
  }
  result.position = swarm.gbest_position;
  result.fitness = swarm.gbest_fitness;
  result.transform = geom::pose_to_transform(EulerPose::from_position(swarm.gbest_position));
  return result;
}

double predicted_calls_with_s2d(double pop, double iterations, double delta, double n_sparse,
                                double n_dense_source, double n_dense_target) {
  return pop * iterations * (delta * n_sparse + (1.0 - delta) * (n_dense_source + n_dense_target));
}

double predicted_calls_without_s2d(double pop, double iterations, double n_dense_source,
                                   double n_dense_target) {
  return pop * iterations * (n_dense_source + n_dense_target);
}

int baseline_iterations(const EmtoConfig& config, std::size_t n_sparse, std::size_t n_dense_source,
                        std::size_t n_dense_target) {
  const double budget =
      config.sparse_to_dense
          ? predicted_calls_with_s2d(static_cast<double>(config.pop_size), config.max_it, config.delta,
                                     static_cast<double>(n_sparse), static_cast<double>(n_dense_source),
                                     static_cast<double>(n_dense_target))
          : predicted_calls_without_s2d(static_cast<double>(config.pop_size), config.max_it,
                                        static_cast<double>(n_dense_source), static_cast<double>(n_dense_target));
  const double per_iteration =
      static_cast<double>(config.baseline_pop) * static_cast<double>(n_dense_source + n_dense_target);
  return std::max(1, static_cast<int>(std::floor(budget / per_iteration + 1e-9)));
}

std::string trace_to_json(const RunTrace& trace, int indent) {
  nlohmann::ordered_json j;
  j["mode"] = trace.mode;
  j["degraded_single_task"] = trace.degraded_single_task;
  j["switch_iteration"] = trace.switch_iteration;
  j["nns_calls"] = {{"swarm", trace.swarm_calls},         {"transfer", trace.transfer_calls},
                    {"switch", trace.switch_calls},       {"complement", trace.complement_calls},
                    {"features", trace.feature_calls},    {"total", trace.total_calls()}};
  j["transfers"] = trace.transfers;
  j["accepted_beta_to_alpha"] = trace.accepted_beta_to_alpha;
  j["accepted_alpha_to_beta"] = trace.accepted_alpha_to_beta;
  j["complement_runs"] = trace.complement_runs;
  j["degenerate_complements"] = trace.degenerate_complements;
  j["nan_evaluations"] = trace.nan_evaluations;
  auto& its = j["iterations"] = nlohmann::ordered_json::array();
  for (const auto& r : trace.iterations) {
    nlohmann::ordered_json row;
    row["it"] = r.it;
    row["gbest_fit_alpha"] = r.gbest_fit_alpha;
    if (std::isnan(r.gbest_fit_beta)) row["gbest_fit_beta"] = nullptr;
    else row["gbest_fit_beta"] = r.gbest_fit_beta;
    row["nns_calls"] = r.nns_calls;
    row["transfer_fired"] = r.transfer_fired;
    row["stage"] = r.stage == fitness::Stage::Sparse ? "S" : "D";
    its.push_back(std::move(row));
  }
  return j.dump(indent);
}

}  // namespace emtr::multitask
