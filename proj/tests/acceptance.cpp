// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Pass criterion numbers as arguments to run a subset.

#include "emtr/features.hpp"
#include "emtr/fitness.hpp"
#include "emtr/harness.hpp"
#include "emtr/multitask.hpp"
#include "emtr/optimizer.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace emtr;
using geom::PointCloud;
using geom::Vector3;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Swarm-loop NNS cost with and without the sparse-to-dense switch.

Outcome cost_ratio() {
  multitask::EmtoConfig config;  // P = 50, MaxIt = 100, delta = 0.6
  const auto cloud = ingest::synthetic_surrogate(5000, 1);
  const auto pair = ingest::make_pair(
      cloud, ingest::random_transform(ingest::TransformSubspace::SR_ST, geom::bounding_box_diagonal(cloud), 1));
  PointCloud sparse;
  for (std::size_t i = 0; i < pair.source.size(); i += 5) sparse.points.push_back(pair.source.points[i]);
  if (pair.source.size() != 5000 || pair.target.size() != 5000 || sparse.size() != 1000) {
    return {false, "could not build clouds of the reference sizes"};
  }
  const auto beta = multitask::prepare_problem(pair, config, 1).beta;

  const auto with = multitask::make_problem(sparse, pair.source, pair.target, beta, config);
  const auto run_with = multitask::run_emtr_ssc(with, config, 1);
  auto dense_config = config;
  dense_config.sparse_to_dense = false;
  const auto without = multitask::make_problem(sparse, pair.source, pair.target, beta, dense_config);
  const auto run_without = multitask::run_emtr_ssc(without, dense_config, 1);

  const double p_with = multitask::predicted_calls_with_s2d(50, 100, 0.6, 1000, 5000, 5000);
  const double p_without = multitask::predicted_calls_without_s2d(50, 100, 5000, 5000);
  const auto m_with = run_with.trace.swarm_calls;
  const auto m_without = run_without.trace.swarm_calls;
  const double ratio = static_cast<double>(m_with) / static_cast<double>(m_without);
  const bool pass = static_cast<double>(m_with) == p_with && static_cast<double>(m_without) == p_without &&
                    std::abs(ratio - 0.46) < 1e-15;
  return {pass, fmt("measured %llu / %llu, predicted %.0f / %.0f, ratio %.4f",
                    static_cast<unsigned long long>(m_with), static_cast<unsigned long long>(m_without), p_with,
                    p_without, ratio)};
}

// ---------------------------------------------------------------------------
// 2. Success ratio on the 20-trial protocol against the single-task baseline.

Outcome success_ratio() {
  harness::ExperimentSpec spec;  // surrogate, 4 trials per subspace + 4 FULL, seed 1
  spec.config.dense_cap = 2000;
  spec.config.sparse_cap = 500;
  const auto emtr = harness::run_experiment(spec);
  spec.mode = harness::Mode::SingleTaskPso;
  const auto pso = harness::run_experiment(spec);
  const double a = emtr.aggregates.success_ratio, b = pso.aggregates.success_ratio;
  return {emtr.trials.size() == 20 && a >= 0.75 && a > b,
          fmt("EMTR-SSC %.2f (%zu/%zu), single-task PSO %.2f (%zu/%zu), %.0f s", a, emtr.aggregates.successes,
              emtr.trials.size(), b, pso.aggregates.successes, pso.trials.size(),
              emtr.aggregates.total_wall_time + pso.aggregates.total_wall_time)};
}

// ---------------------------------------------------------------------------
// 3. Knowledge complement recovers t* given the true rotation.

Outcome complement_recovery() {
  const multitask::EmtoConfig config;
  const auto cloud = ingest::centralize_normalize(ingest::synthetic_surrogate(3000, 5)).cloud;
  const double d = config.tukey_scale * geom::mean_resolution(cloud);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto direction = [&] { return Vector3(gauss(rng), gauss(rng), gauss(rng)).normalized(); };
  double worst_clean = 0.0, worst_outlier = 0.0;
  int clean_ok = 0, outlier_ok = 0;
  for (int k = 0; k < 100; ++k) {
    const auto r = geom::euler_to_rotation(support::uniform(rng, -std::numbers::pi, std::numbers::pi),
                                           support::uniform(rng, -std::numbers::pi / 2, std::numbers::pi / 2),
                                           support::uniform(rng, -std::numbers::pi, std::numbers::pi));
    const Vector3 t = direction() * support::uniform(rng, 0.0, 0.5 * d);
    const geom::NnIndex index(geom::apply_transform(cloud, {r, t}));

    const auto clean = multitask::knowledge_complement(cloud.points, r, index, config.max_it_kc, d);
    const double e1 = (clean.translation - t).norm();
    worst_clean = std::max(worst_clean, e1);
    clean_ok += e1 < 1e-6 ? 1 : 0;

    auto corrupted = cloud.points;
    for (std::size_t i = 0; i < corrupted.size() * 3 / 10; ++i) corrupted[i] += direction() * 10.0 * d;
    const auto robust = multitask::knowledge_complement(corrupted, r, index, config.max_it_kc, d);
    const double e2 = (robust.translation - t).norm();
    worst_outlier = std::max(worst_outlier, e2);
    outlier_ok += e2 < 1e-3 ? 1 : 0;
  }
  return {clean_ok == 100 && outlier_ok == 100,
          fmt("clean %d/100 (worst %.2e), 30%% outliers %d/100 (worst %.2e)", clean_ok, worst_clean, outlier_ok,
              worst_outlier)};
}

// ---------------------------------------------------------------------------
// 4. Convergence precision on noiseless SRxST pairs.

Outcome convergence_precision() {
  harness::ExperimentSpec spec;
  spec.subspaces = {ingest::TransformSubspace::SR_ST};
  spec.trials_per_subspace = 20;
  spec.full_trials = 0;
  const auto report = harness::run_experiment(spec);
  int precise = 0;
  double worst_r = 0.0, worst_t = 0.0;
  for (const auto& t : report.trials) {
    if (t.rotation_error_deg < 1.0 && t.translation_error < 0.01) ++precise;
    worst_r = std::max(worst_r, t.rotation_error_deg);
    worst_t = std::max(worst_t, t.translation_error);
  }
  return {precise >= 18, fmt("%d/20 runs with E_R < 1 deg and E_t < 0.01 (worst E_R %.3f, worst E_t %.4f)",
                             precise, worst_r, worst_t)};
}

// ---------------------------------------------------------------------------
// 5. Oracle equivalence suites.

double beta_oracle(const features::TimPairSet& tims, const geom::RotationMatrix& r) {
  double total = 0.0;
  for (const auto& pair : tims.pairs) {
    const Vector3 d = pair.target_tim - r * pair.source_tim;
    const double res = std::sqrt(d.x() * d.x() + d.y() * d.y() + d.z() * d.z());
    total += res < 5.0 * tims.tau ? res : 50.0 * tims.tau;
  }
  return total;
}

Outcome oracle_suites() {
  std::mt19937_64 rng(5);
  int nn_ok = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto cloud = support::random_cloud(rng, 1 + rng() % 400);
    const geom::NnIndex index(cloud);
    const Vector3 q(support::uniform(rng, -1.5, 1.5), support::uniform(rng, -1.5, 1.5),
                    support::uniform(rng, -1.5, 1.5));
    const auto hit = index.nearest(q);
    const auto scan = support::linear_scan(cloud.points, q);
    nn_ok += hit.index == scan.index && hit.distance == scan.distance ? 1 : 0;
  }

  int euler_ok = 0;
  for (int k = 0; k < 1000; ++k) {
    const double a = support::uniform(rng, -std::numbers::pi, std::numbers::pi);
    const double b = support::uniform(rng, -std::numbers::pi / 2, std::numbers::pi / 2);
    const double c = support::uniform(rng, -std::numbers::pi, std::numbers::pi);
    const double diff = (geom::euler_to_rotation(a, b, c) - support::per_axis_rotation(a, b, c)).cwiseAbs().maxCoeff();
    euler_ok += diff < 1e-12 ? 1 : 0;
  }

  int beta_ok = 0;
  for (int set = 0; set < 100; ++set) {
    const auto truth = support::random_rotation(rng);
    features::TimPairSet tims;
    tims.tau = support::uniform(rng, 0.001, 0.05);
    std::normal_distribution<double> noise(0.0, tims.tau);
    const auto n = 10 + rng() % 200;
    for (std::size_t i = 0; i < n; ++i) {
      const Vector3 p(support::uniform(rng, -1, 1), support::uniform(rng, -1, 1), support::uniform(rng, -1, 1));
      Vector3 q = truth * p + Vector3(noise(rng), noise(rng), noise(rng));
      if (rng() % 3 == 0) q = Vector3(support::uniform(rng, -1, 1), 0.3, -0.2);
      tims.pairs.push_back({p, q, i, i + 1});
    }
    const auto ctx = fitness::BetaContext::from_tims(tims);
    bool all = true;
    for (int k = 0; k < 5; ++k) {
      const auto r = k == 0 ? truth : support::random_rotation(rng);
      const double got = fitness::fitness_beta(ctx, r), want = beta_oracle(tims, r);
      all = all && std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want));
    }
    beta_ok += all ? 1 : 0;
  }

  const double c = 0.37;
  const bool rho_ok = fitness::rho(0.0, c) == 0.0 && fitness::rho(c / 2, c) == 0.578125 &&
                      fitness::rho(c, c) == 1.0 && fitness::rho(2 * c, c) == 1.0;

  return {nn_ok == 1000 && euler_ok == 1000 && beta_ok == 100 && rho_ok,
          fmt("nearest %d/1000, euler %d/1000, fitness_beta %d/100, rho values %s", nn_ok, euler_ok, beta_ok,
              rho_ok ? "exact" : "wrong")};
}

// ---------------------------------------------------------------------------
// 6. Invariant suites.

Outcome invariant_suites() {
  std::mt19937_64 rng(6);
  int ortho_ok = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto r = geom::euler_to_rotation(support::uniform(rng, -std::numbers::pi, std::numbers::pi),
                                           support::uniform(rng, -std::numbers::pi / 2, std::numbers::pi / 2),
                                           support::uniform(rng, -std::numbers::pi, std::numbers::pi));
    const double dev = (r.transpose() * r - geom::RotationMatrix::Identity()).cwiseAbs().maxCoeff();
    ortho_ok += dev < 1e-12 && std::abs(r.determinant() - 1.0) < 1e-12 ? 1 : 0;
  }

  pso::Rng prng(6);
  const auto bounds = pso::Bounds::rotation_translation();
  auto sub = pso::init_subpopulation(50, bounds, prng);
  bool contained = true, monotone_pso = true;
  double last = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= 1000; ++it) {
    std::vector<double> f;
    for (const auto& p : sub.particles) {
      double s = 0.0;
      for (double v : p.position) s += (v - 0.2) * (v - 0.2);
      f.push_back(s);
    }
    pso::update_bests(sub, f);
    monotone_pso = monotone_pso && sub.gbest_fitness <= last;
    last = sub.gbest_fitness;
    pso::advance(sub, pso::PsoParams{}, it, 1000, prng);
    for (const auto& p : sub.particles)
      for (std::size_t d = 0; d < bounds.dim(); ++d)
        contained = contained && p.position[d] >= bounds.lo[d] && p.position[d] <= bounds.hi[d];
  }

  multitask::EmtoConfig config;
  config.max_it = 30;
  config.pop_size = 20;
  config.dense_cap = 600;
  config.sparse_cap = 120;
  config.feature_cap = 600;
  const auto cloud = ingest::synthetic_surrogate(3000, 6);
  const auto pair = ingest::make_pair(
      cloud, ingest::random_transform(ingest::TransformSubspace::LR_LT, geom::bounding_box_diagonal(cloud), 6));
  const auto problem = multitask::prepare_problem(pair, config, 6);
  const auto a = multitask::run_emtr_ssc(problem, config, 6);
  const auto b = multitask::run_emtr_ssc(problem, config, 6);
  bool monotone_run = true;
  const auto& its = a.trace.iterations;
  for (std::size_t i = 1; i < its.size(); ++i) {
    if (its[i].it != config.switch_iteration()) monotone_run = monotone_run && its[i].gbest_fit_alpha <= its[i - 1].gbest_fit_alpha;
    if (problem.beta) monotone_run = monotone_run && its[i].gbest_fit_beta <= its[i - 1].gbest_fit_beta;
  }
  const bool reproducible = multitask::trace_to_json(a.trace) == multitask::trace_to_json(b.trace) &&
                            std::memcmp(a.position.data(), b.position.data(), sizeof(double) * 6) == 0;

  std::vector<harness::TrialRecord> trials(20);
  for (std::size_t i = 0; i < 20; ++i) {
    trials[i].success = i < 15;
    trials[i].rotation_error_deg = i < 15 ? 1.0 + static_cast<double>(i % 2) : 120.0;
  }
  const auto agg = harness::aggregate(trials);
  const bool aggregation = agg.success_ratio == 0.75 && std::abs(agg.mean_rotation_error_deg - 22.0 / 15.0) < 1e-14 &&
                           std::abs(agg.std_rotation_error_deg - std::sqrt(56.0) / 15.0) < 1e-14;

  return {ortho_ok == 1000 && contained && monotone_pso && monotone_run && reproducible && aggregation,
          fmt("orthonormal %d/1000, bounds %s, gbest monotone %s, reproducible %s, aggregation %s", ortho_ok,
              contained ? "held" : "violated", monotone_pso && monotone_run ? "yes" : "no",
              reproducible ? "yes" : "no", aggregation ? "correct" : "wrong")};
}

// ---------------------------------------------------------------------------
// 7. Transfer schedule endpoints.

Outcome schedule_endpoints() {
  const multitask::EmtoConfig c;
  const double a0 = c.lambda_alpha(0), a1 = c.lambda_alpha(c.max_it);
  const double b0 = c.lambda_beta(0), b1 = c.lambda_beta(c.max_it);
  return {a0 == 0.1 && a1 == 0.7 && b0 == 0.999 && b1 == 0.199,
          fmt("lambda_alpha %.17g -> %.17g, lambda_beta %.17g -> %.17g", a0, a1, b0, b1)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"sparse-to-dense cost ratio", cost_ratio},
      {"success ratio vs single-task baseline", success_ratio},
      {"knowledge complement recovery", complement_recovery},
      {"convergence precision on SRxST", convergence_precision},
      {"oracle equivalence suites", oracle_suites},
      {"invariant suites", invariant_suites},
      {"transfer schedule endpoints", schedule_endpoints},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
