#include "emtr/harness.hpp"

#include "emtr/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

namespace emtr::harness {

using nlohmann::ordered_json;
using multitask::EmtoConfig;

std::string_view to_string(Mode mode) {
  return mode == Mode::EmtrSsc ? "emtr-ssc" : "single-task-pso";
}

Mode mode_from_string(std::string_view name) {
  if (name == "emtr-ssc") return Mode::EmtrSsc;
  if (name == "single-task-pso" || name == "pso") return Mode::SingleTaskPso;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(name) + "'");
}

std::size_t ExperimentSpec::total_trials() const {
  const std::size_t per_input = subspaces.size() * trials_per_subspace + full_trials;
  return per_input * std::max<std::size_t>(1, inputs.size());
}

// ---------------------------------------------------------------------------
// Config and spec JSON

namespace {

template <class T>
T checked(const ordered_json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::Parse, "field '" + key + "' has the wrong type");
  }
}

void apply_config(const ordered_json& j, EmtoConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "config overrides must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "max_it") c.max_it = checked<int>(v, key);
    else if (key == "pop_size") c.pop_size = checked<std::size_t>(v, key);
    else if (key == "rmp") c.rmp = checked<double>(v, key);
    else if (key == "delta") c.delta = checked<double>(v, key);
    else if (key == "sparse_to_dense") c.sparse_to_dense = checked<bool>(v, key);
    else if (key == "lambda_alpha_start") c.lambda_alpha_start = checked<double>(v, key);
    else if (key == "lambda_alpha_end") c.lambda_alpha_end = checked<double>(v, key);
    else if (key == "lambda_beta_start") c.lambda_beta_start = checked<double>(v, key);
    else if (key == "lambda_beta_end") c.lambda_beta_end = checked<double>(v, key);
    else if (key == "transfer_overwrite") c.transfer_overwrite = checked<bool>(v, key);
    else if (key == "c1") c.pso.c1 = checked<double>(v, key);
    else if (key == "c2") c.pso.c2 = checked<double>(v, key);
    else if (key == "omega_start") c.pso.omega_start = checked<double>(v, key);
    else if (key == "omega_drop") c.pso.omega_drop = checked<double>(v, key);
    else if (key == "per_dimension_r") c.pso.per_dimension_r = checked<bool>(v, key);
    else if (key == "translation_half_extent") c.translation_half_extent = checked<double>(v, key);
    else if (key == "max_it_kc") c.max_it_kc = checked<int>(v, key);
    else if (key == "tukey_scale") c.tukey_scale = checked<double>(v, key);
    else if (key == "c_scale") c.c_scale = checked<double>(v, key);
    else if (key == "tau_scale") c.tau_scale = checked<double>(v, key);
    else if (key == "eta_factor") c.eta_factor = checked<double>(v, key);
    else if (key == "inlier_factor") c.inlier_factor = checked<double>(v, key);
    else if (key == "dense_cap") c.dense_cap = checked<std::size_t>(v, key);
    else if (key == "sparse_cap") c.sparse_cap = checked<std::size_t>(v, key);
    else if (key == "feature_cap") c.feature_cap = checked<std::size_t>(v, key);
    else if (key == "normal_k") c.normal_k = checked<std::size_t>(v, key);
    else if (key == "fpfh_radius_scale") c.fpfh_radius_scale = checked<double>(v, key);
    else if (key == "max_pairs") c.max_pairs = checked<std::size_t>(v, key);
    else if (key == "max_tims") c.max_tims = checked<std::size_t>(v, key);
    else if (key == "tau_from") {
      const auto s = checked<std::string>(v, key);
      if (s == "source") c.tau_from = features::TauReference::Source;
      else if (s == "target") c.tau_from = features::TauReference::Target;
      else throw Error(ErrorCode::Parse, "tau_from must be 'source' or 'target'");
    } else if (key == "baseline_pop") c.baseline_pop = checked<std::size_t>(v, key);
    else throw Error(ErrorCode::Parse, "unknown config key '" + key + "'");
  }
}

ordered_json config_json(const EmtoConfig& c) {
  return {{"max_it", c.max_it},
          {"pop_size", c.pop_size},
          {"rmp", c.rmp},
          {"delta", c.delta},
          {"sparse_to_dense", c.sparse_to_dense},
          {"lambda_alpha_start", c.lambda_alpha_start},
          {"lambda_alpha_end", c.lambda_alpha_end},
          {"lambda_beta_start", c.lambda_beta_start},
          {"lambda_beta_end", c.lambda_beta_end},
          {"transfer_overwrite", c.transfer_overwrite},
          {"c1", c.pso.c1},
          {"c2", c.pso.c2},
          {"omega_start", c.pso.omega_start},
          {"omega_drop", c.pso.omega_drop},
          {"per_dimension_r", c.pso.per_dimension_r},
          {"translation_half_extent", c.translation_half_extent},
          {"max_it_kc", c.max_it_kc},
          {"tukey_scale", c.tukey_scale},
          {"c_scale", c.c_scale},
          {"tau_scale", c.tau_scale},
          {"eta_factor", c.eta_factor},
          {"inlier_factor", c.inlier_factor},
          {"dense_cap", c.dense_cap},
          {"sparse_cap", c.sparse_cap},
          {"feature_cap", c.feature_cap},
          {"normal_k", c.normal_k},
          {"fpfh_radius_scale", c.fpfh_radius_scale},
          {"max_pairs", c.max_pairs},
          {"max_tims", c.max_tims},
          {"tau_from", c.tau_from == features::TauReference::Source ? "source" : "target"},
          {"baseline_pop", c.baseline_pop}};
}

ordered_json parse_json(const std::string& text) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

EmtoConfig config_from_json(const std::string& text, const EmtoConfig& base) {
  EmtoConfig c = base;
  apply_config(parse_json(text), c);
  c.validate();
  return c;
}

ExperimentSpec spec_from_json(const std::string& text) {
  const auto j = parse_json(text);
  if (!j.is_object()) throw Error(ErrorCode::Parse, "spec must be a JSON object");
  ExperimentSpec spec;
  for (const auto& [key, v] : j.items()) {
    if (key == "inputs") {
      spec.inputs.clear();
      for (const auto& p : v) spec.inputs.emplace_back(checked<std::string>(p, key));
    } else if (key == "surrogate_points") spec.surrogate_points = checked<std::size_t>(v, key);
    else if (key == "subspaces") {
      spec.subspaces.clear();
      for (const auto& s : v) spec.subspaces.push_back(ingest::subspace_from_string(checked<std::string>(s, key)));
    } else if (key == "trials_per_subspace") spec.trials_per_subspace = checked<std::size_t>(v, key);
    else if (key == "full_trials") spec.full_trials = checked<std::size_t>(v, key);
    else if (key == "seed") spec.seed = checked<std::uint64_t>(v, key);
    else if (key == "mode") spec.mode = mode_from_string(checked<std::string>(v, key));
    else if (key == "config") apply_config(v, spec.config);
    else if (key == "threads") spec.threads = checked<std::size_t>(v, key);
    else if (key == "rmse_dir") spec.rmse_dir = checked<std::string>(v, key);
    else throw Error(ErrorCode::Parse, "unknown spec key '" + key + "'");
  }
  spec.config.validate();
  return spec;
}

std::string spec_to_json(const ExperimentSpec& spec, int indent) {
  ordered_json j;
  j["inputs"] = ordered_json::array();
  for (const auto& p : spec.inputs) j["inputs"].push_back(p.string());
  j["surrogate_points"] = spec.surrogate_points;
  j["subspaces"] = ordered_json::array();
  for (auto s : spec.subspaces) j["subspaces"].push_back(std::string(ingest::to_string(s)));
  j["trials_per_subspace"] = spec.trials_per_subspace;
  j["full_trials"] = spec.full_trials;
  j["seed"] = spec.seed;
  j["mode"] = std::string(to_string(spec.mode));
  j["config"] = config_json(spec.config);
  j["threads"] = spec.threads;
  if (spec.rmse_dir) j["rmse_dir"] = spec.rmse_dir->string();
  return j.dump(indent);
}

// ---------------------------------------------------------------------------
// Running

std::size_t worker_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EMTR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct ModeRun {
  multitask::RunResult run;
  std::size_t n_sparse = 0, n_dense_source = 0, n_dense_target = 0;
  std::string warning;
};

ModeRun run_mode(const ingest::DatasetPair& pair, Mode mode, const EmtoConfig& config, std::uint64_t seed) {
  ModeRun out;
  if (mode == Mode::EmtrSsc) {
    const auto problem = multitask::prepare_problem(pair, config, seed);
    out.n_sparse = problem.alpha.sparse_source().size();
    out.n_dense_source = problem.alpha.dense_source().size();
    out.n_dense_target = problem.alpha.dense_target().size();
    out.warning = problem.warning;
    out.run = multitask::run_emtr_ssc(problem, config, seed);
    return out;
  }
  // The baseline has no auxiliary task, so the feature stage is skipped.
  auto dense_source = ingest::downsample_to_cap(pair.source, config.dense_cap);
  auto dense_target = ingest::downsample_to_cap(pair.target, config.dense_cap);
  auto sparse_source = ingest::downsample_to_cap(dense_source, config.sparse_cap);
  out.n_sparse = sparse_source.size();
  out.n_dense_source = dense_source.size();
  out.n_dense_target = dense_target.size();
  const auto problem = multitask::make_problem(std::move(sparse_source), std::move(dense_source),
                                               std::move(dense_target), std::nullopt, config);
  const int iterations =
      multitask::baseline_iterations(config, out.n_sparse, out.n_dense_source, out.n_dense_target);
  out.run = multitask::run_single_task_pso(problem, config, seed, iterations);
  return out;
}

double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

// splitmix64 finalizer: decorrelates per-trial seeds derived from one base seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct TrialPlan {
  std::size_t input = 0;
  ingest::TransformSubspace subspace;
  std::size_t index = 0;
  std::uint64_t seed = 0;
};

}  // namespace

PairOutcome register_pair(const geom::PointCloud& source, const geom::PointCloud& target,
                          const geom::RigidTransform* raw_ground_truth, Mode mode, const EmtoConfig& config,
                          std::uint64_t seed) {
  config.validate();
  PairOutcome out;
  out.pair = ingest::normalize_pair(source, target, raw_ground_truth);
  auto r = run_mode(out.pair, mode, config, seed);
  out.run = std::move(r.run);
  out.n_sparse = r.n_sparse;
  out.n_dense_source = r.n_dense_source;
  out.n_dense_target = r.n_dense_target;
  out.warning = r.warning;
  if (raw_ground_truth) {
    out.rotation_error_deg =
        degrees(geom::rotation_error(out.pair.ground_truth.rotation, out.run.transform.rotation));
    out.translation_error =
        geom::translation_error(out.pair.ground_truth.translation, out.run.transform.translation);
  }
  return out;
}

Aggregates aggregate(const std::vector<TrialRecord>& trials) {
  Aggregates a;
  a.trials = trials.size();
  double sum_r = 0.0, sum_t = 0.0;
  for (const auto& t : trials) {
    a.total_nns_calls += t.total_nns_calls;
    a.total_wall_time += t.wall_time;
    if (!t.success) continue;
    ++a.successes;
    sum_r += t.rotation_error_deg;
    sum_t += t.translation_error;
  }
  if (a.trials > 0) a.success_ratio = static_cast<double>(a.successes) / static_cast<double>(a.trials);
  if (a.successes == 0) return a;
  const double n = static_cast<double>(a.successes);
  a.mean_rotation_error_deg = sum_r / n;
  a.mean_translation_error = sum_t / n;
  double var_r = 0.0, var_t = 0.0;
  for (const auto& t : trials) {
    if (!t.success) continue;
    var_r += (t.rotation_error_deg - a.mean_rotation_error_deg) * (t.rotation_error_deg - a.mean_rotation_error_deg);
    var_t += (t.translation_error - a.mean_translation_error) * (t.translation_error - a.mean_translation_error);
  }
  a.std_rotation_error_deg = std::sqrt(var_r / n);
  a.std_translation_error = std::sqrt(var_t / n);
  return a;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.config.validate();
  std::vector<geom::PointCloud> clouds;
  std::vector<std::string> names;
  if (spec.inputs.empty()) {
    clouds.push_back(ingest::synthetic_surrogate(spec.surrogate_points, spec.seed));
    names.emplace_back("surrogate");
  } else {
    for (const auto& p : spec.inputs) {
      clouds.push_back(ingest::load_cloud(p));
      names.push_back(p.filename().string());
    }
  }
  if (spec.rmse_dir) std::filesystem::create_directories(*spec.rmse_dir);

  std::vector<TrialPlan> plan;
  for (std::size_t in = 0; in < clouds.size(); ++in) {
    std::size_t idx = 0;
    for (auto sub : spec.subspaces)
      for (std::size_t k = 0; k < spec.trials_per_subspace; ++k) plan.push_back({in, sub, idx++, 0});
    for (std::size_t k = 0; k < spec.full_trials; ++k)
      plan.push_back({in, ingest::TransformSubspace::Full, idx++, 0});
  }
  for (std::size_t i = 0; i < plan.size(); ++i) plan[i].seed = mix_seed(spec.seed, i);

  std::vector<double> diagonals;
  for (const auto& c : clouds) diagonals.push_back(geom::bounding_box_diagonal(c));

  ExperimentReport report;
  report.mode = spec.mode;
  report.seed = spec.seed;
  report.trials.resize(plan.size());

  auto run_trial = [&](std::size_t i) {
    const auto& tp = plan[i];
    TrialRecord& rec = report.trials[i];
    rec.input = names[tp.input];
    rec.subspace = tp.subspace;
    rec.index = tp.index;
    rec.seed = tp.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto t_gt = ingest::random_transform(tp.subspace, diagonals[tp.input], tp.seed);
      const auto pair = ingest::make_pair(clouds[tp.input], t_gt);
      const auto r = run_mode(pair, spec.mode, spec.config, tp.seed);
      rec.rotation_error_deg = degrees(geom::rotation_error(pair.ground_truth.rotation, r.run.transform.rotation));
      rec.translation_error = geom::translation_error(pair.ground_truth.translation, r.run.transform.translation);
      rec.success = rec.rotation_error_deg < kSuccessThresholdDeg;
      rec.nns_calls = r.run.trace.swarm_calls;
      rec.total_nns_calls = r.run.trace.total_calls();
      if (spec.rmse_dir) {
        const auto name = rec.input + "_" + std::string(ingest::to_string(tp.subspace)) + "_" +
                          std::to_string(tp.index) + "_rmse.csv";
        write_rmse_csv(per_point_rmse(pair.source, r.run.transform, pair.ground_truth), *spec.rmse_dir / name);
      }
    } catch (const std::exception& e) {
      rec.success = false;
      rec.failure = e.what();
      if (rec.failure.empty()) rec.failure = "unknown error";
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const std::size_t workers = std::min(worker_count(spec.threads), std::max<std::size_t>(1, plan.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < plan.size(); ++i) run_trial(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < plan.size(); i = next++) run_trial(i);
      });
    }
  }
  report.aggregates = aggregate(report.trials);
  return report;
}

std::vector<double> parse_range(const std::string& text) {
  double a = 0, b = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof()) {
    throw Error(ErrorCode::InvalidArgument, "range must look like a:b:step, got '" + text + "'");
  }
  if (!(step > 0.0) || b < a) throw Error(ErrorCode::InvalidArgument, "range needs step > 0 and b >= a");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
  return out;
}

std::vector<SweepPoint> run_sweep(const ExperimentSpec& spec, const std::string& param,
                                  const std::vector<double>& values) {
  if (param != "rmp" && param != "delta") {
    throw Error(ErrorCode::InvalidArgument, "sweep parameter must be 'rmp' or 'delta'");
  }
  std::vector<SweepPoint> out;
  for (double v : values) {
    ExperimentSpec s = spec;
    (param == "rmp" ? s.config.rmp : s.config.delta) = v;
    s.config.validate();
    out.push_back({v, run_experiment(s)});
  }
  return out;
}

CostSummary computational_cost(const multitask::RunTrace& trace, const EmtoConfig& config,
                               std::size_t n_sparse, std::size_t n_dense_source, std::size_t n_dense_target) {
  CostSummary c;
  c.measured_swarm = trace.swarm_calls;
  c.measured_total = trace.total_calls();
  const double pop = static_cast<double>(config.pop_size);
  c.predicted_with_s2d = multitask::predicted_calls_with_s2d(
      pop, config.max_it, config.delta, static_cast<double>(n_sparse), static_cast<double>(n_dense_source),
      static_cast<double>(n_dense_target));
  c.predicted_without_s2d = multitask::predicted_calls_without_s2d(
      pop, config.max_it, static_cast<double>(n_dense_source), static_cast<double>(n_dense_target));
  c.predicted_ratio = c.predicted_with_s2d / c.predicted_without_s2d;
  return c;
}

// ---------------------------------------------------------------------------
// Reports

std::string report_to_json(const ExperimentReport& report, int indent) {
  ordered_json j;
  j["mode"] = std::string(to_string(report.mode));
  j["seed"] = report.seed;
  j["trials"] = ordered_json::array();
  for (const auto& t : report.trials) {
    j["trials"].push_back({{"input", t.input},
                           {"subspace", std::string(ingest::to_string(t.subspace))},
                           {"index", t.index},
                           {"seed", t.seed},
                           {"rotation_error_deg", t.rotation_error_deg},
                           {"translation_error", t.translation_error},
                           {"success", t.success},
                           {"nns_calls", t.nns_calls},
                           {"total_nns_calls", t.total_nns_calls},
                           {"wall_time", t.wall_time},
                           {"failure", t.failure}});
  }
  const auto& a = report.aggregates;
  j["aggregates"] = {{"trials", a.trials},
                     {"successes", a.successes},
                     {"success_ratio", a.success_ratio},
                     {"mean_rotation_error_deg", a.mean_rotation_error_deg},
                     {"std_rotation_error_deg", a.std_rotation_error_deg},
                     {"mean_translation_error", a.mean_translation_error},
                     {"std_translation_error", a.std_translation_error},
                     {"total_nns_calls", a.total_nns_calls},
                     {"total_wall_time", a.total_wall_time}};
  return j.dump(indent);
}

ExperimentReport report_from_json(const std::string& text) {
  const auto j = parse_json(text);
  ExperimentReport r;
  try {
    r.mode = mode_from_string(j.at("mode").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("trials")) {
      TrialRecord rec;
      rec.input = t.at("input").get<std::string>();
      rec.subspace = ingest::subspace_from_string(t.at("subspace").get<std::string>());
      rec.index = t.at("index").get<std::size_t>();
      rec.seed = t.at("seed").get<std::uint64_t>();
      rec.rotation_error_deg = t.at("rotation_error_deg").get<double>();
      rec.translation_error = t.at("translation_error").get<double>();
      rec.success = t.at("success").get<bool>();
      rec.nns_calls = t.at("nns_calls").get<std::uint64_t>();
      rec.total_nns_calls = t.at("total_nns_calls").get<std::uint64_t>();
      rec.wall_time = t.at("wall_time").get<double>();
      rec.failure = t.at("failure").get<std::string>();
      r.trials.push_back(std::move(rec));
    }
    const auto& a = j.at("aggregates");
    r.aggregates.trials = a.at("trials").get<std::size_t>();
    r.aggregates.successes = a.at("successes").get<std::size_t>();
    r.aggregates.success_ratio = a.at("success_ratio").get<double>();
    r.aggregates.mean_rotation_error_deg = a.at("mean_rotation_error_deg").get<double>();
    r.aggregates.std_rotation_error_deg = a.at("std_rotation_error_deg").get<double>();
    r.aggregates.mean_translation_error = a.at("mean_translation_error").get<double>();
    r.aggregates.std_translation_error = a.at("std_translation_error").get<double>();
    r.aggregates.total_nns_calls = a.at("total_nns_calls").get<std::uint64_t>();
    r.aggregates.total_wall_time = a.at("total_wall_time").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed report: ") + e.what());
  }
  return r;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "input,subspace,index,seed,rotation_error_deg,translation_error,success,nns_calls,total_nns_calls,"
         "wall_time,failure\n";
  for (const auto& t : report.trials) {
    out << csv_escape(t.input) << ',' << ingest::to_string(t.subspace) << ',' << t.index << ',' << t.seed << ','
        << t.rotation_error_deg << ',' << t.translation_error << ',' << (t.success ? 1 : 0) << ',' << t.nns_calls
        << ',' << t.total_nns_calls << ',' << t.wall_time << ',' << csv_escape(t.failure) << '\n';
  }
  if (report.trials.empty()) return out.str();
  const auto& a = report.aggregates;
  out << "\naggregate,value\n"
      << "trials," << a.trials << '\n'
      << "successes," << a.successes << '\n'
      << "success_ratio," << a.success_ratio << '\n'
      << "mean_rotation_error_deg," << a.mean_rotation_error_deg << '\n'
      << "std_rotation_error_deg," << a.std_rotation_error_deg << '\n'
      << "mean_translation_error," << a.mean_translation_error << '\n'
      << "std_translation_error," << a.std_translation_error << '\n'
      << "total_nns_calls," << a.total_nns_calls << '\n'
      << "total_wall_time," << a.total_wall_time << '\n';
  return out.str();
}

void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out << (format == ReportFormat::Json ? report_to_json(report) + "\n" : report_to_csv(report));
  if (!out) throw Error(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

std::vector<double> per_point_rmse(const geom::PointCloud& source, const geom::RigidTransform& estimate,
                                   const geom::RigidTransform& ground_truth) {
  std::vector<double> out(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    out[i] = (estimate.apply(source.points[i]) - ground_truth.apply(source.points[i])).norm();
  }
  return out;
}

void write_rmse_csv(const std::vector<double>& rmse, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out.precision(17);
  out << "point_index,rmse\n";
  for (std::size_t i = 0; i < rmse.size(); ++i) out << i << ',' << rmse[i] << '\n';
}

}  // namespace emtr::harness
