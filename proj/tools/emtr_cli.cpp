// Command-line front end. Talks to the engine only through emtr.h.
#include "emtr/emtr.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct DataError {
  std::string message;
};

void check(emtr_status status, const std::string& context) {
  if (status != EMTR_OK) throw DataError{context + ": " + emtr_last_error()};
}

struct CloudDeleter {
  void operator()(emtr_cloud* c) const { emtr_cloud_free(c); }
};
struct ReportDeleter {
  void operator()(emtr_report* r) const { emtr_report_free(r); }
};
struct TraceDeleter {
  void operator()(emtr_trace* t) const { emtr_trace_free(t); }
};
using CloudPtr = std::unique_ptr<emtr_cloud, CloudDeleter>;
using ReportPtr = std::unique_ptr<emtr_report, ReportDeleter>;
using TracePtr = std::unique_ptr<emtr_trace, TraceDeleter>;

std::string take_string(char* s) {
  std::string out(s);
  emtr_string_free(s);
  return out;
}

// Optional config flags shared by every subcommand; unset flags keep defaults.
struct ConfigFlags {
  std::optional<int> max_it;
  std::optional<std::size_t> pop;
  std::optional<double> rmp;
  std::optional<double> delta;
  std::optional<double> c_scale;
  std::optional<double> tau_scale;
  std::optional<std::size_t> max_tims;
  std::optional<std::size_t> dense_cap;
  std::optional<std::size_t> sparse_cap;
  std::optional<int> max_it_kc;
  bool no_s2d = false;

  void attach(CLI::App& app) {
    app.add_option("--max-it", max_it, "Swarm iterations (default 100)");
    app.add_option("--pop", pop, "Particles per task (default 50)");
    app.add_option("--rmp", rmp, "Random mating probability (default 0.7)");
    app.add_option("--delta", delta, "Sparse-to-dense switch fraction (default 0.6)");
    app.add_option("--c-scale", c_scale, "M-estimator c in mean resolutions (default 10)");
    app.add_option("--tau-scale", tau_scale, "Multiplier on the TIM noise bound (default 1)");
    app.add_option("--max-tims", max_tims, "Maximum TIM pairs (default 1000)");
    app.add_option("--dense-cap", dense_cap, "Dense cloud point cap (default 5000)");
    app.add_option("--sparse-cap", sparse_cap, "Sparse cloud point cap (default 1000)");
    app.add_option("--max-it-kc", max_it_kc, "Knowledge complement iterations (default 10)");
    app.add_flag("--no-s2d", no_s2d, "Evaluate on dense clouds throughout");
  }

  void apply(emtr_config& c) const {
    if (max_it) c.max_it = *max_it;
    if (pop) c.pop_size = *pop;
    if (rmp) c.rmp = *rmp;
    if (delta) c.delta = *delta;
    if (c_scale) c.c_scale = *c_scale;
    if (tau_scale) c.tau_scale = *tau_scale;
    if (max_tims) c.max_tims = *max_tims;
    if (dense_cap) c.dense_cap = *dense_cap;
    if (sparse_cap) c.sparse_cap = *sparse_cap;
    if (max_it_kc) c.max_it_kc = *max_it_kc;
    if (no_s2d) c.sparse_to_dense = 0;
  }

  void apply(nlohmann::json& config) const {
    if (max_it) config["max_it"] = *max_it;
    if (pop) config["pop_size"] = *pop;
    if (rmp) config["rmp"] = *rmp;
    if (delta) config["delta"] = *delta;
    if (c_scale) config["c_scale"] = *c_scale;
    if (tau_scale) config["tau_scale"] = *tau_scale;
    if (max_tims) config["max_tims"] = *max_tims;
    if (dense_cap) config["dense_cap"] = *dense_cap;
    if (sparse_cap) config["sparse_cap"] = *sparse_cap;
    if (max_it_kc) config["max_it_kc"] = *max_it_kc;
    if (no_s2d) config["sparse_to_dense"] = false;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError{"cannot open '" + path + "'"};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Reads 12 (3x4) or 16 (4x4) whitespace-separated numbers, row-major.
emtr_transform read_transform(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<double> v;
  for (double x; in >> x;) v.push_back(x);
  if (v.size() != 12 && v.size() != 16) {
    throw DataError{"'" + path + "' must hold a 3x4 or 4x4 matrix, found " + std::to_string(v.size()) + " numbers"};
  }
  emtr_transform t{};
  for (int i = 0; i < 12; ++i) t.m[i] = v[i];
  return t;
}

emtr_format parse_format(const std::string& f) { return f == "csv" ? EMTR_FORMAT_CSV : EMTR_FORMAT_JSON; }

std::string load_spec(const std::string& path, const std::string& mode, std::optional<std::uint64_t> seed,
                      const ConfigFlags& flags) {
  nlohmann::json spec = nlohmann::json::object();
  if (!path.empty()) {
    try {
      spec = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError{"spec '" + path + "': " + e.what()};
    }
  }
  if (!mode.empty()) spec["mode"] = mode;
  if (seed) spec["seed"] = *seed;
  nlohmann::json& config = spec["config"];
  if (config.is_null()) config = nlohmann::json::object();
  flags.apply(config);
  return spec.dump();
}

void print_transform(const char* label, const emtr_transform& t) {
  std::printf("%s\n", label);
  for (int r = 0; r < 3; ++r) {
    std::printf("  %.9f %.9f %.9f %.9f\n", t.m[r * 4], t.m[r * 4 + 1], t.m[r * 4 + 2], t.m[r * 4 + 3]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMTR-SSC rigid point cloud registration"};
  app.require_subcommand(1);
  ConfigFlags flags;
  std::string mode = "emtr-ssc";
  std::string out_path;
  std::string format = "json";
  std::uint64_t seed = 1;

  auto* reg = app.add_subcommand("register", "Register one source/target pair");
  std::string src, tgt, gt_path, trace_path;
  reg->add_option("--src", src, "Source cloud (.ply or .xyz)")->required();
  reg->add_option("--tgt", tgt, "Target cloud (.ply or .xyz)")->required();
  reg->add_option("--gt", gt_path, "Text file with the true source-to-target matrix (3x4 or 4x4)");
  reg->add_option("--seed", seed, "Random seed");
  reg->add_option("--mode", mode, "emtr-ssc or single-task-pso")
      ->check(CLI::IsMember({"emtr-ssc", "single-task-pso"}));
  reg->add_option("--out", trace_path, "Write the run trace as JSON");
  reg->add_option("--rmse", out_path, "Write a per-point RMSE CSV (needs --gt)");
  flags.attach(*reg);

  auto* bench = app.add_subcommand("bench", "Run a full experiment spec");
  std::string spec_path;
  std::optional<std::uint64_t> bench_seed;
  std::string bench_mode;
  bench->add_option("--spec", spec_path, "Experiment spec JSON (omit for the synthetic default)");
  bench->add_option("--seed", bench_seed, "Base seed override");
  bench->add_option("--mode", bench_mode, "emtr-ssc or single-task-pso")
      ->check(CLI::IsMember({"emtr-ssc", "single-task-pso"}));
  bench->add_option("--out", out_path, "Report path");
  bench->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  flags.attach(*bench);

  auto* sweep = app.add_subcommand("sweep", "Success ratio over a grid of rmp or delta");
  std::string param, values;
  sweep->add_option("--param", param, "rmp or delta")->required()->check(CLI::IsMember({"rmp", "delta"}));
  sweep->add_option("--values", values, "Grid as a:b:step")->required();
  sweep->add_option("--spec", spec_path, "Experiment spec JSON");
  sweep->add_option("--seed", bench_seed, "Base seed override");
  sweep->add_option("--mode", bench_mode, "emtr-ssc or single-task-pso")
      ->check(CLI::IsMember({"emtr-ssc", "single-task-pso"}));
  sweep->add_option("--out", out_path, "CSV of value,success_ratio");
  flags.attach(*sweep);

  auto* synth = app.add_subcommand("synth", "Write the synthetic surrogate cloud");
  std::size_t points = 20000;
  synth->add_option("--out", out_path, "Output .ply or .xyz")->required();
  synth->add_option("--points", points, "Number of points");
  synth->add_option("--seed", seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*reg) {
      emtr_cloud* raw = nullptr;
      check(emtr_cloud_load(src.c_str(), &raw), "source");
      CloudPtr source(raw);
      check(emtr_cloud_load(tgt.c_str(), &raw), "target");
      CloudPtr target(raw);
      std::optional<emtr_transform> gt;
      if (!gt_path.empty()) gt = read_transform(gt_path);
      emtr_config config;
      emtr_config_default(&config);
      flags.apply(config);
      emtr_result result{};
      emtr_trace* trace_raw = nullptr;
      check(emtr_register(source.get(), target.get(), &config,
                          mode == "emtr-ssc" ? EMTR_MODE_EMTR_SSC : EMTR_MODE_SINGLE_TASK_PSO, seed,
                          gt ? &*gt : nullptr, &result, &trace_raw),
            "register");
      TracePtr trace(trace_raw);
      std::printf("pose %.9f %.9f %.9f %.9f %.9f %.9f\n", result.pose[0], result.pose[1], result.pose[2],
                  result.pose[3], result.pose[4], result.pose[5]);
      std::printf("fitness %.9g\n", result.fitness);
      print_transform("transform (raw coordinates)", result.raw);
      if (result.has_errors) {
        std::printf("E_R %.6f deg\nE_t %.6f\nsuccess %s\n", result.rotation_error_deg, result.translation_error,
                    result.rotation_error_deg < 5.0 ? "yes" : "no");
      }
      std::printf("nns_calls swarm %llu total %llu\n", static_cast<unsigned long long>(result.swarm_nns_calls),
                  static_cast<unsigned long long>(result.total_nns_calls));
      if (!trace_path.empty()) {
        char* json = nullptr;
        check(emtr_trace_to_json(trace.get(), &json), "trace");
        std::ofstream(trace_path) << take_string(json) << '\n';
      }
      if (!out_path.empty()) {
        if (!gt) throw DataError{"--rmse needs --gt"};
        check(emtr_write_rmse_csv(source.get(), &result.raw, &*gt, out_path.c_str()), "rmse");
      }
      return 0;
    }

    if (*bench) {
      const auto spec = load_spec(spec_path, bench_mode, bench_seed, flags);
      emtr_report* raw = nullptr;
      check(emtr_experiment_run(spec.c_str(), &raw), "bench");
      ReportPtr report(raw);
      if (!out_path.empty()) check(emtr_report_write(report.get(), out_path.c_str(), parse_format(format)), "report");
      char* json = nullptr;
      check(emtr_report_to_json(report.get(), &json), "report");
      const auto parsed = nlohmann::json::parse(take_string(json));
      std::cout << parsed["aggregates"].dump(2) << '\n';
      return 0;
    }

    if (*sweep) {
      std::vector<double> grid;
      {
        double a = 0, b = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream in(values);
        if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || b < a) {
          std::cerr << "--values must look like a:b:step\n";
          return kExitUsage;
        }
        const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) grid.push_back(a + static_cast<double>(i) * step);
      }
      const auto spec = load_spec(spec_path, bench_mode, bench_seed, flags);
      std::vector<emtr_report*> raw(grid.size(), nullptr);
      check(emtr_sweep_run(spec.c_str(), param.c_str(), grid.data(), grid.size(), raw.data()), "sweep");
      std::vector<ReportPtr> reports;
      for (auto* r : raw) reports.emplace_back(r);
      std::ostringstream csv;
      csv << param << ",success_ratio\n";
      for (std::size_t i = 0; i < grid.size(); ++i) {
        csv << grid[i] << ',' << emtr_report_success_ratio(reports[i].get()) << '\n';
      }
      std::cout << csv.str();
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw DataError{"cannot write '" + out_path + "'"};
        out << csv.str();
      }
      return 0;
    }

    if (*synth) {
      emtr_cloud* raw = nullptr;
      check(emtr_cloud_synthetic(points, seed, &raw), "synth");
      CloudPtr cloud(raw);
      check(emtr_cloud_save(cloud.get(), out_path.c_str()), "save");
      std::printf("wrote %zu points to %s\n", emtr_cloud_size(cloud.get()), out_path.c_str());
      return 0;
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.message << '\n';
    return kExitData;
  }
  return kExitUsage;
}
