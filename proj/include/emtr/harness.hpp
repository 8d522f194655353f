#pragma once

#include "emtr/ingest.hpp"
#include "emtr/multitask.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace emtr::harness {

enum class Mode { EmtrSsc, SingleTaskPso };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

/// A batch of randomized registration trials. With no inputs, the bundled
/// synthetic surrogate stands in for the data.
struct ExperimentSpec {
  std::vector<std::filesystem::path> inputs;
  std::size_t surrogate_points = 20000;
  std::vector<ingest::TransformSubspace> subspaces{
      ingest::TransformSubspace::SR_ST, ingest::TransformSubspace::SR_LT,
      ingest::TransformSubspace::LR_ST, ingest::TransformSubspace::LR_LT};
  std::size_t trials_per_subspace = 4;
  std::size_t full_trials = 4;
  std::uint64_t seed = 1;
  Mode mode = Mode::EmtrSsc;
  multitask::EmtoConfig config;
  std::size_t threads = 0;  // 0: EMTR_THREADS, else hardware concurrency
  std::optional<std::filesystem::path> rmse_dir;  // per-trial per-point RMSE sidecars

  std::size_t total_trials() const;
};

/// Parses the JSON spec format (docs/schemas.md). Unknown keys are errors.
ExperimentSpec spec_from_json(const std::string& text);
std::string spec_to_json(const ExperimentSpec& spec, int indent = 2);

/// Applies `{"rmp": 0.5, ...}`-style overrides on top of `base`.
multitask::EmtoConfig config_from_json(const std::string& text, const multitask::EmtoConfig& base);

struct TrialRecord {
  std::string input;  // file name, or "surrogate"
  ingest::TransformSubspace subspace = ingest::TransformSubspace::SR_ST;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double rotation_error_deg = 0.0;
  double translation_error = 0.0;
  bool success = false;
  std::uint64_t nns_calls = 0;        // swarm loop only
  std::uint64_t total_nns_calls = 0;  // every counter
  double wall_time = 0.0;             // seconds
  std::string failure;                // non-empty when the trial threw
};

struct Aggregates {
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_ratio = 0.0;
  // Means and population standard deviations over successful trials only.
  double mean_rotation_error_deg = 0.0;
  double std_rotation_error_deg = 0.0;
  double mean_translation_error = 0.0;
  double std_translation_error = 0.0;
  std::uint64_t total_nns_calls = 0;
  double total_wall_time = 0.0;
};

struct ExperimentReport {
  Mode mode = Mode::EmtrSsc;
  std::uint64_t seed = 0;
  std::vector<TrialRecord> trials;
  Aggregates aggregates;
};

/// Success means a rotation error strictly below 5 degrees.
constexpr double kSuccessThresholdDeg = 5.0;

Aggregates aggregate(const std::vector<TrialRecord>& trials);

/// Runs every trial of `spec`. Input files are loaded up front; a load
/// failure throws. An exception inside a trial marks that trial failed.
ExperimentReport run_experiment(const ExperimentSpec& spec);

struct SweepPoint {
  double value = 0.0;
  ExperimentReport report;
};

/// Reruns `spec` once per value of `param` ("rmp" or "delta").
std::vector<SweepPoint> run_sweep(const ExperimentSpec& spec, const std::string& param,
                                  const std::vector<double>& values);

/// Parses "a:b:step" into an inclusive grid.
std::vector<double> parse_range(const std::string& text);

struct CostSummary {
  std::uint64_t measured_swarm = 0;
  std::uint64_t measured_total = 0;
  double predicted_with_s2d = 0.0;
  double predicted_without_s2d = 0.0;
  double predicted_ratio = 0.0;  // with / without
};

CostSummary computational_cost(const multitask::RunTrace& trace, const multitask::EmtoConfig& config,
                               std::size_t n_sparse, std::size_t n_dense_source,
                               std::size_t n_dense_target);

enum class ReportFormat { Json, Csv };

std::string report_to_json(const ExperimentReport& report, int indent = 2);
ExperimentReport report_from_json(const std::string& text);
/// Header, one row per trial, then an aggregates block when trials exist.
std::string report_to_csv(const ExperimentReport& report);
void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path);

/// ||T_est p - T_gt p|| per point.
std::vector<double> per_point_rmse(const geom::PointCloud& source, const geom::RigidTransform& estimate,
                                   const geom::RigidTransform& ground_truth);
void write_rmse_csv(const std::vector<double>& rmse, const std::filesystem::path& path);

/// Result of registering one pair outside the trial protocol.
struct PairOutcome {
  multitask::RunResult run;
  ingest::DatasetPair pair;  // normalized clouds actually registered
  std::optional<double> rotation_error_deg;
  std::optional<double> translation_error;
  std::size_t n_sparse = 0;
  std::size_t n_dense_source = 0;
  std::size_t n_dense_target = 0;
  std::string warning;
};

/// Normalizes the pair with a shared scale, then runs `mode`.
PairOutcome register_pair(const geom::PointCloud& source, const geom::PointCloud& target,
                          const geom::RigidTransform* raw_ground_truth, Mode mode,
                          const multitask::EmtoConfig& config, std::uint64_t seed);

/// Worker count: `requested` if non-zero, else EMTR_THREADS, else hardware threads.
std::size_t worker_count(std::size_t requested);

}  // namespace emtr::harness
