#include "emtr/emtr.h"

#include "emtr/error.hpp"
#include "emtr/harness.hpp"

#include <cstring>
#include <new>
#include <string>

struct emtr_cloud {
  emtr::geom::PointCloud cloud;
};

struct emtr_trace {
  emtr::multitask::RunTrace trace;
};

struct emtr_report {
  emtr::harness::ExperimentReport report;
};

namespace {

thread_local std::string g_last_error;

emtr_status to_status(emtr::ErrorCode code) {
  using emtr::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return EMTR_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return EMTR_ERR_IO;
    case ErrorCode::Parse: return EMTR_ERR_PARSE;
    case ErrorCode::DegenerateCloud: return EMTR_ERR_DEGENERATE;
    case ErrorCode::EmptyCorrespondence: return EMTR_ERR_NO_CORRESPONDENCE;
    case ErrorCode::StageViolation: return EMTR_ERR_STAGE;
    case ErrorCode::Internal: return EMTR_ERR_INTERNAL;
  }
  return EMTR_ERR_INTERNAL;
}

emtr_status fail(emtr_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
emtr_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return EMTR_OK;
  } catch (const emtr::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(EMTR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(EMTR_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw emtr::Error(emtr::ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

emtr::geom::RigidTransform from_c(const emtr_transform& t) {
  emtr::geom::RigidTransform out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.rotation(r, c) = t.m[r * 4 + c];
    out.translation[r] = t.m[r * 4 + 3];
  }
  return out;
}

emtr_transform to_c(const emtr::geom::RigidTransform& t) {
  emtr_transform out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.m[r * 4 + c] = t.rotation(r, c);
    out.m[r * 4 + 3] = t.translation[r];
  }
  return out;
}

emtr::multitask::EmtoConfig from_c(const emtr_config& c) {
  emtr::multitask::EmtoConfig out;
  out.max_it = c.max_it;
  out.pop_size = c.pop_size;
  out.rmp = c.rmp;
  out.delta = c.delta;
  out.sparse_to_dense = c.sparse_to_dense != 0;
  out.c_scale = c.c_scale;
  out.tau_scale = c.tau_scale;
  out.max_tims = c.max_tims;
  out.max_it_kc = c.max_it_kc;
  out.tukey_scale = c.tukey_scale;
  out.dense_cap = c.dense_cap;
  out.sparse_cap = c.sparse_cap;
  out.feature_cap = c.feature_cap;
  out.transfer_overwrite = c.transfer_overwrite != 0;
  out.validate();
  return out;
}

}  // namespace

extern "C" {

const char* emtr_last_error(void) { return g_last_error.c_str(); }

const char* emtr_version(void) { return "0.1.0"; }

void emtr_string_free(char* s) { delete[] s; }

emtr_status emtr_cloud_load(const char* path, emtr_cloud** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    auto cloud = emtr::ingest::load_cloud(path);
    *out = new emtr_cloud{std::move(cloud)};
  });
}

emtr_status emtr_cloud_save(const emtr_cloud* cloud, const char* path) {
  return guarded([&] {
    require(cloud && path, "cloud and path must be non-null");
    emtr::ingest::save_cloud(cloud->cloud, path);
  });
}

emtr_status emtr_cloud_from_points(const double* xyz, size_t count, emtr_cloud** out) {
  return guarded([&] {
    require(out && (xyz || count == 0), "xyz and out must be non-null");
    auto handle = new emtr_cloud{};
    handle->cloud.points.reserve(count);
    for (size_t i = 0; i < count; ++i) handle->cloud.points.emplace_back(xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]);
    try {
      emtr::geom::validate(handle->cloud);
    } catch (...) {
      delete handle;
      throw;
    }
    *out = handle;
  });
}

emtr_status emtr_cloud_synthetic(size_t count, uint64_t seed, emtr_cloud** out) {
  return guarded([&] {
    require(out != nullptr, "out must be non-null");
    *out = new emtr_cloud{emtr::ingest::synthetic_surrogate(count, seed)};
  });
}

size_t emtr_cloud_size(const emtr_cloud* cloud) { return cloud ? cloud->cloud.size() : 0; }

emtr_status emtr_cloud_points(const emtr_cloud* cloud, double* xyz, size_t capacity) {
  return guarded([&] {
    require(cloud && (xyz || capacity == 0), "cloud and xyz must be non-null");
    const size_t n = std::min(capacity, cloud->cloud.size());
    for (size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) xyz[3 * i + k] = cloud->cloud.points[i][k];
    }
  });
}

void emtr_cloud_free(emtr_cloud* cloud) { delete cloud; }

void emtr_config_default(emtr_config* config) {
  if (!config) return;
  const emtr::multitask::EmtoConfig d;
  config->max_it = d.max_it;
  config->pop_size = d.pop_size;
  config->rmp = d.rmp;
  config->delta = d.delta;
  config->sparse_to_dense = d.sparse_to_dense ? 1 : 0;
  config->c_scale = d.c_scale;
  config->tau_scale = d.tau_scale;
  config->max_tims = d.max_tims;
  config->max_it_kc = d.max_it_kc;
  config->tukey_scale = d.tukey_scale;
  config->dense_cap = d.dense_cap;
  config->sparse_cap = d.sparse_cap;
  config->feature_cap = d.feature_cap;
  config->transfer_overwrite = d.transfer_overwrite ? 1 : 0;
}

emtr_status emtr_register(const emtr_cloud* source, const emtr_cloud* target, const emtr_config* config,
                          emtr_mode mode, uint64_t seed, const emtr_transform* ground_truth, emtr_result* result,
                          emtr_trace** trace) {
  return guarded([&] {
    require(source && target && result, "source, target and result must be non-null");
    require(mode == EMTR_MODE_EMTR_SSC || mode == EMTR_MODE_SINGLE_TASK_PSO, "unknown mode");
    emtr_config c;
    emtr_config_default(&c);
    if (config) c = *config;
    const auto cfg = from_c(c);
    std::optional<emtr::geom::RigidTransform> gt;
    if (ground_truth) gt = from_c(*ground_truth);
    auto out = emtr::harness::register_pair(
        source->cloud, target->cloud, gt ? &*gt : nullptr,
        mode == EMTR_MODE_EMTR_SSC ? emtr::harness::Mode::EmtrSsc : emtr::harness::Mode::SingleTaskPso, cfg, seed);

    emtr_result r{};
    for (size_t k = 0; k < 6; ++k) r.pose[k] = out.run.position[k];
    r.normalized = to_c(out.run.transform);
    // raw target = T_t^-1 . T_est . T_s, where T_x maps raw to normalized coordinates.
    const auto& rs = out.pair.source_record;
    const auto& rt = out.pair.target_record;
    emtr::geom::RigidTransform s_to_norm{emtr::geom::RotationMatrix::Identity() / rs.scale, -rs.centroid / rs.scale};
    emtr::geom::RigidTransform norm_to_t{emtr::geom::RotationMatrix::Identity() * rt.scale, rt.centroid};
    auto raw = norm_to_t * out.run.transform * s_to_norm;
    raw.rotation = out.run.transform.rotation;  // scales cancel; drop rounding noise
    r.raw = to_c(raw);
    r.fitness = out.run.fitness;
    r.has_errors = out.rotation_error_deg ? 1 : 0;
    r.rotation_error_deg = out.rotation_error_deg.value_or(0.0);
    r.translation_error = out.translation_error.value_or(0.0);
    r.swarm_nns_calls = out.run.trace.swarm_calls;
    r.total_nns_calls = out.run.trace.total_calls();
    *result = r;
    if (trace) *trace = new emtr_trace{std::move(out.run.trace)};
  });
}

emtr_status emtr_trace_to_json(const emtr_trace* trace, char** json) {
  return guarded([&] {
    require(trace && json, "trace and json must be non-null");
    *json = dup_string(emtr::multitask::trace_to_json(trace->trace));
  });
}

void emtr_trace_free(emtr_trace* trace) { delete trace; }

emtr_status emtr_experiment_run(const char* spec_json, emtr_report** out) {
  return guarded([&] {
    require(spec_json && out, "spec and out must be non-null");
    const auto spec = emtr::harness::spec_from_json(spec_json);
    *out = new emtr_report{emtr::harness::run_experiment(spec)};
  });
}

emtr_status emtr_sweep_run(const char* spec_json, const char* param, const double* values, size_t count,
                           emtr_report** reports) {
  return guarded([&] {
    require(spec_json && param && reports && (values || count == 0), "null argument");
    const auto spec = emtr::harness::spec_from_json(spec_json);
    auto points = emtr::harness::run_sweep(spec, param, std::vector<double>(values, values + count));
    for (size_t i = 0; i < count; ++i) reports[i] = new emtr_report{std::move(points[i].report)};
  });
}

emtr_status emtr_report_write(const emtr_report* report, const char* path, emtr_format format) {
  return guarded([&] {
    require(report && path, "report and path must be non-null");
    require(format == EMTR_FORMAT_JSON || format == EMTR_FORMAT_CSV, "unknown format");
    emtr::harness::emit_report(report->report,
                               format == EMTR_FORMAT_JSON ? emtr::harness::ReportFormat::Json
                                                          : emtr::harness::ReportFormat::Csv,
                               path);
  });
}

emtr_status emtr_report_to_json(const emtr_report* report, char** json) {
  return guarded([&] {
    require(report && json, "report and json must be non-null");
    *json = dup_string(emtr::harness::report_to_json(report->report));
  });
}

double emtr_report_success_ratio(const emtr_report* report) {
  return report ? report->report.aggregates.success_ratio : 0.0;
}

size_t emtr_report_trial_count(const emtr_report* report) { return report ? report->report.trials.size() : 0; }

void emtr_report_free(emtr_report* report) { delete report; }

emtr_status emtr_write_rmse_csv(const emtr_cloud* source, const emtr_transform* estimate,
                                const emtr_transform* ground_truth, const char* path) {
  return guarded([&] {
    require(source && estimate && ground_truth && path, "null argument");
    emtr::harness::write_rmse_csv(
        emtr::harness::per_point_rmse(source->cloud, from_c(*estimate), from_c(*ground_truth)), path);
  });
}

}  // extern "C"
