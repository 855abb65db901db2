// SPDX-License-Identifier: Apache-2.0
#include "khan/khan.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "core/ckfi.hpp"
#include "core/error.hpp"
#include "core/graph.hpp"
#include "core/selfcheck.hpp"
#include "core/synth.hpp"
#include "core/train.hpp"

using nlohmann::json;

struct khan_dataset {
  khan::Dataset ds;
};

struct khan_encoder {
  khan::Encoder enc;
};

namespace {

thread_local std::string g_last_error;

khan_status map_code(khan::ErrorCode code) {
  switch (code) {
    case khan::ErrorCode::MissingFile:
    case khan::ErrorCode::MalformedData:
    case khan::ErrorCode::CrossGraphEdge:
    case khan::ErrorCode::SchemeUnavailable:
    case khan::ErrorCode::Io:
      return KHAN_DATA_ERROR;
    case khan::ErrorCode::InvalidArgument:
      return KHAN_USAGE_ERROR;
    default:
      return KHAN_INTERNAL_ERROR;
  }
}

template <class F>
khan_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const khan::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KHAN_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return KHAN_INTERNAL_ERROR;
  }
}

khan_status usage(const char* msg) {
  g_last_error = msg;
  return KHAN_USAGE_ERROR;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Dataset name discovery: prefer the directory's own basename, fall back to
// the unique *_A.txt stem.
std::string infer_name(const std::string& dir) {
  namespace fs = std::filesystem;
  khan::require(fs::is_directory(dir), khan::ErrorCode::MissingFile,
                "not a directory: " + dir);
  std::string base = fs::path(dir).filename().string();
  if (base.empty()) base = fs::path(dir).parent_path().filename().string();
  if (!base.empty() && fs::exists(fs::path(dir) / (base + "_A.txt")))
    return base;
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string fname = entry.path().filename().string();
    const std::string suffix = "_A.txt";
    if (fname.size() > suffix.size() &&
        fname.compare(fname.size() - suffix.size(), suffix.size(), suffix) == 0)
      stems.push_back(fname.substr(0, fname.size() - suffix.size()));
  }
  khan::require(!stems.empty(), khan::ErrorCode::MissingFile,
                "no *_A.txt file in " + dir);
  khan::require(stems.size() == 1, khan::ErrorCode::MalformedData,
                "several *_A.txt files in " + dir + ", pass a dataset name");
  return stems[0];
}

}  // namespace

extern "C" {

const char* khan_version(void) { return "1.0.0"; }

const char* khan_last_error(void) { return g_last_error.c_str(); }

void khan_string_free(char* s) { delete[] s; }

khan_status khan_dataset_synth(int n_graphs, int min_nodes, int max_nodes,
                               uint64_t seed, khan_dataset** out) {
  if (!out) return usage("out pointer is NULL");
  *out = nullptr;
  return guarded([&] {
    khan::SynthParams params;
    if (min_nodes > 0) params.min_nodes = min_nodes;
    if (max_nodes > 0) params.max_nodes = max_nodes;
    auto* handle = new khan_dataset{khan::synth_two_class(n_graphs, seed, params)};
    *out = handle;
    return KHAN_OK;
  });
}

khan_status khan_dataset_load_tu(const char* dir, const char* name,
                                 khan_dataset** out) {
  if (!out) return usage("out pointer is NULL");
  *out = nullptr;
  if (!dir) return usage("dir is NULL");
  return guarded([&] {
    std::string n = (name && *name) ? name : infer_name(dir);
    auto* handle = new khan_dataset{khan::parse_tu_dataset(dir, n)};
    *out = handle;
    return KHAN_OK;
  });
}

khan_status khan_dataset_write_tu(const khan_dataset* ds, const char* dir,
                                  const char* name) {
  if (!ds) return usage("dataset is NULL");
  if (!dir) return usage("dir is NULL");
  return guarded([&] {
    khan::Dataset copy = ds->ds;
    if (name && *name) copy.name = name;
    khan::write_tu_dataset(copy, dir);
    return KHAN_OK;
  });
}

int khan_dataset_num_graphs(const khan_dataset* ds) {
  return ds ? static_cast<int>(ds->ds.graphs.size()) : -1;
}

void khan_dataset_free(khan_dataset* ds) { delete ds; }

khan_status khan_pretrain(const khan_dataset* ds, const char* config_json,
                          const char* ckpt_dir, const char* metrics_path) {
  if (!ds) return usage("dataset is NULL");
  if (!ckpt_dir) return usage("ckpt_dir is NULL");
  return guarded([&] {
    khan::TrainConfig cfg;
    if (config_json && *config_json)
      cfg = khan::train_config_from_json(config_json);
    khan::validate_config(cfg);

    std::ofstream metrics;
    if (metrics_path) {
      metrics.open(metrics_path, std::ios::trunc);
      khan::require(metrics.is_open(), khan::ErrorCode::Io,
                    std::string("cannot open metrics file: ") + metrics_path);
    }
    auto on_epoch = [&](const khan::EpochMetrics& m) {
      if (metrics.is_open()) {
        metrics << khan::metrics_line(m) << "\n";
        metrics.flush();
      }
    };
    khan::TrainResult result = khan::pretrain(ds->ds, cfg, on_epoch);
    khan::encoder_save(result.encoder, ckpt_dir);
    return KHAN_OK;
  });
}

khan_status khan_encoder_load(const char* ckpt_dir, khan_encoder** out) {
  if (!out) return usage("out pointer is NULL");
  *out = nullptr;
  if (!ckpt_dir) return usage("ckpt_dir is NULL");
  return guarded([&] {
    auto* handle = new khan_encoder{khan::encoder_load(ckpt_dir)};
    *out = handle;
    return KHAN_OK;
  });
}

void khan_encoder_free(khan_encoder* enc) { delete enc; }

khan_status khan_eval(const khan_encoder* enc, const khan_dataset* ds,
                      uint64_t seed, double* accuracy, char** report_json) {
  if (!enc) return usage("encoder is NULL");
  if (!ds) return usage("dataset is NULL");
  if (report_json) *report_json = nullptr;
  return guarded([&] {
    khan::ProbeResult r = khan::linear_probe_eval(enc->enc, ds->ds, seed);
    if (accuracy) *accuracy = r.accuracy;
    if (report_json) {
      json j;
      j["accuracy"] = r.accuracy;
      j["n_train"] = r.n_train;
      j["n_test"] = r.n_test;
      j["n_classes"] = r.n_classes;
      j["seed"] = seed;
      *report_json = dup_string(j.dump());
    }
    return KHAN_OK;
  });
}

khan_status khan_ckfi_report(const khan_encoder* enc, int raw,
                             char** report_json) {
  if (!enc) return usage("encoder is NULL");
  if (!report_json) return usage("report_json pointer is NULL");
  *report_json = nullptr;
  return guarded([&] {
    khan::require(!enc->enc.layers.empty(), khan::ErrorCode::InvalidArgument,
                  "encoder has no layers");
    const khan::Tensor3& coeff = enc->enc.layers.back().coeff;
    khan::CkfiScores scores = khan::ckfi_scores(coeff, raw == 0);
    json j;
    j["delta"] = scores.delta;
    j["rho"] = scores.rho;
    j["normalized"] = (raw == 0);
    j["d_out"] = scores.delta.size();
    *report_json = dup_string(j.dump());
    return KHAN_OK;
  });
}

khan_status khan_verify(const char* filter, char** report, int* num_failed) {
  if (report) *report = nullptr;
  if (num_failed) *num_failed = 0;
  return guarded([&] {
    std::string f = filter ? filter : "";
    auto results = khan::run_selfchecks(f);
    khan::require(!results.empty(), khan::ErrorCode::InvalidArgument,
                  "filter matches no suite: " + f);
    int failed = 0;
    std::ostringstream os;
    for (const auto& r : results) {
      os << (r.passed ? "ok   " : "FAIL ") << r.name;
      if (!r.detail.empty()) os << "  " << r.detail;
      os << "\n";
      if (!r.passed) ++failed;
    }
    os << results.size() << " suites, " << failed << " failed\n";
    if (report) *report = dup_string(os.str());
    if (num_failed) *num_failed = failed;
    if (failed > 0) {
      g_last_error = std::to_string(failed) + " verification suite(s) failed";
      return KHAN_VERIFY_FAILED;
    }
    return KHAN_OK;
  });
}

}  // extern "C"
