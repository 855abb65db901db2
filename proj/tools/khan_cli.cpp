// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Talks to the library exclusively through the
// public C API, exit codes: 0 success, 1 verification failure, 2 usage
// error, 3 data error, 4 internal error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "khan/khan.h"

using nlohmann::json;

namespace {

int fail(khan_status status) {
  std::fprintf(stderr, "error: %s\n", khan_last_error());
  return static_cast<int>(status);
}

int fail_usage(const std::string& msg) {
  std::fprintf(stderr, "error: %s\n", msg.c_str());
  return static_cast<int>(KHAN_USAGE_ERROR);
}

struct DatasetHandle {
  khan_dataset* ptr = nullptr;
  ~DatasetHandle() { khan_dataset_free(ptr); }
};

struct EncoderHandle {
  khan_encoder* ptr = nullptr;
  ~EncoderHandle() { khan_encoder_free(ptr); }
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { khan_string_free(ptr); }
};

// Config assembly: JSON file first (when given), then explicit flags on top.
struct PretrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  std::optional<double> tau;
  std::optional<double> eps_delta;
  std::optional<double> eps_rho;
  std::optional<double> sigma_delta;
  std::optional<double> sigma_rho;
};

std::string build_config(const std::string& config_path,
                         const PretrainOverrides& ov, std::string& err) {
  json j = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in.is_open()) {
      err = "cannot open config file: " + config_path;
      return "";
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      j = json::parse(buf.str());
    } catch (const json::exception& e) {
      err = "config file is not valid JSON: " + std::string(e.what());
      return "";
    }
  }
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.epochs) j["epochs"] = *ov.epochs;
  if (ov.batch_size) j["batch_size"] = *ov.batch_size;
  if (ov.lr) j["lr"] = *ov.lr;
  if (ov.tau) j["tau"] = *ov.tau;
  if (ov.eps_delta) j["eps_delta"] = *ov.eps_delta;
  if (ov.eps_rho) j["eps_rho"] = *ov.eps_rho;
  if (ov.sigma_delta) j["sigma_delta"] = *ov.sigma_delta;
  if (ov.sigma_rho) j["sigma_rho"] = *ov.sigma_rho;
  return j.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spline-network graph contrastive learning toolkit"};
  app.set_version_flag("--version", khan_version());
  app.require_subcommand(1);

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "Contrastive pretraining");
  std::string pre_config, pre_data, pre_name, pre_out = "ckpt",
              pre_metrics = "metrics.jsonl";
  PretrainOverrides ov;
  pre->add_option("--config", pre_config, "JSON config file");
  pre->add_option("--data", pre_data, "dataset directory")->required();
  pre->add_option("--name", pre_name, "dataset name (default: inferred)");
  pre->add_option("--out", pre_out, "checkpoint directory");
  pre->add_option("--metrics", pre_metrics, "metrics JSON-lines file");
  pre->add_option("--seed", ov.seed, "random seed");
  pre->add_option("--epochs", ov.epochs, "training epochs");
  pre->add_option("--batch-size", ov.batch_size, "graphs per batch");
  pre->add_option("--lr", ov.lr, "learning rate");
  pre->add_option("--tau", ov.tau, "contrastive temperature");
  pre->add_option("--eps-delta", ov.eps_delta, "independence perturbation scale");
  pre->add_option("--eps-rho", ov.eps_rho, "variance perturbation scale");
  pre->add_option("--sigma-delta", ov.sigma_delta,
                  "independence perturbation noise");
  pre->add_option("--sigma-rho", ov.sigma_rho, "variance perturbation noise");

  // eval
  auto* ev = app.add_subcommand("eval", "Linear-probe evaluation");
  std::string ev_ckpt, ev_data, ev_name;
  std::uint64_t ev_seed = 0;
  ev->add_option("--ckpt", ev_ckpt, "checkpoint directory")->required();
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--name", ev_name, "dataset name (default: inferred)");
  ev->add_option("--seed", ev_seed, "split seed");

  // ckfi-report
  auto* ck = app.add_subcommand("ckfi-report",
                                "Importance scores of encoder output dims");
  std::string ck_ckpt;
  bool ck_raw = false;
  ck->add_option("--ckpt", ck_ckpt, "checkpoint directory")->required();
  ck->add_flag("--raw", ck_raw, "skip max-normalization");

  // verify
  auto* ver = app.add_subcommand("verify", "Run the built-in property suites");
  std::string ver_filter;
  ver->add_option("--filter", ver_filter, "only suites whose name contains this");

  // synth
  auto* sy = app.add_subcommand("synth", "Write a synthetic two-class dataset");
  std::string sy_out;
  int sy_n = 200;
  std::uint64_t sy_seed = 0;
  int sy_min = 0, sy_max = 0;
  sy->add_option("--out", sy_out, "output directory")->required();
  sy->add_option("--n", sy_n, "number of graphs (even)");
  sy->add_option("--seed", sy_seed, "random seed");
  sy->add_option("--min-nodes", sy_min, "minimum nodes per graph");
  sy->add_option("--max-nodes", sy_max, "maximum nodes per graph");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
    app.exit(e);
    return static_cast<int>(KHAN_USAGE_ERROR);
  }

  if (pre->parsed()) {
    std::string err;
    std::string config = build_config(pre_config, ov, err);
    if (!err.empty()) return fail_usage(err);
    DatasetHandle ds;
    khan_status st = khan_dataset_load_tu(
        pre_data.c_str(), pre_name.empty() ? nullptr : pre_name.c_str(), &ds.ptr);
    if (st != KHAN_OK) return fail(st);
    st = khan_pretrain(ds.ptr, config.c_str(), pre_out.c_str(),
                       pre_metrics.c_str());
    if (st != KHAN_OK) return fail(st);
    std::printf("{\"checkpoint\":\"%s\",\"metrics\":\"%s\"}\n", pre_out.c_str(),
                pre_metrics.c_str());
    return 0;
  }

  if (ev->parsed()) {
    EncoderHandle enc;
    khan_status st = khan_encoder_load(ev_ckpt.c_str(), &enc.ptr);
    if (st != KHAN_OK) return fail(st);
    DatasetHandle ds;
    st = khan_dataset_load_tu(ev_data.c_str(),
                              ev_name.empty() ? nullptr : ev_name.c_str(),
                              &ds.ptr);
    if (st != KHAN_OK) return fail(st);
    double acc = 0.0;
    OwnedString report;
    st = khan_eval(enc.ptr, ds.ptr, ev_seed, &acc, &report.ptr);
    if (st != KHAN_OK) return fail(st);
    std::printf("%s\n", report.ptr);
    return 0;
  }

  if (ck->parsed()) {
    EncoderHandle enc;
    khan_status st = khan_encoder_load(ck_ckpt.c_str(), &enc.ptr);
    if (st != KHAN_OK) return fail(st);
    OwnedString report;
    st = khan_ckfi_report(enc.ptr, ck_raw ? 1 : 0, &report.ptr);
    if (st != KHAN_OK) return fail(st);
    std::printf("%s\n", report.ptr);
    return 0;
  }

  if (ver->parsed()) {
    OwnedString report;
    int failed = 0;
    khan_status st = khan_verify(ver_filter.c_str(), &report.ptr, &failed);
    if (report.ptr) std::fputs(report.ptr, stdout);
    if (st != KHAN_OK && st != KHAN_VERIFY_FAILED) return fail(st);
    return st == KHAN_OK ? 0 : static_cast<int>(KHAN_VERIFY_FAILED);
  }

  if (sy->parsed()) {
    DatasetHandle ds;
    khan_status st = khan_dataset_synth(sy_n, sy_min, sy_max, sy_seed, &ds.ptr);
    if (st != KHAN_OK) return fail(st);
    st = khan_dataset_write_tu(ds.ptr, sy_out.c_str(), nullptr);
    if (st != KHAN_OK) return fail(st);
    std::printf("{\"out\":\"%s\",\"graphs\":%d}\n", sy_out.c_str(),
                khan_dataset_num_graphs(ds.ptr));
    return 0;
  }

  return fail_usage("no subcommand");
}
