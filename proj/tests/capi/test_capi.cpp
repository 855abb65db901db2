// SPDX-License-Identifier: Apache-2.0
//
// Exercises the shared library straight through its C surface, the way an
// external binding would.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "khan/khan.h"

using nlohmann::json;

namespace {

std::filesystem::path scratch(const char* leaf) {
  return std::filesystem::temp_directory_path() / leaf;
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version is a stable dotted string") {
  CHECK(std::strcmp(khan_version(), "1.0.0") == 0);
}

TEST_CASE("null arguments come back as usage errors with messages") {
  CHECK(khan_dataset_synth(10, 0, 0, 1, nullptr) == KHAN_USAGE_ERROR);
  khan_dataset* ds = nullptr;
  CHECK(khan_dataset_load_tu(nullptr, nullptr, &ds) == KHAN_USAGE_ERROR);
  CHECK(ds == nullptr);
  CHECK(khan_last_error()[0] != '\0');
  CHECK(khan_dataset_num_graphs(nullptr) == -1);
  khan_encoder* enc = nullptr;
  CHECK(khan_encoder_load(nullptr, &enc) == KHAN_USAGE_ERROR);
  CHECK(khan_pretrain(nullptr, nullptr, "x", nullptr) == KHAN_USAGE_ERROR);
}

TEST_CASE("synth datasets round-trip through the text format") {
  khan_dataset* ds = nullptr;
  REQUIRE(khan_dataset_synth(12, 0, 0, 9, &ds) == KHAN_OK);
  CHECK(khan_dataset_num_graphs(ds) == 12);

  auto dir = scratch("capi_roundtrip");
  std::filesystem::remove_all(dir);
  REQUIRE(khan_dataset_write_tu(ds, dir.string().c_str(), "RT") == KHAN_OK);

  khan_dataset* named = nullptr;
  REQUIRE(khan_dataset_load_tu(dir.string().c_str(), "RT", &named) == KHAN_OK);
  CHECK(khan_dataset_num_graphs(named) == 12);
  khan_dataset_free(named);

  // name inference from the unique *_A.txt
  khan_dataset* inferred = nullptr;
  REQUIRE(khan_dataset_load_tu(dir.string().c_str(), nullptr, &inferred) ==
          KHAN_OK);
  CHECK(khan_dataset_num_graphs(inferred) == 12);
  khan_dataset_free(inferred);

  khan_dataset_free(ds);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bad synth parameters are usage errors") {
  khan_dataset* ds = nullptr;
  CHECK(khan_dataset_synth(7, 0, 0, 1, &ds) == KHAN_USAGE_ERROR);  // odd
  CHECK(ds == nullptr);
  CHECK(khan_dataset_synth(10, 9, 5, 1, &ds) == KHAN_USAGE_ERROR);  // min > max
}

TEST_CASE("missing and ambiguous dataset directories are data errors") {
  khan_dataset* ds = nullptr;
  CHECK(khan_dataset_load_tu("/nonexistent/nowhere", nullptr, &ds) ==
        KHAN_DATA_ERROR);
  CHECK(khan_last_error()[0] != '\0');

  auto dir = scratch("capi_ambiguous");
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "ONE_A.txt") << "1, 2\n";
  std::ofstream(dir / "TWO_A.txt") << "1, 2\n";
  CHECK(khan_dataset_load_tu(dir.string().c_str(), nullptr, &ds) ==
        KHAN_DATA_ERROR);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pretrain, eval and the score report work end to end") {
  khan_dataset* ds = nullptr;
  REQUIRE(khan_dataset_synth(16, 0, 0, 3, &ds) == KHAN_OK);

  auto ckpt = scratch("capi_ckpt");
  auto metrics = scratch("capi_metrics.jsonl");
  std::filesystem::remove_all(ckpt);
  std::filesystem::remove(metrics);

  const char* cfg = R"({"epochs": 2, "batch_size": 8, "seed": 5,
                        "hidden": [6, 6], "head": [4]})";
  REQUIRE(khan_pretrain(ds, cfg, ckpt.string().c_str(),
                        metrics.string().c_str()) == KHAN_OK);

  // one metrics line per epoch, each valid JSON with the full schema
  std::ifstream in(metrics);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    json j = json::parse(line);
    CHECK(j["epoch"] == lines + 1);
    CHECK(j.contains("l_cl"));
    CHECK(j.contains("l_hn"));
    CHECK(j.contains("l_khan"));
    CHECK(j["wall_ms"].is_number_integer());
    ++lines;
  }
  CHECK(lines == 2);

  khan_encoder* enc = nullptr;
  REQUIRE(khan_encoder_load(ckpt.string().c_str(), &enc) == KHAN_OK);

  double acc = -1.0;
  char* report = nullptr;
  REQUIRE(khan_eval(enc, ds, 4, &acc, &report) == KHAN_OK);
  REQUIRE(report != nullptr);
  json r = json::parse(report);
  CHECK(r["accuracy"] == acc);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
  CHECK(r["n_classes"] == 2);
  CHECK(int(r["n_train"]) + int(r["n_test"]) == 16);
  khan_string_free(report);

  char* scores = nullptr;
  REQUIRE(khan_ckfi_report(enc, 0, &scores) == KHAN_OK);
  json s = json::parse(scores);
  CHECK(s["normalized"] == true);
  CHECK(s["delta"].size() == s["d_out"].get<std::size_t>());
  double max_delta = 0.0;
  for (double v : s["delta"]) max_delta = std::max(max_delta, v);
  CHECK(max_delta == doctest::Approx(1.0));
  khan_string_free(scores);

  char* raw = nullptr;
  REQUIRE(khan_ckfi_report(enc, 1, &raw) == KHAN_OK);
  CHECK(json::parse(raw)["normalized"] == false);
  khan_string_free(raw);

  khan_encoder_free(enc);
  khan_dataset_free(ds);
  std::filesystem::remove_all(ckpt);
  std::filesystem::remove(metrics);
}

TEST_CASE("bad config text is rejected before any training") {
  khan_dataset* ds = nullptr;
  REQUIRE(khan_dataset_synth(8, 0, 0, 3, &ds) == KHAN_OK);
  auto ckpt = scratch("capi_badcfg");
  // an unrecognized key is treated like an unknown flag, a usage error
  CHECK(khan_pretrain(ds, "{\"unknown_key\": 1}", ckpt.string().c_str(),
                      nullptr) == KHAN_USAGE_ERROR);
  CHECK(khan_pretrain(ds, "not json", ckpt.string().c_str(), nullptr) ==
        KHAN_DATA_ERROR);
  CHECK(khan_pretrain(ds, "{\"tau\": 0.0}", ckpt.string().c_str(), nullptr) ==
        KHAN_USAGE_ERROR);
  khan_dataset_free(ds);
}

TEST_CASE("loading a checkpoint from nowhere is a data error") {
  khan_encoder* enc = nullptr;
  CHECK(khan_encoder_load("/nonexistent/ckpt", &enc) == KHAN_DATA_ERROR);
  CHECK(enc == nullptr);
}

TEST_CASE("verify reports suites and respects filters") {
  char* report = nullptr;
  int failed = -1;
  khan_status st = khan_verify("tensor", &report, &failed);
  CHECK(st == KHAN_OK);
  CHECK(failed == 0);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("tensor.svd") != std::string::npos);
  khan_string_free(report);

  CHECK(khan_verify("no-such-suite", nullptr, nullptr) == KHAN_USAGE_ERROR);
}

TEST_CASE("string free tolerates NULL") {
  khan_string_free(nullptr);
}

}  // TEST_SUITE capi
