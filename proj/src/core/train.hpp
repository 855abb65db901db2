// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/adam.hpp"
#include "core/ckfi.hpp"
#include "core/encoder.hpp"

namespace khan {

struct TrainConfig {
  double tau = 0.2;
  double eps_delta = 0.075;
  double eps_rho = 0.075;
  double sigma_delta = 0.05;
  double sigma_rho = 0.05;
  bool shared_sign = false;  // one sign per coordinate across both terms
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t epochs = 60;
  std::size_t ckfi_refresh_every = 10;  // batches between score refreshes
  bool normalize_scores = true;
  std::uint64_t seed = 0;
  double init_sigma = 0.1;
  std::vector<std::size_t> hidden = {32, 32, 32};
  std::vector<std::size_t> head = {32, 32};
  HeadKind head_kind = HeadKind::Kan;
  Pool pool = Pool::Add;
  std::size_t grid_intervals = 5;
  double domain_a = -1.0;
  double domain_b = 1.0;
  FeatureConfig features;
  AugmentConfig aug1{AugmentKind::NodeDrop, 0.2};
  AugmentConfig aug2{AugmentKind::EdgePerturb, 0.2};
};

void validate_config(const TrainConfig& cfg);

// Strict JSON loader: rejects unknown keys so typos cannot silently fall
// back to defaults. Missing keys keep defaults.
TrainConfig train_config_from_json(const std::string& json_text);
std::string train_config_to_json(const TrainConfig& cfg);

struct PerturbationPair {
  std::vector<double> p_delta;
  std::vector<double> p_rho;
};

// One perturbation per coordinate: magnitude from N(eps * score, sigma^2),
// sign from an independent Rademacher draw. With shared_sign a single sign
// per coordinate multiplies both terms. Draw order per coordinate is
// pinned: delta magnitude, delta sign, rho magnitude, rho sign (shared:
// delta magnitude, rho magnitude, sign).
PerturbationPair sample_perturbations(const std::vector<double>& delta,
                                      const std::vector<double>& rho,
                                      const TrainConfig& cfg, Rng& rng);

std::vector<double> make_hard_negative(const std::vector<double>& z,
                                       const PerturbationPair& pair);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double l_cl = 0.0;
  double l_hn = 0.0;
  double l_khan = 0.0;
  std::int64_t wall_ms = 0;
};

std::string metrics_line(const EpochMetrics& m);

struct TrainResult {
  Encoder encoder;
  std::vector<EpochMetrics> metrics;
};

// Contrastive pretraining. Two augmented views per graph per batch; the
// scores driving hard negatives come from the final encoder layer and are
// refreshed every ckfi_refresh_every batches. on_epoch (when given) fires
// after each epoch so callers can stream the metrics log.
TrainResult pretrain(const Dataset& ds, const TrainConfig& cfg,
                     const std::function<void(const EpochMetrics&)>& on_epoch = {});

// Frozen-encoder evaluation: embed every graph, split 80/20 stratified by
// label under split_seed, fit a softmax linear classifier by full-batch
// gradient descent (500 iterations, lr 0.1) and report test accuracy.
struct ProbeResult {
  double accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_classes = 0;
};

ProbeResult linear_probe_eval(const Encoder& enc, const Dataset& ds,
                              std::uint64_t split_seed);

// The probe itself, exposed on raw embeddings: rows of z paired with
// integer labels (any values; distinct sorted values become classes).
ProbeResult probe_on_embeddings(const Mat& z, const std::vector<int>& labels,
                                std::uint64_t split_seed);

// Embeddings for the whole dataset under the encoder's feature scheme.
Mat encode_dataset(const Encoder& enc, const Dataset& ds);

}  // namespace khan
