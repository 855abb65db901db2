// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "core/graph.hpp"
#include "core/kan_layer.hpp"

namespace khan {

enum class Pool { Add, Mean };
enum class HeadKind { Kan, Linear };

// Plain affine layer, y = x W^T + b, used for the optional linear head.
struct LinearLayer {
  Mat w;                  // d_out x d_in
  std::vector<double> b;  // d_out
};

// Message-passing encoder: each round aggregates
//   m_v = (1 + eps) h_v + sum_{u ~ v} h_u
// and transforms m through a spline layer; node states are then pooled per
// graph. A projection head (spline or linear stack) maps pooled embeddings
// to the contrastive space.
struct Encoder {
  std::vector<KanLayer> layers;
  double eps = 0.0;
  Pool pool = Pool::Add;
  HeadKind head_kind = HeadKind::Kan;
  std::vector<KanLayer> head_kan;
  std::vector<LinearLayer> head_lin;
  FeatureConfig features;  // how node inputs were built; travels with weights
};

Encoder make_encoder(std::size_t f_in, const std::vector<std::size_t>& hidden,
                     const std::vector<std::size_t>& head, HeadKind head_kind,
                     Pool pool, const SplineGrid& grid, Rng& init_rng,
                     double init_sigma = 0.1);

std::size_t embed_dim(const Encoder& enc);
std::size_t project_dim(const Encoder& enc);

struct EncoderCache {
  std::vector<KanCache> layer_caches;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> indicator;
  std::vector<int> sizes;
  std::size_t n_nodes = 0;
};

// Returns graph embeddings, num_graphs x embed_dim.
Mat encoder_forward(const Encoder& enc, const GraphBatch& batch,
                    EncoderCache* cache = nullptr);

struct EncoderGrads {
  std::vector<KanGrads> layers;
};

void encoder_backward(const Encoder& enc, const EncoderCache& cache,
                      const Mat& d_z, EncoderGrads& grads);

struct HeadCache {
  std::vector<KanCache> kan;
  std::vector<Mat> lin_inputs;
};

Mat head_forward(const Encoder& enc, const Mat& z, HeadCache* cache = nullptr);

struct LinearGrads {
  Mat w;
  std::vector<double> b;
};

struct HeadGrads {
  std::vector<KanGrads> kan;
  std::vector<LinearGrads> lin;
};

// Returns d_z.
Mat head_backward(const Encoder& enc, const HeadCache& cache, const Mat& d_v,
                  HeadGrads& grads);

// Checkpoint directory: manifest.json plus one weight container per layer.
void encoder_save(const Encoder& enc, const std::string& dir);
Encoder encoder_load(const std::string& dir);

}  // namespace khan
