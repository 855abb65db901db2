// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/mat.hpp"
#include "core/rng.hpp"

namespace khan {

// Simple undirected graph. Edges are stored once with u < v, deduplicated,
// no self-loops; node ids are 0-based and dense. x holds node features
// (n rows; zero columns until a feature scheme runs).
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  Mat x;
  int label = 0;
  bool has_label = false;
  std::vector<int> node_labels;  // empty when the dataset has none
};

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  bool has_node_labels = false;
};

// Text dataset layout: {name}_A.txt with one "u, v" edge per line (1-based
// global node ids), {name}_graph_indicator.txt mapping each node to its
// 1-based graph id, {name}_graph_labels.txt with one integer per graph and
// optionally {name}_node_labels.txt with one integer per node. Tolerates
// CRLF endings and spaces after commas. Errors carry line numbers; an edge
// joining two graphs is rejected as a cross-graph edge.
Dataset parse_tu_dataset(const std::string& dir, const std::string& name);

// Inverse of parse: writes the same file set (edges emitted in both
// directions, sorted). Creates dir if needed.
void write_tu_dataset(const Dataset& ds, const std::string& dir);

enum class FeatureScheme { DegreeOnehot, NodeLabel, Constant };

struct FeatureConfig {
  FeatureScheme scheme = FeatureScheme::DegreeOnehot;
  std::size_t degree_cap = 10;  // degrees above the cap share the last bucket
  std::vector<int> label_map;   // NodeLabel vocabulary; filled on first use
};

// Fills g.x for every graph. NodeLabel builds (or reuses) a dataset-wide
// sorted label vocabulary in cfg.label_map so repeat runs agree on width.
void init_node_features(Dataset& ds, FeatureConfig& cfg);

enum class AugmentKind { NodeDrop, EdgePerturb, AttrMask, Identity };

struct AugmentConfig {
  AugmentKind kind = AugmentKind::NodeDrop;
  double ratio = 0.2;
};

// Stochastic graph view. node_drop removes floor(ratio * n) nodes but always
// keeps at least one; edge_perturb rewires floor(ratio * |E|) edges to
// currently-absent pairs, keeping |E| exact when the complement allows it;
// attr_mask zeroes floor(ratio * n) feature rows; identity copies.
Graph augment(const Graph& g, const AugmentConfig& cfg, Rng& rng);

// Node-disjoint union of several graphs for one forward pass.
struct GraphBatch {
  Mat x;                                  // total_nodes x f
  std::vector<std::pair<int, int>> edges; // offset into batch-global ids
  std::vector<int> indicator;             // node -> 0-based graph index
  std::vector<int> sizes;                 // nodes per graph
  int num_graphs = 0;
};

GraphBatch make_batch(const std::vector<Graph>& graphs);

std::vector<int> node_degrees(const Graph& g);

}  // namespace khan
