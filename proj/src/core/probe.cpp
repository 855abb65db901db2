// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>

#include "core/error.hpp"
#include "core/train.hpp"

namespace khan {

namespace {

constexpr std::size_t kIters = 500;
constexpr double kLr = 0.1;

}  // namespace

ProbeResult probe_on_embeddings(const Mat& z, const std::vector<int>& labels,
                                std::uint64_t split_seed) {
  require(z.rows == labels.size(), ErrorCode::DimMismatch,
          "probe: one label per embedding row required");
  require(z.rows >= 2, ErrorCode::InvalidArgument, "probe: need at least 2 rows");
  require(all_finite(z), ErrorCode::InvalidArgument,
          "probe: embeddings must be finite");

  // Distinct sorted label values become class indices.
  std::map<int, std::size_t> class_of;
  for (int l : labels) class_of.emplace(l, 0);
  require(class_of.size() >= 2, ErrorCode::DegenerateInput,
          "probe: dataset has a single class");
  std::size_t n_classes = 0;
  for (auto& kv : class_of) kv.second = n_classes++;

  // Stratified 80/20 split, shuffled per class.
  std::vector<std::size_t> train_idx, test_idx;
  std::vector<std::vector<std::size_t>> members(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i)
    members[class_of.at(labels[i])].push_back(i);
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& m = members[c];
    require(m.size() >= 2, ErrorCode::DegenerateInput,
            "probe: a class has fewer than 2 members");
    Rng rng = Rng::stream(split_seed, "probe-split", c);
    rng.shuffle(m);
    std::size_t n_tr = static_cast<std::size_t>(
        std::floor(0.8 * static_cast<double>(m.size())));
    n_tr = std::clamp<std::size_t>(n_tr, 1, m.size() - 1);
    for (std::size_t i = 0; i < m.size(); ++i)
      (i < n_tr ? train_idx : test_idx).push_back(m[i]);
  }

  std::size_t d = z.cols;
  Mat w(n_classes, d);
  std::vector<double> b(n_classes, 0.0);
  double inv_n = 1.0 / static_cast<double>(train_idx.size());

  std::vector<double> logit(n_classes), p(n_classes);
  Mat gw(n_classes, d);
  std::vector<double> gb(n_classes);
  for (std::size_t it = 0; it < kIters; ++it) {
    std::fill(gw.data.begin(), gw.data.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t idx : train_idx) {
      const double* row = z.row_ptr(idx);
      double mx = -1e300;
      for (std::size_t c = 0; c < n_classes; ++c) {
        double acc = b[c];
        for (std::size_t f = 0; f < d; ++f) acc += w(c, f) * row[f];
        logit[c] = acc;
        mx = std::max(mx, acc);
      }
      double zsum = 0.0;
      for (std::size_t c = 0; c < n_classes; ++c) {
        p[c] = std::exp(logit[c] - mx);
        zsum += p[c];
      }
      std::size_t y = class_of.at(labels[idx]);
      for (std::size_t c = 0; c < n_classes; ++c) {
        double g = (p[c] / zsum - (c == y ? 1.0 : 0.0)) * inv_n;
        gb[c] += g;
        for (std::size_t f = 0; f < d; ++f) gw(c, f) += g * row[f];
      }
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
      b[c] -= kLr * gb[c];
      for (std::size_t f = 0; f < d; ++f) w(c, f) -= kLr * gw(c, f);
    }
  }

  std::size_t correct = 0;
  for (std::size_t idx : test_idx) {
    const double* row = z.row_ptr(idx);
    std::size_t best = 0;
    double best_v = -1e300;
    for (std::size_t c = 0; c < n_classes; ++c) {
      double acc = b[c];
      for (std::size_t f = 0; f < d; ++f) acc += w(c, f) * row[f];
      if (acc > best_v) {
        best_v = acc;
        best = c;
      }
    }
    if (best == class_of.at(labels[idx])) ++correct;
  }

  ProbeResult out;
  out.n_train = train_idx.size();
  out.n_test = test_idx.size();
  out.n_classes = n_classes;
  out.accuracy =
      static_cast<double>(correct) / static_cast<double>(test_idx.size());
  return out;
}

ProbeResult linear_probe_eval(const Encoder& enc, const Dataset& ds,
                              std::uint64_t split_seed) {
  std::vector<int> labels;
  labels.reserve(ds.graphs.size());
  for (const auto& g : ds.graphs) {
    require(g.has_label, ErrorCode::InvalidArgument,
            "probe: every graph needs a label");
    labels.push_back(g.label);
  }
  Mat z = encode_dataset(enc, ds);
  return probe_on_embeddings(z, labels, split_seed);
}

}  // namespace khan
