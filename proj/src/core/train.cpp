// SPDX-License-Identifier: Apache-2.0
#include "core/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/losses.hpp"

namespace khan {

namespace {

using nlohmann::json;

AugmentKind augment_kind_from_string(const std::string& s) {
  if (s == "node_drop") return AugmentKind::NodeDrop;
  if (s == "edge_perturb") return AugmentKind::EdgePerturb;
  if (s == "attr_mask") return AugmentKind::AttrMask;
  if (s == "identity") return AugmentKind::Identity;
  raise(ErrorCode::InvalidArgument, "unknown augmentation kind: " + s);
}

std::string augment_kind_to_string(AugmentKind k) {
  switch (k) {
    case AugmentKind::NodeDrop: return "node_drop";
    case AugmentKind::EdgePerturb: return "edge_perturb";
    case AugmentKind::AttrMask: return "attr_mask";
    case AugmentKind::Identity: return "identity";
  }
  return "node_drop";
}

std::string feature_scheme_to_string(FeatureScheme s) {
  switch (s) {
    case FeatureScheme::DegreeOnehot: return "degree_onehot";
    case FeatureScheme::NodeLabel: return "node_label";
    case FeatureScheme::Constant: return "constant";
  }
  return "degree_onehot";
}

FeatureScheme feature_scheme_from_string(const std::string& s) {
  if (s == "degree_onehot") return FeatureScheme::DegreeOnehot;
  if (s == "node_label") return FeatureScheme::NodeLabel;
  if (s == "constant") return FeatureScheme::Constant;
  raise(ErrorCode::InvalidArgument, "unknown feature scheme: " + s);
}

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    require(ok, ErrorCode::InvalidArgument,
            "unknown config key " + where + "'" + it.key() + "'");
  }
}

AugmentConfig augment_from_json(const json& j, const std::string& where) {
  check_keys(j, {"kind", "ratio"}, where);
  AugmentConfig a;
  if (j.contains("kind")) a.kind = augment_kind_from_string(j.at("kind"));
  if (j.contains("ratio")) a.ratio = j.at("ratio").get<double>();
  return a;
}

// Parameter blocks in a fixed order: encoder layers, then head layers.
std::vector<std::span<double>> param_blocks(Encoder& enc) {
  std::vector<std::span<double>> blocks;
  for (auto& l : enc.layers) blocks.emplace_back(l.coeff.data);
  if (enc.head_kind == HeadKind::Kan) {
    for (auto& l : enc.head_kan) blocks.emplace_back(l.coeff.data);
  } else {
    for (auto& l : enc.head_lin) {
      blocks.emplace_back(l.w.data);
      blocks.emplace_back(l.b);
    }
  }
  return blocks;
}

std::vector<double> flatten_grads(const Encoder& enc, const EncoderGrads& eg,
                                  const HeadGrads& hg) {
  std::vector<double> flat;
  for (const auto& g : eg.layers)
    flat.insert(flat.end(), g.coeff.data.begin(), g.coeff.data.end());
  if (enc.head_kind == HeadKind::Kan) {
    for (const auto& g : hg.kan)
      flat.insert(flat.end(), g.coeff.data.begin(), g.coeff.data.end());
  } else {
    for (const auto& g : hg.lin) {
      flat.insert(flat.end(), g.w.data.begin(), g.w.data.end());
      flat.insert(flat.end(), g.b.begin(), g.b.end());
    }
  }
  return flat;
}

}  // namespace

void validate_config(const TrainConfig& cfg) {
  require(cfg.tau > 0.0, ErrorCode::InvalidArgument, "config: tau must be > 0");
  require(cfg.eps_delta >= 0.0 && cfg.eps_rho >= 0.0, ErrorCode::InvalidArgument,
          "config: eps must be >= 0");
  require(cfg.sigma_delta >= 0.0 && cfg.sigma_rho >= 0.0,
          ErrorCode::InvalidArgument, "config: sigma must be >= 0");
  require(cfg.batch_size >= 2, ErrorCode::InvalidArgument,
          "config: batch_size must be >= 2");
  require(cfg.epochs >= 1, ErrorCode::InvalidArgument,
          "config: epochs must be >= 1");
  require(cfg.ckfi_refresh_every >= 1, ErrorCode::InvalidArgument,
          "config: ckfi_refresh_every must be >= 1");
  require(cfg.lr > 0.0, ErrorCode::InvalidArgument, "config: lr must be > 0");
  require(!cfg.hidden.empty(), ErrorCode::InvalidArgument,
          "config: hidden layer list must be non-empty");
  for (std::size_t h : cfg.hidden)
    require(h >= 1, ErrorCode::InvalidArgument, "config: hidden dims must be >= 1");
  for (std::size_t h : cfg.head)
    require(h >= 1, ErrorCode::InvalidArgument, "config: head dims must be >= 1");
  require(cfg.hidden.back() >= 2, ErrorCode::InvalidArgument,
          "config: the embedding dim must be >= 2 for feature scoring");
  require(cfg.domain_b > cfg.domain_a, ErrorCode::InvalidArgument,
          "config: spline domain must satisfy b > a");
  require(cfg.grid_intervals >= 1, ErrorCode::InvalidArgument,
          "config: grid_intervals must be >= 1");
  require(cfg.aug1.ratio >= 0.0 && cfg.aug1.ratio < 1.0 && cfg.aug2.ratio >= 0.0 &&
              cfg.aug2.ratio < 1.0,
          ErrorCode::InvalidArgument, "config: augment ratios must lie in [0, 1)");
}

TrainConfig train_config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    raise(ErrorCode::MalformedData, std::string("config JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::MalformedData, "config JSON: expected an object");
  check_keys(j,
             {"tau", "eps_delta", "eps_rho", "sigma_delta", "sigma_rho",
              "shared_sign", "lr", "beta1", "beta2", "adam_eps", "batch_size",
              "epochs", "ckfi_refresh_every", "normalize_scores", "seed",
              "init_sigma", "hidden", "head", "head_kind", "pool",
              "grid_intervals", "domain", "features", "aug1", "aug2"},
             "");

  TrainConfig cfg;
  try {
    if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
    if (j.contains("eps_delta")) cfg.eps_delta = j.at("eps_delta").get<double>();
    if (j.contains("eps_rho")) cfg.eps_rho = j.at("eps_rho").get<double>();
    if (j.contains("sigma_delta"))
      cfg.sigma_delta = j.at("sigma_delta").get<double>();
    if (j.contains("sigma_rho")) cfg.sigma_rho = j.at("sigma_rho").get<double>();
    if (j.contains("shared_sign")) cfg.shared_sign = j.at("shared_sign").get<bool>();
    if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
    if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
    if (j.contains("adam_eps")) cfg.adam_eps = j.at("adam_eps").get<double>();
    if (j.contains("batch_size"))
      cfg.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("ckfi_refresh_every"))
      cfg.ckfi_refresh_every = j.at("ckfi_refresh_every").get<std::size_t>();
    if (j.contains("normalize_scores"))
      cfg.normalize_scores = j.at("normalize_scores").get<bool>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("init_sigma")) cfg.init_sigma = j.at("init_sigma").get<double>();
    if (j.contains("hidden"))
      cfg.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    if (j.contains("head"))
      cfg.head = j.at("head").get<std::vector<std::size_t>>();
    if (j.contains("head_kind")) {
      std::string hk = j.at("head_kind").get<std::string>();
      require(hk == "kan" || hk == "linear", ErrorCode::InvalidArgument,
              "config: head_kind must be 'kan' or 'linear'");
      cfg.head_kind = hk == "kan" ? HeadKind::Kan : HeadKind::Linear;
    }
    if (j.contains("pool")) {
      std::string p = j.at("pool").get<std::string>();
      require(p == "add" || p == "mean", ErrorCode::InvalidArgument,
              "config: pool must be 'add' or 'mean'");
      cfg.pool = p == "add" ? Pool::Add : Pool::Mean;
    }
    if (j.contains("grid_intervals"))
      cfg.grid_intervals = j.at("grid_intervals").get<std::size_t>();
    if (j.contains("domain")) {
      auto d = j.at("domain").get<std::vector<double>>();
      require(d.size() == 2, ErrorCode::InvalidArgument,
              "config: domain must be [a, b]");
      cfg.domain_a = d[0];
      cfg.domain_b = d[1];
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      check_keys(f, {"scheme", "degree_cap"}, "features.");
      if (f.contains("scheme"))
        cfg.features.scheme = feature_scheme_from_string(f.at("scheme"));
      if (f.contains("degree_cap"))
        cfg.features.degree_cap = f.at("degree_cap").get<std::size_t>();
    }
    if (j.contains("aug1")) cfg.aug1 = augment_from_json(j.at("aug1"), "aug1.");
    if (j.contains("aug2")) cfg.aug2 = augment_from_json(j.at("aug2"), "aug2.");
  } catch (const json::exception& e) {
    raise(ErrorCode::MalformedData, std::string("config JSON: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j{
      {"tau", cfg.tau},
      {"eps_delta", cfg.eps_delta},
      {"eps_rho", cfg.eps_rho},
      {"sigma_delta", cfg.sigma_delta},
      {"sigma_rho", cfg.sigma_rho},
      {"shared_sign", cfg.shared_sign},
      {"lr", cfg.lr},
      {"beta1", cfg.beta1},
      {"beta2", cfg.beta2},
      {"adam_eps", cfg.adam_eps},
      {"batch_size", cfg.batch_size},
      {"epochs", cfg.epochs},
      {"ckfi_refresh_every", cfg.ckfi_refresh_every},
      {"normalize_scores", cfg.normalize_scores},
      {"seed", cfg.seed},
      {"init_sigma", cfg.init_sigma},
      {"hidden", cfg.hidden},
      {"head", cfg.head},
      {"head_kind", cfg.head_kind == HeadKind::Kan ? "kan" : "linear"},
      {"pool", cfg.pool == Pool::Add ? "add" : "mean"},
      {"grid_intervals", cfg.grid_intervals},
      {"domain", {cfg.domain_a, cfg.domain_b}},
      {"features",
       {{"scheme", feature_scheme_to_string(cfg.features.scheme)},
        {"degree_cap", cfg.features.degree_cap}}},
      {"aug1",
       {{"kind", augment_kind_to_string(cfg.aug1.kind)}, {"ratio", cfg.aug1.ratio}}},
      {"aug2",
       {{"kind", augment_kind_to_string(cfg.aug2.kind)}, {"ratio", cfg.aug2.ratio}}},
  };
  return j.dump(2);
}

PerturbationPair sample_perturbations(const std::vector<double>& delta,
                                      const std::vector<double>& rho,
                                      const TrainConfig& cfg, Rng& rng) {
  require(delta.size() == rho.size(), ErrorCode::DimMismatch,
          "sample_perturbations: score length mismatch");
  std::size_t d = delta.size();
  PerturbationPair out;
  out.p_delta.resize(d);
  out.p_rho.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (cfg.shared_sign) {
      double ud = std::fabs(rng.normal(cfg.eps_delta * delta[i], cfg.sigma_delta));
      double ur = std::fabs(rng.normal(cfg.eps_rho * rho[i], cfg.sigma_rho));
      double sign = static_cast<double>(rng.rademacher());
      out.p_delta[i] = sign * ud;
      out.p_rho[i] = sign * ur;
    } else {
      double ud = std::fabs(rng.normal(cfg.eps_delta * delta[i], cfg.sigma_delta));
      double sd = static_cast<double>(rng.rademacher());
      double ur = std::fabs(rng.normal(cfg.eps_rho * rho[i], cfg.sigma_rho));
      double sr = static_cast<double>(rng.rademacher());
      out.p_delta[i] = sd * ud;
      out.p_rho[i] = sr * ur;
    }
  }
  return out;
}

std::vector<double> make_hard_negative(const std::vector<double>& z,
                                       const PerturbationPair& pair) {
  require(z.size() == pair.p_delta.size() && z.size() == pair.p_rho.size(),
          ErrorCode::DimMismatch, "make_hard_negative: dimension mismatch");
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    out[i] = z[i] + pair.p_delta[i] + pair.p_rho[i];
  return out;
}

std::string metrics_line(const EpochMetrics& m) {
  json j{{"epoch", m.epoch},
         {"l_cl", m.l_cl},
         {"l_hn", m.l_hn},
         {"l_khan", m.l_khan},
         {"wall_ms", m.wall_ms}};
  return j.dump();
}

TrainResult pretrain(const Dataset& ds, const TrainConfig& cfg,
                     const std::function<void(const EpochMetrics&)>& on_epoch) {
  validate_config(cfg);
  require(ds.graphs.size() >= 2, ErrorCode::InvalidArgument,
          "pretrain: need at least two graphs");

  Dataset data = ds;
  FeatureConfig feat = cfg.features;
  init_node_features(data, feat);
  std::size_t f_in = data.graphs.front().x.cols;

  SplineGrid grid =
      make_grid(cfg.domain_a, cfg.domain_b, cfg.grid_intervals, 3);
  Rng init_rng = Rng::stream(cfg.seed, "init");
  Encoder enc = make_encoder(f_in, cfg.hidden, cfg.head, cfg.head_kind, cfg.pool,
                             grid, init_rng, cfg.init_sigma);
  enc.features = feat;

  AdamState adam;
  adam.cfg = AdamConfig{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps};

  std::vector<double> score_delta, score_rho;
  std::size_t batch_counter = 0;

  auto refresh_scores = [&]() {
    const Tensor3& c = enc.layers.back().coeff;
    score_delta = ckfi_second_order(c);
    score_rho = ckfi_first_order(c);
    if (cfg.normalize_scores) {
      normalize_scores(score_delta);
      normalize_scores(score_rho);
    }
  };

  TrainResult result;
  std::vector<std::size_t> order(data.graphs.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng = Rng::stream(cfg.seed, "shuffle", epoch);
    Rng aug1_rng = Rng::stream(cfg.seed, "augment1", epoch);
    Rng aug2_rng = Rng::stream(cfg.seed, "augment2", epoch);
    Rng perturb_rng = Rng::stream(cfg.seed, "perturb", epoch);
    shuffle_rng.shuffle(order);

    double sum_cl = 0.0, sum_hn = 0.0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      if (stop - start < 2) break;  // a trailing singleton has no negatives

      if (batch_counter % cfg.ckfi_refresh_every == 0) refresh_scores();
      ++batch_counter;

      std::vector<Graph> view1, view2;
      view1.reserve(stop - start);
      view2.reserve(stop - start);
      for (std::size_t idx = start; idx < stop; ++idx) {
        const Graph& g = data.graphs[order[idx]];
        view1.push_back(augment(g, cfg.aug1, aug1_rng));
        view2.push_back(augment(g, cfg.aug2, aug2_rng));
      }
      GraphBatch b1 = make_batch(view1);
      GraphBatch b2 = make_batch(view2);

      EncoderCache c1, c2;
      Mat z1 = encoder_forward(enc, b1, &c1);
      Mat z2 = encoder_forward(enc, b2, &c2);

      std::size_t n = z1.rows;
      std::size_t dz = z1.cols;

      // Hard negatives: perturb pooled embeddings along the score
      // directions; the branch is evaluated without gradient tracking.
      auto perturb_rows = [&](const Mat& z) {
        Mat zh = z;
        std::vector<double> row(dz);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < dz; ++c) row[c] = z(r, c);
          PerturbationPair p =
              sample_perturbations(score_delta, score_rho, cfg, perturb_rng);
          std::vector<double> hard = make_hard_negative(row, p);
          for (std::size_t c = 0; c < dz; ++c) zh(r, c) = hard[c];
        }
        return zh;
      };
      Mat zh1 = perturb_rows(z1);
      Mat zh2 = perturb_rows(z2);

      HeadCache h1, h2;
      Mat v1 = head_forward(enc, z1, &h1);
      Mat v2 = head_forward(enc, z2, &h2);
      Mat vh1 = head_forward(enc, zh1);
      Mat vh2 = head_forward(enc, zh2);

      std::size_t p_dim = v1.cols;
      Mat v(2 * n, p_dim), vh(2 * n, p_dim);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < p_dim; ++c) {
          v(2 * r, c) = v1(r, c);
          v(2 * r + 1, c) = v2(r, c);
          vh(2 * r, c) = vh1(r, c);
          vh(2 * r + 1, c) = vh2(r, c);
        }

      LossResult cl = ntxent_loss(v, cfg.tau);
      LossResult hn = hard_negative_loss(v, vh);
      sum_cl += cl.value;
      sum_hn += hn.value;

      Mat dv1(n, p_dim), dv2(n, p_dim);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < p_dim; ++c) {
          dv1(r, c) = cl.d_v(2 * r, c) + hn.d_v(2 * r, c);
          dv2(r, c) = cl.d_v(2 * r + 1, c) + hn.d_v(2 * r + 1, c);
        }

      HeadGrads hg;
      Mat dz1 = head_backward(enc, h1, dv1, hg);
      Mat dz2 = head_backward(enc, h2, dv2, hg);
      EncoderGrads eg;
      encoder_backward(enc, c1, dz1, eg);
      encoder_backward(enc, c2, dz2, eg);

      std::vector<double> flat_grads = flatten_grads(enc, eg, hg);
      auto blocks = param_blocks(enc);
      std::size_t total = 0;
      for (const auto& blk : blocks) total += blk.size();
      require(total == flat_grads.size(), ErrorCode::DimMismatch,
              "pretrain: gradient bookkeeping mismatch");
      std::vector<double> flat_params;
      flat_params.reserve(total);
      for (const auto& blk : blocks)
        flat_params.insert(flat_params.end(), blk.begin(), blk.end());
      adam_step(adam, flat_params, flat_grads);
      std::size_t off = 0;
      for (auto& blk : blocks) {
        std::copy(flat_params.begin() + static_cast<long>(off),
                  flat_params.begin() + static_cast<long>(off + blk.size()),
                  blk.begin());
        off += blk.size();
      }
      ++batches;
    }

    require(batches > 0, ErrorCode::InvalidArgument,
            "pretrain: batch size exceeds the dataset");
    auto t1 = std::chrono::steady_clock::now();
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.l_cl = sum_cl / static_cast<double>(batches);
    m.l_hn = sum_hn / static_cast<double>(batches);
    m.l_khan = m.l_cl + m.l_hn;
    m.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    result.metrics.push_back(m);
    if (on_epoch) on_epoch(m);
  }

  result.encoder = std::move(enc);
  return result;
}

Mat encode_dataset(const Encoder& enc, const Dataset& ds) {
  require(!ds.graphs.empty(), ErrorCode::InvalidArgument,
          "encode_dataset: empty dataset");
  Dataset data = ds;
  FeatureConfig feat = enc.features;
  init_node_features(data, feat);

  Mat z(data.graphs.size(), embed_dim(enc));
  const std::size_t chunk = 64;
  for (std::size_t start = 0; start < data.graphs.size(); start += chunk) {
    std::size_t stop = std::min(data.graphs.size(), start + chunk);
    std::vector<Graph> part(data.graphs.begin() + static_cast<long>(start),
                            data.graphs.begin() + static_cast<long>(stop));
    Mat zc = encoder_forward(enc, make_batch(part));
    for (std::size_t r = 0; r < zc.rows; ++r)
      for (std::size_t c = 0; c < zc.cols; ++c) z(start + r, c) = zc(r, c);
  }
  return z;
}

}  // namespace khan
