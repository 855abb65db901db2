// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"
#include "core/train.hpp"

using namespace khan;

TEST_SUITE("train") {

TEST_CASE("config JSON round-trips and rejects unknown keys") {
  TrainConfig cfg;
  cfg.tau = 0.37;
  cfg.epochs = 7;
  cfg.hidden = {8, 4};
  cfg.head = {4};
  cfg.shared_sign = true;
  cfg.aug1 = {AugmentKind::AttrMask, 0.35};
  cfg.features.scheme = FeatureScheme::Constant;
  std::string text = train_config_to_json(cfg);
  TrainConfig back = train_config_from_json(text);
  CHECK(back.tau == cfg.tau);
  CHECK(back.epochs == cfg.epochs);
  CHECK(back.hidden == cfg.hidden);
  CHECK(back.shared_sign == cfg.shared_sign);
  CHECK(back.aug1.kind == cfg.aug1.kind);
  CHECK(back.aug1.ratio == cfg.aug1.ratio);
  CHECK(back.features.scheme == cfg.features.scheme);

  CHECK_THROWS_AS(train_config_from_json(R"({"tua": 0.2})"), Error);
  CHECK_THROWS_AS(train_config_from_json(R"({"aug1": {"knid": "node_drop"}})"),
                  Error);
  CHECK_THROWS_AS(train_config_from_json("not json"), Error);
  CHECK_THROWS_AS(train_config_from_json(R"({"tau": "high"})"), Error);
}

TEST_CASE("missing keys keep their defaults") {
  TrainConfig d;
  TrainConfig c = train_config_from_json(R"({"epochs": 3})");
  CHECK(c.epochs == 3);
  CHECK(c.tau == d.tau);
  CHECK(c.batch_size == d.batch_size);
  CHECK(c.hidden == d.hidden);
}

TEST_CASE("validation rejects broken settings") {
  auto bad = [](auto&& mutate) {
    TrainConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(validate_config(cfg), Error);
  };
  bad([](TrainConfig& c) { c.tau = 0.0; });
  bad([](TrainConfig& c) { c.lr = -1.0; });
  bad([](TrainConfig& c) { c.epochs = 0; });
  bad([](TrainConfig& c) { c.batch_size = 1; });
  bad([](TrainConfig& c) { c.hidden.clear(); });
  bad([](TrainConfig& c) { c.hidden = {8, 1}; });  // final width under 2
  bad([](TrainConfig& c) { c.sigma_delta = -0.1; });
  bad([](TrainConfig& c) { c.grid_intervals = 0; });
  bad([](TrainConfig& c) { c.domain_a = 1.0, c.domain_b = -1.0; });
  validate_config(TrainConfig{});  // defaults are valid
}

TEST_CASE("perturbations concentrate around eps * score with sigma spread") {
  TrainConfig cfg;
  cfg.eps_delta = 0.2;
  cfg.sigma_delta = 0.01;
  cfg.eps_rho = 0.0;
  cfg.sigma_rho = 0.0;
  std::vector<double> delta = {1.0, 0.5};
  std::vector<double> rho = {1.0, 1.0};
  Rng rng(91);
  double sum0 = 0.0, sum1 = 0.0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    PerturbationPair p = sample_perturbations(delta, rho, cfg, rng);
    sum0 += std::fabs(p.p_delta[0]);
    sum1 += std::fabs(p.p_delta[1]);
    CHECK(p.p_rho[0] == 0.0);  // eps = sigma = 0 silences the rho term
    CHECK(p.p_rho[1] == 0.0);
  }
  // |N(0.2, 0.01^2)| is 0.2 up to a vanishing correction
  CHECK(sum0 / draws == doctest::Approx(0.2).epsilon(0.01));
  CHECK(sum1 / draws == doctest::Approx(0.1).epsilon(0.01));
}

TEST_CASE("shared sign couples the two perturbation terms") {
  TrainConfig cfg;
  cfg.shared_sign = true;
  std::vector<double> delta = {1.0, 1.0, 1.0};
  std::vector<double> rho = {1.0, 1.0, 1.0};
  Rng rng(92);
  for (int i = 0; i < 2000; ++i) {
    PerturbationPair p = sample_perturbations(delta, rho, cfg, rng);
    for (std::size_t c = 0; c < 3; ++c) {
      bool both_zero = p.p_delta[c] == 0.0 && p.p_rho[c] == 0.0;
      CHECK((both_zero ||
             (p.p_delta[c] > 0) == (p.p_rho[c] > 0)));  // same sign
    }
  }
}

TEST_CASE("perturbation sampling validates its inputs") {
  TrainConfig cfg;
  Rng rng(93);
  std::vector<double> three(3, 1.0), four(4, 1.0);
  CHECK_THROWS_AS(sample_perturbations(three, four, cfg, rng), Error);
}

TEST_CASE("hard negatives add both perturbations coordinate-wise") {
  std::vector<double> z = {1.0, 2.0, 3.0};
  PerturbationPair p;
  p.p_delta = {0.1, -0.2, 0.3};
  p.p_rho = {0.01, 0.02, -0.03};
  std::vector<double> h = make_hard_negative(z, p);
  CHECK(h[0] == doctest::Approx(1.11));
  CHECK(h[1] == doctest::Approx(1.82));
  CHECK(h[2] == doctest::Approx(3.27));
  PerturbationPair bad;
  bad.p_delta = {0.1};
  bad.p_rho = {0.1};
  CHECK_THROWS_AS(make_hard_negative(z, bad), Error);
}

TEST_CASE("metrics lines are stable strings") {
  EpochMetrics m;
  m.epoch = 3;
  m.l_cl = 1.5;
  m.l_hn = 0.25;
  m.l_khan = 1.75;
  m.wall_ms = 12;
  CHECK(metrics_line(m) ==
        R"({"epoch":3,"l_cl":1.5,"l_hn":0.25,"l_khan":1.75,"wall_ms":12})");
}

TEST_CASE("short pretraining run produces sane metrics and streams epochs") {
  Dataset ds = synth_two_class(12, 5);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 6;
  cfg.hidden = {6, 6};
  cfg.head = {4};
  cfg.seed = 11;
  cfg.ckfi_refresh_every = 2;
  std::vector<std::size_t> seen;
  TrainResult r = pretrain(ds, cfg, [&](const EpochMetrics& m) {
    seen.push_back(m.epoch);
  });
  REQUIRE(r.metrics.size() == 2);
  CHECK(seen == std::vector<std::size_t>{1, 2});
  for (const auto& m : r.metrics) {
    CHECK(std::isfinite(m.l_cl));
    CHECK(std::isfinite(m.l_hn));
    CHECK(m.l_khan ==
          doctest::Approx(m.l_cl + m.l_hn).epsilon(1e-12));
    CHECK(m.l_cl > 0.0);
    CHECK(m.l_hn > -1.0);
    CHECK(m.l_hn < 1.0 + 1e-9);
    CHECK(m.wall_ms >= 0);
  }
  CHECK(r.encoder.layers.size() == 2);
}

TEST_CASE("training twice with one seed is bit-identical") {
  Dataset ds = synth_two_class(12, 5);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 6;
  cfg.hidden = {6, 4};
  cfg.head = {4};
  cfg.seed = 13;
  TrainResult a = pretrain(ds, cfg);
  TrainResult b = pretrain(ds, cfg);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].l_cl == b.metrics[i].l_cl);
    CHECK(a.metrics[i].l_hn == b.metrics[i].l_hn);
  }
  for (std::size_t l = 0; l < a.encoder.layers.size(); ++l)
    CHECK(a.encoder.layers[l].coeff.data == b.encoder.layers[l].coeff.data);
}

TEST_CASE("changing the seed changes the trajectory") {
  Dataset ds = synth_two_class(12, 5);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 6;
  cfg.hidden = {6, 4};
  cfg.head = {4};
  cfg.seed = 1;
  TrainResult a = pretrain(ds, cfg);
  cfg.seed = 2;
  TrainResult b = pretrain(ds, cfg);
  CHECK(a.metrics[0].l_cl != b.metrics[0].l_cl);
}

TEST_CASE("pretraining rejects datasets smaller than one pairable batch") {
  Dataset tiny = synth_two_class(2, 5);
  tiny.graphs.pop_back();  // one graph cannot form a contrastive batch
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(pretrain(tiny, cfg), Error);
}

}  // TEST_SUITE train

TEST_SUITE("probe") {

TEST_CASE("separable embeddings probe to full accuracy") {
  Mat z(40, 2);
  std::vector<int> labels(40);
  Rng rng(94);
  for (std::size_t i = 0; i < 40; ++i) {
    int cls = static_cast<int>(i % 2);
    labels[i] = cls;
    z(i, 0) = (cls == 0 ? -2.0 : 2.0) + rng.normal(0.0, 0.1);
    z(i, 1) = rng.normal(0.0, 0.1);
  }
  ProbeResult r = probe_on_embeddings(z, labels, 5);
  CHECK(r.accuracy == doctest::Approx(1.0));
  CHECK(r.n_classes == 2);
  CHECK(r.n_train == 32);
  CHECK(r.n_test == 8);
}

TEST_CASE("split is stratified and respects the 80/20 ratio") {
  Mat z(25, 2);
  std::vector<int> labels(25);
  Rng rng(95);
  for (std::size_t i = 0; i < 25; ++i) {
    labels[i] = i < 10 ? 0 : 1;  // 10 vs 15
    z(i, 0) = rng.normal(0.0, 1.0);
    z(i, 1) = rng.normal(0.0, 1.0);
  }
  ProbeResult r = probe_on_embeddings(z, labels, 1);
  CHECK(r.n_train == 8 + 12);  // floor(0.8 * 10), floor(0.8 * 15)
  CHECK(r.n_test == 2 + 3);
}

TEST_CASE("probe is deterministic in the split seed") {
  Mat z(30, 3);
  std::vector<int> labels(30);
  Rng rng(96);
  for (std::size_t i = 0; i < 30; ++i) {
    labels[i] = static_cast<int>(i % 3);
    for (std::size_t c = 0; c < 3; ++c) z(i, c) = rng.normal(0.0, 1.0);
  }
  ProbeResult a = probe_on_embeddings(z, labels, 42);
  ProbeResult b = probe_on_embeddings(z, labels, 42);
  CHECK(a.accuracy == b.accuracy);
  ProbeResult c = probe_on_embeddings(z, labels, 43);
  CHECK(c.n_train == a.n_train);  // same sizes, possibly different members
}

TEST_CASE("three classes with arbitrary label values work") {
  Mat z(30, 2);
  std::vector<int> labels(30);
  Rng rng(97);
  for (std::size_t i = 0; i < 30; ++i) {
    int cls = static_cast<int>(i % 3);
    labels[i] = cls == 0 ? -7 : cls == 1 ? 0 : 99;
    double angle = 2.0943951023931953 * cls;  // 120 degree separation
    z(i, 0) = 3.0 * std::cos(angle) + rng.normal(0.0, 0.15);
    z(i, 1) = 3.0 * std::sin(angle) + rng.normal(0.0, 0.15);
  }
  ProbeResult r = probe_on_embeddings(z, labels, 7);
  CHECK(r.n_classes == 3);
  CHECK(r.accuracy == doctest::Approx(1.0));
}

TEST_CASE("a class with a single member is rejected") {
  Mat z(3, 2);
  std::vector<int> labels = {0, 0, 1};
  CHECK_THROWS_AS(probe_on_embeddings(z, labels, 0), Error);
}

}  // TEST_SUITE probe

TEST_SUITE("synth") {

TEST_CASE("generator produces the advertised structure") {
  Dataset ds = synth_two_class(40, 123);
  REQUIRE(ds.graphs.size() == 40);
  CHECK(ds.name == "SYNTH");
  for (std::size_t i = 0; i < 40; ++i) {
    const Graph& g = ds.graphs[i];
    CHECK(g.label == static_cast<int>(i % 2));
    CHECK(g.has_label);
    CHECK(g.n >= 10);
    CHECK(g.n <= 20);
    auto deg = node_degrees(g);
    int max_deg = *std::max_element(deg.begin(), deg.end());
    if (g.label == 1) {
      CHECK(max_deg == g.n - 1);  // hub touches every ring node
    } else {
      CHECK(max_deg < g.n - 1);  // cycle plus a few chords stays sparse
      CHECK(max_deg >= 2);
    }
    for (int d : deg) CHECK(d >= 2);  // no isolated or pendant nodes
    if (g.label == 0)
      CHECK(g.edges.size() == static_cast<std::size_t>(g.n + g.n / 4));
  }
}

TEST_CASE("generation is deterministic and seed-sensitive") {
  Dataset a = synth_two_class(10, 5);
  Dataset b = synth_two_class(10, 5);
  REQUIRE(a.graphs.size() == b.graphs.size());
  for (std::size_t i = 0; i < a.graphs.size(); ++i) {
    CHECK(a.graphs[i].n == b.graphs[i].n);
    CHECK(a.graphs[i].edges == b.graphs[i].edges);
  }
  Dataset c = synth_two_class(10, 6);
  bool same = true;
  for (std::size_t i = 0; i < a.graphs.size(); ++i)
    same = same && a.graphs[i].edges == c.graphs[i].edges;
  CHECK(!same);
}

TEST_CASE("odd or tiny requests are rejected") {
  CHECK_THROWS_AS(synth_two_class(5, 0), Error);
  CHECK_THROWS_AS(synth_two_class(0, 0), Error);
  SynthParams bad;
  bad.min_nodes = 3;  // hub graphs need at least 4 nodes
  CHECK_THROWS_AS(synth_two_class(4, 0, bad), Error);
}

}  // TEST_SUITE synth
