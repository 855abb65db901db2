// SPDX-License-Identifier: Apache-2.0
#include "core/encoder.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace khan {

namespace {

constexpr char kLinMagic[8] = {'K', 'H', 'A', 'N', 'L', 'I', 'N', 'R'};
constexpr std::uint32_t kLinVersion = 1;

Mat aggregate(const Mat& h, const std::vector<std::pair<int, int>>& edges,
              double eps) {
  Mat m = h;
  mat_scale_inplace(m, 1.0 + eps);
  for (auto [u, v] : edges) {
    auto su = static_cast<std::size_t>(u);
    auto sv = static_cast<std::size_t>(v);
    for (std::size_t c = 0; c < h.cols; ++c) {
      m(su, c) += h(sv, c);
      m(sv, c) += h(su, c);
    }
  }
  return m;
}

Mat pool_nodes(const Mat& h, const std::vector<int>& indicator,
               const std::vector<int>& sizes, Pool pool) {
  Mat z(sizes.size(), h.cols);
  for (std::size_t v = 0; v < h.rows; ++v) {
    auto g = static_cast<std::size_t>(indicator[v]);
    for (std::size_t c = 0; c < h.cols; ++c) z(g, c) += h(v, c);
  }
  if (pool == Pool::Mean)
    for (std::size_t g = 0; g < z.rows; ++g)
      for (std::size_t c = 0; c < z.cols; ++c)
        z(g, c) /= static_cast<double>(sizes[g]);
  return z;
}

Mat linear_forward(const LinearLayer& l, const Mat& x) {
  require(x.cols == l.w.cols, ErrorCode::DimMismatch,
          "linear layer: input width mismatch");
  Mat y(x.rows, l.w.rows);
  for (std::size_t s = 0; s < x.rows; ++s)
    for (std::size_t o = 0; o < l.w.rows; ++o) {
      double acc = l.b[o];
      for (std::size_t i = 0; i < l.w.cols; ++i) acc += x(s, i) * l.w(o, i);
      y(s, o) = acc;
    }
  return y;
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& s, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

void linear_save(const LinearLayer& l, const std::string& path) {
  std::string buf;
  buf.append(kLinMagic, 8);
  put_u32(buf, kLinVersion);
  put_u32(buf, 0);
  put_u32(buf, static_cast<std::uint32_t>(l.w.rows));
  put_u32(buf, static_cast<std::uint32_t>(l.w.cols));
  for (double v : l.w.data) put_f64(buf, v);
  for (double v : l.b) put_f64(buf, v);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::Io, "cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  require(out.good(), ErrorCode::Io, "write failed for " + path);

  nlohmann::json side{{"kind", "linear-layer"},
                      {"version", kLinVersion},
                      {"d_out", l.w.rows},
                      {"d_in", l.w.cols}};
  std::ofstream js(path + ".json", std::ios::trunc);
  require(js.good(), ErrorCode::Io, "cannot open " + path + ".json");
  js << side.dump(2) << "\n";
}

LinearLayer linear_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::MissingFile, "cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  require(buf.size() >= 24, ErrorCode::MalformedData, "truncated file " + path);
  require(std::memcmp(buf.data(), kLinMagic, 8) == 0, ErrorCode::MalformedData,
          "bad magic in " + path);
  std::size_t pos = 8;
  auto get_u32 = [&]() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  };
  auto get_f64 = [&]() {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  };
  require(get_u32() == kLinVersion, ErrorCode::MalformedData,
          "unsupported version in " + path);
  get_u32();
  std::uint32_t rows = get_u32();
  std::uint32_t cols = get_u32();
  std::size_t want = 24 + 8ull * (static_cast<std::size_t>(rows) * cols + rows);
  require(buf.size() == want, ErrorCode::MalformedData, "size mismatch in " + path);
  LinearLayer l;
  l.w = Mat(rows, cols);
  for (double& v : l.w.data) v = get_f64();
  l.b.resize(rows);
  for (double& v : l.b) v = get_f64();
  return l;
}

std::string layer_file(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02zu.bin", prefix, i);
  return buf;
}

}  // namespace

Encoder make_encoder(std::size_t f_in, const std::vector<std::size_t>& hidden,
                     const std::vector<std::size_t>& head, HeadKind head_kind,
                     Pool pool, const SplineGrid& grid, Rng& init_rng,
                     double init_sigma) {
  require(f_in >= 1, ErrorCode::InvalidArgument, "make_encoder: f_in must be >= 1");
  require(!hidden.empty(), ErrorCode::InvalidArgument,
          "make_encoder: need at least one hidden layer");
  Encoder enc;
  enc.pool = pool;
  enc.head_kind = head_kind;
  std::size_t d = f_in;
  for (std::size_t h : hidden) {
    KanLayer l = make_kan_layer(d, h, grid);
    kan_init(l, init_rng, init_sigma);
    enc.layers.push_back(std::move(l));
    d = h;
  }
  for (std::size_t h : head) {
    if (head_kind == HeadKind::Kan) {
      KanLayer l = make_kan_layer(d, h, grid);
      kan_init(l, init_rng, init_sigma);
      enc.head_kan.push_back(std::move(l));
    } else {
      LinearLayer l;
      l.w = Mat(h, d);
      double std_dev = 1.0 / std::sqrt(static_cast<double>(d));
      for (double& v : l.w.data) v = init_rng.normal(0.0, std_dev);
      l.b.assign(h, 0.0);
      enc.head_lin.push_back(std::move(l));
    }
    d = h;
  }
  return enc;
}

std::size_t embed_dim(const Encoder& enc) { return enc.layers.back().d_out; }

std::size_t project_dim(const Encoder& enc) {
  if (enc.head_kind == HeadKind::Kan && !enc.head_kan.empty())
    return enc.head_kan.back().d_out;
  if (enc.head_kind == HeadKind::Linear && !enc.head_lin.empty())
    return enc.head_lin.back().w.rows;
  return embed_dim(enc);
}

Mat encoder_forward(const Encoder& enc, const GraphBatch& batch,
                    EncoderCache* cache) {
  require(batch.x.rows > 0, ErrorCode::InvalidArgument,
          "encoder_forward: empty batch");
  require(batch.x.cols == enc.layers.front().d_in, ErrorCode::DimMismatch,
          "encoder_forward: feature width does not match the first layer");
  if (cache) {
    cache->layer_caches.assign(enc.layers.size(), KanCache{});
    cache->edges = batch.edges;
    cache->indicator = batch.indicator;
    cache->sizes = batch.sizes;
    cache->n_nodes = batch.x.rows;
  }
  Mat h = batch.x;
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    Mat m = aggregate(h, batch.edges, enc.eps);
    h = kan_forward(enc.layers[l], m, cache ? &cache->layer_caches[l] : nullptr);
  }
  return pool_nodes(h, batch.indicator, batch.sizes, enc.pool);
}

void encoder_backward(const Encoder& enc, const EncoderCache& cache,
                      const Mat& d_z, EncoderGrads& grads) {
  require(cache.layer_caches.size() == enc.layers.size(), ErrorCode::CacheMismatch,
          "encoder_backward: cache depth mismatch");
  require(d_z.rows == cache.sizes.size() && d_z.cols == embed_dim(enc),
          ErrorCode::DimMismatch, "encoder_backward: gradient shape mismatch");
  if (grads.layers.empty()) grads.layers.resize(enc.layers.size());

  // Un-pool to node gradients.
  Mat dh(cache.n_nodes, embed_dim(enc));
  for (std::size_t v = 0; v < cache.n_nodes; ++v) {
    auto g = static_cast<std::size_t>(cache.indicator[v]);
    double scale = enc.pool == Pool::Mean
                       ? 1.0 / static_cast<double>(cache.sizes[g])
                       : 1.0;
    for (std::size_t c = 0; c < dh.cols; ++c) dh(v, c) = d_z(g, c) * scale;
  }

  for (std::size_t l = enc.layers.size(); l-- > 0;) {
    Mat dm = kan_backward(enc.layers[l], cache.layer_caches[l], dh, grads.layers[l]);
    // Aggregation is symmetric, so its adjoint reuses the same stencil.
    dh = aggregate(dm, cache.edges, enc.eps);
  }
}

Mat head_forward(const Encoder& enc, const Mat& z, HeadCache* cache) {
  Mat h = z;
  if (enc.head_kind == HeadKind::Kan) {
    if (cache) cache->kan.assign(enc.head_kan.size(), KanCache{});
    for (std::size_t l = 0; l < enc.head_kan.size(); ++l)
      h = kan_forward(enc.head_kan[l], h, cache ? &cache->kan[l] : nullptr);
  } else {
    if (cache) cache->lin_inputs.clear();
    for (const auto& lin : enc.head_lin) {
      if (cache) cache->lin_inputs.push_back(h);
      h = linear_forward(lin, h);
    }
  }
  return h;
}

Mat head_backward(const Encoder& enc, const HeadCache& cache, const Mat& d_v,
                  HeadGrads& grads) {
  Mat d = d_v;
  if (enc.head_kind == HeadKind::Kan) {
    require(cache.kan.size() == enc.head_kan.size(), ErrorCode::CacheMismatch,
            "head_backward: cache depth mismatch");
    if (grads.kan.empty()) grads.kan.resize(enc.head_kan.size());
    for (std::size_t l = enc.head_kan.size(); l-- > 0;)
      d = kan_backward(enc.head_kan[l], cache.kan[l], d, grads.kan[l]);
  } else {
    require(cache.lin_inputs.size() == enc.head_lin.size(), ErrorCode::CacheMismatch,
            "head_backward: cache depth mismatch");
    if (grads.lin.empty()) {
      grads.lin.resize(enc.head_lin.size());
      for (std::size_t l = 0; l < enc.head_lin.size(); ++l) {
        grads.lin[l].w = Mat(enc.head_lin[l].w.rows, enc.head_lin[l].w.cols);
        grads.lin[l].b.assign(enc.head_lin[l].b.size(), 0.0);
      }
    }
    for (std::size_t l = enc.head_lin.size(); l-- > 0;) {
      const Mat& x = cache.lin_inputs[l];
      const LinearLayer& lin = enc.head_lin[l];
      for (std::size_t s = 0; s < x.rows; ++s)
        for (std::size_t o = 0; o < lin.w.rows; ++o) {
          double g = d(s, o);
          if (g == 0.0) continue;
          grads.lin[l].b[o] += g;
          for (std::size_t i = 0; i < lin.w.cols; ++i)
            grads.lin[l].w(o, i) += g * x(s, i);
        }
      Mat dx(x.rows, lin.w.cols);
      for (std::size_t s = 0; s < x.rows; ++s)
        for (std::size_t o = 0; o < lin.w.rows; ++o) {
          double g = d(s, o);
          if (g == 0.0) continue;
          for (std::size_t i = 0; i < lin.w.cols; ++i)
            dx(s, i) += g * lin.w(o, i);
        }
      d = std::move(dx);
    }
  }
  return d;
}

void encoder_save(const Encoder& enc, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create checkpoint directory " + dir);

  nlohmann::json manifest;
  manifest["format"] = "khan-encoder";
  manifest["version"] = 1;
  manifest["pool"] = enc.pool == Pool::Add ? "add" : "mean";
  manifest["eps"] = enc.eps;
  manifest["head_kind"] = enc.head_kind == HeadKind::Kan ? "kan" : "linear";

  std::vector<std::string> enc_files, head_files;
  for (std::size_t i = 0; i < enc.layers.size(); ++i) {
    std::string f = layer_file("layer", i);
    kan_save(enc.layers[i], (fs::path(dir) / f).string());
    enc_files.push_back(f);
  }
  if (enc.head_kind == HeadKind::Kan) {
    for (std::size_t i = 0; i < enc.head_kan.size(); ++i) {
      std::string f = layer_file("head", i);
      kan_save(enc.head_kan[i], (fs::path(dir) / f).string());
      head_files.push_back(f);
    }
  } else {
    for (std::size_t i = 0; i < enc.head_lin.size(); ++i) {
      std::string f = layer_file("head", i);
      linear_save(enc.head_lin[i], (fs::path(dir) / f).string());
      head_files.push_back(f);
    }
  }
  manifest["encoder_layers"] = enc_files;
  manifest["head_layers"] = head_files;

  nlohmann::json feat;
  switch (enc.features.scheme) {
    case FeatureScheme::DegreeOnehot: feat["scheme"] = "degree_onehot"; break;
    case FeatureScheme::NodeLabel: feat["scheme"] = "node_label"; break;
    case FeatureScheme::Constant: feat["scheme"] = "constant"; break;
  }
  feat["degree_cap"] = enc.features.degree_cap;
  if (!enc.features.label_map.empty()) feat["label_map"] = enc.features.label_map;
  manifest["features"] = feat;

  std::ofstream out((fs::path(dir) / "manifest.json").string(), std::ios::trunc);
  require(out.good(), ErrorCode::Io, "cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
  require(out.good(), ErrorCode::Io, "manifest write failed in " + dir);
}

Encoder encoder_load(const std::string& dir) {
  namespace fs = std::filesystem;
  std::string mpath = (fs::path(dir) / "manifest.json").string();
  std::ifstream in(mpath);
  require(in.good(), ErrorCode::MissingFile, "cannot open " + mpath);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedData, mpath + ": " + e.what());
  }
  require(manifest.value("format", "") == "khan-encoder", ErrorCode::MalformedData,
          mpath + ": not an encoder checkpoint");
  require(manifest.value("version", 0) == 1, ErrorCode::MalformedData,
          mpath + ": unsupported version");

  Encoder enc;
  std::string pool = manifest.value("pool", "add");
  require(pool == "add" || pool == "mean", ErrorCode::MalformedData,
          mpath + ": unknown pool kind");
  enc.pool = pool == "add" ? Pool::Add : Pool::Mean;
  enc.eps = manifest.value("eps", 0.0);
  std::string hk = manifest.value("head_kind", "kan");
  require(hk == "kan" || hk == "linear", ErrorCode::MalformedData,
          mpath + ": unknown head kind");
  enc.head_kind = hk == "kan" ? HeadKind::Kan : HeadKind::Linear;

  for (const auto& f : manifest.at("encoder_layers"))
    enc.layers.push_back(kan_load((fs::path(dir) / f.get<std::string>()).string()));
  require(!enc.layers.empty(), ErrorCode::MalformedData,
          mpath + ": checkpoint has no encoder layers");
  for (const auto& f : manifest.at("head_layers")) {
    std::string p = (fs::path(dir) / f.get<std::string>()).string();
    if (enc.head_kind == HeadKind::Kan)
      enc.head_kan.push_back(kan_load(p));
    else
      enc.head_lin.push_back(linear_load(p));
  }

  const auto& feat = manifest.at("features");
  std::string scheme = feat.value("scheme", "degree_onehot");
  if (scheme == "degree_onehot")
    enc.features.scheme = FeatureScheme::DegreeOnehot;
  else if (scheme == "node_label")
    enc.features.scheme = FeatureScheme::NodeLabel;
  else if (scheme == "constant")
    enc.features.scheme = FeatureScheme::Constant;
  else
    raise(ErrorCode::MalformedData, mpath + ": unknown feature scheme");
  enc.features.degree_cap = feat.value("degree_cap", std::size_t{10});
  if (feat.contains("label_map"))
    enc.features.label_map = feat.at("label_map").get<std::vector<int>>();
  return enc;
}

}  // namespace khan
