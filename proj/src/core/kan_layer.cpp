// SPDX-License-Identifier: Apache-2.0
#include "core/kan_layer.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace khan {

namespace {

constexpr char kMagic[8] = {'K', 'H', 'A', 'N', 'L', 'A', 'Y', 'R'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& s, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& buf, const std::string& path) : buf_(buf), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  void raw(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }

  bool exhausted() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) {
    require(pos_ + n <= buf_.size(), ErrorCode::MalformedData,
            "layer file truncated: " + path_);
  }
  const std::string& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

KanLayer make_kan_layer(std::size_t d_in, std::size_t d_out,
                        const SplineGrid& grid, bool squash_input) {
  require(d_in >= 1 && d_out >= 1, ErrorCode::InvalidArgument,
          "make_kan_layer: dimensions must be positive");
  KanLayer layer;
  layer.d_in = d_in;
  layer.d_out = d_out;
  layer.grid = grid;
  layer.squash_input = squash_input;
  layer.coeff = Tensor3(d_in, d_out, grid.basis_count());
  return layer;
}

void kan_init(KanLayer& layer, Rng& rng, double sigma) {
  double std_dev = sigma / std::sqrt(static_cast<double>(layer.d_in));
  for (double& c : layer.coeff.data) c = rng.normal(0.0, std_dev);
}

Mat kan_forward(const KanLayer& layer, const Mat& x, KanCache* cache) {
  require(x.cols == layer.d_in, ErrorCode::DimMismatch,
          "kan_forward: input width must equal layer d_in");
  require(all_finite(x), ErrorCode::InvalidArgument,
          "kan_forward: input entries must be finite");
  std::size_t n = x.rows;
  std::size_t d_c = layer.grid.basis_count();

  Mat squashed(n, layer.d_in);
  Mat bases(n, layer.d_in * d_c);
  Mat derivs;
  if (cache) derivs = Mat(n, layer.d_in * d_c);

  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < layer.d_in; ++i) {
      double t = layer.squash_input ? std::tanh(x(s, i)) : x(s, i);
      squashed(s, i) = t;
      auto vals = basis_eval(layer.grid, t);
      for (std::size_t k = 0; k < d_c; ++k) bases(s, i * d_c + k) = vals[k];
      if (cache) {
        auto dv = basis_deriv(layer.grid, t);
        for (std::size_t k = 0; k < d_c; ++k) derivs(s, i * d_c + k) = dv[k];
      }
    }
  }

  Mat y(n, layer.d_out);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < layer.d_in; ++i) {
      const double* brow = bases.row_ptr(s) + i * d_c;
      for (std::size_t j = 0; j < layer.d_out; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d_c; ++k) acc += layer.coeff(i, j, k) * brow[k];
        y(s, j) += acc;
      }
    }

  if (cache) {
    cache->n = n;
    cache->d_in = layer.d_in;
    cache->d_c = d_c;
    cache->squash_input = layer.squash_input;
    cache->squashed = std::move(squashed);
    cache->bases = std::move(bases);
    cache->derivs = std::move(derivs);
  }
  return y;
}

Mat kan_backward(const KanLayer& layer, const KanCache& cache, const Mat& d_y,
                 KanGrads& grads) {
  std::size_t d_c = layer.grid.basis_count();
  require(cache.d_in == layer.d_in && cache.d_c == d_c &&
              cache.squash_input == layer.squash_input,
          ErrorCode::CacheMismatch, "kan_backward: cache is from another layer");
  require(d_y.rows == cache.n && d_y.cols == layer.d_out, ErrorCode::DimMismatch,
          "kan_backward: gradient shape mismatch");
  if (grads.coeff.size() == 0)
    grads.coeff = Tensor3(layer.d_in, layer.d_out, d_c);
  require(grads.coeff.dims() == layer.coeff.dims(), ErrorCode::DimMismatch,
          "kan_backward: gradient accumulator shape mismatch");

  Mat d_x(cache.n, layer.d_in);
  for (std::size_t s = 0; s < cache.n; ++s) {
    const double* gy = d_y.row_ptr(s);
    for (std::size_t i = 0; i < layer.d_in; ++i) {
      const double* brow = cache.bases.row_ptr(s) + i * d_c;
      const double* drow = cache.derivs.row_ptr(s) + i * d_c;
      double chain = 1.0;
      if (layer.squash_input) {
        double t = cache.squashed(s, i);
        chain = 1.0 - t * t;
      }
      double acc_x = 0.0;
      for (std::size_t j = 0; j < layer.d_out; ++j) {
        double g = gy[j];
        if (g == 0.0) continue;
        for (std::size_t k = 0; k < d_c; ++k) {
          grads.coeff(i, j, k) += g * brow[k];
          acc_x += g * layer.coeff(i, j, k) * drow[k];
        }
      }
      d_x(s, i) = acc_x * chain;
    }
  }
  return d_x;
}

void kan_save(const KanLayer& layer, const std::string& path) {
  std::string buf;
  buf.append(kMagic, 8);
  put_u32(buf, kVersion);
  put_u32(buf, 0);  // reserved
  put_u32(buf, static_cast<std::uint32_t>(layer.d_in));
  put_u32(buf, static_cast<std::uint32_t>(layer.d_out));
  put_u32(buf, static_cast<std::uint32_t>(layer.grid.intervals));
  put_u32(buf, static_cast<std::uint32_t>(layer.grid.degree));
  put_f64(buf, layer.grid.a);
  put_f64(buf, layer.grid.b);
  put_u32(buf, layer.squash_input ? 1 : 0);
  for (double c : layer.coeff.data) put_f64(buf, c);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::Io, "kan_save: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  require(out.good(), ErrorCode::Io, "kan_save: write failed for " + path);
  out.close();

  nlohmann::json side{
      {"kind", "kan-layer"},
      {"version", kVersion},
      {"d_in", layer.d_in},
      {"d_out", layer.d_out},
      {"basis_count", layer.grid.basis_count()},
      {"intervals", layer.grid.intervals},
      {"degree", layer.grid.degree},
      {"domain", {layer.grid.a, layer.grid.b}},
      {"squash_input", layer.squash_input},
  };
  std::ofstream js(path + ".json", std::ios::trunc);
  require(js.good(), ErrorCode::Io, "kan_save: cannot open " + path + ".json");
  js << side.dump(2) << "\n";
  require(js.good(), ErrorCode::Io, "kan_save: sidecar write failed");
}

KanLayer kan_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::MissingFile, "kan_load: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  Reader r(buf, path);

  char magic[8];
  r.raw(magic, 8);
  require(std::memcmp(magic, kMagic, 8) == 0, ErrorCode::MalformedData,
          "kan_load: bad magic in " + path);
  std::uint32_t version = r.u32();
  require(version == kVersion, ErrorCode::MalformedData,
          "kan_load: unsupported version in " + path);
  r.u32();  // reserved

  std::uint32_t d_in = r.u32();
  std::uint32_t d_out = r.u32();
  std::uint32_t intervals = r.u32();
  std::uint32_t degree = r.u32();
  double a = r.f64();
  double b = r.f64();
  std::uint32_t squash = r.u32();
  require(d_in >= 1 && d_out >= 1 && intervals >= 1 && degree >= 1,
          ErrorCode::MalformedData, "kan_load: invalid dimensions in " + path);

  KanLayer layer = make_kan_layer(d_in, d_out, make_grid(a, b, intervals, degree),
                                  squash != 0);
  for (double& c : layer.coeff.data) c = r.f64();
  require(r.exhausted(), ErrorCode::MalformedData,
          "kan_load: trailing bytes in " + path);
  require(all_finite(layer.coeff), ErrorCode::MalformedData,
          "kan_load: non-finite coefficients in " + path);
  return layer;
}

}  // namespace khan
