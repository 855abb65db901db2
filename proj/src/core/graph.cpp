// SPDX-License-Identifier: Apache-2.0
#include "core/graph.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "core/error.hpp"

namespace khan {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::MissingFile, "missing dataset file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  // Trailing blank lines are common; interior ones are not.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

long parse_int(const std::string& text, const std::string& path, std::size_t lineno) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(text, &pos);
  } catch (const std::exception&) {
    raise(ErrorCode::MalformedData,
          path + ":" + std::to_string(lineno) + ": expected an integer, got '" + text + "'");
  }
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  require(pos == text.size(), ErrorCode::MalformedData,
          path + ":" + std::to_string(lineno) + ": trailing characters in '" + text + "'");
  return v;
}

std::pair<long, long> parse_edge_line(const std::string& line, const std::string& path,
                                      std::size_t lineno) {
  auto comma = line.find(',');
  require(comma != std::string::npos, ErrorCode::MalformedData,
          path + ":" + std::to_string(lineno) + ": expected 'u, v'");
  std::string left = line.substr(0, comma);
  std::string right = line.substr(comma + 1);
  auto strip = [](std::string s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return std::string();
    return s.substr(b, e - b + 1);
  };
  left = strip(left);
  right = strip(right);
  require(!left.empty() && !right.empty(), ErrorCode::MalformedData,
          path + ":" + std::to_string(lineno) + ": expected 'u, v'");
  return {parse_int(left, path, lineno), parse_int(right, path, lineno)};
}

}  // namespace

std::vector<int> node_degrees(const Graph& g) {
  std::vector<int> deg(static_cast<std::size_t>(g.n), 0);
  for (auto [u, v] : g.edges) {
    ++deg[static_cast<std::size_t>(u)];
    ++deg[static_cast<std::size_t>(v)];
  }
  return deg;
}

Dataset parse_tu_dataset(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  std::string base = (fs::path(dir) / name).string();
  std::string ind_path = base + "_graph_indicator.txt";
  std::string a_path = base + "_A.txt";
  std::string gl_path = base + "_graph_labels.txt";
  std::string nl_path = base + "_node_labels.txt";

  auto ind_lines = read_lines(ind_path);
  require(!ind_lines.empty(), ErrorCode::MalformedData,
          ind_path + ": dataset has no nodes");
  std::size_t total_nodes = ind_lines.size();

  std::vector<int> graph_of(total_nodes);
  long num_graphs = 0;
  for (std::size_t i = 0; i < total_nodes; ++i) {
    require(!ind_lines[i].empty(), ErrorCode::MalformedData,
            ind_path + ":" + std::to_string(i + 1) + ": empty line");
    long gid = parse_int(ind_lines[i], ind_path, i + 1);
    require(gid >= 1, ErrorCode::MalformedData,
            ind_path + ":" + std::to_string(i + 1) + ": graph ids are 1-based");
    graph_of[i] = static_cast<int>(gid - 1);
    num_graphs = std::max(num_graphs, gid);
  }

  Dataset ds;
  ds.name = name;
  ds.graphs.resize(static_cast<std::size_t>(num_graphs));

  // Local node ids in file order within each graph.
  std::vector<int> local_id(total_nodes);
  for (std::size_t i = 0; i < total_nodes; ++i) {
    Graph& g = ds.graphs[static_cast<std::size_t>(graph_of[i])];
    local_id[i] = g.n;
    ++g.n;
  }
  for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi)
    require(ds.graphs[gi].n > 0, ErrorCode::MalformedData,
            ind_path + ": graph " + std::to_string(gi + 1) + " has no nodes");

  auto edge_lines = read_lines(a_path);
  std::vector<std::set<std::pair<int, int>>> seen(ds.graphs.size());
  for (std::size_t i = 0; i < edge_lines.size(); ++i) {
    require(!edge_lines[i].empty(), ErrorCode::MalformedData,
            a_path + ":" + std::to_string(i + 1) + ": empty line");
    auto [ua, va] = parse_edge_line(edge_lines[i], a_path, i + 1);
    require(ua >= 1 && va >= 1 && ua <= static_cast<long>(total_nodes) &&
                va <= static_cast<long>(total_nodes),
            ErrorCode::MalformedData,
            a_path + ":" + std::to_string(i + 1) + ": node id out of range");
    std::size_t u = static_cast<std::size_t>(ua - 1);
    std::size_t v = static_cast<std::size_t>(va - 1);
    require(graph_of[u] == graph_of[v], ErrorCode::CrossGraphEdge,
            a_path + ":" + std::to_string(i + 1) + ": edge joins graph " +
                std::to_string(graph_of[u] + 1) + " and graph " +
                std::to_string(graph_of[v] + 1));
    require(u != v, ErrorCode::MalformedData,
            a_path + ":" + std::to_string(i + 1) + ": self-loop");
    int lu = local_id[u], lv = local_id[v];
    if (lu > lv) std::swap(lu, lv);
    auto gi = static_cast<std::size_t>(graph_of[u]);
    if (seen[gi].insert({lu, lv}).second)
      ds.graphs[gi].edges.emplace_back(lu, lv);
  }
  for (auto& g : ds.graphs) std::sort(g.edges.begin(), g.edges.end());

  auto label_lines = read_lines(gl_path);
  require(label_lines.size() == ds.graphs.size(), ErrorCode::MalformedData,
          gl_path + ": expected " + std::to_string(ds.graphs.size()) +
              " labels, found " + std::to_string(label_lines.size()));
  for (std::size_t i = 0; i < label_lines.size(); ++i) {
    ds.graphs[i].label = static_cast<int>(parse_int(label_lines[i], gl_path, i + 1));
    ds.graphs[i].has_label = true;
  }

  if (std::filesystem::exists(nl_path)) {
    auto nl_lines = read_lines(nl_path);
    require(nl_lines.size() == total_nodes, ErrorCode::MalformedData,
            nl_path + ": expected " + std::to_string(total_nodes) +
                " node labels, found " + std::to_string(nl_lines.size()));
    for (auto& g : ds.graphs) g.node_labels.assign(static_cast<std::size_t>(g.n), 0);
    for (std::size_t i = 0; i < total_nodes; ++i) {
      int lbl = static_cast<int>(parse_int(nl_lines[i], nl_path, i + 1));
      auto gi = static_cast<std::size_t>(graph_of[i]);
      ds.graphs[gi].node_labels[static_cast<std::size_t>(local_id[i])] = lbl;
    }
    ds.has_node_labels = true;
  }
  return ds;
}

void write_tu_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create directory " + dir);
  std::string base = (fs::path(dir) / ds.name).string();

  auto open = [](const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), ErrorCode::Io, "cannot open " + path + " for writing");
    return out;
  };

  std::vector<int> offset(ds.graphs.size() + 1, 0);
  for (std::size_t i = 0; i < ds.graphs.size(); ++i)
    offset[i + 1] = offset[i] + ds.graphs[i].n;

  std::vector<std::pair<int, int>> directed;
  for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi)
    for (auto [u, v] : ds.graphs[gi].edges) {
      directed.emplace_back(offset[gi] + u + 1, offset[gi] + v + 1);
      directed.emplace_back(offset[gi] + v + 1, offset[gi] + u + 1);
    }
  std::sort(directed.begin(), directed.end());

  auto a = open(base + "_A.txt");
  for (auto [u, v] : directed) a << u << ", " << v << "\n";

  auto ind = open(base + "_graph_indicator.txt");
  for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi)
    for (int i = 0; i < ds.graphs[gi].n; ++i) ind << gi + 1 << "\n";

  auto gl = open(base + "_graph_labels.txt");
  for (const auto& g : ds.graphs) gl << g.label << "\n";

  if (ds.has_node_labels) {
    auto nl = open(base + "_node_labels.txt");
    for (const auto& g : ds.graphs)
      for (int i = 0; i < g.n; ++i)
        nl << (i < static_cast<int>(g.node_labels.size()) ? g.node_labels[i] : 0)
           << "\n";
  }
}

void init_node_features(Dataset& ds, FeatureConfig& cfg) {
  switch (cfg.scheme) {
    case FeatureScheme::DegreeOnehot: {
      std::size_t width = cfg.degree_cap + 1;
      for (auto& g : ds.graphs) {
        g.x = Mat(static_cast<std::size_t>(g.n), width);
        auto deg = node_degrees(g);
        for (int i = 0; i < g.n; ++i) {
          auto bucket = std::min<std::size_t>(
              static_cast<std::size_t>(deg[static_cast<std::size_t>(i)]),
              cfg.degree_cap);
          g.x(static_cast<std::size_t>(i), bucket) = 1.0;
        }
      }
      break;
    }
    case FeatureScheme::NodeLabel: {
      require(ds.has_node_labels, ErrorCode::SchemeUnavailable,
              "node_label features requested but the dataset has no node labels");
      if (cfg.label_map.empty()) {
        std::set<int> values;
        for (const auto& g : ds.graphs)
          values.insert(g.node_labels.begin(), g.node_labels.end());
        cfg.label_map.assign(values.begin(), values.end());
      }
      for (auto& g : ds.graphs) {
        g.x = Mat(static_cast<std::size_t>(g.n), cfg.label_map.size());
        for (int i = 0; i < g.n; ++i) {
          int lbl = g.node_labels[static_cast<std::size_t>(i)];
          auto it = std::lower_bound(cfg.label_map.begin(), cfg.label_map.end(), lbl);
          require(it != cfg.label_map.end() && *it == lbl,
                  ErrorCode::SchemeUnavailable,
                  "node label " + std::to_string(lbl) +
                      " is outside the training vocabulary");
          auto idx = static_cast<std::size_t>(it - cfg.label_map.begin());
          g.x(static_cast<std::size_t>(i), idx) = 1.0;
        }
      }
      break;
    }
    case FeatureScheme::Constant: {
      for (auto& g : ds.graphs) g.x = Mat(static_cast<std::size_t>(g.n), 1, 1.0);
      break;
    }
  }
}

Graph augment(const Graph& g, const AugmentConfig& cfg, Rng& rng) {
  require(cfg.ratio >= 0.0 && cfg.ratio < 1.0, ErrorCode::InvalidArgument,
          "augment: ratio must lie in [0, 1)");
  require(g.n >= 1, ErrorCode::InvalidArgument, "augment: empty graph");

  switch (cfg.kind) {
    case AugmentKind::Identity:
      return g;

    case AugmentKind::NodeDrop: {
      auto n = static_cast<std::size_t>(g.n);
      std::size_t drop = static_cast<std::size_t>(
          std::floor(cfg.ratio * static_cast<double>(n)));
      drop = std::min(drop, n - 1);  // never empty the graph
      std::vector<int> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
      rng.shuffle(idx);
      std::vector<char> dead(n, 0);
      for (std::size_t i = 0; i < drop; ++i) dead[static_cast<std::size_t>(idx[i])] = 1;

      std::vector<int> remap(n, -1);
      Graph out;
      out.label = g.label;
      out.has_label = g.has_label;
      for (std::size_t i = 0; i < n; ++i)
        if (!dead[i]) remap[i] = out.n++;
      out.x = Mat(static_cast<std::size_t>(out.n), g.x.cols);
      for (std::size_t i = 0; i < n; ++i)
        if (!dead[i])
          for (std::size_t c = 0; c < g.x.cols; ++c)
            out.x(static_cast<std::size_t>(remap[i]), c) = g.x(i, c);
      if (!g.node_labels.empty()) {
        out.node_labels.reserve(n - drop);
        for (std::size_t i = 0; i < n; ++i)
          if (!dead[i]) out.node_labels.push_back(g.node_labels[i]);
      }
      for (auto [u, v] : g.edges) {
        int ru = remap[static_cast<std::size_t>(u)];
        int rv = remap[static_cast<std::size_t>(v)];
        if (ru >= 0 && rv >= 0) out.edges.emplace_back(ru, rv);
      }
      return out;
    }

    case AugmentKind::EdgePerturb: {
      Graph out = g;
      std::size_t e = g.edges.size();
      if (e == 0) return out;
      auto n = static_cast<std::size_t>(g.n);
      std::set<std::pair<int, int>> present(g.edges.begin(), g.edges.end());
      std::vector<std::pair<int, int>> absent;
      for (std::size_t u = 0; u + 1 < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) {
          std::pair<int, int> cand{static_cast<int>(u), static_cast<int>(v)};
          if (!present.count(cand)) absent.push_back(cand);
        }
      std::size_t m = static_cast<std::size_t>(
          std::floor(cfg.ratio * static_cast<double>(e)));
      m = std::min({m, e, absent.size()});  // keep |E| exact

      std::vector<std::pair<int, int>> kept = g.edges;
      rng.shuffle(kept);
      kept.erase(kept.begin(), kept.begin() + static_cast<long>(m));

      // Partial Fisher-Yates on the complement picks m distinct new edges.
      for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = i + static_cast<std::size_t>(
                                rng.uniform_below(absent.size() - i));
        std::swap(absent[i], absent[j]);
        kept.push_back(absent[i]);
      }
      std::sort(kept.begin(), kept.end());
      out.edges = std::move(kept);
      return out;
    }

    case AugmentKind::AttrMask: {
      require(g.x.cols > 0, ErrorCode::SchemeUnavailable,
              "attr_mask: node features are not initialized");
      Graph out = g;
      auto n = static_cast<std::size_t>(g.n);
      std::size_t m = static_cast<std::size_t>(
          std::floor(cfg.ratio * static_cast<double>(n)));
      std::vector<int> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
      rng.shuffle(idx);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < out.x.cols; ++c)
          out.x(static_cast<std::size_t>(idx[i]), c) = 0.0;
      return out;
    }
  }
  raise(ErrorCode::InvalidArgument, "augment: unknown kind");
}

GraphBatch make_batch(const std::vector<Graph>& graphs) {
  require(!graphs.empty(), ErrorCode::InvalidArgument, "make_batch: no graphs");
  std::size_t width = graphs.front().x.cols;
  require(width > 0, ErrorCode::SchemeUnavailable,
          "make_batch: node features are not initialized");
  std::size_t total = 0;
  for (const auto& g : graphs) {
    require(g.x.cols == width, ErrorCode::DimMismatch,
            "make_batch: inconsistent feature widths");
    require(g.x.rows == static_cast<std::size_t>(g.n), ErrorCode::DimMismatch,
            "make_batch: feature rows do not match node count");
    total += static_cast<std::size_t>(g.n);
  }

  GraphBatch b;
  b.num_graphs = static_cast<int>(graphs.size());
  b.x = Mat(total, width);
  b.indicator.resize(total);
  b.sizes.reserve(graphs.size());
  int offset = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = graphs[gi];
    for (int i = 0; i < g.n; ++i) {
      auto row = static_cast<std::size_t>(offset + i);
      b.indicator[row] = static_cast<int>(gi);
      for (std::size_t c = 0; c < width; ++c)
        b.x(row, c) = g.x(static_cast<std::size_t>(i), c);
    }
    for (auto [u, v] : g.edges) b.edges.emplace_back(offset + u, offset + v);
    b.sizes.push_back(g.n);
    offset += g.n;
  }
  return b;
}

}  // namespace khan
