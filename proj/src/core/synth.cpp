// SPDX-License-Identifier: Apache-2.0
#include "core/synth.hpp"

#include <algorithm>
#include <set>

#include "core/error.hpp"

namespace khan {

Dataset synth_two_class(int n_graphs, std::uint64_t seed,
                        const SynthParams& params) {
  require(n_graphs >= 2 && n_graphs % 2 == 0, ErrorCode::InvalidArgument,
          "synth_two_class: n_graphs must be even and >= 2");
  require(params.min_nodes >= 4 && params.max_nodes >= params.min_nodes,
          ErrorCode::InvalidArgument, "synth_two_class: invalid node range");

  Dataset ds;
  ds.name = "SYNTH";
  ds.graphs.reserve(static_cast<std::size_t>(n_graphs));

  for (int gi = 0; gi < n_graphs; ++gi) {
    Rng rng = Rng::stream(seed, "synth", static_cast<std::uint64_t>(gi));
    int span = params.max_nodes - params.min_nodes + 1;
    int n = params.min_nodes +
            static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(span)));
    Graph g;
    g.n = n;
    g.label = gi % 2;
    g.has_label = true;

    std::set<std::pair<int, int>> edges;
    auto add = [&](int u, int v) {
      if (u > v) std::swap(u, v);
      if (u != v) edges.insert({u, v});
    };

    if (g.label == 0) {
      // Cycle through all nodes plus some random chords.
      for (int i = 0; i < n; ++i) add(i, (i + 1) % n);
      int chords = n / 4;
      int placed = 0;
      while (placed < chords) {
        int u = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        int v = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        if (u == v) continue;
        auto before = edges.size();
        add(u, v);
        if (edges.size() > before) ++placed;
      }
    } else {
      // Ring of the first n-1 nodes; the last node is a hub touching all.
      int ring = n - 1;
      for (int i = 0; i < ring; ++i) add(i, (i + 1) % ring);
      for (int i = 0; i < ring; ++i) add(i, n - 1);
    }

    g.edges.assign(edges.begin(), edges.end());
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

}  // namespace khan
