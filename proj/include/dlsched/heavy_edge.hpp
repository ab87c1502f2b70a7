#pragma once

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dlsched/core.hpp"
#include "dlsched/job_graph.hpp"

namespace dlsched {

struct ServerShare {
  int server = 0;  // server id
  int gpus = 0;    // GPUs this server contributes to the job
};

struct GraphPartition {
  std::vector<int> server_of;  // vertex index -> server id
};

inline double cut_weight(const JobGraph& graph, const GraphPartition& part) {
  double cut = 0.0;
  for (const auto& e : graph.edges)
    if (part.server_of[e.u] != part.server_of[e.v]) cut += e.weight;
  return cut;
}

inline Placement to_placement(const JobGraph& graph, const GraphPartition& part, int num_servers,
                              int num_stages) {
  Placement p = Placement::zeros(num_servers, num_stages);
  for (std::size_t v = 0; v < graph.vertices.size(); ++v)
    p.gpu_counts[part.server_of[v]][graph.vertices[v].stage] += 1;
  return p;
}

// Greedy mapping of stage replicas to servers, co-locating heavily connected
// replicas. Servers are filled in descending order of contributed GPUs; all
// ties break on the lowest (stage, replica) label, then the lowest server id,
// so identical inputs give identical partitions.
inline GraphPartition heavy_edge_partition(const JobGraph& graph, std::vector<ServerShare> slots) {
  const int n = static_cast<int>(graph.vertices.size());
  int capacity = 0;
  for (const auto& s : slots) capacity += s.gpus;
  if (capacity != n) throw std::invalid_argument("heavy_edge: slot capacities must sum to |V|");

  std::stable_sort(slots.begin(), slots.end(), [](const ServerShare& a, const ServerShare& b) {
    if (a.gpus != b.gpus) return a.gpus > b.gpus;
    return a.server < b.server;
  });

  // label order = vertex index order (vertices are emitted stage-major).
  std::vector<char> assigned(n, 0);
  std::vector<char> edge_alive(graph.edges.size(), 1);
  GraphPartition part;
  part.server_of.assign(n, -1);
  int remaining = n;

  auto first_unassigned = [&]() {
    for (int v = 0; v < n; ++v)
      if (!assigned[v]) return v;
    return -1;
  };

  for (const auto& slot : slots) {
    std::vector<char> in_set(n, 0);
    int set_size = 0;
    auto take = [&](int v) {
      in_set[v] = 1;
      ++set_size;
    };

    if (remaining == slot.gpus) {
      for (int v = 0; v < n; ++v)
        if (!assigned[v]) take(v);
    } else {
      // live edges among unassigned vertices
      bool any_edge = false;
      for (std::size_t e = 0; e < graph.edges.size(); ++e)
        if (edge_alive[e]) { any_edge = true; break; }

      if (slot.gpus == 1 && any_edge) {
        std::vector<double> incident(n, 0.0);
        for (std::size_t e = 0; e < graph.edges.size(); ++e) {
          if (!edge_alive[e]) continue;
          incident[graph.edges[e].u] += graph.edges[e].weight;
          incident[graph.edges[e].v] += graph.edges[e].weight;
        }
        int best = -1;
        for (int v = 0; v < n; ++v) {
          if (assigned[v]) continue;
          if (best < 0 || incident[v] < incident[best]) best = v;
        }
        take(best);
      } else {
        if (any_edge) {
          int best = -1;
          for (std::size_t e = 0; e < graph.edges.size(); ++e) {
            if (!edge_alive[e]) continue;
            if (best < 0 || graph.edges[e].weight > graph.edges[best].weight) best = static_cast<int>(e);
          }
          take(graph.edges[best].u);
          if (set_size < slot.gpus) take(graph.edges[best].v);
        } else {
          take(first_unassigned());
        }
        while (set_size < slot.gpus) {
          double best_w = -1.0;
          int best_cand = -1;
          for (std::size_t e = 0; e < graph.edges.size(); ++e) {
            if (!edge_alive[e]) continue;
            const auto& edge = graph.edges[e];
            if (in_set[edge.u] == in_set[edge.v]) continue;  // not a boundary edge
            const int cand = in_set[edge.u] ? edge.v : edge.u;
            if (edge.weight > best_w || (edge.weight == best_w && cand < best_cand)) {
              best_w = edge.weight;
              best_cand = cand;
            }
          }
          if (best_cand < 0) {
            int v = -1;
            for (int u = 0; u < n; ++u)
              if (!assigned[u] && !in_set[u]) { v = u; break; }
            take(v);
          } else {
            take(best_cand);
          }
        }
      }
    }

    for (int v = 0; v < n; ++v) {
      if (!in_set[v]) continue;
      assigned[v] = 1;
      part.server_of[v] = slot.server;
      --remaining;
    }
    for (std::size_t e = 0; e < graph.edges.size(); ++e)
      if (edge_alive[e] && (assigned[graph.edges[e].u] || assigned[graph.edges[e].v]))
        edge_alive[e] = 0;
  }
  return part;
}

// Exhaustive minimum-cut partition respecting slot sizes; test oracle and
// the reference side of the partition benchmark. Guarded to |V| <= 12.
inline GraphPartition brute_force_partition(const JobGraph& graph, std::vector<ServerShare> slots) {
  const int n = static_cast<int>(graph.vertices.size());
  if (n > 12) throw std::invalid_argument("brute_force_partition: |V| > 12");
  int capacity = 0;
  for (const auto& s : slots) capacity += s.gpus;
  if (capacity != n) throw std::invalid_argument("brute_force_partition: capacity mismatch");
  std::stable_sort(slots.begin(), slots.end(), [](const ServerShare& a, const ServerShare& b) {
    if (a.gpus != b.gpus) return a.gpus > b.gpus;
    return a.server < b.server;
  });

  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const auto& e : graph.edges) {
    adj[e.u].push_back({e.v, e.weight});
    adj[e.v].push_back({e.u, e.weight});
  }

  std::vector<int> room(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) room[i] = slots[i].gpus;
  std::vector<int> current(n, -1);  // vertex -> slot index
  std::vector<int> best_assign;
  double best_cut = std::numeric_limits<double>::infinity();

  // Assign vertices in index order; accumulate the cut as edges close.
  auto recurse = [&](auto&& self, int v, double cut) -> void {
    if (cut >= best_cut) return;
    if (v == n) {
      best_cut = cut;
      best_assign = current;
      return;
    }
    for (std::size_t si = 0; si < slots.size(); ++si) {
      if (room[si] == 0) continue;
      // empty slots of equal capacity are interchangeable; try only the first
      if (room[si] == slots[si].gpus && si > 0 && slots[si - 1].gpus == slots[si].gpus &&
          room[si - 1] == slots[si - 1].gpus)
        continue;
      double added = 0.0;
      for (const auto& [u, w] : adj[v])
        if (u < v && current[u] != static_cast<int>(si)) added += w;
      current[v] = static_cast<int>(si);
      --room[si];
      self(self, v + 1, cut + added);
      ++room[si];
      current[v] = -1;
    }
  };
  recurse(recurse, 0, 0.0);

  GraphPartition part;
  part.server_of.assign(n, -1);
  for (int v = 0; v < n; ++v) part.server_of[v] = slots[best_assign[v]].server;
  return part;
}

}  // namespace dlsched
