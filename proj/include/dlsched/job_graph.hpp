#pragma once

#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dlsched/core.hpp"

namespace dlsched {

// Weighted undirected communication graph of one job: one vertex per stage
// replica, edge weights in bytes per iteration. Parallel edges between the
// same pair are merged by weight summation.
struct JobGraph {
  struct Vertex {
    int stage = 0;
    int replica = 0;
  };
  struct Edge {
    int u = 0;  // vertex indices, u < v
    int v = 0;
    double weight = 0.0;  // bytes
  };

  std::vector<Vertex> vertices;
  std::vector<Edge> edges;

  double total_weight() const {
    double sum = 0.0;
    for (const auto& e : edges) sum += e.weight;
    return sum;
  }

  std::string to_dot(const std::string& name = "job") const {
    std::ostringstream out;
    out << "graph " << name << " {\n";
    for (std::size_t i = 0; i < vertices.size(); ++i)
      out << "  v" << i << " [label=\"S" << vertices[i].stage + 1 << "-R" << vertices[i].replica + 1
          << "\"];\n";
    for (const auto& e : edges)
      out << "  v" << e.u << " -- v" << e.v << " [label=\"" << e.weight / 1e6 << "MB\"];\n";
    out << "}\n";
    return out.str();
  }
};

namespace detail {

// Balanced binary tree over seq[lo..hi]; emits parent-child rank pairs.
inline void balanced_tree_edges(const std::vector<int>& seq, int lo, int hi,
                                std::vector<std::pair<int, int>>& out) {
  if (lo > hi) return;
  const int mid = (lo + hi) / 2;
  if (mid > lo) {
    const int left = (lo + mid - 1) / 2;
    out.push_back({seq[mid], seq[left]});
    balanced_tree_edges(seq, lo, mid - 1, out);
  }
  if (mid < hi) {
    const int right = (mid + 1 + hi) / 2;
    out.push_back({seq[mid], seq[right]});
    balanced_tree_edges(seq, mid + 1, hi, out);
  }
}

// Double binary tree over ranks 0..k-1. The first tree is a balanced binary
// tree over the even-odd interleaved rank order, the second is the same shape
// with every rank shifted by one (mod k). Any fixed valid double binary tree
// gives the same per-edge weight accounting.
inline std::vector<std::pair<int, int>> double_binary_tree_edges(int k) {
  std::vector<int> seq;
  for (int r = 0; r < k; r += 2) seq.push_back(r);
  for (int r = 1; r < k; r += 2) seq.push_back(r);
  std::vector<std::pair<int, int>> out;
  balanced_tree_edges(seq, 0, k - 1, out);
  std::vector<int> shifted(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) shifted[i] = (seq[i] + 1) % k;
  balanced_tree_edges(shifted, 0, k - 1, out);
  return out;
}

}  // namespace detail

// Builds the communication graph: inter-stage edges between every replica
// pair of consecutive stages, plus ring or double-binary-tree AllReduce
// edges inside each replicated stage.
inline JobGraph build_job_graph(const JobSpec& job) {
  job.check_stage_data_identity();
  JobGraph graph;
  std::vector<int> first_vertex(job.stages.size());  // per-stage vertex offset
  for (std::size_t s = 0; s < job.stages.size(); ++s) {
    first_vertex[s] = static_cast<int>(graph.vertices.size());
    for (int r = 0; r < job.stages[s].replicas; ++r)
      graph.vertices.push_back({static_cast<int>(s), r});
  }

  std::map<std::pair<int, int>, double> acc;  // (u,v) u<v -> summed weight
  auto add = [&acc](int a, int b, double w) {
    if (a > b) std::swap(a, b);
    acc[{a, b}] += w;
  };

  for (std::size_t s = 1; s < job.stages.size(); ++s) {
    const int k_prev = job.stages[s - 1].replicas;
    const int k_cur = job.stages[s].replicas;
    const double w = 2.0 * job.stages[s - 1].data_out / k_cur;
    if (w <= 0.0) continue;
    for (int a = 0; a < k_prev; ++a)
      for (int b = 0; b < k_cur; ++b)
        add(first_vertex[s - 1] + a, first_vertex[s] + b, w);
  }

  for (std::size_t s = 0; s < job.stages.size(); ++s) {
    const auto& st = job.stages[s];
    const int k = st.replicas;
    if (k < 2 || st.param_size <= 0.0) continue;
    if (st.allreduce == AllreduceKind::Ring) {
      // Ring edge weight 2(k-1)h/k. The ring of 2 has a single link, so the
      // degenerate pair is emitted once (matches the 2(k-1)h/k pair total).
      const double w = 2.0 * (k - 1) * st.param_size / k;
      if (k == 2) {
        add(first_vertex[s], first_vertex[s] + 1, w);
      } else {
        for (int r = 0; r < k; ++r)
          add(first_vertex[s] + r, first_vertex[s] + (r + 1) % k, w);
      }
    } else {
      // Each of the two trees carries half the data: (k-1)h/k per tree edge.
      const double w = (k - 1) * st.param_size / k;
      for (auto [a, b] : detail::double_binary_tree_edges(k))
        add(first_vertex[s] + a, first_vertex[s] + b, w);
    }
  }

  for (const auto& [key, w] : acc) graph.edges.push_back({key.first, key.second, w});
  return graph;
}

}  // namespace dlsched
