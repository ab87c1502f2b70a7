#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dlsched/core.hpp"
#include "dlsched/heavy_edge.hpp"
#include "dlsched/job_graph.hpp"

namespace dlsched {

// Per-iteration training-time model for asynchronous pipelines: the job runs
// at the speed of its slowest (server, stage) pair. Communication is split
// between the reserved NIC share (x/g)*B_inter for inter-server traffic and
// B_intra for co-located traffic.

inline double comp_time(const StageProfile& stage, int gpus_on_server) {
  if (gpus_on_server <= 0) return 0.0;
  return stage.fp_time + stage.bp_coeff * stage.bp_time;
}

// Inter-stage activation/gradient transfer time for one (server, stage) pair.
// First stage has no upstream input, last stage no downstream output.
inline double comm_time(const JobSpec& job, const Placement& placement, int server, int stage,
                        const ClusterConfig& cluster) {
  const int num_stages = static_cast<int>(job.stages.size());
  if (stage < 0 || stage >= num_stages) throw std::out_of_range("comm_time: stage out of range");
  const int x = placement.at(server, stage);
  if (x == 0) return 0.0;

  double inter_bytes = 0.0;  // through the NIC, scaled by this stage's replica count
  double intra_bytes = 0.0;
  if (stage > 0) {
    const auto& prev = job.stages[stage - 1];
    const int x_prev = placement.at(server, stage - 1);
    const double d_in = job.stages[stage].data_in;
    inter_bytes += 2.0 * d_in * (prev.replicas - x_prev) / prev.replicas;
    intra_bytes += 2.0 * d_in * x_prev / prev.replicas;
  }
  if (stage + 1 < num_stages) {
    const auto& next = job.stages[stage + 1];
    const int x_next = placement.at(server, stage + 1);
    const double d_out = job.stages[stage].data_out;
    inter_bytes += 2.0 * d_out * (next.replicas - x_next) / next.replicas;
    intra_bytes += 2.0 * d_out * x_next / next.replicas;
  }

  const double nic_share = (static_cast<double>(x) / cluster.gpus_per_server) * cluster.b_inter;
  return inter_bytes * x / nic_share + intra_bytes / cluster.b_intra;
}

// Gradient synchronization time for one stage on one server. The transfer is
// bottlenecked by the slowest link between replicas: the NIC share when any
// replica is remote, the intra-server fabric when all are local.
inline double allreduce_time(const StageProfile& stage, int gpus_on_server,
                             const ClusterConfig& cluster) {
  const int k = stage.replicas;
  if (gpus_on_server <= 0 || k <= 1) return 0.0;
  const double bytes = 2.0 * (k - 1) * stage.param_size / k;
  double t;
  if (gpus_on_server < k) {
    const double nic_share = (static_cast<double>(gpus_on_server) / cluster.gpus_per_server) * cluster.b_inter;
    t = bytes / nic_share;
  } else {
    t = bytes / cluster.b_intra;
  }
  return stage.allreduce_coeff * t;
}

struct StageTimes {
  double comp = 0.0;
  double comm = 0.0;
  double allreduce = 0.0;
  double beta() const { return comp + comm + allreduce; }
};

inline StageTimes stage_times(const JobSpec& job, const Placement& placement, int server, int stage,
                              const ClusterConfig& cluster) {
  StageTimes t;
  const int x = placement.at(server, stage);
  t.comp = comp_time(job.stages[stage], x);
  t.comm = comm_time(job, placement, server, stage, cluster);
  t.allreduce = allreduce_time(job.stages[stage], x, cluster);
  return t;
}

// Pipeline bottleneck: max over (server, stage) of comp + comm + allreduce.
inline double iteration_time(const JobSpec& job, const Placement& placement,
                             const ClusterConfig& cluster) {
  double worst = 0.0;
  const int num_servers = static_cast<int>(placement.gpu_counts.size());
  for (int m = 0; m < num_servers; ++m) {
    if (placement.gpus_on_server(m) == 0) continue;
    for (int s = 0; s < static_cast<int>(job.stages.size()); ++s) {
      if (placement.at(m, s) == 0) continue;
      worst = std::max(worst, stage_times(job, placement, m, s, cluster).beta());
    }
  }
  return worst;
}

struct AlphaBound {
  double seconds = 0.0;
  // False when the job needs more replicas than there are servers and the
  // one-replica-per-server spread had to wrap around.
  bool spread_exact = true;
};

// Worst-case per-iteration time: every replica alone on its own server, each
// with a 1/g NIC share. With fewer servers than replicas, falls back to
// round-robin and flags the estimate.
inline AlphaBound worst_case_alpha(const JobSpec& job, const ClusterConfig& cluster) {
  const int total = job.required_gpus();
  const int servers_used = std::min(total, cluster.num_servers);
  Placement spread = Placement::zeros(servers_used, static_cast<int>(job.stages.size()));
  int next = 0;
  for (int s = 0; s < static_cast<int>(job.stages.size()); ++s)
    for (int r = 0; r < job.stages[s].replicas; ++r) {
      spread.gpu_counts[next % servers_used][s] += 1;
      ++next;
    }
  return {iteration_time(job, spread, cluster), total <= cluster.num_servers};
}

struct AlphaEstimate {
  double seconds = 0.0;
  Placement placement;  // canonical fewest-servers placement, servers 0..ceil(g_i/g)-1
};

// Optimistic per-iteration time: the job packed onto the fewest possible idle
// servers with Heavy-Edge deciding which replicas share a server.
inline AlphaEstimate consolidated_alpha(const JobSpec& job, const ClusterConfig& cluster) {
  const int total = job.required_gpus();
  const int g = cluster.gpus_per_server;
  const int servers_used = (total + g - 1) / g;
  std::vector<ServerShare> slots;
  int left = total;
  for (int m = 0; m < servers_used; ++m) {
    const int take = std::min(g, left);
    slots.push_back({m, take});
    left -= take;
  }
  const JobGraph graph = build_job_graph(job);
  const GraphPartition part = heavy_edge_partition(graph, slots);
  Placement placement = to_placement(graph, part, servers_used, static_cast<int>(job.stages.size()));
  placement.alpha = iteration_time(job, placement, cluster);
  return {placement.alpha, std::move(placement)};
}

}  // namespace dlsched
