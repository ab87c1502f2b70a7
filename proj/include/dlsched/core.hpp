#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dlsched {

// All byte quantities are decimal: 1 MB = 1e6 bytes, 1 Gbps = 1.25e8 bytes/s.
// Times are seconds unless a variable is explicitly a slot index.

enum class AllreduceKind { Ring, Tree };

inline const char* to_string(AllreduceKind k) {
  return k == AllreduceKind::Ring ? "ring" : "tree";
}

struct ClusterConfig {
  int num_servers = 1;       // M
  int gpus_per_server = 1;   // g
  double slot_length = 1.0;  // seconds per time-slot
  double b_inter = 1.25e9;   // server NIC, bytes/s, bidirectional
  double b_intra = 3.0e11;   // intra-server GPU link, bytes/s

  int total_gpus() const { return num_servers * gpus_per_server; }

  void validate() const {
    if (num_servers < 1) throw std::invalid_argument("cluster: num_servers < 1");
    if (gpus_per_server < 1) throw std::invalid_argument("cluster: gpus_per_server < 1");
    if (slot_length <= 0) throw std::invalid_argument("cluster: slot_length <= 0");
    if (b_inter <= 0) throw std::invalid_argument("cluster: b_inter <= 0");
    if (b_intra < b_inter) throw std::invalid_argument("cluster: b_intra < b_inter");
  }
};

struct StageProfile {
  double fp_time = 0.0;    // seconds, forward pass of one mini-batch
  double bp_time = 0.0;    // seconds, backward pass
  double data_in = 0.0;    // bytes per iteration per replica (activations in)
  double data_out = 0.0;   // bytes per iteration per replica (activations out)
  double param_size = 0.0; // bytes of trainable parameters
  int replicas = 1;        // data-parallel replicas = GPUs for this stage
  AllreduceKind allreduce = AllreduceKind::Ring;
  // Overlap coefficients for engines that overlap AllReduce with backward
  // compute; 1.0 means no overlap.
  double bp_coeff = 1.0;
  double allreduce_coeff = 1.0;
};

struct JobSpec {
  int job_id = 0;
  std::int64_t group_id = 0;  // recurrence key
  std::int64_t user_id = 0;
  std::int64_t arrival_slot = 0;      // r
  std::int64_t true_iterations = 1;   // n; hidden from the scheduler until completion
  std::vector<StageProfile> stages;

  int required_gpus() const {
    int total = 0;
    for (const auto& st : stages) total += st.replicas;
    return total;
  }

  // Each replica pair of consecutive stages exchanges 2*d_out[s-1]/k[s]
  // == 2*d_in[s]/k[s-1] bytes; profiles breaking that identity beyond 1e-9
  // relative tolerance are rejected.
  void check_stage_data_identity() const {
    for (std::size_t s = 1; s < stages.size(); ++s) {
      const double lhs = 2.0 * stages[s - 1].data_out / stages[s].replicas;
      const double rhs = 2.0 * stages[s].data_in / stages[s - 1].replicas;
      const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
      if (std::abs(lhs - rhs) > 1e-9 * scale)
        throw std::invalid_argument(err("inter-stage data identity violated at stage " + std::to_string(s)));
    }
  }

  void validate(const ClusterConfig& cluster) const {
    if (arrival_slot < 0) throw std::invalid_argument(err("arrival_slot < 0"));
    if (true_iterations < 1) throw std::invalid_argument(err("true_iterations < 1"));
    if (stages.empty()) throw std::invalid_argument(err("no stages"));
    for (const auto& st : stages) {
      if (st.fp_time < 0 || st.bp_time < 0) throw std::invalid_argument(err("negative compute time"));
      if (st.data_in < 0 || st.data_out < 0 || st.param_size < 0)
        throw std::invalid_argument(err("negative data size"));
      if (st.replicas < 1) throw std::invalid_argument(err("replicas < 1"));
    }
    if (required_gpus() > cluster.total_gpus())
      throw std::invalid_argument(err("needs more GPUs than the cluster has"));
    check_stage_data_identity();
  }

 private:
  std::string err(const std::string& what) const {
    return "job " + std::to_string(job_id) + ": " + what;
  }
};

inline int required_gpus(const JobSpec& job) { return job.required_gpus(); }

struct Placement {
  // gpu_counts[server][stage] = GPUs on that server hosting that stage.
  std::vector<std::vector<int>> gpu_counts;
  double alpha = 0.0;  // seconds per iteration once computed

  int at(int server, int stage) const { return gpu_counts[server][stage]; }

  int gpus_on_server(int server) const {
    const auto& row = gpu_counts[server];
    return std::accumulate(row.begin(), row.end(), 0);
  }

  int total_gpus() const {
    int total = 0;
    for (std::size_t m = 0; m < gpu_counts.size(); ++m) total += gpus_on_server(static_cast<int>(m));
    return total;
  }

  static Placement zeros(int num_servers, int num_stages) {
    Placement p;
    p.gpu_counts.assign(num_servers, std::vector<int>(num_stages, 0));
    return p;
  }
};

struct ScheduleRecord {
  int job_id = 0;
  std::int64_t start_slot = 0;  // t_i
  Placement placement;
  double completion = 0.0;             // seconds: start_slot*slot_length + n*alpha
  std::int64_t occupancy_slots = 0;    // ceil(n*alpha / slot_length)
};

struct Violation {
  int constraint = 0;  // 1: start before arrival, 2: replica conservation, 3: server capacity
  int job_id = -1;
  int server = -1;
  std::int64_t slot = -1;
  std::string detail;
};

// Checks constraints (1)-(3) over a complete schedule. Feasible -> nullopt.
inline std::optional<Violation> validate_schedule(const std::vector<ScheduleRecord>& records,
                                                  const std::vector<JobSpec>& jobs,
                                                  const ClusterConfig& cluster) {
  std::vector<const JobSpec*> by_id;
  for (const auto& j : jobs) {
    if (j.job_id >= static_cast<int>(by_id.size())) by_id.resize(j.job_id + 1, nullptr);
    by_id[j.job_id] = &j;
  }
  std::int64_t horizon = 0;
  for (const auto& rec : records) {
    const JobSpec* job = rec.job_id < static_cast<int>(by_id.size()) ? by_id[rec.job_id] : nullptr;
    if (!job) return Violation{2, rec.job_id, -1, -1, "record for unknown job"};
    if (rec.start_slot < job->arrival_slot)
      return Violation{1, rec.job_id, -1, rec.start_slot, "started before arrival"};
    for (std::size_t s = 0; s < job->stages.size(); ++s) {
      int allocated = 0;
      for (const auto& row : rec.placement.gpu_counts) {
        if (s < row.size()) {
          if (row[s] < 0 || row[s] > cluster.gpus_per_server)
            return Violation{2, rec.job_id, -1, -1, "per-server count out of range"};
          allocated += row[s];
        }
      }
      if (allocated != job->stages[s].replicas)
        return Violation{2, rec.job_id, -1, -1, "stage " + std::to_string(s) + " replicas not conserved"};
    }
    horizon = std::max(horizon, rec.start_slot + rec.occupancy_slots);
  }
  // Constraint (3): sweep per-server occupancy over slot boundaries.
  std::vector<std::vector<std::pair<std::int64_t, int>>> deltas(cluster.num_servers);
  for (const auto& rec : records) {
    for (int m = 0; m < cluster.num_servers && m < static_cast<int>(rec.placement.gpu_counts.size()); ++m) {
      const int used = rec.placement.gpus_on_server(m);
      if (used == 0) continue;
      deltas[m].push_back({rec.start_slot, used});
      deltas[m].push_back({rec.start_slot + rec.occupancy_slots, -used});
    }
  }
  for (int m = 0; m < cluster.num_servers; ++m) {
    auto& d = deltas[m];
    std::sort(d.begin(), d.end());
    int busy = 0;
    for (std::size_t k = 0; k < d.size(); ++k) {
      busy += d[k].second;
      const bool boundary = (k + 1 == d.size()) || d[k + 1].first != d[k].first;
      if (boundary && busy > cluster.gpus_per_server) {
        // Attribute the overflow to some job active at that slot.
        for (const auto& rec : records) {
          if (rec.start_slot <= d[k].first && d[k].first < rec.start_slot + rec.occupancy_slots &&
              rec.placement.gpus_on_server(m) > 0)
            return Violation{3, rec.job_id, m, d[k].first, "server over capacity"};
        }
        return Violation{3, -1, m, d[k].first, "server over capacity"};
      }
    }
  }
  return std::nullopt;
}

}  // namespace dlsched
