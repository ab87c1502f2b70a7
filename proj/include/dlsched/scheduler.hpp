#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlsched/core.hpp"
#include "dlsched/event_log.hpp"
#include "dlsched/iteration_time.hpp"

namespace dlsched {

enum class Policy { Asrpt, Spjf, Spwf, WcsDuration, WcsWorkload, WcsSubTime };

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::Asrpt: return "ASRPT";
    case Policy::Spjf: return "SPJF";
    case Policy::Spwf: return "SPWF";
    case Policy::WcsDuration: return "WCS_DURATION";
    case Policy::WcsWorkload: return "WCS_WORKLOAD";
    case Policy::WcsSubTime: return "WCS_SUBTIME";
  }
  return "?";
}

inline Policy parse_policy(const std::string& name) {
  if (name == "ASRPT") return Policy::Asrpt;
  if (name == "SPJF") return Policy::Spjf;
  if (name == "SPWF") return Policy::Spwf;
  if (name == "WCS_DURATION") return Policy::WcsDuration;
  if (name == "WCS_WORKLOAD") return Policy::WcsWorkload;
  if (name == "WCS_SUBTIME") return Policy::WcsSubTime;
  throw std::invalid_argument("unknown policy: " + name);
}

inline const std::vector<Policy>& all_policies() {
  static const std::vector<Policy> p = {Policy::Asrpt,       Policy::Spjf,        Policy::Spwf,
                                        Policy::WcsDuration, Policy::WcsWorkload, Policy::WcsSubTime};
  return p;
}

struct SchedulerConfig {
  Policy policy = Policy::Asrpt;
  double comm_heavy_threshold = 1.5;
  double tau = 1.0;  // delay factor; 0 starts heavy jobs immediately

  void validate() const {
    if (comm_heavy_threshold <= 1.0) throw std::invalid_argument("comm_heavy_threshold must be > 1");
    if (tau < 0.0) throw std::invalid_argument("tau must be >= 0");
  }
};

inline bool is_comm_heavy(double alpha_worst, double alpha_best_est, double threshold) {
  return alpha_worst / alpha_best_est >= threshold;
}

// Per-server free GPU counts during simulation.
struct ClusterState {
  std::vector<int> free_gpus;

  explicit ClusterState(const ClusterConfig& cluster = ClusterConfig{})
      : free_gpus(cluster.num_servers, cluster.gpus_per_server) {}

  int total_free() const {
    int total = 0;
    for (int f : free_gpus) total += f;
    return total;
  }
};

// Everything the scheduler may know about an admitted job. The true
// iteration count is deliberately absent.
struct PendingJob {
  const JobSpec* spec = nullptr;
  std::int64_t predicted_iters = 0;
  double alpha_best = 0.0;   // consolidated estimate
  double alpha_worst = 0.0;  // spread-out estimate
  bool comm_heavy = false;

  double predicted_duration() const { return static_cast<double>(predicted_iters) * alpha_best; }
  double predicted_workload() const { return spec->required_gpus() * predicted_duration(); }
};

struct StartAction {
  int job_id = 0;
  Placement placement;
};

namespace detail {

// Pick servers covering `needed` GPUs: full availability from each chosen
// server, remainder from the last. most_available_first consolidates onto
// emptier servers; the opposite packs fragmented ones.
inline std::vector<ServerShare> select_servers(const ClusterState& state, int needed,
                                               bool most_available_first) {
  std::vector<int> order;
  for (int m = 0; m < static_cast<int>(state.free_gpus.size()); ++m)
    if (state.free_gpus[m] > 0) order.push_back(m);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (state.free_gpus[a] != state.free_gpus[b])
      return most_available_first ? state.free_gpus[a] > state.free_gpus[b]
                                  : state.free_gpus[a] < state.free_gpus[b];
    return a < b;
  });
  std::vector<ServerShare> slots;
  int left = needed;
  for (int m : order) {
    if (left == 0) break;
    const int take = std::min(state.free_gpus[m], left);
    slots.push_back({m, take});
    left -= take;
  }
  if (left != 0) throw std::logic_error("select_servers: not enough free GPUs");
  return slots;
}

inline Placement map_job(const JobSpec& job, const std::vector<ServerShare>& slots,
                         const ClusterConfig& cluster) {
  const JobGraph graph = build_job_graph(job);
  const GraphPartition part = heavy_edge_partition(graph, slots);
  Placement placement =
      to_placement(graph, part, cluster.num_servers, static_cast<int>(job.stages.size()));
  placement.alpha = iteration_time(job, placement, cluster);
  return placement;
}

inline std::string placement_detail(const Placement& p, double ratio) {
  std::ostringstream out;
  out << "servers=";
  bool first = true;
  for (std::size_t m = 0; m < p.gpu_counts.size(); ++m) {
    const int used = p.gpus_on_server(static_cast<int>(m));
    if (used == 0) continue;
    if (!first) out << '+';
    out << m << ':' << used;
    first = false;
  }
  out << " alpha=" << p.alpha << " ratio=" << ratio;
  return out.str();
}

}  // namespace detail

// A-SRPT and the five baselines. One instance drives one simulation; the
// engine feeds arrivals (and, for A-SRPT, virtual-machine completions) and
// calls step() once per slot after completions have freed their GPUs.
class Scheduler {
 public:
  Scheduler(SchedulerConfig config, ClusterConfig cluster)
      : config_(config), cluster_(cluster) {
    config_.validate();
    cluster_.validate();
  }

  void admit(const PendingJob& job) {
    jobs_[job.spec->job_id] = job;
    if (config_.policy != Policy::Asrpt) available_.push_back(job.spec->job_id);
  }

  // A-SRPT only: jobs enter the pending queue in virtual completion order.
  void on_virtual_completion(int job_id) {
    if (config_.policy == Policy::Asrpt) queue_.push_back(job_id);
  }

  void step(std::int64_t slot, ClusterState& state, std::vector<StartAction>& actions, EventLog* log) {
    if (config_.policy == Policy::Asrpt)
      asrpt_step(slot, state, actions, log);
    else
      baseline_step(slot, state, actions, log);
  }

 private:
  struct DelayedJob {
    int job_id = 0;
    double kappa = 0.0;  // best alpha seen so far
    std::int64_t window_end = 0;
  };

  void start_job(std::int64_t slot, PendingJob& job, Placement placement, ClusterState& state,
                 std::vector<StartAction>& actions, EventLog* log) {
    for (std::size_t m = 0; m < placement.gpu_counts.size(); ++m) {
      const int used = placement.gpus_on_server(static_cast<int>(m));
      state.free_gpus[m] -= used;
      if (state.free_gpus[m] < 0) throw std::logic_error("scheduler oversubscribed a server");
    }
    const double ratio = placement.alpha / job.alpha_best;
    if (log) log->log(slot, "start", job.spec->job_id, detail::placement_detail(placement, ratio));
    actions.push_back({job.spec->job_id, std::move(placement)});
  }

  void asrpt_step(std::int64_t slot, ClusterState& state, std::vector<StartAction>& actions,
                  EventLog* log) {
    if (delayed_) {
      PendingJob& job = jobs_.at(delayed_->job_id);
      auto slots = detail::select_servers(state, job.spec->required_gpus(), true);
      Placement placement = detail::map_job(*job.spec, slots, cluster_);
      if (placement.alpha < delayed_->kappa || slot >= delayed_->window_end) {
        start_job(slot, job, std::move(placement), state, actions, log);
        delayed_.reset();
      } else {
        if (log)
          log->log(slot, "delay", job.spec->job_id,
                   "alpha=" + std::to_string(placement.alpha) + " kappa=" + std::to_string(delayed_->kappa));
        return;  // the delay loop holds the scheduler for this slot
      }
    }

    while (!queue_.empty()) {
      PendingJob& job = jobs_.at(queue_.front());
      const int needed = job.spec->required_gpus();
      if (needed > state.total_free()) break;  // head-of-line blocking
      queue_.pop_front();

      if (job.comm_heavy) {
        auto slots = detail::select_servers(state, needed, true);
        Placement placement = detail::map_job(*job.spec, slots, cluster_);
        if (placement.alpha / job.alpha_best <= config_.comm_heavy_threshold) {
          start_job(slot, job, std::move(placement), state, actions, log);
        } else {
          const double window_seconds = config_.tau *
                                        (static_cast<double>(needed) / cluster_.total_gpus()) *
                                        static_cast<double>(job.predicted_iters) * job.alpha_best;
          const std::int64_t window_slots =
              static_cast<std::int64_t>(std::ceil(window_seconds / cluster_.slot_length));
          if (window_slots <= 0) {
            // empty delay window: start now with the consolidating placement
            start_job(slot, job, std::move(placement), state, actions, log);
          } else {
            delayed_ = DelayedJob{job.spec->job_id, placement.alpha, slot + window_slots};
            if (log)
              log->log(slot, "delay_open", job.spec->job_id,
                       "kappa=" + std::to_string(placement.alpha) + " window=" +
                           std::to_string(window_slots));
            return;
          }
        }
      } else {
        auto slots = detail::select_servers(state, needed, false);
        Placement placement = detail::map_job(*job.spec, slots, cluster_);
        start_job(slot, job, std::move(placement), state, actions, log);
      }
    }
  }

  double sort_key(const PendingJob& job) const {
    switch (config_.policy) {
      case Policy::Spjf:
      case Policy::WcsDuration: return job.predicted_duration();
      case Policy::Spwf:
      case Policy::WcsWorkload: return job.predicted_workload();
      case Policy::WcsSubTime: return static_cast<double>(job.spec->arrival_slot);
      default: return 0.0;
    }
  }

  void baseline_step(std::int64_t slot, ClusterState& state, std::vector<StartAction>& actions,
                     EventLog* log) {
    (void)slot;
    std::stable_sort(available_.begin(), available_.end(), [&](int a, int b) {
      const PendingJob& ja = jobs_.at(a);
      const PendingJob& jb = jobs_.at(b);
      const double ka = sort_key(ja), kb = sort_key(jb);
      if (ka != kb) return ka < kb;
      if (ja.spec->arrival_slot != jb.spec->arrival_slot)
        return ja.spec->arrival_slot < jb.spec->arrival_slot;
      return a < b;
    });

    const bool work_conserving =
        config_.policy == Policy::WcsDuration || config_.policy == Policy::WcsWorkload ||
        config_.policy == Policy::WcsSubTime;

    std::vector<int> still_waiting;
    bool blocked = false;
    for (std::size_t i = 0; i < available_.size(); ++i) {
      PendingJob& job = jobs_.at(available_[i]);
      const int needed = job.spec->required_gpus();
      if (!blocked && needed <= state.total_free()) {
        auto slots = detail::select_servers(state, needed, false);
        Placement placement = detail::map_job(*job.spec, slots, cluster_);
        start_job(slot, job, std::move(placement), state, actions, log);
      } else {
        still_waiting.push_back(available_[i]);
        if (!work_conserving) blocked = true;  // SPJF/SPWF stop at the first misfit
      }
    }
    available_ = std::move(still_waiting);
  }

  SchedulerConfig config_;
  ClusterConfig cluster_;
  std::map<int, PendingJob> jobs_;
  std::deque<int> queue_;        // A-SRPT pending queue, virtual completion order
  std::vector<int> available_;   // baselines: arrived, not yet started
  std::optional<DelayedJob> delayed_;
};

}  // namespace dlsched
