#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dlsched/core.hpp"
#include "dlsched/iteration_time.hpp"

namespace dlsched {

// Every placement satisfying replica conservation with per-server totals
// within capacity, alpha filled in. Placement count grows combinatorially;
// meant for oracle-sized jobs only.
inline std::vector<Placement> enumerate_placements(const JobSpec& job, const ClusterConfig& cluster) {
  const int num_stages = static_cast<int>(job.stages.size());
  const int M = cluster.num_servers;
  const int g = cluster.gpus_per_server;

  // compositions of k into M parts, each part <= g
  auto compositions = [&](int k) {
    std::vector<std::vector<int>> result;
    std::vector<int> cur(M, 0);
    auto rec = [&](auto&& self, int m, int left) -> void {
      if (m == M - 1) {
        if (left <= g) {
          cur[m] = left;
          result.push_back(cur);
        }
        return;
      }
      for (int take = 0; take <= std::min(left, g); ++take) {
        cur[m] = take;
        self(self, m + 1, left - take);
      }
    };
    rec(rec, 0, k);
    return result;
  };

  std::vector<std::vector<std::vector<int>>> per_stage;
  for (int s = 0; s < num_stages; ++s) per_stage.push_back(compositions(job.stages[s].replicas));

  std::vector<Placement> placements;
  Placement cur = Placement::zeros(M, num_stages);
  auto rec = [&](auto&& self, int s) -> void {
    if (s == num_stages) {
      for (int m = 0; m < M; ++m)
        if (cur.gpus_on_server(m) > g) return;
      Placement p = cur;
      p.alpha = iteration_time(job, p, cluster);
      placements.push_back(std::move(p));
      return;
    }
    for (const auto& comp : per_stage[s]) {
      for (int m = 0; m < M; ++m) cur.gpu_counts[m][s] = comp[m];
      self(self, s + 1);
    }
  };
  rec(rec, 0);
  return placements;
}

// True minimum per-iteration time over all placements (empty cluster).
inline double exact_min_alpha(const JobSpec& job, const ClusterConfig& cluster) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : enumerate_placements(job, cluster)) best = std::min(best, p.alpha);
  return best;
}

struct OracleResult {
  double total_completion = 0.0;
  std::vector<ScheduleRecord> schedule;
};

// Exhaustive optimal non-preemptive schedule with branch-and-bound over
// (start slot, placement) per job. Intended for instances of at most ~4
// jobs on a 2x2 cluster; throws beyond 5 jobs.
inline OracleResult brute_force_schedule(const std::vector<JobSpec>& jobs, const ClusterConfig& cluster) {
  if (jobs.size() > 5) throw std::invalid_argument("brute_force_schedule: too many jobs");
  const int M = cluster.num_servers;
  const int g = cluster.gpus_per_server;
  const double slot_len = cluster.slot_length;

  std::vector<const JobSpec*> order;
  for (const auto& j : jobs) order.push_back(&j);
  std::sort(order.begin(), order.end(), [](const JobSpec* a, const JobSpec* b) {
    if (a->arrival_slot != b->arrival_slot) return a->arrival_slot < b->arrival_slot;
    return a->job_id < b->job_id;
  });

  struct Option {
    Placement placement;
    std::int64_t occupancy;
    double run_seconds;
  };
  std::vector<std::vector<Option>> options(order.size());
  std::vector<double> min_run(order.size());
  std::int64_t max_occ_total = 0;
  std::int64_t max_arrival = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::int64_t worst_occ = 0;
    double best_run = std::numeric_limits<double>::infinity();
    for (auto& p : enumerate_placements(*order[i], cluster)) {
      const double run = order[i]->true_iterations * p.alpha;
      const auto occ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(run / slot_len)));
      options[i].push_back({std::move(p), occ, run});
      worst_occ = std::max(worst_occ, occ);
      best_run = std::min(best_run, run);
    }
    // cheaper placements first: lets the bound bite earlier
    std::sort(options[i].begin(), options[i].end(),
              [](const Option& a, const Option& b) { return a.run_seconds < b.run_seconds; });
    min_run[i] = best_run;
    max_occ_total += worst_occ;
    max_arrival = std::max(max_arrival, order[i]->arrival_slot);
  }
  const std::int64_t horizon = max_arrival + max_occ_total + 1;

  std::vector<std::vector<int>> used(horizon + 1, std::vector<int>(M, 0));
  std::vector<ScheduleRecord> current(order.size());
  OracleResult best;
  best.total_completion = std::numeric_limits<double>::infinity();

  std::vector<double> suffix_lb(order.size() + 1, 0.0);
  for (int i = static_cast<int>(order.size()) - 1; i >= 0; --i)
    suffix_lb[i] = suffix_lb[i + 1] + order[i]->arrival_slot * slot_len + min_run[i];

  auto fits = [&](const Placement& p, std::int64_t start, std::int64_t occ) {
    for (std::int64_t t = start; t < start + occ; ++t)
      for (int m = 0; m < M; ++m)
        if (used[t][m] + p.gpus_on_server(m) > g) return false;
    return true;
  };
  auto apply = [&](const Placement& p, std::int64_t start, std::int64_t occ, int sign) {
    for (std::int64_t t = start; t < start + occ; ++t)
      for (int m = 0; m < M; ++m) used[t][m] += sign * p.gpus_on_server(m);
  };

  auto rec = [&](auto&& self, std::size_t i, double partial) -> void {
    if (partial + suffix_lb[i] >= best.total_completion) return;
    if (i == order.size()) {
      best.total_completion = partial;
      best.schedule = current;
      return;
    }
    const JobSpec& job = *order[i];
    for (std::int64_t start = job.arrival_slot; start <= horizon; ++start) {
      const double start_s = start * slot_len;
      if (partial + start_s + min_run[i] + suffix_lb[i + 1] >= best.total_completion)
        break;  // later starts only cost more
      for (const auto& opt : options[i]) {
        if (start + opt.occupancy > horizon) continue;
        const double completion = start_s + opt.run_seconds;
        if (partial + completion + suffix_lb[i + 1] >= best.total_completion) continue;
        if (!fits(opt.placement, start, opt.occupancy)) continue;
        apply(opt.placement, start, opt.occupancy, +1);
        current[i] = {job.job_id, start, opt.placement, completion, opt.occupancy};
        self(self, i + 1, partial + completion);
        apply(opt.placement, start, opt.occupancy, -1);
      }
    }
  };
  rec(rec, 0, 0.0);
  return best;
}

}  // namespace dlsched
