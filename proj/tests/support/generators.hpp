#pragma once

#include <random>
#include <vector>

#include "dlsched/core.hpp"

// Random but always-valid instances for property tests and fuzzing.
namespace testgen {

struct JobParams {
  int max_stages = 3;
  int max_replicas = 3;
  int max_gpus = 8;            // cap on the job's total GPUs
  double min_compute = 0.002;  // seconds per fp pass
  double max_compute = 0.02;
  double max_activation = 50e6;  // bytes
  double max_params = 400e6;     // bytes
  double comm_probability = 0.7;
  std::int64_t max_iterations = 20;
};

inline dlsched::JobSpec random_job(std::mt19937_64& rng, const JobParams& p = {}) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  dlsched::JobSpec job;
  const int num_stages = 1 + static_cast<int>(uniform(rng) * p.max_stages) % p.max_stages;
  int budget = p.max_gpus;
  for (int s = 0; s < num_stages && budget > 0; ++s) {
    dlsched::StageProfile st;
    st.replicas = 1 + static_cast<int>(uniform(rng) * std::min(p.max_replicas, budget)) %
                          std::min(p.max_replicas, budget);
    budget -= st.replicas;
    st.fp_time = p.min_compute + uniform(rng) * (p.max_compute - p.min_compute);
    st.bp_time = 2.0 * st.fp_time;
    if (uniform(rng) < p.comm_probability) st.param_size = uniform(rng) * p.max_params;
    st.allreduce = uniform(rng) < 0.5 ? dlsched::AllreduceKind::Ring : dlsched::AllreduceKind::Tree;
    job.stages.push_back(st);
  }
  for (std::size_t s = 0; s + 1 < job.stages.size(); ++s) {
    if (uniform(rng) < p.comm_probability) job.stages[s].data_out = uniform(rng) * p.max_activation;
    job.stages[s + 1].data_in =
        job.stages[s].replicas * job.stages[s].data_out / job.stages[s + 1].replicas;
  }
  job.true_iterations = 1 + static_cast<std::int64_t>(uniform(rng) * p.max_iterations);
  return job;
}

inline std::vector<dlsched::JobSpec> random_workload(std::mt19937_64& rng, int count,
                                                     std::int64_t arrival_span,
                                                     const JobParams& p = {}) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<dlsched::JobSpec> jobs;
  for (int i = 0; i < count; ++i) {
    dlsched::JobSpec job = random_job(rng, p);
    job.job_id = i;
    job.group_id = i % 5;
    job.user_id = i % 3;
    job.arrival_slot = static_cast<std::int64_t>(uniform(rng) * (arrival_span + 1));
    jobs.push_back(std::move(job));
  }
  return jobs;
}

}  // namespace testgen
