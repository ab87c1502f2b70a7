#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlsched/core.hpp"
#include "dlsched/csv.hpp"
#include "dlsched/iteration_time.hpp"
#include "dlsched/trace.hpp"

namespace dlsched {

// One distributed training configuration of a model: the per-stage profile
// a pipeline planner would hand us.
struct ModelConfig {
  std::string model;
  int config_id = 0;
  std::vector<StageProfile> stages;

  int total_gpus() const {
    int total = 0;
    for (const auto& st : stages) total += st.replicas;
    return total;
  }
};

struct Catalog {
  std::vector<ModelConfig> configs;

  int max_gpus() const {
    int best = 0;
    for (const auto& c : configs) best = std::max(best, c.total_gpus());
    return best;
  }

  void validate() const {
    if (configs.empty()) throw std::invalid_argument("catalog: empty");
    bool has_single = false;
    for (const auto& c : configs)
      if (c.total_gpus() == 1) has_single = true;
    if (!has_single) throw std::invalid_argument("catalog: needs at least one single-GPU configuration");
  }
};

namespace detail {

inline ModelConfig dp_config(const std::string& model, int id, double compute, double params, int k,
                             AllreduceKind kind) {
  ModelConfig cfg{model, id, {}};
  StageProfile st;
  st.fp_time = compute / k / 3.0;
  st.bp_time = compute / k * 2.0 / 3.0;
  st.param_size = params;
  st.replicas = k;
  st.allreduce = kind;
  cfg.stages.push_back(st);
  return cfg;
}

inline ModelConfig pipeline_config(const std::string& model, int id, double compute, double activations,
                                   double params, int num_stages, int k, AllreduceKind kind) {
  ModelConfig cfg{model, id, {}};
  for (int s = 0; s < num_stages; ++s) {
    StageProfile st;
    st.fp_time = compute / (num_stages * k) / 3.0;
    st.bp_time = compute / (num_stages * k) * 2.0 / 3.0;
    st.param_size = params / num_stages;
    st.replicas = k;
    st.allreduce = kind;
    st.data_in = s == 0 ? 0.0 : activations / k;
    st.data_out = s + 1 == num_stages ? 0.0 : activations / k;
    cfg.stages.push_back(st);
  }
  return cfg;
}

}  // namespace detail

// Synthetic stand-in for the profiled model roster: plausible compute,
// activation, and parameter scales per model, several configurations each.
// Real measurements can replace it through the catalog CSV.
inline Catalog builtin_catalog() {
  using detail::dp_config;
  using detail::pipeline_config;
  const auto ring = AllreduceKind::Ring;
  const auto tree = AllreduceKind::Tree;
  Catalog cat;
  auto add = [&cat](ModelConfig c) { cat.configs.push_back(std::move(c)); };

  // model, compute s/iter on one GPU, activations bytes, params bytes
  add(dp_config("vgg19", 0, 0.30, 576e6, 1, ring));
  add(dp_config("vgg19", 1, 0.30, 576e6, 2, ring));
  add(dp_config("vgg19", 2, 0.30, 576e6, 4, ring));
  add(pipeline_config("vgg19", 3, 0.30, 25e6, 576e6, 2, 2, ring));

  add(dp_config("resnet152", 0, 0.35, 240e6, 1, tree));
  add(dp_config("resnet152", 1, 0.35, 240e6, 2, tree));
  add(dp_config("resnet152", 2, 0.35, 240e6, 4, tree));

  add(dp_config("inception_v3", 0, 0.18, 96e6, 1, ring));
  add(dp_config("inception_v3", 1, 0.18, 96e6, 2, ring));
  add(dp_config("inception_v3", 2, 0.18, 96e6, 8, ring));

  add(dp_config("bert_large", 0, 0.40, 1.36e9, 1, tree));
  add(dp_config("bert_large", 1, 0.40, 1.36e9, 2, tree));
  add(pipeline_config("bert_large", 2, 0.40, 12e6, 1.36e9, 2, 2, tree));

  add(dp_config("xlnet_large", 0, 0.55, 2.2e9, 1, ring));
  add(pipeline_config("xlnet_large", 1, 0.55, 14e6, 2.2e9, 2, 2, ring));
  add(pipeline_config("xlnet_large", 2, 0.55, 14e6, 2.2e9, 3, 2, ring));

  add(pipeline_config("t5_11b", 0, 2.0, 40e6, 44e9, 4, 1, tree));
  add(pipeline_config("t5_11b", 1, 2.0, 40e6, 44e9, 4, 2, tree));
  add(pipeline_config("t5_11b", 2, 2.0, 40e6, 44e9, 8, 1, tree));

  add(pipeline_config("gpt_6.7b", 0, 1.5, 35e6, 26.8e9, 4, 1, tree));
  add(pipeline_config("gpt_6.7b", 1, 1.5, 35e6, 26.8e9, 3, 2, tree));

  add(pipeline_config("gpt_13b", 0, 2.2, 40e6, 52e9, 8, 1, tree));
  add(pipeline_config("gpt_13b", 1, 2.2, 40e6, 52e9, 6, 2, tree));

  add(pipeline_config("gpt_175b", 0, 6.0, 50e6, 700e9, 8, 1, tree));
  add(pipeline_config("gpt_175b", 1, 6.0, 50e6, 700e9, 16, 1, tree));

  cat.validate();
  return cat;
}

inline void save_catalog_csv(const Catalog& cat, std::ostream& out) {
  out << "model,config_id,stage,fp_time,bp_time,data_in,data_out,param_size,replicas,allreduce\n";
  for (const auto& cfg : cat.configs)
    for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
      const auto& st = cfg.stages[s];
      out << cfg.model << ',' << cfg.config_id << ',' << s << ',' << fmt_double(st.fp_time) << ','
          << fmt_double(st.bp_time) << ',' << fmt_double(st.data_in) << ',' << fmt_double(st.data_out)
          << ',' << fmt_double(st.param_size) << ',' << st.replicas << ',' << to_string(st.allreduce)
          << '\n';
    }
}

inline Catalog load_catalog_csv(std::istream& in) {
  Catalog cat;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("catalog: empty file");
  std::map<std::pair<std::string, int>, ModelConfig> by_key;
  std::vector<std::pair<std::string, int>> order;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw std::runtime_error("catalog line " + std::to_string(line_no) + ": want 10 fields");
    std::int64_t cfg_id = 0, stage_idx = 0, replicas = 0;
    StageProfile st;
    if (!parse_int(f[1], cfg_id) || !parse_int(f[2], stage_idx) || !parse_double(f[3], st.fp_time) ||
        !parse_double(f[4], st.bp_time) || !parse_double(f[5], st.data_in) ||
        !parse_double(f[6], st.data_out) || !parse_double(f[7], st.param_size) ||
        !parse_int(f[8], replicas))
      throw std::runtime_error("catalog line " + std::to_string(line_no) + ": bad field");
    st.replicas = static_cast<int>(replicas);
    const std::string kind = trim(f[9]);
    if (kind == "ring") st.allreduce = AllreduceKind::Ring;
    else if (kind == "tree") st.allreduce = AllreduceKind::Tree;
    else throw std::runtime_error("catalog line " + std::to_string(line_no) + ": allreduce must be ring|tree");
    const auto key = std::make_pair(trim(f[0]), static_cast<int>(cfg_id));
    if (by_key.find(key) == by_key.end()) {
      by_key[key] = ModelConfig{key.first, key.second, {}};
      order.push_back(key);
    }
    auto& stages = by_key[key].stages;
    if (static_cast<std::size_t>(stage_idx) != stages.size())
      throw std::runtime_error("catalog line " + std::to_string(line_no) + ": stages out of order");
    stages.push_back(st);
  }
  for (const auto& key : order) cat.configs.push_back(by_key[key]);
  cat.validate();
  return cat;
}

struct MaterializeOptions {
  double scale = 1.0;  // uniform scaling of arrivals and iteration counts
  std::optional<double> single_gpu_fraction;  // override the trace's single/multi mix
};

struct MaterializedJobs {
  std::vector<JobSpec> jobs;  // sorted by (arrival, job_id)
  std::map<std::string, std::int64_t> group_codes;
  std::map<std::string, std::int64_t> user_codes;
};

// Turns trace rows into JobSpecs: one model configuration per group, chosen
// once per seed and reused for every recurrence; iteration counts derived
// from the trace duration and the configuration's consolidated per-iteration
// time on the target cluster.
inline MaterializedJobs materialize_jobs(const std::vector<TraceRow>& rows, const Catalog& catalog,
                                         const ClusterConfig& cluster, const MaterializeOptions& options,
                                         std::uint64_t seed) {
  catalog.validate();
  cluster.validate();
  MaterializedJobs result;
  std::mt19937_64 rng(seed);

  std::vector<std::size_t> singles, multis;
  for (std::size_t c = 0; c < catalog.configs.size(); ++c)
    (catalog.configs[c].total_gpus() == 1 ? singles : multis).push_back(c);

  // group -> chosen configuration; decided on first appearance
  std::map<std::string, std::size_t> group_config;
  std::map<std::string, double> group_alpha;
  std::int64_t single_jobs = 0, seen_jobs = 0;

  auto pick_config = [&](const TraceRow& row) -> std::size_t {
    bool want_single = row.num_gpus == 1;
    if (options.single_gpu_fraction) {
      // deterministic quota tracking keeps the realized fraction tight
      const double target = *options.single_gpu_fraction;
      want_single = static_cast<double>(single_jobs) < target * static_cast<double>(seen_jobs + 1);
    }
    if (want_single) {
      std::uniform_int_distribution<std::size_t> pick(0, singles.size() - 1);
      return singles[pick(rng)];
    }
    const int limit = options.single_gpu_fraction
                          ? std::min(catalog.max_gpus(), cluster.total_gpus())
                          : row.num_gpus;
    if (!options.single_gpu_fraction && row.num_gpus > catalog.max_gpus())
      throw std::runtime_error("group " + row.group_id + " requires " + std::to_string(row.num_gpus) +
                               " GPUs, more than any catalog configuration provides");
    std::vector<std::size_t> candidates;
    for (auto c : multis)
      if (catalog.configs[c].total_gpus() <= limit) candidates.push_back(c);
    if (candidates.empty()) {
      // nothing multi fits under the limit; fall back to a single-GPU config
      std::uniform_int_distribution<std::size_t> pick(0, singles.size() - 1);
      return singles[pick(rng)];
    }
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng)];
  };

  std::vector<const TraceRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const TraceRow* a, const TraceRow* b) {
    if (a->submit_time != b->submit_time) return a->submit_time < b->submit_time;
    return a->job_id < b->job_id;
  });

  int next_job_id = 0;
  for (const TraceRow* row : sorted) {
    if (group_config.find(row->group_id) == group_config.end()) {
      const std::size_t cfg = pick_config(*row);
      group_config[row->group_id] = cfg;
      JobSpec probe;
      probe.stages = catalog.configs[cfg].stages;
      group_alpha[row->group_id] = consolidated_alpha(probe, cluster).seconds;
    }
    const std::size_t cfg = group_config[row->group_id];
    if (catalog.configs[cfg].total_gpus() == 1) ++single_jobs;
    ++seen_jobs;

    JobSpec job;
    job.job_id = next_job_id++;
    if (result.group_codes.find(row->group_id) == result.group_codes.end())
      result.group_codes[row->group_id] = static_cast<std::int64_t>(result.group_codes.size());
    if (result.user_codes.find(row->user_id) == result.user_codes.end())
      result.user_codes[row->user_id] = static_cast<std::int64_t>(result.user_codes.size());
    job.group_id = result.group_codes[row->group_id];
    job.user_id = result.user_codes[row->user_id];
    job.stages = catalog.configs[cfg].stages;
    job.arrival_slot =
        static_cast<std::int64_t>(row->submit_time * options.scale / cluster.slot_length);
    const double alpha = group_alpha[row->group_id];
    std::int64_t iters = std::max<std::int64_t>(1, std::llround(row->duration / alpha));
    if (options.scale != 1.0)
      iters = std::max<std::int64_t>(1, std::llround(static_cast<double>(iters) * options.scale));
    job.true_iterations = iters;
    result.jobs.push_back(std::move(job));
  }
  return result;
}

struct SyntheticParams {
  int num_jobs = 1000;
  double single_gpu_fraction = 0.7;
  double arrival_rate = 0.1;           // jobs per second, exponential interarrivals
  double heavy_group_fraction = 0.65;  // fraction of groups submitted >= 5 times
  double mean_duration = 300.0;        // seconds
  double duration_sigma = 0.6;         // lognormal sigma across groups
  double outlier_fraction = 0.02;      // right-tail rows within a group
  int max_multi_gpus = 8;
};

// Reproducible workload with controllable single-GPU share and group
// recurrence. Durations carry per-(group, user) structure plus occasional
// outliers so the prediction baselines separate.
inline std::vector<TraceRow> generate_synthetic(const SyntheticParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  struct Row {
    std::string group, user;
    int gpus;
    double duration;
  };
  std::vector<Row> rows;
  rows.reserve(params.num_jobs);

  const int multi_sizes[] = {2, 3, 4, 6, 8, 12, 16};
  const double multi_weights[] = {0.30, 0.15, 0.25, 0.12, 0.10, 0.05, 0.03};
  std::discrete_distribution<int> pick_size(std::begin(multi_weights), std::end(multi_weights));
  const double user_mults[] = {0.7, 1.0, 1.4, 2.0};

  std::int64_t single_jobs = 0;
  int group_no = 0;
  while (static_cast<int>(rows.size()) < params.num_jobs) {
    const int remaining = params.num_jobs - static_cast<int>(rows.size());
    int size;
    if (uniform(rng) < params.heavy_group_fraction)
      size = 5 + static_cast<int>(uniform(rng) * 8);  // 5..12
    else
      size = 1 + static_cast<int>(uniform(rng) * 4);  // 1..4
    size = std::min(size, remaining);

    const bool single =
        static_cast<double>(single_jobs) <
        params.single_gpu_fraction * static_cast<double>(rows.size() + size);
    int gpus = 1;
    if (!single) {
      do {
        gpus = multi_sizes[pick_size(rng)];
      } while (gpus > params.max_multi_gpus);
    }

    const std::string group = "g" + std::to_string(group_no);
    const std::string primary_user = "u" + std::to_string(group_no % 41);
    const std::string secondary_user = "u" + std::to_string((group_no * 13 + 7) % 41);
    std::lognormal_distribution<double> base_dist(std::log(params.mean_duration), params.duration_sigma);
    const double base = base_dist(rng);
    // users rerun the same job with very different iteration budgets; the
    // (group, user) pair pins the duration much tighter than the group alone
    const double primary_mult = user_mults[static_cast<int>(uniform(rng) * 4) % 4];
    const double secondary_mult = primary_mult * (uniform(rng) < 0.5 ? 2.5 : 4.0);

    for (int j = 0; j < size; ++j) {
      const bool secondary = uniform(rng) < 0.25;
      const double mult = secondary ? secondary_mult : primary_mult;
      double duration = base * mult * std::exp((uniform(rng) - 0.5) * 0.08);
      if (uniform(rng) < params.outlier_fraction) duration *= 4.0;
      rows.push_back({group, secondary ? secondary_user : primary_user, gpus, duration});
      if (single) ++single_jobs;
    }
    ++group_no;
  }

  // interleave the recurrences, then stamp arrival times
  std::shuffle(rows.begin(), rows.end(), rng);
  std::exponential_distribution<double> interarrival(params.arrival_rate);
  std::vector<TraceRow> trace;
  trace.reserve(rows.size());
  double now = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    TraceRow r;
    r.job_id = static_cast<std::int64_t>(i);
    now += interarrival(rng);
    r.submit_time = now;
    r.duration = rows[i].duration;
    r.num_gpus = rows[i].gpus;
    r.user_id = rows[i].user;
    r.group_id = rows[i].group;
    trace.push_back(std::move(r));
  }
  if (!trace.empty()) {
    const double base = trace.front().submit_time;
    for (auto& r : trace) r.submit_time -= base;
  }
  return trace;
}

}  // namespace dlsched
