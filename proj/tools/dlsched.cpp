#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "dlsched/experiment.hpp"
#include "dlsched/heavy_edge.hpp"
#include "dlsched/job_graph.hpp"
#include "dlsched/opt_oracle.hpp"
#include "dlsched/predictor.hpp"
#include "dlsched/sim_engine.hpp"
#include "dlsched/trace.hpp"
#include "dlsched/workload.hpp"

namespace {

using namespace dlsched;

ExperimentSpec load_spec(const std::string& config_path, const std::string& trace_override,
                         std::uint64_t seed_override, bool has_seed, const std::string& policy_override) {
  ConfigFile cfg = ConfigFile::parse_file(config_path);
  ExperimentSpec spec = ExperimentSpec::from_config(cfg);
  if (!trace_override.empty()) {
    spec.workload.source = "trace";
    spec.workload.trace_path = trace_override;
  }
  if (has_seed) spec.seeds = {seed_override};
  if (!policy_override.empty()) spec.policies = {parse_policy(policy_override)};
  return spec;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 const std::string& trace_override, std::uint64_t seed, bool has_seed,
                 const std::string& policy, int dot_dump_job, bool events) {
  ExperimentSpec spec = load_spec(config_path, trace_override, seed, has_seed, policy);

  if (dot_dump_job >= 0) {
    const auto jobs = build_workload(spec.workload, spec.cluster, spec.seeds.front());
    for (const auto& job : jobs) {
      if (job.job_id != dot_dump_job) continue;
      std::filesystem::create_directories(out_dir);
      const auto path = std::filesystem::path(out_dir) / ("job" + std::to_string(dot_dump_job) + ".dot");
      std::ofstream out(path);
      out << build_job_graph(job).to_dot("job" + std::to_string(dot_dump_job));
      std::cout << "wrote " << path.string() << "\n";
    }
  }

  if (events) {
    std::filesystem::create_directories(out_dir);
    for (Policy p : spec.policies)
      for (std::uint64_t s : spec.seeds) {
        ClusterConfig cluster = spec.cluster;
        const auto jobs = build_workload(spec.workload, cluster, s);
        SchedulerConfig sched;
        sched.policy = p;
        sched.tau = spec.tau;
        sched.comm_heavy_threshold = spec.comm_heavy_threshold;
        auto predictor = make_predictor(spec.predictor, s, spec.refit_interval);
        EventLog log;
        const MetricsReport report = run_simulation(jobs, cluster, sched, *predictor, &log);
        const std::string stem = std::string(to_string(p)) + "_seed" + std::to_string(s);
        std::ofstream out(std::filesystem::path(out_dir) / ("events_" + stem + ".log"));
        log.write(out);
        std::ofstream sum(std::filesystem::path(out_dir) / ("summary_" + stem + ".txt"));
        write_summary(report, sum);
      }
  }

  const auto results = run_experiment(spec, out_dir);
  std::cout << std::left << std::setw(14) << "policy" << std::setw(6) << "seed" << std::setw(20)
            << "total_completion_s" << std::setw(16) << "total_flow_s" << std::setw(14) << "makespan_s"
            << "err_avg\n";
  for (const auto& r : results)
    std::cout << std::left << std::setw(14) << to_string(r.policy) << std::setw(6) << r.seed
              << std::setw(20) << r.report.total_completion << std::setw(16) << r.report.total_flow
              << std::setw(14) << r.report.makespan << r.report.err_avg << "\n";
  std::cout << "results written to " << out_dir << "\n";
  return 0;
}

int cmd_generate(const std::string& config_path, const std::string& out_dir, std::uint64_t seed,
                 bool has_seed) {
  ConfigFile cfg = ConfigFile::parse_file(config_path);
  WorkloadSpec w = workload_from_config(cfg);
  if (has_seed) w.seed = seed;
  const auto rows = generate_synthetic(w.synthetic, w.seed);
  std::filesystem::create_directories(out_dir);
  emit_trace_file(rows, (std::filesystem::path(out_dir) / "trace.csv").string());
  std::ofstream cat_out(std::filesystem::path(out_dir) / "catalog.csv");
  save_catalog_csv(builtin_catalog(), cat_out);
  std::cout << "wrote " << rows.size() << " rows to " << out_dir << "/trace.csv (+catalog.csv)\n";
  return 0;
}

int cmd_predict_eval(const std::string& trace_path, const std::string& config_path, std::uint64_t seed) {
  std::vector<TraceRow> rows;
  ClusterConfig cluster;
  if (!trace_path.empty()) {
    auto ingested = ingest_trace_file(trace_path);
    rows = std::move(ingested.rows);
    for (const auto& r : ingested.rejected) std::cerr << "rejected " << r << "\n";
  } else {
    ConfigFile cfg = ConfigFile::parse_file(config_path);
    cluster = cluster_from_config(cfg);
    WorkloadSpec w = workload_from_config(cfg);
    rows = generate_synthetic(w.synthetic, seed);
  }
  const auto materialized = materialize_jobs(rows, builtin_catalog(), cluster, {}, seed);
  const auto& jobs = materialized.jobs;
  const std::size_t split = jobs.size() * 8 / 10;

  std::cout << "train " << split << " jobs, evaluate " << jobs.size() - split << " jobs\n";
  std::cout << std::left << std::setw(10) << "predictor" << std::setw(16) << "err_total"
            << "err_avg\n";
  for (const std::string name : {"forest", "median", "mean", "zero"}) {
    auto predictor = make_predictor(name, seed);
    if (name == "forest") {
      std::vector<TrainingExample> examples;
      for (std::size_t i = 0; i < split; ++i)
        examples.push_back({jobs[i].group_id, jobs[i].user_id, jobs[i].true_iterations});
      static_cast<ForestPredictor&>(*predictor).pretrain(examples);
    } else {
      for (std::size_t i = 0; i < split; ++i) predictor->observe(jobs[i]);
    }
    std::vector<std::int64_t> actual, predicted;
    for (std::size_t i = split; i < jobs.size(); ++i) {
      actual.push_back(jobs[i].true_iterations);
      predicted.push_back(predictor->predict(jobs[i]));
    }
    const auto err = prediction_errors(actual, predicted);
    std::cout << std::left << std::setw(10) << name << std::setw(16) << err.total << err.average
              << "\n";
    if (name == "forest")
      std::cout << "  " << static_cast<ForestPredictor&>(*predictor).model().summary() << "\n";
  }
  return 0;
}

JobSpec random_small_job(std::mt19937_64& rng, int max_gpus) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  JobSpec job;
  const int num_stages = 1 + static_cast<int>(uniform(rng) * 3);  // 1..3
  int budget = max_gpus;
  for (int s = 0; s < num_stages && budget > 0; ++s) {
    StageProfile st;
    const int k = 1 + static_cast<int>(uniform(rng) * std::min(3, budget));
    budget -= k;
    st.replicas = k;
    st.fp_time = 0.001 + uniform(rng) * 0.02;
    st.bp_time = 2 * st.fp_time;
    st.param_size = uniform(rng) < 0.5 ? uniform(rng) * 400e6 : 0.0;
    st.allreduce = uniform(rng) < 0.5 ? AllreduceKind::Ring : AllreduceKind::Tree;
    job.stages.push_back(st);
  }
  // consistent inter-stage activations
  for (std::size_t s = 0; s + 1 < job.stages.size(); ++s) {
    job.stages[s].data_out = uniform(rng) * 50e6;
    job.stages[s + 1].data_in =
        job.stages[s].replicas * job.stages[s].data_out / job.stages[s + 1].replicas;
  }
  job.true_iterations = 1 + static_cast<int>(uniform(rng) * 20);
  return job;
}

int cmd_partition_bench(int count, std::uint64_t seed, int max_vertices) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  ClusterConfig cluster;
  cluster.num_servers = 4;
  cluster.gpus_per_server = 4;

  std::cout << std::left << std::setw(6) << "case" << std::setw(6) << "|V|" << std::setw(14)
            << "cut_he_MB" << std::setw(14) << "cut_opt_MB" << std::setw(10) << "ratio" << std::setw(14)
            << "pitt_he_ms" << std::setw(14) << "pitt_opt_ms" << std::setw(12) << "pct_he_ms"
            << "pct_opt_ms\n";
  double ratio_sum = 0.0;
  int solved = 0;
  for (int i = 0; i < count; ++i) {
    JobSpec job = random_small_job(rng, max_vertices);
    const JobGraph graph = build_job_graph(job);
    const int n = static_cast<int>(graph.vertices.size());
    // random split across 2-3 servers
    const int servers = 2 + (n > 3 && uniform(rng) < 0.5 ? 1 : 0);
    std::vector<ServerShare> slots;
    int left = n;
    for (int m = 0; m < servers; ++m) {
      int share = m + 1 == servers ? left : std::max(1, std::min(left - (servers - m - 1), 1 + static_cast<int>(uniform(rng) * left / 2)));
      slots.push_back({m, share});
      left -= share;
    }
    if (left != 0 || n < 2) { --i; continue; }

    const auto t0 = std::chrono::steady_clock::now();
    const GraphPartition he = heavy_edge_partition(graph, slots);
    const auto t1 = std::chrono::steady_clock::now();
    const GraphPartition opt = brute_force_partition(graph, slots);
    const auto t2 = std::chrono::steady_clock::now();

    const double cut_he = cut_weight(graph, he);
    const double cut_opt = cut_weight(graph, opt);
    Placement p_he = to_placement(graph, he, cluster.num_servers, static_cast<int>(job.stages.size()));
    Placement p_opt = to_placement(graph, opt, cluster.num_servers, static_cast<int>(job.stages.size()));
    const double pitt_he = iteration_time(job, p_he, cluster);
    const double pitt_opt = iteration_time(job, p_opt, cluster);
    const double ratio = cut_opt > 0 ? cut_he / cut_opt : 1.0;
    ratio_sum += ratio;
    ++solved;
    std::cout << std::left << std::setw(6) << i << std::setw(6) << n << std::setw(14) << cut_he / 1e6
              << std::setw(14) << cut_opt / 1e6 << std::setw(10) << ratio << std::setw(14)
              << pitt_he * 1e3 << std::setw(14) << pitt_opt * 1e3 << std::setw(12)
              << std::chrono::duration<double, std::milli>(t1 - t0).count()
              << std::chrono::duration<double, std::milli>(t2 - t1).count() << "\n";
  }
  std::cout << "mean cut ratio over " << solved << " cases: " << ratio_sum / solved << "\n";
  return 0;
}

int cmd_bound_check(int count, std::uint64_t seed, double tau) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  ClusterConfig cluster;
  cluster.num_servers = 2;
  cluster.gpus_per_server = 2;

  std::cout << std::left << std::setw(6) << "case" << std::setw(8) << "jobs" << std::setw(14)
            << "asrpt_s" << std::setw(14) << "opt_s" << std::setw(10) << "ratio" << std::setw(12)
            << "bound" << "ok\n";
  int violations = 0;
  for (int i = 0; i < count; ++i) {
    const int num_jobs = 2 + static_cast<int>(uniform(rng) * 3);
    std::vector<JobSpec> jobs;
    for (int j = 0; j < num_jobs; ++j) {
      JobSpec job = random_small_job(rng, 3);
      job.job_id = j;
      job.arrival_slot = static_cast<int>(uniform(rng) * 4);
      job.true_iterations = 1 + static_cast<int>(uniform(rng) * 5);
      jobs.push_back(job);
    }
    SchedulerConfig sched;
    sched.tau = tau;
    PerfectPredictor predictor;
    const MetricsReport report = run_simulation(jobs, cluster, sched, predictor);
    const OracleResult opt = brute_force_schedule(jobs, cluster);
    const BoundResult bound = competitive_ratio_bound(jobs, cluster, tau, report.err_avg);
    const double ratio = report.total_completion / opt.total_completion;
    const bool ok = !bound.applicable || ratio <= bound.value + 1e-9;
    if (!ok) ++violations;
    std::cout << std::left << std::setw(6) << i << std::setw(8) << num_jobs << std::setw(14)
              << report.total_completion << std::setw(14) << opt.total_completion << std::setw(10)
              << ratio << std::setw(12) << (bound.applicable ? bound.value : -1.0)
              << (ok ? "yes" : "NO") << "\n";
  }
  std::cout << (violations == 0 ? "all instances within the bound\n"
                                : std::to_string(violations) + " violations\n");
  return violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace-driven workbench for online DDL job scheduling on GPU clusters"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", trace_path, policy;
  std::uint64_t seed = 1;
  int dot_dump_job = -1;
  bool events = false;

  auto* sim = app.add_subcommand("simulate", "run the experiment grid from a config file");
  sim->add_option("--config", config_path, "experiment config file")->required();
  sim->add_option("--out-dir", out_dir, "output directory");
  sim->add_option("--trace", trace_path, "override: use this trace CSV as the workload");
  sim->add_option("--policy", policy, "override: run only this policy");
  auto* sim_seed = sim->add_option("--seed", seed, "override: single run seed");
  sim->add_option("--dot-dump", dot_dump_job, "write the job graph of this job id as DOT");
  sim->add_flag("--events", events, "also write per-run event logs");

  auto* gen = app.add_subcommand("generate", "emit a synthetic trace and the model catalog");
  gen->add_option("--config", config_path, "config file with a [workload] section")->required();
  gen->add_option("--out-dir", out_dir, "output directory");
  auto* gen_seed = gen->add_option("--seed", seed, "override: generation seed");

  auto* pe = app.add_subcommand("predict-eval", "80/20 prediction-error comparison");
  pe->add_option("--trace", trace_path, "trace CSV to evaluate on");
  pe->add_option("--config", config_path, "or: config with a synthetic [workload]");
  pe->add_option("--seed", seed, "materialization seed");

  int count = 50, max_vertices = 10;
  auto* pb = app.add_subcommand("partition-bench", "Heavy-Edge vs exhaustive partition");
  pb->add_option("--count", count, "number of random instances");
  pb->add_option("--seed", seed, "rng seed");
  pb->add_option("--max-vertices", max_vertices, "vertex cap per instance");

  double tau = 1.0;
  auto* bc = app.add_subcommand("bound-check", "competitive-ratio bound on tiny instances");
  bc->add_option("--count", count, "number of random instances");
  bc->add_option("--seed", seed, "rng seed");
  bc->add_option("--tau", tau, "delay factor");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(config_path, out_dir, trace_path, seed, !sim_seed->empty(), policy,
                          dot_dump_job, events);
    if (gen->parsed()) return cmd_generate(config_path, out_dir, seed, !gen_seed->empty());
    if (pe->parsed()) {
      if (trace_path.empty() && config_path.empty())
        throw std::runtime_error("predict-eval needs --trace or --config");
      return cmd_predict_eval(trace_path, config_path, seed);
    }
    if (pb->parsed()) return cmd_partition_bench(count, seed, max_vertices);
    if (bc->parsed()) return cmd_bound_check(count, seed, tau);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
