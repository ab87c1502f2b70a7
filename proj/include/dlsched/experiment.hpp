#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlsched/core.hpp"
#include "dlsched/csv.hpp"
#include "dlsched/predictor.hpp"
#include "dlsched/scheduler.hpp"
#include "dlsched/sim_engine.hpp"
#include "dlsched/trace.hpp"
#include "dlsched/workload.hpp"

namespace dlsched {

// Declarative experiment description: "[section]" headers over "key = value"
// lines, '#' comments, comma-separated lists. See the README for the full
// grammar.
struct ConfigFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static ConfigFile parse(std::istream& in) {
    ConfigFile cfg;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw std::runtime_error("config line " + std::to_string(line_no) + ": unterminated section");
        section = trim(line.substr(1, line.size() - 2));
        cfg.sections[section];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
      if (section.empty())
        throw std::runtime_error("config line " + std::to_string(line_no) + ": key outside any section");
      cfg.sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return cfg;
  }

  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    return parse(in);
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    return s != sections.end() && s->second.find(key) != s->second.end();
  }

  std::string get(const std::string& section, const std::string& key, const std::string& fallback = "") const {
    auto s = sections.find(section);
    if (s == sections.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
  }

  double num(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    double v = 0;
    if (!parse_double(get(section, key), v))
      throw std::runtime_error("config: " + section + "." + key + " is not a number");
    return v;
  }

  std::vector<std::string> list(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get(section, key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }
};

struct WorkloadSpec {
  std::string source = "synthetic";  // synthetic | trace
  SyntheticParams synthetic;
  std::string trace_path;
  std::string catalog_path;  // empty -> builtin catalog
  MaterializeOptions materialize;
  std::uint64_t seed = 1;
};

inline ClusterConfig cluster_from_config(const ConfigFile& cfg) {
  ClusterConfig cluster;
  cluster.num_servers = static_cast<int>(cfg.num("cluster", "servers", 4));
  cluster.gpus_per_server = static_cast<int>(cfg.num("cluster", "gpus_per_server", 4));
  cluster.slot_length = cfg.num("cluster", "slot_length", 1.0);
  cluster.b_inter = cfg.num("cluster", "b_inter", 1.25e9);
  cluster.b_intra = cfg.num("cluster", "b_intra", 3.0e11);
  cluster.validate();
  return cluster;
}

inline WorkloadSpec workload_from_config(const ConfigFile& cfg) {
  WorkloadSpec w;
  w.source = cfg.get("workload", "source", "synthetic");
  if (w.source != "synthetic" && w.source != "trace")
    throw std::runtime_error("config: workload.source must be synthetic or trace");
  w.synthetic.num_jobs = static_cast<int>(cfg.num("workload", "num_jobs", 1000));
  w.synthetic.single_gpu_fraction = cfg.num("workload", "single_gpu_fraction", 0.7);
  w.synthetic.arrival_rate = cfg.num("workload", "arrival_rate", 0.1);
  w.synthetic.heavy_group_fraction = cfg.num("workload", "heavy_group_fraction", 0.65);
  w.synthetic.mean_duration = cfg.num("workload", "mean_duration", 300.0);
  w.synthetic.duration_sigma = cfg.num("workload", "duration_sigma", 0.6);
  w.synthetic.outlier_fraction = cfg.num("workload", "outlier_fraction", 0.02);
  w.synthetic.max_multi_gpus = static_cast<int>(cfg.num("workload", "max_multi_gpus", 8));
  w.trace_path = cfg.get("workload", "trace");
  w.catalog_path = cfg.get("workload", "catalog");
  w.materialize.scale = cfg.num("workload", "scale", 1.0);
  if (cfg.has("workload", "single_gpu_override"))
    w.materialize.single_gpu_fraction = cfg.num("workload", "single_gpu_override", 0.0);
  w.seed = static_cast<std::uint64_t>(cfg.num("workload", "seed", 1));
  if (w.source == "trace" && w.trace_path.empty())
    throw std::runtime_error("config: workload.source = trace needs workload.trace = <path>");
  return w;
}

inline std::vector<JobSpec> build_workload(const WorkloadSpec& spec, const ClusterConfig& cluster,
                                           std::uint64_t seed) {
  const Catalog catalog =
      spec.catalog_path.empty()
          ? builtin_catalog()
          : [&] {
              std::ifstream in(spec.catalog_path);
              if (!in) throw std::runtime_error("cannot open catalog " + spec.catalog_path);
              return load_catalog_csv(in);
            }();
  std::vector<TraceRow> rows;
  if (spec.source == "synthetic") {
    rows = generate_synthetic(spec.synthetic, seed);
  } else {
    auto ingested = ingest_trace_file(spec.trace_path);
    rows = std::move(ingested.rows);
  }
  return materialize_jobs(rows, catalog, cluster, spec.materialize, seed).jobs;
}

struct ExperimentSpec {
  ClusterConfig cluster;
  WorkloadSpec workload;
  std::vector<Policy> policies;
  std::string predictor = "forest";
  int refit_interval = 0;
  std::vector<std::uint64_t> seeds;
  double tau = 1.0;
  double comm_heavy_threshold = 1.5;
  std::string sweep_key;  // "", "b_inter", "single_gpu_fraction", or "num_jobs"
  std::vector<double> sweep_values;

  static ExperimentSpec from_config(const ConfigFile& cfg) {
    ExperimentSpec e;
    e.cluster = cluster_from_config(cfg);
    e.workload = workload_from_config(cfg);
    for (const auto& p : cfg.list("run", "policies")) e.policies.push_back(parse_policy(p));
    if (e.policies.empty()) e.policies = all_policies();
    e.predictor = cfg.get("run", "predictor", "forest");
    make_predictor(e.predictor);  // validates the name
    e.refit_interval = static_cast<int>(cfg.num("run", "refit_interval", 0));
    for (const auto& s : cfg.list("run", "seeds")) {
      double v = 0;
      if (!parse_double(s, v)) throw std::runtime_error("config: run.seeds must be numbers");
      e.seeds.push_back(static_cast<std::uint64_t>(v));
    }
    if (e.seeds.empty()) e.seeds.push_back(1);
    e.tau = cfg.num("run", "tau", 1.0);
    e.comm_heavy_threshold = cfg.num("run", "comm_heavy_threshold", 1.5);
    auto sweep = cfg.sections.find("sweep");
    if (sweep != cfg.sections.end() && !sweep->second.empty()) {
      if (sweep->second.size() != 1) throw std::runtime_error("config: [sweep] takes exactly one key");
      e.sweep_key = sweep->second.begin()->first;
      if (e.sweep_key != "b_inter" && e.sweep_key != "single_gpu_fraction" && e.sweep_key != "num_jobs")
        throw std::runtime_error("config: unsupported sweep key " + e.sweep_key);
      for (const auto& s : cfg.list("sweep", e.sweep_key)) {
        double v = 0;
        if (!parse_double(s, v)) throw std::runtime_error("config: sweep values must be numbers");
        e.sweep_values.push_back(v);
      }
    }
    return e;
  }
};

struct RunResult {
  std::string sweep_label;
  Policy policy = Policy::Asrpt;
  std::uint64_t seed = 0;
  MetricsReport report;
};

inline RunResult run_single(const ExperimentSpec& spec, double sweep_value, Policy policy,
                            std::uint64_t seed) {
  ClusterConfig cluster = spec.cluster;
  WorkloadSpec workload = spec.workload;
  RunResult result;
  result.policy = policy;
  result.seed = seed;
  if (!spec.sweep_key.empty()) {
    if (spec.sweep_key == "b_inter") cluster.b_inter = sweep_value;
    if (spec.sweep_key == "single_gpu_fraction") workload.synthetic.single_gpu_fraction = sweep_value;
    if (spec.sweep_key == "num_jobs") workload.synthetic.num_jobs = static_cast<int>(sweep_value);
    result.sweep_label = spec.sweep_key + "=" + fmt_double(sweep_value);
  }
  const auto jobs = build_workload(workload, cluster, seed);
  SchedulerConfig sched;
  sched.policy = policy;
  sched.tau = spec.tau;
  sched.comm_heavy_threshold = spec.comm_heavy_threshold;
  auto predictor = make_predictor(spec.predictor, seed, spec.refit_interval);
  result.report = run_simulation(jobs, cluster, sched, *predictor);
  return result;
}

// Fans the (sweep value, policy, seed) grid out across async workers and
// writes one metrics CSV per run plus comparison.csv and a long-format
// results.csv for plotting. File contents depend only on the spec.
inline std::vector<RunResult> run_experiment(const ExperimentSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::vector<double> sweep_values = spec.sweep_values;
  if (spec.sweep_key.empty()) sweep_values = {0.0};

  struct Task {
    double sweep_value;
    Policy policy;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (double v : sweep_values)
    for (Policy p : spec.policies)
      for (std::uint64_t s : spec.seeds) tasks.push_back({v, p, s});

  std::vector<std::future<RunResult>> futures;
  futures.reserve(tasks.size());
  for (const auto& t : tasks)
    futures.push_back(std::async(std::launch::async, [&spec, t] {
      return run_single(spec, t.sweep_value, t.policy, t.seed);
    }));

  std::vector<RunResult> results;
  results.reserve(tasks.size());
  for (auto& f : futures) results.push_back(f.get());

  for (const auto& r : results) {
    std::string name = "metrics";
    if (!r.sweep_label.empty()) name += "_" + r.sweep_label;
    name += std::string("_") + to_string(r.policy) + "_seed" + std::to_string(r.seed) + ".csv";
    for (auto& c : name)
      if (c == '=') c = '-';
    std::ofstream out(fs::path(out_dir) / name);
    write_metrics_csv(r.report, out);
  }

  std::ofstream cmp(fs::path(out_dir) / "comparison.csv");
  cmp << "sweep,policy,seed,jobs,total_completion_s,total_flow_s,makespan_s,err_total,err_avg\n";
  for (const auto& r : results)
    cmp << (r.sweep_label.empty() ? "-" : r.sweep_label) << ',' << to_string(r.policy) << ','
        << r.seed << ',' << r.report.jobs.size() << ',' << fmt_double(r.report.total_completion)
        << ',' << fmt_double(r.report.total_flow) << ',' << fmt_double(r.report.makespan) << ','
        << fmt_double(r.report.err_total) << ',' << fmt_double(r.report.err_avg) << '\n';

  std::ofstream longf(fs::path(out_dir) / "results.csv");
  longf << "param,value,policy,seed,metric,metric_value\n";
  const std::string param = spec.sweep_key.empty() ? "-" : spec.sweep_key;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const std::string value = spec.sweep_key.empty() ? "0" : fmt_double(tasks[i].sweep_value);
    auto row = [&](const char* metric, double v) {
      longf << param << ',' << value << ',' << to_string(r.policy) << ',' << r.seed << ',' << metric
            << ',' << fmt_double(v) << '\n';
    };
    row("total_completion_s", r.report.total_completion);
    row("total_flow_s", r.report.total_flow);
    row("makespan_s", r.report.makespan);
    row("err_avg", r.report.err_avg);
  }
  return results;
}

}  // namespace dlsched
