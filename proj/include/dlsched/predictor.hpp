#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dlsched/core.hpp"

namespace dlsched {

struct TrainingExample {
  std::int64_t group = 0;
  std::int64_t user = 0;
  std::int64_t iterations = 0;
};

struct ForestConfig {
  int num_trees = 100;
  int min_samples_leaf = 1;
  bool bootstrap = true;
  std::uint64_t rng_seed = 0;
};

// Random forest regression over the two integer-encoded features
// (group id, user id), squared-error splits, mean-value leaves. Jobs from
// groups never seen in training predict 0 regardless of the trees.
class RandomForest {
 public:
  struct Node {
    int feature = -1;        // -1 for leaf
    double threshold = 0.0;  // go left when value <= threshold
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf mean
  };

  static RandomForest fit(const std::vector<TrainingExample>& examples, const ForestConfig& config) {
    RandomForest model;
    model.config_ = config;
    if (examples.empty()) return model;  // predicts 0 for everything
    for (const auto& ex : examples) model.known_groups_.insert(ex.group);

    std::mt19937_64 master(config.rng_seed);
    std::vector<std::uint64_t> tree_seeds(config.num_trees);
    for (auto& s : tree_seeds) s = master();

    model.trees_.resize(config.num_trees);
    for (int t = 0; t < config.num_trees; ++t) {
      std::mt19937_64 rng(tree_seeds[t]);
      std::vector<std::size_t> idx(examples.size());
      if (config.bootstrap) {
        std::uniform_int_distribution<std::size_t> pick(0, examples.size() - 1);
        for (auto& i : idx) i = pick(rng);
      } else {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
      }
      build_node(model.trees_[t], examples, idx, config.min_samples_leaf);
    }
    return model;
  }

  std::int64_t predict(std::int64_t group, std::int64_t user) const {
    if (known_groups_.find(group) == known_groups_.end()) return 0;
    const double mean = raw_predict(group, user);
    return std::max<std::int64_t>(0, std::llround(mean));
  }

  // Forest mean before the unseen-group rule and rounding.
  double raw_predict(std::int64_t group, std::int64_t user) const {
    if (trees_.empty()) return 0.0;
    const double f[2] = {static_cast<double>(group), static_cast<double>(user)};
    double sum = 0.0;
    for (const auto& tree : trees_) {
      int at = 0;
      while (tree[at].feature >= 0)
        at = f[tree[at].feature] <= tree[at].threshold ? tree[at].left : tree[at].right;
      sum += tree[at].value;
    }
    return sum / trees_.size();
  }

  bool empty() const { return trees_.empty(); }
  int num_trees() const { return static_cast<int>(trees_.size()); }

  std::string summary() const {
    int max_depth = 0, total_nodes = 0;
    for (const auto& tree : trees_) {
      total_nodes += static_cast<int>(tree.size());
      max_depth = std::max(max_depth, depth(tree, 0));
    }
    std::ostringstream out;
    out << "random forest: " << trees_.size() << " trees, " << total_nodes << " nodes, max depth "
        << max_depth << ", " << known_groups_.size() << " known groups";
    return out.str();
  }

 private:
  static int depth(const std::vector<Node>& tree, int at) {
    if (tree[at].feature < 0) return 1;
    return 1 + std::max(depth(tree, tree[at].left), depth(tree, tree[at].right));
  }

  static int build_node(std::vector<Node>& tree, const std::vector<TrainingExample>& ex,
                        std::vector<std::size_t>& idx, int min_leaf) {
    const int node_id = static_cast<int>(tree.size());
    tree.push_back({});

    double sum = 0.0;
    for (auto i : idx) sum += static_cast<double>(ex[i].iterations);
    const double mean = sum / idx.size();

    bool pure = true;
    for (auto i : idx)
      if (ex[i].iterations != ex[idx[0]].iterations) { pure = false; break; }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    if (!pure && static_cast<int>(idx.size()) >= 2 * min_leaf) {
      for (int f = 0; f < 2; ++f) {
        auto key = [&](std::size_t i) {
          return f == 0 ? static_cast<double>(ex[i].group) : static_cast<double>(ex[i].user);
        };
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
          return key(a) < key(b) || (key(a) == key(b) && a < b);
        });
        // prefix sums over the sorted order
        double left_sum = 0.0, left_sq = 0.0;
        double total_sq = 0.0, total_sum = 0.0;
        for (auto i : idx) {
          const double y = static_cast<double>(ex[i].iterations);
          total_sum += y;
          total_sq += y * y;
        }
        for (std::size_t p = 0; p + 1 < idx.size(); ++p) {
          const double y = static_cast<double>(ex[idx[p]].iterations);
          left_sum += y;
          left_sq += y * y;
          if (key(idx[p]) == key(idx[p + 1])) continue;  // not a boundary
          const std::size_t nl = p + 1, nr = idx.size() - nl;
          if (static_cast<int>(nl) < min_leaf || static_cast<int>(nr) < min_leaf) continue;
          const double right_sum = total_sum - left_sum;
          const double right_sq = total_sq - left_sq;
          const double sse = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
          if (sse < best_score) {
            best_score = sse;
            best_feature = f;
            best_threshold = (key(idx[p]) + key(idx[p + 1])) / 2.0;
          }
        }
      }
    }

    if (best_feature < 0) {
      tree[node_id].value = mean;
      return node_id;
    }

    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      const double v = best_feature == 0 ? static_cast<double>(ex[i].group) : static_cast<double>(ex[i].user);
      (v <= best_threshold ? left : right).push_back(i);
    }
    tree[node_id].feature = best_feature;
    tree[node_id].threshold = best_threshold;
    const int l = build_node(tree, ex, left, min_leaf);
    tree[node_id].left = l;
    const int r = build_node(tree, ex, right, min_leaf);
    tree[node_id].right = r;
    return node_id;
  }

  std::vector<std::vector<Node>> trees_;
  std::set<std::int64_t> known_groups_;
  ForestConfig config_;
};

struct PredictionErrors {
  double total = 0.0;    // epsilon
  double average = 0.0;  // epsilon bar
};

inline PredictionErrors prediction_errors(const std::vector<std::int64_t>& actual,
                                          const std::vector<std::int64_t>& predicted) {
  PredictionErrors e;
  for (std::size_t i = 0; i < actual.size(); ++i)
    e.total += std::abs(static_cast<double>(actual[i] - predicted[i]));
  e.average = actual.empty() ? 0.0 : e.total / actual.size();
  return e;
}

// Online prediction interface used by the simulation: predict at arrival,
// observe the true iteration count at completion.
class IterationPredictor {
 public:
  virtual ~IterationPredictor() = default;
  virtual std::int64_t predict(const JobSpec& job) = 0;
  virtual void observe(const JobSpec& job) { (void)job; }
  virtual const char* name() const = 0;
};

class ZeroPredictor : public IterationPredictor {
 public:
  std::int64_t predict(const JobSpec&) override { return 0; }
  const char* name() const override { return "zero"; }
};

class PerfectPredictor : public IterationPredictor {
 public:
  std::int64_t predict(const JobSpec& job) override { return job.true_iterations; }
  const char* name() const override { return "perfect"; }
};

class GroupMeanPredictor : public IterationPredictor {
 public:
  std::int64_t predict(const JobSpec& job) override {
    auto it = stats_.find(job.group_id);
    if (it == stats_.end() || it->second.count == 0) return 0;
    return std::llround(it->second.sum / it->second.count);
  }
  void observe(const JobSpec& job) override {
    auto& s = stats_[job.group_id];
    s.sum += static_cast<double>(job.true_iterations);
    s.count += 1;
  }
  const char* name() const override { return "mean"; }

 private:
  struct Stats {
    double sum = 0.0;
    std::int64_t count = 0;
  };
  std::map<std::int64_t, Stats> stats_;
};

class GroupMedianPredictor : public IterationPredictor {
 public:
  std::int64_t predict(const JobSpec& job) override {
    auto it = history_.find(job.group_id);
    if (it == history_.end() || it->second.empty()) return 0;
    const auto& v = it->second;  // kept sorted
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return std::llround((static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])) / 2.0);
  }
  void observe(const JobSpec& job) override {
    auto& v = history_[job.group_id];
    v.insert(std::upper_bound(v.begin(), v.end(), job.true_iterations), job.true_iterations);
  }
  const char* name() const override { return "median"; }

 private:
  std::map<std::int64_t, std::vector<std::int64_t>> history_;
};

class ForestPredictor : public IterationPredictor {
 public:
  explicit ForestPredictor(ForestConfig config = {}, int refit_interval = 0)
      : config_(config), refit_interval_(refit_interval) {}

  // Offline pre-training, e.g. on the first 80% of a trace.
  void pretrain(const std::vector<TrainingExample>& examples) {
    buffer_ = examples;
    model_ = RandomForest::fit(buffer_, config_);
  }

  std::int64_t predict(const JobSpec& job) override { return model_.predict(job.group_id, job.user_id); }

  void observe(const JobSpec& job) override {
    buffer_.push_back({job.group_id, job.user_id, job.true_iterations});
    if (refit_interval_ > 0 && buffer_.size() % static_cast<std::size_t>(refit_interval_) == 0)
      model_ = RandomForest::fit(buffer_, config_);
  }

  const RandomForest& model() const { return model_; }
  const char* name() const override { return "forest"; }

 private:
  ForestConfig config_;
  int refit_interval_;
  std::vector<TrainingExample> buffer_;
  RandomForest model_;
};

inline std::unique_ptr<IterationPredictor> make_predictor(const std::string& name,
                                                          std::uint64_t seed = 0,
                                                          int refit_interval = 0) {
  if (name == "zero") return std::make_unique<ZeroPredictor>();
  if (name == "perfect") return std::make_unique<PerfectPredictor>();
  if (name == "mean") return std::make_unique<GroupMeanPredictor>();
  if (name == "median") return std::make_unique<GroupMedianPredictor>();
  if (name == "forest") {
    ForestConfig cfg;
    cfg.rng_seed = seed;
    return std::make_unique<ForestPredictor>(cfg, refit_interval);
  }
  throw std::invalid_argument("unknown predictor: " + name);
}

}  // namespace dlsched
