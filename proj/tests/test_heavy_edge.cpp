#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "dlsched/heavy_edge.hpp"
#include "dlsched/job_graph.hpp"
#include "support/worked_example.hpp"
#include "support/generators.hpp"

using namespace dlsched;

namespace {

// counts per server and exactly-once coverage
void check_feasible(const JobGraph& graph, const GraphPartition& part,
                    const std::vector<ServerShare>& slots) {
  REQUIRE(part.server_of.size() == graph.vertices.size());
  std::map<int, int> counts;
  for (int server : part.server_of) {
    REQUIRE(server >= 0);
    counts[server] += 1;
  }
  for (const auto& slot : slots) CHECK(counts[slot.server] == slot.gpus);
}

JobGraph edgeless(int n) {
  JobGraph g;
  for (int i = 0; i < n; ++i) g.vertices.push_back({0, i});
  return g;
}

}  // namespace

TEST_CASE("reference instance: heavy pair plus its neighbors fill the big server") {
  const JobGraph graph = build_job_graph(testgen::worked_example_job());
  const std::vector<ServerShare> slots = {{0, 4}, {1, 1}, {2, 1}};
  const GraphPartition part = heavy_edge_partition(graph, slots);
  check_feasible(graph, part, slots);

  // stage-1 pair (vertices 0,1) and stage-2 pair (2,3) share the 4-GPU server
  CHECK(part.server_of[0] == 0);
  CHECK(part.server_of[1] == 0);
  CHECK(part.server_of[2] == 0);
  CHECK(part.server_of[3] == 0);
  CHECK(part.server_of[4] != part.server_of[5]);  // stage-3 replicas split

  // cut = four 0.25 MB stage-2/3 edges plus the split 0.5 MB stage-3 pair
  CHECK(cut_weight(graph, part) == Catch::Approx(4 * 0.25e6 + 0.5e6));
}

TEST_CASE("everything on one server when capacities allow") {
  const JobGraph graph = build_job_graph(testgen::worked_example_job());
  const GraphPartition part = heavy_edge_partition(graph, {{3, 6}});
  check_feasible(graph, part, {{3, 6}});
  CHECK(cut_weight(graph, part) == 0.0);
}

TEST_CASE("edgeless graphs partition feasibly with zero cut") {
  const JobGraph graph = edgeless(5);
  const std::vector<ServerShare> slots = {{0, 2}, {1, 2}, {2, 1}};
  const GraphPartition part = heavy_edge_partition(graph, slots);
  check_feasible(graph, part, slots);
  CHECK(cut_weight(graph, part) == 0.0);
}

TEST_CASE("capacity mismatch is rejected") {
  const JobGraph graph = edgeless(3);
  CHECK_THROWS_AS(heavy_edge_partition(graph, {{0, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(brute_force_partition(graph, {{0, 2}}), std::invalid_argument);
}

TEST_CASE("single-GPU servers take the least connected replica") {
  // path graph: 0 -1- 1 -9- 2; total incident: v0=1, v1=10, v2=9
  JobGraph g;
  g.vertices = {{0, 0}, {0, 1}, {0, 2}};
  g.edges = {{0, 1, 1.0}, {1, 2, 9.0}};
  const GraphPartition part = heavy_edge_partition(g, {{0, 2}, {1, 1}});
  // server 1 (1 GPU) is processed after the 2-GPU server; remaining vertex wins
  CHECK(part.server_of[1] == 0);
  CHECK(part.server_of[2] == 0);
  CHECK(part.server_of[0] == 1);

  // with two single-GPU servers first the min-incident vertex goes first
  const GraphPartition part2 = heavy_edge_partition(g, {{0, 1}, {1, 1}, {2, 1}});
  CHECK(part2.server_of[0] == 0);  // weight 1 is the least connected
}

TEST_CASE("partition is deterministic") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const JobSpec job = testgen::random_job(rng);
    const JobGraph graph = build_job_graph(job);
    const int n = static_cast<int>(graph.vertices.size());
    if (n < 2) continue;
    std::vector<ServerShare> slots = {{0, (n + 1) / 2}, {1, n / 2}};
    if (slots[1].gpus == 0) slots.pop_back();
    const GraphPartition a = heavy_edge_partition(graph, slots);
    const GraphPartition b = heavy_edge_partition(graph, slots);
    CHECK(a.server_of == b.server_of);
  }
}

TEST_CASE("removal bookkeeping matches recomputation from scratch") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 25; ++trial) {
    const JobSpec job = testgen::random_job(rng);
    const JobGraph graph = build_job_graph(job);
    const int n = static_cast<int>(graph.vertices.size());
    if (n < 4) continue;
    const int first = n / 2;
    std::vector<ServerShare> slots = {{0, first}, {1, n - first - (n > 5 ? 1 : 0)}};
    if (n > 5) slots.push_back({2, 1});

    const GraphPartition full = heavy_edge_partition(graph, slots);

    // rebuild the remainder graph after server 0 and run the tail partition
    std::vector<int> remap(n, -1);
    JobGraph rest;
    for (int v = 0; v < n; ++v) {
      if (full.server_of[v] == 0) continue;
      remap[v] = static_cast<int>(rest.vertices.size());
      rest.vertices.push_back(graph.vertices[v]);
    }
    for (const auto& e : graph.edges)
      if (remap[e.u] >= 0 && remap[e.v] >= 0) rest.edges.push_back({remap[e.u], remap[e.v], e.weight});
    const GraphPartition tail =
        heavy_edge_partition(rest, std::vector<ServerShare>(slots.begin() + 1, slots.end()));
    for (int v = 0; v < n; ++v)
      if (remap[v] >= 0) CHECK(tail.server_of[remap[v]] == full.server_of[v]);
  }
}

TEST_CASE("cut plus intra weight equals total weight") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 25; ++trial) {
    const JobSpec job = testgen::random_job(rng);
    const JobGraph graph = build_job_graph(job);
    const int n = static_cast<int>(graph.vertices.size());
    if (n < 2) continue;
    const std::vector<ServerShare> slots = {{0, (n + 1) / 2}, {1, n / 2}};
    const GraphPartition part = heavy_edge_partition(graph, slots);
    double intra = 0.0;
    for (const auto& e : graph.edges)
      if (part.server_of[e.u] == part.server_of[e.v]) intra += e.weight;
    CHECK(cut_weight(graph, part) + intra == Catch::Approx(graph.total_weight()).margin(1e-6));
  }
}

TEST_CASE("exhaustive partition is a true lower bound") {
  std::mt19937_64 rng(53);
  testgen::JobParams params;
  params.max_gpus = 8;
  for (int trial = 0; trial < 25; ++trial) {
    const JobSpec job = testgen::random_job(rng, params);
    const JobGraph graph = build_job_graph(job);
    const int n = static_cast<int>(graph.vertices.size());
    if (n < 2 || n > 10) continue;
    const std::vector<ServerShare> slots = {{0, (n + 1) / 2}, {1, n / 2}};
    const GraphPartition heavy = heavy_edge_partition(graph, slots);
    const GraphPartition opt = brute_force_partition(graph, slots);
    check_feasible(graph, opt, slots);
    CHECK(cut_weight(graph, opt) <= cut_weight(graph, heavy) + 1e-9);
  }
}

TEST_CASE("oracle agrees with hand-solved instances") {
  SECTION("co-locating the heavy pair is optimal on the reference instance") {
    const JobGraph graph = build_job_graph(testgen::worked_example_job());
    const GraphPartition opt = brute_force_partition(graph, {{0, 4}, {1, 1}, {2, 1}});
    CHECK(opt.server_of[0] == opt.server_of[1]);
    CHECK(cut_weight(graph, opt) == Catch::Approx(1.5e6));
  }

  SECTION("symmetric 4-ring splits into adjacent pairs") {
    JobGraph ring;
    ring.vertices = {{0, 0}, {0, 1}, {0, 2}, {0, 3}};
    ring.edges = {{0, 1, 5.0}, {1, 2, 5.0}, {2, 3, 5.0}, {0, 3, 5.0}};
    const GraphPartition opt = brute_force_partition(ring, {{0, 2}, {1, 2}});
    CHECK(cut_weight(ring, opt) == Catch::Approx(10.0));  // two opposite edges
    // adjacent vertices stay together
    bool adjacent = (opt.server_of[0] == opt.server_of[1]) || (opt.server_of[0] == opt.server_of[3]);
    CHECK(adjacent);
  }

  SECTION("size guard") {
    CHECK_THROWS_AS(brute_force_partition(edgeless(13), {{0, 13}}), std::invalid_argument);
  }
}
