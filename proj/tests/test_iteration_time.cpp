#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dlsched/iteration_time.hpp"
#include "dlsched/opt_oracle.hpp"
#include "support/generators.hpp"

using namespace dlsched;

namespace {

constexpr double kMB = 1e6;
constexpr double kGbps = 1.25e8;  // bytes/s

ClusterConfig testbed() {
  ClusterConfig c;
  c.num_servers = 4;
  c.gpus_per_server = 8;
  c.b_inter = 10 * kGbps;  // 1.25e9 B/s
  c.b_intra = 300e9;
  return c;
}

// two pipeline stages, one replica each, 30 MB activations between them
JobSpec two_stage_job() {
  JobSpec job;
  StageProfile s1;
  s1.fp_time = 0.002;
  s1.bp_time = 0.004;
  s1.data_out = 30 * kMB;
  StageProfile s2;
  s2.fp_time = 0.003;
  s2.bp_time = 0.005;
  s2.data_in = 30 * kMB;
  job.stages = {s1, s2};
  return job;
}

}  // namespace

TEST_CASE("compute time per stage") {
  StageProfile st;
  st.fp_time = 0.002;
  st.bp_time = 0.004;
  CHECK(comp_time(st, 1) == 0.006);
  CHECK(comp_time(st, 0) == 0.0);
  StageProfile idle;
  CHECK(comp_time(idle, 3) == 0.0);
}

TEST_CASE("inter-stage communication, co-located and remote") {
  const ClusterConfig cluster = testbed();
  const JobSpec job = two_stage_job();

  SECTION("single-stage jobs have no inter-stage traffic") {
    JobSpec single;
    single.stages = {job.stages[0]};
    single.stages[0].data_out = 0;
    Placement p = Placement::zeros(cluster.num_servers, 1);
    p.gpu_counts[0][0] = 1;
    CHECK(comm_time(single, p, 0, 0, cluster) == 0.0);
  }

  SECTION("both replicas on one server: intra-server only") {
    Placement p = Placement::zeros(cluster.num_servers, 2);
    p.gpu_counts[0][0] = 1;
    p.gpu_counts[0][1] = 1;
    const double got = comm_time(job, p, 0, 1, cluster);
    CHECK(got == Catch::Approx(2.0 * 30 * kMB / 300e9).epsilon(1e-9));  // 0.2 ms
  }

  SECTION("replicas on different servers: reserved NIC share") {
    Placement p = Placement::zeros(cluster.num_servers, 2);
    p.gpu_counts[0][0] = 1;
    p.gpu_counts[1][1] = 1;
    const double got = comm_time(job, p, 1, 1, cluster);
    // (2*30MB*1) / ((1/8)*1.25 GB/s) = 0.384 s
    CHECK(got == Catch::Approx(0.384).epsilon(1e-9));
  }

  SECTION("stage out of range is rejected") {
    Placement p = Placement::zeros(cluster.num_servers, 2);
    CHECK_THROWS_AS(comm_time(job, p, 0, 2, cluster), std::out_of_range);
  }
}

TEST_CASE("allreduce branches") {
  const ClusterConfig cluster = testbed();
  StageProfile st;
  st.param_size = 20 * kMB;
  st.replicas = 2;

  SECTION("no synchronization for one replica") {
    StageProfile solo = st;
    solo.replicas = 1;
    CHECK(allreduce_time(solo, 1, cluster) == 0.0);
  }
  SECTION("NIC branch when replicas are split") {
    CHECK(allreduce_time(st, 1, cluster) ==
          Catch::Approx(20 * kMB / ((1.0 / 8) * 1.25e9)).epsilon(1e-9));  // 0.128 s
  }
  SECTION("intra branch when the whole stage is local") {
    CHECK(allreduce_time(st, 2, cluster) == Catch::Approx(20 * kMB / 300e9).epsilon(1e-9));
  }
}

TEST_CASE("bottleneck iteration time") {
  const ClusterConfig cluster = testbed();

  SECTION("single-GPU single-stage job") {
    JobSpec job;
    StageProfile st;
    st.fp_time = 0.002;
    st.bp_time = 0.004;
    job.stages = {st};
    Placement p = Placement::zeros(cluster.num_servers, 1);
    p.gpu_counts[0][0] = 1;
    CHECK(iteration_time(job, p, cluster) == 0.006);
  }

  SECTION("co-located two-stage job takes the max stage beta") {
    const JobSpec job = two_stage_job();
    Placement p = Placement::zeros(cluster.num_servers, 2);
    p.gpu_counts[0][0] = 1;
    p.gpu_counts[0][1] = 1;
    const double intra = 2.0 * 30 * kMB / 300e9;
    CHECK(iteration_time(job, p, cluster) == Catch::Approx(0.008 + intra).epsilon(1e-9));
  }

  SECTION("a dominant stage pins alpha") {
    JobSpec job = two_stage_job();
    job.stages[1].fp_time = 1.0;
    Placement p = Placement::zeros(cluster.num_servers, 2);
    p.gpu_counts[0][0] = 1;
    p.gpu_counts[0][1] = 1;
    const double beta2 = comp_time(job.stages[1], 1) + comm_time(job, p, 0, 1, cluster);
    CHECK(iteration_time(job, p, cluster) == Catch::Approx(beta2).epsilon(1e-12));
  }
}

TEST_CASE("overlap coefficients scale bp and allreduce terms") {
  const ClusterConfig cluster = testbed();
  StageProfile st;
  st.fp_time = 0.002;
  st.bp_time = 0.004;
  st.param_size = 20 * kMB;
  st.replicas = 2;
  st.bp_coeff = 0.5;
  st.allreduce_coeff = 0.25;
  CHECK(comp_time(st, 1) == Catch::Approx(0.002 + 0.5 * 0.004).epsilon(1e-12));
  CHECK(allreduce_time(st, 2, cluster) ==
        Catch::Approx(0.25 * 20 * kMB / 300e9).epsilon(1e-12));
}

TEST_CASE("worst-case estimate spreads every replica") {
  const ClusterConfig cluster = testbed();

  SECTION("single-GPU job has nothing to spread") {
    JobSpec job;
    StageProfile st;
    st.fp_time = 0.002;
    st.bp_time = 0.004;
    job.stages = {st};
    const auto bound = worst_case_alpha(job, cluster);
    CHECK(bound.seconds == 0.006);
    CHECK(bound.spread_exact);
  }

  SECTION("data-parallel pair lands in the NIC branch") {
    JobSpec job;
    StageProfile st;
    st.fp_time = 0.002;
    st.bp_time = 0.004;
    st.param_size = 20 * kMB;
    st.replicas = 2;
    job.stages = {st};
    const auto bound = worst_case_alpha(job, cluster);
    CHECK(bound.seconds == Catch::Approx(0.006 + 0.128).epsilon(1e-9));
  }

  SECTION("more replicas than servers wraps and flags") {
    ClusterConfig tiny = testbed();
    tiny.num_servers = 2;
    JobSpec job;
    StageProfile st;
    st.fp_time = 0.001;
    st.bp_time = 0.001;
    st.replicas = 3;
    job.stages = {st};
    CHECK_FALSE(worst_case_alpha(job, tiny).spread_exact);
  }

  SECTION("dominates every placement on an idle cluster") {
    ClusterConfig tiny;
    tiny.num_servers = 3;
    tiny.gpus_per_server = 2;
    tiny.b_inter = kGbps;
    tiny.b_intra = 300e9;
    std::mt19937_64 rng(11);
    testgen::JobParams params;
    params.max_gpus = 3;  // spread stays feasible
    for (int trial = 0; trial < 40; ++trial) {
      const JobSpec job = testgen::random_job(rng, params);
      const double bound = worst_case_alpha(job, tiny).seconds;
      for (const auto& p : enumerate_placements(job, tiny))
        CHECK(p.alpha <= bound * (1 + 1e-12));
    }
  }
}

TEST_CASE("consolidated estimate uses the fewest servers") {
  const ClusterConfig cluster = testbed();

  SECTION("jobs within one server see only intra-server links") {
    JobSpec job;
    for (int s = 0; s < 3; ++s) {
      StageProfile st;
      st.fp_time = 0.001;
      st.bp_time = 0.002;
      st.replicas = 2;
      st.param_size = 20 * kMB;
      job.stages.push_back(st);
    }
    job.stages[0].data_out = 1 * kMB;
    job.stages[1].data_in = 1 * kMB;
    job.stages[1].data_out = 1 * kMB;
    job.stages[2].data_in = 1 * kMB;
    const auto est = consolidated_alpha(job, cluster);  // 6 GPUs <= 8
    int servers_used = 0;
    for (int m = 0; m < static_cast<int>(est.placement.gpu_counts.size()); ++m)
      if (est.placement.gpus_on_server(m) > 0) ++servers_used;
    CHECK(servers_used == 1);
    // everything intra-server: alpha must match the hand-built single-server placement
    Placement manual = Placement::zeros(cluster.num_servers, 3);
    for (int s = 0; s < 3; ++s) manual.gpu_counts[0][s] = 2;
    CHECK(est.seconds == Catch::Approx(iteration_time(job, manual, cluster)).epsilon(1e-12));
  }

  SECTION("never exceeds the worst-case estimate") {
    std::mt19937_64 rng(17);
    testgen::JobParams params;
    params.max_gpus = 4;
    ClusterConfig tiny;
    tiny.num_servers = 4;
    tiny.gpus_per_server = 2;
    tiny.b_inter = kGbps;
    for (int trial = 0; trial < 60; ++trial) {
      const JobSpec job = testgen::random_job(rng, params);
      CHECK(consolidated_alpha(job, tiny).seconds <=
            worst_case_alpha(job, tiny).seconds * (1 + 1e-12));
    }
  }
}

TEST_CASE("bandwidth monotonicity") {
  const JobSpec job = two_stage_job();
  for (int trial = 0; trial < 20; ++trial) {
    ClusterConfig low = testbed();
    ClusterConfig high = low;
    high.b_inter *= 2.0 + trial;
    Placement p = Placement::zeros(low.num_servers, 2);
    p.gpu_counts[0][0] = 1;
    p.gpu_counts[1][1] = 1;
    CHECK(comm_time(job, p, 1, 1, high) <= comm_time(job, p, 1, 1, low));
    StageProfile st;
    st.param_size = 100 * kMB;
    st.replicas = 3;
    CHECK(allreduce_time(st, 1, high) <= allreduce_time(st, 1, low));
  }
}

TEST_CASE("allreduce branch point is consistent") {
  // local sync is never slower than the k-1 NIC case while B_intra >= (x/g) B_inter
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    ClusterConfig c = testbed();
    c.b_intra = c.b_inter * (1.0 + uniform(rng) * 100.0);
    StageProfile st;
    st.param_size = uniform(rng) * 500 * kMB;
    st.replicas = 2 + static_cast<int>(uniform(rng) * 6);
    if (st.replicas > c.gpus_per_server) st.replicas = c.gpus_per_server;
    const double local = allreduce_time(st, st.replicas, c);
    const double split = allreduce_time(st, st.replicas - 1, c);
    CHECK(local <= split + 1e-15);
  }
}
