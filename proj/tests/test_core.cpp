#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "dlsched/core.hpp"
#include "support/generators.hpp"

using namespace dlsched;

namespace {

JobSpec make_job(std::vector<int> replicas, std::int64_t arrival = 0, std::int64_t iters = 1) {
  JobSpec job;
  job.arrival_slot = arrival;
  job.true_iterations = iters;
  for (int k : replicas) {
    StageProfile st;
    st.replicas = k;
    st.fp_time = 0.001;
    st.bp_time = 0.002;
    job.stages.push_back(st);
  }
  return job;
}

Placement single_server_placement(const JobSpec& job, int num_servers, int server) {
  Placement p = Placement::zeros(num_servers, static_cast<int>(job.stages.size()));
  for (std::size_t s = 0; s < job.stages.size(); ++s)
    p.gpu_counts[server][s] = job.stages[s].replicas;
  return p;
}

}  // namespace

TEST_CASE("required_gpus sums stage replicas") {
  CHECK(required_gpus(make_job({1})) == 1);
  CHECK(required_gpus(make_job({2, 2, 2})) == 6);
  CHECK(required_gpus(make_job({4, 1})) == 5);
}

TEST_CASE("required_gpus is invariant under stage reordering") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    JobSpec job = testgen::random_job(rng);
    JobSpec shuffled = job;
    std::shuffle(shuffled.stages.begin(), shuffled.stages.end(), rng);
    CHECK(job.required_gpus() == shuffled.required_gpus());
  }
}

TEST_CASE("cluster and job validation") {
  ClusterConfig cluster;
  cluster.num_servers = 2;
  cluster.gpus_per_server = 4;
  cluster.validate();

  ClusterConfig bad = cluster;
  bad.b_intra = bad.b_inter / 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  JobSpec job = make_job({2, 2});
  job.stages[0].data_out = 10e6;
  job.stages[1].data_in = 10e6;  // k equal, identity holds
  CHECK_NOTHROW(job.validate(cluster));

  job.stages[1].data_in = 11e6;
  CHECK_THROWS_AS(job.validate(cluster), std::invalid_argument);

  JobSpec too_big = make_job({8, 8});
  CHECK_THROWS_AS(too_big.validate(cluster), std::invalid_argument);
}

TEST_CASE("schedule completion stays real-valued while occupancy rounds up") {
  const double slot = 1.0;
  const std::int64_t n = 7;
  const double alpha = 0.36;
  ScheduleRecord rec;
  rec.start_slot = 3;
  rec.completion = rec.start_slot * slot + n * alpha;
  rec.occupancy_slots = static_cast<std::int64_t>(std::ceil(n * alpha / slot));
  CHECK(rec.completion == Catch::Approx(3.0 + 2.52).epsilon(0));
  CHECK(rec.occupancy_slots == 3);
  CHECK(rec.completion > rec.start_slot * slot);
}

TEST_CASE("validate_schedule catches each constraint") {
  ClusterConfig cluster;
  cluster.num_servers = 2;
  cluster.gpus_per_server = 2;

  SECTION("empty schedule is feasible") {
    CHECK(!validate_schedule({}, {}, cluster).has_value());
  }

  SECTION("start before arrival") {
    JobSpec job = make_job({1}, 5);
    job.job_id = 0;
    ScheduleRecord rec{0, 3, single_server_placement(job, 2, 0), 3.1, 1};
    const auto v = validate_schedule({rec}, {job}, cluster);
    REQUIRE(v.has_value());
    CHECK(v->constraint == 1);
    CHECK(v->job_id == 0);
  }

  SECTION("replica conservation") {
    JobSpec job = make_job({2});
    job.job_id = 0;
    Placement p = Placement::zeros(2, 1);
    p.gpu_counts[0][0] = 1;  // one replica missing
    ScheduleRecord rec{0, 0, p, 0.5, 1};
    const auto v = validate_schedule({rec}, {job}, cluster);
    REQUIRE(v.has_value());
    CHECK(v->constraint == 2);
  }

  SECTION("server capacity with overlapping jobs") {
    JobSpec a = make_job({2});
    a.job_id = 0;
    JobSpec b = make_job({2});
    b.job_id = 1;
    ScheduleRecord ra{0, 0, single_server_placement(a, 2, 0), 0.5, 4};
    ScheduleRecord rb{1, 2, single_server_placement(b, 2, 0), 2.5, 4};
    const auto v = validate_schedule({ra, rb}, {a, b}, cluster);
    REQUIRE(v.has_value());
    CHECK(v->constraint == 3);
    CHECK(v->server == 0);

    // the same jobs on different servers are fine
    rb.placement = single_server_placement(b, 2, 1);
    CHECK(!validate_schedule({ra, rb}, {a, b}, cluster).has_value());
  }

  SECTION("back-to-back occupancy on one server is feasible") {
    JobSpec a = make_job({2});
    a.job_id = 0;
    JobSpec b = make_job({2});
    b.job_id = 1;
    ScheduleRecord ra{0, 0, single_server_placement(a, 2, 0), 0.5, 4};
    ScheduleRecord rb{1, 4, single_server_placement(b, 2, 0), 4.5, 4};
    CHECK(!validate_schedule({ra, rb}, {a, b}, cluster).has_value());
  }
}
