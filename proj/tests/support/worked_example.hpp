#pragma once

#include "dlsched/core.hpp"

namespace testgen {

// Three ring-allreduce stages, two replicas each: the stage-1 replica pair
// syncs 20 MB while every stage-1/stage-2 replica pair exchanges 1 MB, so
// the heaviest edge and its two neighbors belong together on a 4-GPU server.
inline dlsched::JobSpec worked_example_job() {
  using dlsched::AllreduceKind;
  using dlsched::StageProfile;
  dlsched::JobSpec job;
  job.true_iterations = 10;

  StageProfile s1;
  s1.fp_time = 0.002;
  s1.bp_time = 0.004;
  s1.replicas = 2;
  s1.allreduce = AllreduceKind::Ring;
  s1.param_size = 20e6;  // pair edge weight 2(k-1)h/k = 20 MB
  s1.data_out = 1e6;     // pair edges 2*d_out/k = 1 MB

  StageProfile s2 = s1;
  s2.param_size = 0.5e6;
  s2.data_in = 1e6;
  s2.data_out = 0.25e6;

  StageProfile s3 = s1;
  s3.param_size = 0.5e6;
  s3.data_in = 0.25e6;
  s3.data_out = 0.0;

  job.stages = {s1, s2, s3};
  return job;
}

}  // namespace testgen
