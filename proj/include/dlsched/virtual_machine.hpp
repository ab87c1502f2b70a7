#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dlsched/core.hpp"

namespace dlsched {

// Hypothetical single-machine preemptive instance. Jobs carry scaled work in
// seconds; the machine is advanced one slot at a time in lockstep with the
// simulation clock and serves the smallest remaining work, preempting
// exactly (continuous time inside a slot). Zero-work jobs complete at their
// arrival instant before any processing.

struct VirtualCompletion {
  int job_id = 0;
  double instant = 0.0;  // seconds
};

class SrptMachine {
 public:
  explicit SrptMachine(double slot_length = 1.0) : slot_length_(slot_length) {}

  void add_job(int job_id, std::int64_t arrival_slot, double work_seconds) {
    if (work_seconds < 0) throw std::invalid_argument("virtual job with negative work");
    jobs_.push_back({job_id, arrival_slot, work_seconds});
  }

  // Advances over slot t (the interval [t, t+1) * slot_length). Must be
  // called with strictly increasing t, once per slot. Returns jobs finishing
  // within the slot in completion order; ties break by (arrival, job_id).
  std::vector<VirtualCompletion> advance(std::int64_t slot) {
    if (slot <= last_slot_) throw std::logic_error("SrptMachine::advance: slots must increase");
    last_slot_ = slot;
    std::vector<VirtualCompletion> done;

    double now = slot * slot_length_;
    const double slot_end = (slot + 1) * slot_length_;

    auto flush_zero_work = [&]() {
      for (auto& j : jobs_) {
        if (j.done || j.arrival > slot) continue;
        if (j.remaining <= 0.0) {
          j.done = true;
          done.push_back({j.id, std::max(now, j.arrival * slot_length_)});
        }
      }
    };
    flush_zero_work();

    while (now < slot_end) {
      Job* next = nullptr;
      for (auto& j : jobs_) {
        if (j.done || j.arrival > slot) continue;
        if (!next || j.remaining < next->remaining ||
            (j.remaining == next->remaining &&
             (j.arrival < next->arrival || (j.arrival == next->arrival && j.id < next->id))))
          next = &j;
      }
      if (!next) break;
      const double budget = slot_end - now;
      if (next->remaining <= budget) {
        now += next->remaining;
        next->remaining = 0.0;
        next->done = true;
        done.push_back({next->id, now});
      } else {
        next->remaining -= budget;
        now = slot_end;
      }
    }

    std::sort(done.begin(), done.end(), [this](const VirtualCompletion& a, const VirtualCompletion& b) {
      if (a.instant != b.instant) return a.instant < b.instant;
      const Job& ja = *find(a.job_id);
      const Job& jb = *find(b.job_id);
      if (ja.arrival != jb.arrival) return ja.arrival < jb.arrival;
      return a.job_id < b.job_id;
    });
    return done;
  }

  bool all_done() const {
    for (const auto& j : jobs_)
      if (!j.done) return false;
    return true;
  }

 private:
  struct Job {
    int id = 0;
    std::int64_t arrival = 0;
    double remaining = 0.0;
    bool done = false;
  };

  const Job* find(int id) const {
    for (const auto& j : jobs_)
      if (j.id == id) return &j;
    return nullptr;
  }

  double slot_length_ = 1.0;
  std::int64_t last_slot_ = -1;
  std::vector<Job> jobs_;
};

struct VirtualJobSpec {
  int job_id = 0;
  std::int64_t arrival_slot = 0;
  double work = 0.0;  // seconds
};

// Offline event-driven SRPT: sum of completion instants over the whole
// instance. Written independently of SrptMachine so the slot-stepped and
// event-driven paths can cross-check each other.
inline double srpt_total_completion(std::vector<VirtualJobSpec> jobs, double slot_length = 1.0) {
  struct State {
    int id;
    double arrival;
    double remaining;
  };
  std::vector<State> pending;
  pending.reserve(jobs.size());
  for (const auto& j : jobs) pending.push_back({j.job_id, j.arrival_slot * slot_length, j.work});
  std::sort(pending.begin(), pending.end(), [](const State& a, const State& b) {
    if (a.arrival != b.arrival) return a.arrival < b.arrival;
    return a.id < b.id;
  });

  double total = 0.0;
  double now = 0.0;
  std::size_t released = 0;
  std::vector<State*> active;
  while (released < pending.size() || !active.empty()) {
    if (active.empty()) {
      now = std::max(now, pending[released].arrival);
    }
    while (released < pending.size() && pending[released].arrival <= now)
      active.push_back(&pending[released++]);
    // zero-work jobs finish the moment they arrive
    for (auto it = active.begin(); it != active.end();) {
      if ((*it)->remaining <= 0.0) {
        total += std::max(now, (*it)->arrival);
        it = active.erase(it);
      } else {
        ++it;
      }
    }
    if (active.empty()) continue;
    auto shortest = std::min_element(active.begin(), active.end(), [](const State* a, const State* b) {
      if (a->remaining != b->remaining) return a->remaining < b->remaining;
      if (a->arrival != b->arrival) return a->arrival < b->arrival;
      return a->id < b->id;
    });
    const double next_arrival =
        released < pending.size() ? pending[released].arrival : std::numeric_limits<double>::infinity();
    const double run = std::min((*shortest)->remaining, next_arrival - now);
    now += run;
    (*shortest)->remaining -= run;
    if ((*shortest)->remaining <= 0.0) {
      total += now;
      active.erase(shortest);
    }
  }
  return total;
}

}  // namespace dlsched
