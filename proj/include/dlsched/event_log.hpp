#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace dlsched {

// Append-only simulation log, one line per event: "slot,kind,job,detail".
// Lines are written deterministically so two identical runs produce
// byte-identical logs.
struct EventLog {
  std::vector<std::string> lines;

  void log(std::int64_t slot, const std::string& kind, int job_id, const std::string& detail = "") {
    lines.push_back(std::to_string(slot) + "," + kind + "," + std::to_string(job_id) + "," + detail);
  }

  std::size_t count(const std::string& kind) const {
    std::size_t n = 0;
    const std::string needle = "," + kind + ",";
    for (const auto& line : lines)
      if (line.find(needle) != std::string::npos) ++n;
    return n;
  }

  void write(std::ostream& out) const {
    for (const auto& line : lines) out << line << '\n';
  }
};

}  // namespace dlsched
